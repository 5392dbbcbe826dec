//! Checks of the construction's identities and inequalities.

pub mod checks;
pub mod demo;
pub mod dualcp;
pub mod report;
pub mod terms;

pub use checks::{
    check_construction, check_intcompare, check_mwcompare, check_sign_rule, check_terms, collections, stage_samples,
    sample_points, PointTerms, TermCheckOutput, TermChecks, VerifyOptions,
};
pub use demo::{
    build_test_function, cuperez_functional, gaussian_floor, run_demo, theorem_main_ratio, DemoOutcome, DemoResult,
    TestFunction, TheoremOutcome,
};
pub use dualcp::{certified_lower_bound, dualcp_ratio, lower_bound_from_points, unit_mass, DualcpResult, LowerBound, QuadratureParams};
pub use report::{CheckRecord, CheckSummary, Status, VerificationReport};
pub use terms::{region_intervals, six_terms, StageTerms, TermBreakdown};
