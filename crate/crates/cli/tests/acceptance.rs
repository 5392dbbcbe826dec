//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use hilbert_weak11::measure::{build_stages, build_weight, Construction, ConstructionParams, Piece, StepMeasure};
use hilbert_weak11::operators::{hilbert_pv, maximal_batch, maximal_oracle, pv_quadrature_oracle, DEFAULT_EXCISIONS};
use hilbert_weak11::verify::checks::{MW_BOUND, ORACLE_RELATIVE_TOLERANCE, TERM_BOUND, TERM_FLAG_LIMIT};
use hilbert_weak11::verify::{
    check_construction, check_intcompare, check_mwcompare, check_sign_rule, check_terms, dualcp_ratio, run_demo,
    QuadratureParams, Status, TermChecks, VerificationReport, VerifyOptions,
};
use hilbert_weak11::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEPTH: u32 = 2;
const MW_LIMIT: u32 = 7;
const TERM_LIMIT: u32 = 200;
const TERM_FLAG: u32 = 275;
const ORACLE_REL: f64 = 1e-6;
const GROWTH_FACTOR: f64 = 1.5;
const DEMO_GRID: usize = 3;

fn construction(k: u32) -> &'static Construction {
    static CACHE: [OnceLock<Construction>; 7] = [const { OnceLock::new() }; 7];
    CACHE[k as usize].get_or_init(|| build_stages(&ConstructionParams::new(k, DEPTH).unwrap()).unwrap())
}

fn w(k: u32) -> &'static StepMeasure {
    construction(k).weight()
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn failures(rep: &VerificationReport, prefix: &str) -> usize {
    rep.records
        .iter()
        .filter(|r| r.check.starts_with(prefix) && matches!(r.status, Status::Fail | Status::Inconclusive))
        .count()
}

fn count(rep: &VerificationReport, prefix: &str) -> usize {
    rep.records.iter().filter(|r| r.check.starts_with(prefix)).count()
}

fn exact_construction() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in 2..=4 {
        let c = construction(k);
        let mut rep = check_construction(c);
        rep.merge(check_intcompare(c.weight(), &c.signs, k).unwrap());
        pass &= rep.passed() && rep.count(Status::Flagged) == 0;
        parts.push(format!("k={k}: {} exact records, {} failed", rep.records.len(), rep.count(Status::Fail)));
    }
    Outcome::new(pass, parts.join("; "))
}

fn mw_compare() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = MW_BOUND == MW_LIMIT;
    for k in 3..=5 {
        let c = construction(k);
        let rep = check_mwcompare(c.weight(), &c.signs, k, &VerifyOptions::default()).unwrap();
        let max = rep.max_measured("mwcompare").unwrap_or(f64::NAN);
        pass &= rep.passed() && max <= MW_LIMIT as f64;
        parts.push(format!("k={k}: {} samples, max Mw/w = {max:.6}", count(&rep, "mwcompare")));
    }
    Outcome::new(pass, parts.join("; "))
}

/// Term reports for k = 4, 5, 6, shared by criteria 3 and 4.
fn term_reports() -> Vec<(u32, VerificationReport)> {
    (4..=6)
        .map(|k| {
            let which = if k == 4 { TermChecks::ALL } else { TermChecks { bounds: true, decomposition: true, oracle: false } };
            let c = construction(k);
            (k, check_terms(c.weight(), &c.signs, k, DEPTH, &VerifyOptions::default(), which).unwrap().report)
        })
        .collect()
}

fn term_bounds(reports: &[(u32, VerificationReport)]) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = TERM_BOUND == TERM_LIMIT && TERM_FLAG_LIMIT == TERM_FLAG;
    for (k, rep) in reports {
        let bad = failures(rep, "terms.");
        let flagged = rep.records.iter().filter(|r| r.check.starts_with("terms.") && r.status == Status::Flagged).count();
        pass &= bad == 0 && count(rep, "terms.a1") > 0;
        let get = |c: &str, max: bool| if max { rep.max_measured(c) } else { rep.min_measured(c) }.unwrap_or(f64::NAN);
        parts.push(format!(
            "k={k}: min|a2|/w={:.3} max|a1|/w={:.3} max|a3|/w={:.3} max|a5|/w={:.3} flagged={flagged} failed={bad}",
            get("terms.a2", false),
            get("terms.a1", true),
            get("terms.a3", true),
            get("terms.a5", true),
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn decomposition(reports: &[(u32, VerificationReport)]) -> Outcome {
    let c = construction(3);
    let k3 = check_terms(c.weight(), &c.signs, 3, DEPTH, &VerifyOptions::default(), TermChecks::ALL).unwrap().report;
    let mut parts = Vec::new();
    let mut pass = ORACLE_RELATIVE_TOLERANCE == ORACLE_REL;
    for (k, rep) in std::iter::once((3, &k3)).chain(reports.iter().map(|(k, r)| (*k, r))) {
        let h = count(rep, "decomposition.hilbert");
        let o = count(rep, "decomposition.oracle");
        let bad = failures(rep, "decomposition.");
        pass &= bad == 0 && h > 0 && (k > 4 || o > 0);
        parts.push(format!("k={k}: {h} transform + {o} oracle comparisons, {bad} failed"));
    }
    Outcome::new(pass, parts.join("; "))
}

fn sign_rule() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in 3..=6 {
        let c = construction(k);
        let rep = check_sign_rule(c.weight(), &c.signs, &c.params).unwrap();
        let frac = |name: &str| rep.records_for(name).next().map(|r| (r.measured.clone(), r.status)).unwrap();
        let (all, _) = frac("signs.defaulted_fraction");
        let (rest, rest_status) = frac("signs.defaulted_fraction_excluding_base");
        pass &= failures(&rep, "signs.") == 0 && rest_status == Status::Pass;
        parts.push(format!(
            "k={k}: {} signs rechecked, defaulted {all} overall, {rest} beyond the base",
            count(&rep, "signs.rule")
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn random_measure(rng: &mut ChaCha8Rng, max_pieces: usize) -> StepMeasure {
    let n = rng.gen_range(1..=max_pieces);
    let mut cuts: Vec<i64> = (0..2 * n).map(|_| rng.gen_range(-60..120)).collect();
    cuts.sort();
    cuts.dedup();
    let pieces = cuts
        .chunks_exact(2)
        .map(|c| Piece::new(q(c[0], 60), q(c[1], 60), q(rng.gen_range(1..50), rng.gen_range(1..7))))
        .collect();
    StepMeasure::new(pieces).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng) -> Rational {
    let d = 7 * 4096;
    q(rng.gen_range(-3 * d / 2..5 * d / 2), d)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut maximal_points = 0;
    let mut maximal_mismatch = 0;
    while maximal_points < 1000 {
        let m = random_measure(&mut rng, 50);
        let xs: Vec<Rational> = (0..50).map(|_| random_point(&mut rng)).collect();
        for (x, v) in xs.iter().zip(maximal_batch(&m, &xs)) {
            maximal_mismatch += usize::from(v != maximal_oracle(&m, x, 1));
        }
        maximal_points += xs.len();
    }
    let (w1, _) = build_weight(&ConstructionParams::new(2, 1).unwrap()).unwrap();
    let mut xs: Vec<Rational> = (0..200).map(|_| q(rng.gen_range(-100..1100), 1000)).collect();
    xs.extend(w1.pieces().iter().flat_map(|p| [p.interval.a.clone(), p.interval.center()]));
    for (x, v) in xs.iter().zip(maximal_batch(&w1, &xs)) {
        maximal_mismatch += usize::from(v != maximal_oracle(&w1, x, 1));
    }
    maximal_points += xs.len();

    let mut hilbert_mismatch = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = random_measure(&mut rng, 20);
        let x = random_point(&mut rng);
        let h = hilbert_pv(&m, &x, 128).unwrap();
        let e = pv_quadrature_oracle(&m, &x, &DEFAULT_EXCISIONS);
        let gap = (h.to_f64() - e.value).abs();
        let tol = h.radius() + 10.0 * e.error + 1e-10 * (1.0 + e.value.abs());
        hilbert_mismatch += usize::from(gap > tol);
        worst = worst.max(gap / (1.0 + e.value.abs()));
    }
    Outcome::new(
        maximal_mismatch == 0 && hilbert_mismatch == 0,
        format!(
            "maximal: {maximal_mismatch} mismatches of {maximal_points}; transform: {hilbert_mismatch} mismatches of 100, worst relative gap {worst:.1e}"
        ),
    )
}

fn growth() -> Outcome {
    let params = QuadratureParams::default();
    let ratios: Vec<(u32, f64, f64)> = (3..=6)
        .map(|k| {
            let r = dualcp_ratio(w(k), &params).unwrap();
            (k, r.ratio, r.error)
        })
        .collect();
    let increasing = ratios.windows(2).all(|p| p[1].1 - p[1].2 > p[0].1 + p[0].2);
    let factor = ratios[3].1 / ratios[0].1;
    let listed: Vec<String> = ratios.iter().map(|(k, r, e)| format!("k={k}: {r:.6} ± {e:.1e}")).collect();
    Outcome::new(
        increasing && factor >= GROWTH_FACTOR,
        format!("{}; ratio(6)/ratio(3) = {factor:.4} (needs increasing and ≥ {GROWTH_FACTOR})", listed.join(", ")),
    )
}

fn end_to_end() -> Outcome {
    let d4 = run_demo(w(4), DEMO_GRID).unwrap();
    let d6 = run_demo(w(6), DEMO_GRID).unwrap();
    let checked = d4.theorem.pointwise_checked + d6.theorem.pointwise_checked;
    let failed = d4.theorem.pointwise_failures + d6.theorem.pointwise_failures;
    let cup = d6.cuperez.ratio > d4.cuperez.ratio;
    let thm = d6.theorem.result.ratio > d4.theorem.result.ratio;
    Outcome::new(
        cup && thm && failed == 0 && checked > 0,
        format!(
            "weak-type ratio k=4 {:.6} k=6 {:.6}; main ratio k=4 {:.6} k=6 {:.6}; pointwise {failed} failures of {checked}",
            d4.cuperez.ratio, d6.cuperez.ratio, d4.theorem.result.ratio, d6.theorem.result.ratio
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let run_scan = |name: &str| {
        let out = dir.path().join(name);
        let argv = ["hw11", "scan", "--k", "3..5", "--depth", "2", "--seed", "0", "--quiet", "--out", out.to_str().unwrap()];
        let code = hw11_cli::run(argv);
        (code, std::fs::read(&out).unwrap_or_default())
    };
    let (ca, a) = run_scan("a.csv");
    let (cb, b) = run_scan("b.csv");
    let rows = a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
    Outcome::new(
        ca == 0 && cb == 0 && !a.is_empty() && a == b && rows == 3,
        format!("exit codes {ca}/{cb}, {} bytes, {rows} rows, identical = {}", a.len(), a == b),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: u32, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {verdict} [{:.1}s] {}", start.elapsed().as_secs_f64(), o.detail);
        all &= o.pass;
    };
    report(1, &mut exact_construction);
    report(2, &mut mw_compare);
    let mut terms = Vec::new();
    report(3, &mut || {
        terms = term_reports();
        term_bounds(&terms)
    });
    report(4, &mut || decomposition(&terms));
    report(5, &mut sign_rule);
    report(6, &mut oracle_equivalence);
    report(7, &mut growth);
    report(8, &mut end_to_end);
    report(9, &mut determinism);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
