use hilbert_weak11::measure::{build_stages, ConstructionParams, Piece, StepMeasure};
use hilbert_weak11::verify::{
    check_construction, check_intcompare, check_mwcompare, check_sign_rule, check_terms, Status, TermChecks,
    VerificationReport, VerifyOptions,
};
use hilbert_weak11::Rational;

#[test]
fn exact_suite_for_small_k() {
    for k in 2..=4 {
        let c = build_stages(&ConstructionParams::new(k, 2).unwrap()).unwrap();
        let construction = check_construction(&c);
        assert!(construction.passed());
        assert!(construction.count(Status::Pass) > 0);
        let ic = check_intcompare(c.weight(), &c.signs, k).unwrap();
        assert!(ic.passed(), "k={k}");
        assert!(ic.records_for("intcompare.equality").count() > 0);
        assert!(ic.records_for("intcompare.ancestors").count() > 0);
    }
}

#[test]
fn halving_a_density_breaks_the_equalities() {
    let c = build_stages(&ConstructionParams::new(3, 2).unwrap()).unwrap();
    let w = c.weight();
    let mut pieces: Vec<Piece> = w.pieces().to_vec();
    let target = pieces.len() / 2;
    pieces[target].density = Rational::from(&pieces[target].density / 2u32);
    let tampered = StepMeasure::new(pieces).unwrap();
    let ic = check_intcompare(&tampered, &c.signs, 3).unwrap();
    assert!(ic.count(Status::Fail) > 0);
}

#[test]
fn mwcompare_regression_at_k2() {
    let c = build_stages(&ConstructionParams::new(2, 2).unwrap()).unwrap();
    let rep = check_mwcompare(c.weight(), &c.signs, 2, &VerifyOptions::default()).unwrap();
    assert!(rep.passed());
    assert!(rep.min_measured("mwcompare").unwrap() >= 1.0);
    let max = rep.max_measured("mwcompare").unwrap();
    let worst = rep.records_for("mwcompare").find(|r| r.measured_value == max).unwrap();
    assert_eq!(worst.measured, "459/343");
    assert_eq!(worst.location, "J=[1/3, 2/3) x=31/108");
}

#[test]
fn mwcompare_holds_at_k3() {
    let c = build_stages(&ConstructionParams::new(3, 2).unwrap()).unwrap();
    let rep = check_mwcompare(c.weight(), &c.signs, 3, &VerifyOptions::default()).unwrap();
    assert!(rep.passed());
    assert_eq!(rep.records_for("mwcompare").count(), 3 * c.signs.len());
    for r in rep.records_for("mwcompare") {
        assert!(r.measured.parse::<Rational>().is_ok(), "{}", r.measured);
    }
}

#[test]
fn full_term_suite_at_k3() {
    let p = ConstructionParams::new(3, 2).unwrap();
    let c = build_stages(&p).unwrap();
    let out = check_terms(c.weight(), &c.signs, 3, 2, &VerifyOptions::default(), TermChecks::ALL).unwrap();
    assert!(out.report.passed());
    for check in ["terms.a1", "terms.a2", "terms.a3", "terms.a5", "terms.sign", "decomposition.hilbert", "decomposition.oracle"] {
        assert!(out.report.records_for(check).count() > 0, "{check}");
    }
    assert_eq!(out.points.len(), 3 * (1 + 9));
    let signs = check_sign_rule(c.weight(), &c.signs, &p).unwrap();
    assert!(signs.passed());
    assert_eq!(signs.records_for("signs.defaulted_fraction_excluding_base").next().unwrap().status, Status::Pass);
}

#[test]
fn same_seed_same_report() {
    let c = build_stages(&ConstructionParams::new(3, 2).unwrap()).unwrap();
    let opts = VerifyOptions { seed: 17, samples: 5, ..VerifyOptions::default() };
    let a = check_mwcompare(c.weight(), &c.signs, 3, &opts).unwrap();
    let b = check_mwcompare(c.weight(), &c.signs, 3, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_round_trips_through_json() {
    let c = build_stages(&ConstructionParams::new(2, 2).unwrap()).unwrap();
    let mut rep = check_construction(&c);
    rep.merge(check_mwcompare(c.weight(), &c.signs, 2, &VerifyOptions::default()).unwrap());
    let text = serde_json::to_string(&rep).unwrap();
    let back: VerificationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
    assert_eq!(back.summaries().len(), rep.checks().len());
}
