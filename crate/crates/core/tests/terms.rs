use hilbert_weak11::measure::{build_stages, ConstructionParams, SignTable, StepMeasure};
use hilbert_weak11::operators::quadrature::adaptive_integrate;
use hilbert_weak11::operators::{pv_quadrature_oracle, DEFAULT_EXCISIONS};
use hilbert_weak11::triadic::{Interval, TriadicInterval};
use hilbert_weak11::verify::{region_intervals, six_terms, TermBreakdown};
use hilbert_weak11::Rational;
use proptest::prelude::*;
use std::sync::OnceLock;

const RTOL: f64 = 1e-13;

struct Fixture {
    w: StepMeasure,
    signs: SignTable,
    ks: Vec<Vec<TriadicInterval>>,
}

fn k4() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let c = build_stages(&ConstructionParams::new(4, 2).unwrap()).unwrap();
        Fixture { w: c.weight().clone(), signs: c.signs, ks: c.collections }
    })
}

fn integrate_against(w: &StepMeasure, kernel: impl Fn(f64) -> f64) -> f64 {
    w.pieces()
        .iter()
        .map(|p| p.density.to_f64() * adaptive_integrate(&kernel, p.interval.a.to_f64(), p.interval.b.to_f64(), RTOL).value)
        .sum()
}

/// The six terms by numerical integration over each region separately.
fn region_oracle(f: &Fixture, stage: usize, kk: &TriadicInterval, x: &Rational) -> [f64; 6] {
    let w = &f.w;
    let j = kk.middle_third();
    let comp = j.companion(f.signs.eps(&j).unwrap(), 4).unwrap();
    let xf = x.to_f64();
    let c = kk.center().to_f64();
    let a1 = pv_quadrature_oracle(&w.restrict(&[comp.to_interval()]), x, &DEFAULT_EXCISIONS).value;
    let a2 = integrate_against(&w.restrict(&[j.to_interval()]), |y| 1.0 / (y - xf));
    let kc = w.restrict_complement(&[kk.to_interval()]);
    let a3 = integrate_against(&kc, |y| 1.0 / (y - xf)) - integrate_against(&kc, |y| 1.0 / (y - c));
    let union: Vec<Interval> = f.ks[stage].iter().map(TriadicInterval::to_interval).collect();
    let a4 = integrate_against(&w.restrict_complement(&union), |y| 1.0 / (y - c));
    let mut a5 = 0.0;
    let mut a6 = 0.0;
    for other in f.ks[stage].iter().filter(|o| *o != kk) {
        let co = other.center().to_f64();
        let mass = w.mass(&other.to_interval()).to_f64();
        a5 += integrate_against(&w.restrict(&[other.to_interval()]), |y| 1.0 / (y - c)) - mass / (co - c);
        a6 += mass / (co - c);
    }
    [a1, a2, a3, a4, a5, a6]
}

fn certified(f: &Fixture, stage: usize, kk: &TriadicInterval, x: &Rational) -> TermBreakdown {
    six_terms(&f.w, &f.signs, 4, stage as u32, &f.ks[stage], kk, x, 128).unwrap()
}

fn companion_center(f: &Fixture, kk: &TriadicInterval) -> Rational {
    let j = kk.middle_third();
    j.companion(f.signs.eps(&j).unwrap(), 4).unwrap().center()
}

fn assert_terms(t: &TermBreakdown, golden: [f64; 6], oracle: [f64; 6]) {
    for (i, (v, (g, o))) in t.terms().iter().zip(golden.iter().zip(oracle)).enumerate() {
        let scale = 1.0 + g.abs();
        assert!((v.to_f64() - g).abs() <= 1e-12 * scale, "a{}: {} vs golden {g}", i + 1, v.to_f64());
        assert!((v.to_f64() - o).abs() <= 1e-8 * scale, "a{}: {} vs oracle {o}", i + 1, v.to_f64());
    }
}

#[test]
fn stage_zero_golden_values() {
    let f = k4();
    let kk = TriadicInterval::unit();
    let x = companion_center(f, &kk);
    assert_eq!(x, Rational::from((53, 162)));
    let t = certified(f, 0, &kk, &x);
    let oracle = region_oracle(f, 0, &kk, &x);
    assert_terms(
        &t,
[0.0, 11.320831278949218, 0.0, 0.0, 0.0, 0.0],
        oracle,
    );
    assert!(t.a1.contains_rational(&Rational::new()));
}

#[test]
fn stage_one_golden_values() {
    let f = k4();
    let kk = f.ks[1][0].clone();
    let x = companion_center(f, &kk);
    let t = certified(f, 1, &kk, &x);
    let oracle = region_oracle(f, 1, &kk, &x);
    assert_terms(
        &t,
        [
            0.0,
            32.75176871875617,
            -1.6051595547555233,
            -3.1781284065041744,
            0.06319411904175654,
            11.150285607622095,
        ],
        oracle,
    );
}

#[test]
fn terms_add_up_to_the_transform() {
    let f = k4();
    for stage in 0..2 {
        for kk in f.ks[stage].iter().step_by(5) {
            let x = companion_center(f, kk);
            let t = certified(f, stage, kk, &x);
            let h = hilbert_weak11::operators::hilbert_pv(&f.w, &x, 128).unwrap();
            assert!(t.sum().overlaps(&h), "K = {kk}");
        }
    }
}

#[test]
fn points_outside_the_companion_middle_third_are_rejected() {
    let f = k4();
    let kk = TriadicInterval::unit();
    assert!(six_terms(&f.w, &f.signs, 4, 0, &f.ks[0], &kk, &Rational::from((1, 2)), 128).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regions_partition_the_support(stage in 0usize..2, pick in 0usize..1000) {
        let f = k4();
        let ks = &f.ks[stage];
        let kk = &ks[pick % ks.len()];
        let j = kk.middle_third();
        let comp = j.companion(f.signs.eps(&j).unwrap(), 4).unwrap();
        let lo = f.w.pieces()[0].interval.a.clone();
        let hi = f.w.pieces().last().unwrap().interval.b.clone();
        let mut regions = region_intervals(kk, &j, &comp, &lo, &hi);
        prop_assert!(kk.contains(&j) && kk.contains(&comp));
        regions.sort_by(|a, b| a.a.cmp(&b.a));
        for pair in regions.windows(2) {
            prop_assert!(pair[0].b <= pair[1].a);
        }
        let covered: Rational = regions.iter().map(|r| f.w.mass(r)).sum();
        prop_assert_eq!(&covered, f.w.total_mass());
        let inside_k = f.w.mass(&kk.to_interval());
        let in_pair = Rational::from(f.w.mass(&j.to_interval()) + f.w.mass(&comp.to_interval()));
        prop_assert_eq!(inside_k, in_pair);
    }
}
