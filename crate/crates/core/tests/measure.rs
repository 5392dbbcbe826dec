use hilbert_weak11::measure::{build_stages, build_w0, build_weight, BaseSupport, ConstructionParams, Piece, StepMeasure};
use hilbert_weak11::triadic::{Interval, Sign, TriadicInterval};
use hilbert_weak11::Rational;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn iv(a: Rational, b: Rational) -> Interval {
    Interval::new(a, b)
}

#[test]
fn base_measures() {
    let (w, entry) = build_w0(2, BaseSupport::Recursive).unwrap();
    assert_eq!(*w.total_mass(), 1);
    assert_eq!(w.density_at(&q(1, 2)), q(9, 4));
    assert_eq!(w.density_at(&q(5, 18)), q(9, 4));
    assert_eq!(w.density_at(&q(1, 10)), 0);
    assert_eq!(entry.eps, Sign::Plus);
    assert_eq!(entry.stage, 0);

    let (w, _) = build_w0(3, BaseSupport::Recursive).unwrap();
    assert_eq!(*w.total_mass(), 1);
    assert_eq!(w.density_at(&q(1, 2)), q(27, 10));
    assert_eq!(w.density_at(&q(17, 54)), q(27, 10));
    assert_eq!(w.support_length(), q(1, 3) + q(1, 27));

    assert!(build_w0(1, BaseSupport::Recursive).is_err());
}

#[test]
fn first_refinement_at_k2() {
    let c = build_stages(&ConstructionParams::new(2, 1).unwrap()).unwrap();
    let w1 = c.weight();
    let w0 = &c.stages[0];
    assert_eq!(w0.mass(&iv(q(0, 1), q(1, 1))), 1);
    assert_eq!(w1.mass(&iv(q(1, 3), q(4, 9))), q(1, 4));
    assert_eq!(w1.mass(&iv(q(2, 9), q(3, 9))), q(1, 4));
    assert_eq!(w1.density_at(&q(5, 18)), q(9, 4));
    // K = [1/3, 4/9): mass 1/4 spread over J ∪ I(J), total length 1/27 + 1/81.
    let j = TriadicInterval::new(-3, 10);
    assert_eq!(w1.density_at(&j.center()), q(81, 16));
    assert_eq!(w1.len(), 4);
    assert_eq!(c.signs.len(), 4);
}

#[test]
fn stage_one_sign_is_plus() {
    let c = build_stages(&ConstructionParams::new(3, 1).unwrap()).unwrap();
    let e = c.signs.get(&TriadicInterval::new(-1, 1)).unwrap();
    assert_eq!(e.eps, Sign::Plus);
}

#[test]
fn reflected_configuration_negates_decider() {
    use hilbert_weak11::measure::DeciderContext;
    use hilbert_weak11::verify::collections;
    let c = build_stages(&ConstructionParams::new(2, 1).unwrap()).unwrap();
    let w1 = c.weight();
    let ks = collections(2, 2).unwrap().pop().unwrap();
    let half = q(1, 2);
    let mirrored: Vec<TriadicInterval> = ks
        .iter()
        .rev()
        .map(|k| {
            let left = Rational::from(1) - k.right();
            TriadicInterval::new(k.scale(), (left / k.length()).numer().clone())
        })
        .collect();
    let tol = Rational::new();
    let ctx = DeciderContext::new(w1, &ks, 128, tol.clone()).unwrap();
    let reflected = w1.reflect(&half);
    let rctx = DeciderContext::new(&reflected, &mirrored, 128, tol).unwrap();
    for pos in 0..ks.len() {
        let d = ctx.decider_at(pos, 128).unwrap();
        let r = rctx.decider_at(ks.len() - 1 - pos, 128).unwrap();
        assert!(d.overlaps(&r.neg()), "pos {pos}: {} vs {}", d.to_f64(), r.to_f64());
    }
}

#[test]
fn frozen_piece_counts() {
    for (k, n, pieces, signs) in [(2, 1, 4, 4), (2, 2, 13, 13), (2, 3, 40, 40), (3, 2, 91, 91), (4, 2, 757, 757)] {
        let (w, s) = build_weight(&ConstructionParams::new(k, n).unwrap()).unwrap();
        assert_eq!((w.len(), s.len()), (pieces, signs), "k={k} N={n}");
    }
}

#[test]
fn stage_invariants() {
    for (k, n) in [(2, 3), (3, 2), (4, 2)] {
        let c = build_stages(&ConstructionParams::new(k, n).unwrap()).unwrap();
        let unit = iv(q(0, 1), q(1, 1));
        for (i, w) in c.stages.iter().enumerate() {
            assert_eq!(*w.total_mass(), 1, "k={k} stage {i}");
            assert_eq!(w.mass(&unit), 1);
            let p = w.pieces();
            assert!(p.first().unwrap().interval.a >= 0 && p.last().unwrap().interval.b <= 1);
        }
        for i in 1..=n as usize {
            for kk in &c.collections[i] {
                let kiv = kk.to_interval();
                assert_eq!(c.stages[i].mass(&kiv), c.stages[i - 1].mass(&kiv));
            }
        }
        // Companion densities never change after they are written.
        for e in c.signs.entries() {
            let comp = e.interval.companion(e.eps, k).unwrap();
            let x = comp.center();
            let written = c.stages[e.stage as usize].density_at(&x);
            for later in &c.stages[e.stage as usize..] {
                assert_eq!(later.density_at(&x), written);
            }
        }
    }
}

#[test]
fn construction_is_deterministic() {
    let p = ConstructionParams::new(3, 2).unwrap();
    let (w1, s1) = build_weight(&p).unwrap();
    let (w2, s2) = build_weight(&p).unwrap();
    assert_eq!(w1, w2);
    assert_eq!(s1, s2);
}

#[test]
fn literal_base_support() {
    let p = ConstructionParams::new(2, 2).unwrap().with_base_support(BaseSupport::Literal);
    let c = build_stages(&p).unwrap();
    for w in &c.stages {
        assert_eq!(*w.total_mass(), 1);
    }
}

#[test]
fn invalid_parameters() {
    assert!(ConstructionParams::new(1, 1).is_err());
    assert!(ConstructionParams::new(2, 0).is_err());
    assert!(ConstructionParams::new(3, 2).unwrap().with_precision(32).is_err());
    assert!(ConstructionParams::new(3, 2).unwrap().with_tolerance(q(-1, 2)).is_err());
}

#[test]
fn step_measure_rejects_bad_pieces() {
    assert!(StepMeasure::new(vec![Piece::new(q(0, 1), q(1, 2), q(1, 1)), Piece::new(q(1, 3), q(1, 1), q(1, 1))]).is_err());
    assert!(StepMeasure::new(vec![Piece::new(q(0, 1), q(1, 2), q(0, 1))]).is_err());
}

fn arb_measure() -> impl Strategy<Value = StepMeasure> {
    prop::collection::vec((1i64..5, 0i64..3, 1i64..9), 1..12).prop_map(|layout| {
        let mut a = Rational::new();
        let mut pieces = Vec::new();
        for (len, gap, d) in layout {
            a += q(gap, 4);
            let b = Rational::from(&a + q(len, 4));
            pieces.push(Piece::new(a.clone(), b.clone(), q(d, 3)));
            a = b;
        }
        StepMeasure::new(pieces).unwrap()
    })
}

proptest! {
    #[test]
    fn restriction_splits_mass(w in arb_measure(), cut in 0i64..60, width in 1i64..40) {
        let set = vec![iv(q(cut, 8), q(cut + width, 8))];
        let inside = w.restrict(&set);
        let outside = w.restrict_complement(&set);
        prop_assert_eq!(Rational::from(inside.total_mass() + outside.total_mass()), w.total_mass().clone());
        prop_assert_eq!(inside.total_mass().clone(), w.mass(&set[0]));
        prop_assert_eq!(inside.add(&outside), w);
    }

    #[test]
    fn cumulative_matches_prefix(w in arb_measure(), t in 0i64..80) {
        let x = q(t, 8);
        let lo = w.pieces()[0].interval.a.clone();
        let expected = if x > lo { w.mass(&iv(lo, x.clone())) } else { Rational::new() };
        prop_assert_eq!(w.cumulative(&x), expected);
    }

    #[test]
    fn reflection_is_an_involution(w in arb_measure(), s in -4i64..8) {
        let s = q(s, 2);
        let r = w.reflect(&s);
        prop_assert_eq!(r.total_mass(), w.total_mass());
        prop_assert_eq!(r.reflect(&s), w);
    }
}
