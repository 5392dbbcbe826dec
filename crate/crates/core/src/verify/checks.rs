//! Exact and certified checks over a built weight.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};

use super::report::{CheckRecord, Status, VerificationReport};
use super::terms::{StageTerms, TermBreakdown};
use crate::ball::CertifiedValue;
use crate::measure::{Construction, ConstructionParams, DeciderContext, SignTable, StepMeasure};
use crate::operators::harmonic::HarmonicTable;
use crate::operators::maximal_batch;
use crate::triadic::{pow3, stage_collections, Interval, Sign, TriadicInterval};
use crate::{Error, Result};

/// Sampling and precision knobs shared by the checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Points per `I(J)^m`: the midpoint, then the points at 1/4 and 3/4, then
    /// seeded random rationals.
    pub samples: usize,
    pub seed: u64,
    pub precision: u32,
    /// How many times an inconclusive enclosure is recomputed at doubled precision.
    pub retries: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 3, seed: 0, precision: ConstructionParams::DEFAULT_PRECISION, retries: 2 }
    }
}

/// Asserted bound on `|a3|/w(x)` and `|a5|/w(x)`.
pub const TERM_BOUND: u32 = 200;
/// Values in `(TERM_BOUND, TERM_FLAG_LIMIT]` are flagged rather than failed.
pub const TERM_FLAG_LIMIT: u32 = 275;
pub const MW_BOUND: u32 = 7;
pub const ORACLE_RELATIVE_TOLERANCE: f64 = 1e-6;

/// Sample points in `iv`: fractions 1/2, 1/4, 3/4, then random `r/2^20`.
pub fn sample_points(iv: &Interval, samples: usize, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let fixed = [(1, 2), (1, 4), (3, 4)];
    let mut out: Vec<Rational> =
        fixed.iter().take(samples).map(|&(n, d)| iv.at(&Rational::from((n, d)))).collect();
    while out.len() < samples {
        let r: u32 = rng.gen_range(1..(1 << 20));
        let x = iv.at(&Rational::from((r, 1u32 << 20)));
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// `K_0, …, K_depth`.
pub fn collections(k: u32, depth: u32) -> Result<Vec<Vec<TriadicInterval>>> {
    let mut out = vec![vec![TriadicInterval::unit()]];
    for i in 1..=depth {
        let (_, ks) = stage_collections(k, i, out.last().expect("K_0"))?;
        out.push(ks);
    }
    Ok(out)
}

fn ratio_text(q: &Rational) -> String {
    q.to_string()
}

/// Total mass one at every stage and `w_i(K) = w_{i−1}(K)` for every `K ∈ K_i`.
pub fn check_construction(c: &Construction) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let one = Rational::from(1);
    for (i, w) in c.stages.iter().enumerate() {
        let m = w.total_mass();
        rep.push(
            CheckRecord::new("construction.mass", Some(i as u32), format!("w_{i}"))
                .measured(ratio_text(m), m.to_f64())
                .bound("1".into(), 1.0)
                .status(if *m == one { Status::Pass } else { Status::Fail }),
        );
    }
    for i in 1..c.stages.len() {
        for kk in &c.collections[i] {
            let iv = kk.to_interval();
            let before = c.stages[i - 1].mass(&iv);
            let after = c.stages[i].mass(&iv);
            rep.push(
                CheckRecord::new("construction.conservation", Some(i as u32), format!("K={kk}"))
                    .measured(ratio_text(&after), after.to_f64())
                    .bound(ratio_text(&before), before.to_f64())
                    .status(if before == after { Status::Pass } else { Status::Fail }),
            );
        }
    }
    rep
}

/// Uniform density of `w` on `iv`, if `iv` lies inside a single piece.
fn uniform_density(w: &StepMeasure, iv: &TriadicInterval) -> Option<Rational> {
    let i = w.piece_index(&iv.left())?;
    let p = &w.pieces()[i];
    (p.interval.b >= iv.right()).then(|| p.density.clone())
}

/// The equality `w(x) = w(I(J))/|I(J)| = w(K)/|K|` for every `K` of the next stage
/// inside `J`, and `w(K)/|K| ≥ w(K')/|K'|` for every triadic ancestor `K'` of such `K`
/// up to `[0, 1)`.
pub fn check_intcompare(w: &StepMeasure, signs: &SignTable, k: u32) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new();
    let unit = TriadicInterval::unit();
    for e in signs.entries() {
        if e.interval == unit {
            continue;
        }
        let j = &e.interval;
        let comp = j.companion(e.eps, k)?;
        let loc = format!("J={j}");
        let stage = Some(e.stage);
        let Some(d) = uniform_density(w, &comp) else {
            rep.push(
                CheckRecord::new("intcompare.equality", stage, loc.clone())
                    .measured("not uniform on I(J)".into(), 0.0)
                    .status(Status::Fail),
            );
            rep.push(CheckRecord::new("intcompare.ancestors", stage, loc).status(Status::Fail));
            continue;
        };
        let target = -(e.stage as i64 + 1) * k as i64;
        let fine = pow3((j.scale() - target) as u32);
        let start = Integer::from(j.index() * &fine);
        let count = fine.to_u64().expect("small subdivision");
        let mut worst_eq: Option<Rational> = None;
        let mut ancestors: BTreeSet<(i64, Integer)> = BTreeSet::new();
        for off in 0..count {
            let kk = TriadicInterval::new(target, Integer::from(&start + off));
            let avg = w.mass(&kk.to_interval()) / kk.length();
            if avg != d && worst_eq.is_none() {
                worst_eq = Some(avg);
            }
            let mut a = kk;
            while a.scale() < 0 {
                a = a.parent();
                if !ancestors.insert((a.scale(), a.index().clone())) {
                    break;
                }
            }
        }
        rep.push(
            CheckRecord::new("intcompare.equality", stage, loc.clone())
                .measured(ratio_text(worst_eq.as_ref().unwrap_or(&d)), worst_eq.as_ref().unwrap_or(&d).to_f64())
                .bound(ratio_text(&d), d.to_f64())
                .status(if worst_eq.is_none() { Status::Pass } else { Status::Fail }),
        );
        let mut max_anc = Rational::new();
        for (scale, index) in ancestors {
            let a = TriadicInterval::new(scale, index);
            let avg = w.mass(&a.to_interval()) / a.length();
            if avg > max_anc {
                max_anc = avg;
            }
        }
        rep.push(
            CheckRecord::new("intcompare.ancestors", stage, loc)
                .measured(ratio_text(&max_anc), max_anc.to_f64())
                .bound(ratio_text(&d), d.to_f64())
                .status(if max_anc <= d { Status::Pass } else { Status::Fail }),
        );
    }
    Ok(rep)
}

/// Exact `Mw(x)/w(x) ≤ 7` at sample points of every `I(J)^m`.
pub fn check_mwcompare(
    w: &StepMeasure,
    signs: &SignTable,
    k: u32,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut xs = Vec::new();
    let mut meta = Vec::new();
    for e in signs.entries() {
        let comp = e.interval.companion(e.eps, k)?;
        let mid = comp.middle_third().to_interval();
        for x in sample_points(&mid, opts.samples, &mut rng) {
            meta.push((e.stage, e.interval.clone()));
            xs.push(x);
        }
    }
    let ms = maximal_batch(w, &xs);
    let bound = Rational::from(MW_BOUND);
    let mut rep = VerificationReport::new();
    for ((x, m), (stage, j)) in xs.iter().zip(ms).zip(meta) {
        let d = w.density_at(x);
        let (text, value, status) = if d.cmp0() == Ordering::Greater {
            let r = m / &d;
            let st = if r <= bound { Status::Pass } else { Status::Fail };
            (ratio_text(&r), r.to_f64(), st)
        } else {
            ("w(x) = 0".to_string(), f64::INFINITY, Status::Fail)
        };
        rep.push(
            CheckRecord::new("mwcompare", Some(stage), format!("J={j} x={x}"))
                .measured(text, value)
                .bound(MW_BOUND.to_string(), MW_BOUND as f64)
                .status(status),
        );
    }
    Ok(rep)
}

/// Recomputes `a4 + a6` from `w_N` for every stage and compares its sign with the table.
pub fn check_sign_rule(
    w: &StepMeasure,
    signs: &SignTable,
    params: &ConstructionParams,
) -> Result<VerificationReport> {
    let cols = collections(params.k, params.depth)?;
    let tol = params.sign_tolerance(w.total_mass());
    let mut rep = VerificationReport::new();
    for (i, ks) in cols.iter().enumerate().skip(1) {
        let ctx = DeciderContext::new(w, ks, params.precision_bits, tol.clone())?;
        for (pos, kk) in ks.iter().enumerate() {
            let j = kk.middle_third();
            let loc = format!("J={j}");
            let stored = signs
                .get(&j)
                .ok_or_else(|| Error::NotApplicable(format!("no sign recorded for {j}")))?;
            let (eps, v, defaulted) = ctx.decide(pos)?;
            let status = if defaulted {
                Status::Info
            } else if eps == stored.eps {
                Status::Pass
            } else {
                Status::Fail
            };
            rep.push(
                CheckRecord::new("signs.rule", Some(i as u32), loc)
                    .measured(format!("{v}"), v.to_f64())
                    .bound(format!("eps={}", stored.eps.value()), stored.eps.value() as f64)
                    .status(status),
            );
        }
    }
    let total = signs.len();
    let defaulted = signs.defaulted_count();
    let base_defaulted = signs.entries().iter().filter(|e| e.stage == 0 && e.defaulted).count();
    let limit = 0.01;
    let frac_all = defaulted as f64 / total.max(1) as f64;
    let frac_rest = (defaulted - base_defaulted) as f64 / (total - base_defaulted.min(total)).max(1) as f64;
    let flag = |f: f64| if f < limit { Status::Pass } else { Status::Flagged };
    rep.push(
        CheckRecord::new("signs.defaulted_fraction", None, "all signs".into())
            .measured(format!("{defaulted}/{total}"), frac_all)
            .bound("0.01".into(), limit)
            .status(flag(frac_all)),
    );
    rep.push(
        CheckRecord::new("signs.defaulted_fraction_excluding_base", None, "signs of stages >= 1".into())
            .measured(format!("{}/{}", defaulted - base_defaulted, total - base_defaulted), frac_rest)
            .bound("0.01".into(), limit)
            .status(flag(frac_rest)),
    );
    Ok(rep)
}

/// Which parts of the term suite to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermChecks {
    pub bounds: bool,
    /// Sum of the six terms against the certified transform.
    pub decomposition: bool,
    /// Sum of the six terms against the quadrature oracle.
    pub oracle: bool,
}

impl TermChecks {
    pub const ALL: TermChecks = TermChecks { bounds: true, decomposition: true, oracle: true };
    pub const BOUNDS: TermChecks = TermChecks { bounds: true, decomposition: false, oracle: false };
}

/// One evaluated sample point.
#[derive(Clone, Debug)]
pub struct PointTerms {
    pub stage: u32,
    pub j: TriadicInterval,
    pub companion: TriadicInterval,
    pub x: Rational,
    pub w_at_x: Rational,
    pub hw: CertifiedValue,
    pub terms: TermBreakdown,
}

#[derive(Clone, Debug, Default)]
pub struct TermCheckOutput {
    pub report: VerificationReport,
    pub points: Vec<PointTerms>,
}

/// `|t| ≤ c·w` with `Pass`, `Fail` or `Inconclusive`.
fn upper_status(t: &CertifiedValue, bound: &Rational) -> Status {
    if t.abs_upper() < *bound {
        Status::Pass
    } else if t.abs_lower() > *bound {
        Status::Fail
    } else {
        Status::Inconclusive
    }
}

fn lower_status(t: &CertifiedValue, bound: &Rational) -> Status {
    if t.abs_lower() > *bound {
        Status::Pass
    } else if t.abs_upper() < *bound {
        Status::Fail
    } else {
        Status::Inconclusive
    }
}

fn over_w(t: &CertifiedValue, w: &Rational, upper: bool) -> f64 {
    let v = if upper { t.abs_upper() } else { t.abs_lower() };
    v.to_f64() / w.to_f64()
}

fn sign_of(v: &CertifiedValue) -> Option<Sign> {
    match v.certified_sign()? {
        Ordering::Greater => Some(Sign::Plus),
        Ordering::Less => Some(Sign::Minus),
        Ordering::Equal => None,
    }
}

/// Records for one point; `None` when something is inconclusive and a retry is allowed.
fn point_records(
    p: &PointTerms,
    k: u32,
    eps: Sign,
    oracle: Option<(f64, f64)>,
    which: TermChecks,
    final_attempt: bool,
) -> Option<Vec<CheckRecord>> {
    let t = &p.terms;
    let w = &p.w_at_x;
    let loc = format!("K={} x={}", t.k_interval, p.x);
    let stage = Some(p.stage);
    let mut out = Vec::new();
    let mut inconclusive = false;
    let mut push = |r: CheckRecord| {
        if r.status == Status::Inconclusive {
            inconclusive = true;
        }
        out.push(r);
    };
    if which.bounds {
        let b1 = Rational::from(3u32 * w);
        push(
            CheckRecord::new("terms.a1", stage, loc.clone())
                .measured(format!("{}", t.a1), over_w(&t.a1, w, true))
                .bound("3 w(x)".into(), 3.0)
                .status(upper_status(&t.a1, &b1)),
        );
        let b2 = Rational::from(w * k) / 2u32;
        push(
            CheckRecord::new("terms.a2", stage, loc.clone())
                .measured(format!("{}", t.a2), over_w(&t.a2, w, false))
                .bound("(k/2) w(x)".into(), k as f64 / 2.0)
                .status(lower_status(&t.a2, &b2)),
        );
        let n = pow3(k - 1).to_u64().expect("small k") + 1;
        let h = HarmonicTable::new(n, t.a2.precision()).get(n);
        let harmonic = h.sub(&CertifiedValue::from_integer(&Integer::from(1), t.a2.precision()));
        let hbound = harmonic.abs_upper().to_rational().expect("finite") * w;
        push(
            CheckRecord::new("terms.a2_harmonic", stage, loc.clone())
                .measured(format!("{}", t.a2), over_w(&t.a2, w, false))
                .bound(format!("(H_{n} - 1) w(x)"), harmonic.to_f64())
                .status(lower_status(&t.a2, &hbound)),
        );
        let bound = Rational::from(TERM_BOUND * w);
        let flag = Rational::from(TERM_FLAG_LIMIT * w);
        for (name, v) in [("terms.a3", &t.a3), ("terms.a5", &t.a5)] {
            let mut st = upper_status(v, &bound);
            if st == Status::Fail {
                st = match upper_status(v, &flag) {
                    Status::Pass => Status::Flagged,
                    other => other,
                };
            }
            push(
                CheckRecord::new(name, stage, loc.clone())
                    .measured(format!("{v}"), over_w(v, w, true))
                    .bound(format!("{TERM_BOUND} w(x)"), TERM_BOUND as f64)
                    .status(st),
            );
        }
        let dec = t.decider();
        let sign_ok = sign_of(&t.a2) == Some(eps) && sign_of(&dec).map_or(true, |s| s == eps);
        push(
            CheckRecord::new("terms.sign", stage, loc.clone())
                .measured(format!("a2={} a4+a6={}", t.a2, dec), dec.to_f64())
                .bound(format!("eps={}", eps.value()), eps.value() as f64)
                .status(if sign_ok { Status::Pass } else { Status::Fail }),
        );
        let hw_over_w = over_w(&p.hw, w, false);
        push(
            CheckRecord::new("terms.combined", stage, loc.clone())
                .measured(format!("{}", p.hw), hw_over_w)
                .bound("(k/2 - 403) w(x)".into(), k as f64 / 2.0 - 403.0)
                .status(Status::Info),
        );
        push(
            CheckRecord::new("terms.target", stage, loc.clone())
                .measured(format!("{}", p.hw), hw_over_w)
                .bound("(k/3) w(x)".into(), k as f64 / 3.0)
                .status(Status::Info),
        );
    }
    let sum = t.sum();
    if which.decomposition {
        let gap = sum.sub(&p.hw);
        let radii = sum.radius() + p.hw.radius();
        push(
            CheckRecord::new("decomposition.hilbert", stage, loc.clone())
                .measured(format!("{gap}"), gap.to_f64().abs())
                .bound("combined radii".into(), radii)
                .status(if sum.overlaps(&p.hw) { Status::Pass } else { Status::Fail }),
        );
    }
    if let Some((value, err)) = oracle {
        let scale = p.hw.to_f64().abs().max(w.to_f64());
        let tol = sum.radius() + err + ORACLE_RELATIVE_TOLERANCE * scale;
        let diff = (sum.to_f64() - value).abs();
        push(
            CheckRecord::new("decomposition.oracle", stage, loc)
                .measured(format!("{value:e} ± {err:e}"), diff / scale)
                .bound(format!("{ORACLE_RELATIVE_TOLERANCE:e} relative"), ORACLE_RELATIVE_TOLERANCE)
                .status(if diff <= tol { Status::Pass } else { Status::Fail }),
        );
    }
    if inconclusive && !final_attempt {
        None
    } else {
        Some(out)
    }
}

/// Sample points of `I(J)^m` for every `J = K^m`, `K ∈ ks`, as `(position of K, ε(J),
/// points)`, and a common denominator of all points.
pub fn stage_samples(
    signs: &SignTable,
    k: u32,
    ks: &[TriadicInterval],
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<(usize, Sign, Vec<Rational>)>, Integer)> {
    let mut plan = Vec::with_capacity(ks.len());
    let mut den = Integer::from(1);
    for (pos, kk) in ks.iter().enumerate() {
        let j = kk.middle_third();
        let eps = signs
            .eps(&j)
            .ok_or_else(|| Error::NotApplicable(format!("no sign recorded for {j}")))?;
        let comp = j.companion(eps, k)?;
        let xs = sample_points(&comp.middle_third().to_interval(), samples, rng);
        for x in &xs {
            den.lcm_mut(x.denom());
        }
        plan.push((pos, eps, xs));
    }
    Ok((plan, den))
}

/// The term bounds and/or the decomposition identity at every sample point of every
/// `I(J)^m`, `J = K^m`, `K ∈ K_i`, `i ≤ depth − 1`.
pub fn check_terms(
    w: &StepMeasure,
    signs: &SignTable,
    k: u32,
    depth: u32,
    opts: &VerifyOptions,
    which: TermChecks,
) -> Result<TermCheckOutput> {
    let cols = collections(k, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = TermCheckOutput::default();
    for (stage, ks) in cols.iter().enumerate().take(depth as usize) {
        let stage = stage as u32;
        let (plan, den) = stage_samples(signs, k, ks, opts.samples, &mut rng)?;
        let mut contexts: Vec<StageTerms> = Vec::new();
        let ctx0 = StageTerms::new(w, signs, k, stage, ks.clone(), &den, opts.precision)?;
        contexts.push(ctx0);
        for (pos, eps, xs) in plan {
            for x in xs {
                let oracle = if which.oracle {
                    let e = contexts[0].oracle(&x)?;
                    Some((e.value, e.error))
                } else {
                    None
                };
                let mut prec = opts.precision;
                let mut attempt = 0;
                loop {
                    let final_attempt = attempt >= opts.retries;
                    let ctx = &contexts[0];
                    let terms = ctx.six_terms(pos, &x, prec);
                    let hw = ctx.hilbert(&x, prec);
                    let (terms, hw) = match (terms, hw) {
                        (Ok(t), Ok(h)) => (t, h),
                        (Err(Error::PrecisionExhausted(_)), _) | (_, Err(Error::PrecisionExhausted(_)))
                            if !final_attempt =>
                        {
                            attempt += 1;
                            prec *= 2;
                            continue;
                        }
                        (Err(e), _) | (_, Err(e)) => return Err(e),
                    };
                    let p = PointTerms {
                        stage,
                        j: terms.j.clone(),
                        companion: terms.companion.clone(),
                        x: x.clone(),
                        w_at_x: terms.w_at_x.clone(),
                        hw,
                        terms,
                    };
                    match point_records(&p, k, eps, oracle, which, final_attempt) {
                        Some(recs) => {
                            for r in recs {
                                out.report.push(r);
                            }
                            out.points.push(p);
                            break;
                        }
                        None => {
                            attempt += 1;
                            prec *= 2;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
