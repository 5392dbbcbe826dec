//! Stage-by-stage construction of `w_0, …, w_N`.
//!
//! At stage `i` every `K ∈ K_i` hands its mass to `K^m ∪ I(K^m)`. The orientation of
//! `I(K^m)` is the sign of the far-field decider
//! `∫_{(∪K_i)^c} w_{i−1}(y)/(y − c) dy + Σ_{K' ≠ K} w_{i−1}(K')/(c(K') − c)`, `c = c(K)`.

use std::cmp::Ordering;
use std::sync::OnceLock;

use rayon::prelude::*;
use rug::{Integer, Rational};

use super::step::{Piece, StepMeasure};
use super::{BaseSupport, ConstructionParams, SignEntry, SignTable};
use crate::ball::CertifiedValue;
use crate::operators::harmonic::HarmonicTable;
use crate::operators::hilbert::GridMeasure;
use crate::triadic::{pow3_rational, stage_collections, Interval, Sign, TriadicInterval};
use crate::{Error, Result};

/// Stage collections up to this size use an exact rational sum for the discrete term.
pub const EXACT_DISCRETE_LIMIT: usize = 729;

/// Everything produced by one build: all intermediate measures, the sign table and the
/// collections `K_0..K_N`.
#[derive(Clone, Debug)]
pub struct Construction {
    pub params: ConstructionParams,
    pub stages: Vec<StepMeasure>,
    pub collections: Vec<Vec<TriadicInterval>>,
    pub signs: SignTable,
}

impl Construction {
    /// The finite-depth weight `w_N`.
    pub fn weight(&self) -> &StepMeasure {
        self.stages.last().expect("at least w_0")
    }
}

/// `w_0`: mass one spread uniformly over `[1/3, 2/3)` and the base companion set.
pub fn build_w0(k: u32, base: BaseSupport) -> Result<(StepMeasure, SignEntry)> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    let unit = TriadicInterval::unit();
    let j = unit.middle_third();
    let (entry_interval, companion) = match base {
        BaseSupport::Recursive => (j.clone(), j.companion(Sign::Plus, k)?),
        BaseSupport::Literal => (unit.clone(), unit.companion(Sign::Plus, k)?.middle_third()),
    };
    let support_len = Rational::from(j.length() + companion.length());
    let density = Rational::from(support_len.recip_ref());
    let pieces = vec![
        Piece { interval: companion.to_interval(), density: density.clone() },
        Piece { interval: j.to_interval(), density },
    ];
    let w = StepMeasure::new(pieces)?;
    let entry = SignEntry {
        interval: entry_interval,
        stage: 0,
        eps: Sign::Plus,
        decider: Some(CertifiedValue::zero(crate::measure::ConstructionParams::DEFAULT_PRECISION)),
        defaulted: true,
    };
    Ok((w, entry))
}

/// Precomputed far field of `w_{i−1}` relative to the collection `K_i`; evaluates the
/// sign decider for any `K ∈ K_i`.
pub struct DeciderContext {
    scale: i64,
    /// `(first index, one past last index)` of each maximal run of adjacent `K`s.
    blocks: Vec<(u64, u64)>,
    /// Grid index `n` of each `K` (in the order given).
    indices: Vec<u64>,
    far: StepMeasure,
    grid: GridMeasure,
    masses: Masses,
    base_precision: u32,
    tolerance: Rational,
    tables: [OnceLock<HarmonicTable>; 3],
}

enum Masses {
    Uniform(Rational),
    PerInterval(Vec<Rational>),
}

impl DeciderContext {
    /// `w` must agree with `w_{i−1}` outside `∪K_i` and on the masses of every `K ∈ K_i`.
    pub fn new(
        w: &StepMeasure,
        ks: &[TriadicInterval],
        precision: u32,
        tolerance: Rational,
    ) -> Result<Self> {
        let scale = ks.first().map(|k| k.scale()).unwrap_or(0);
        let mut indices = Vec::with_capacity(ks.len());
        for k in ks {
            if k.scale() != scale {
                return Err(Error::InvalidParameter("mixed scales in a stage collection".into()));
            }
            let n = k.index().to_u64().ok_or_else(|| {
                Error::InvalidParameter(format!("interval {k} lies left of the origin"))
            })?;
            indices.push(n);
        }
        let mut blocks: Vec<(u64, u64)> = Vec::new();
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        for &n in &sorted {
            match blocks.last_mut() {
                Some(last) if last.1 == n => last.1 = n + 1,
                _ => blocks.push((n, n + 1)),
            }
        }
        let h = pow3_rational(scale);
        let block_intervals: Vec<Interval> = blocks
            .iter()
            .map(|&(s, e)| {
                Interval::new(Rational::from(&h * Integer::from(s)), Rational::from(&h * Integer::from(e)))
            })
            .collect();
        let far = w.restrict_complement(&block_intervals);
        let center_denominator = Integer::from(h.denom() * 2u32);
        let grid = GridMeasure::with_denominator(&far, &center_denominator);
        let masses: Vec<Rational> = ks.par_iter().map(|k| w.mass(&k.to_interval())).collect();
        let masses = if masses.windows(2).all(|p| p[0] == p[1]) {
            Masses::Uniform(masses.first().cloned().unwrap_or_default())
        } else {
            Masses::PerInterval(masses)
        };
        Ok(DeciderContext {
            scale,
            blocks,
            indices,
            far,
            grid,
            masses,
            base_precision: precision,
            tolerance,
            tables: Default::default(),
        })
    }

    /// Restriction of the measure to the complement of `∪K_i`.
    pub fn far_field(&self) -> &StepMeasure {
        &self.far
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn table(&self, level: usize) -> &HarmonicTable {
        self.tables[level].get_or_init(|| {
            let span = self.blocks.last().map(|b| b.1).unwrap_or(0)
                - self.blocks.first().map(|b| b.0).unwrap_or(0);
            HarmonicTable::new(span, self.base_precision << level)
        })
    }

    /// The far-field integral `∫_{(∪K_i)^c} w(y)/(y − c(K)) dy` for the `pos`-th interval.
    pub fn far_term(&self, pos: usize, prec: u32) -> Result<CertifiedValue> {
        let n = self.indices[pos];
        let c = self.center_on_grid(n);
        self.grid.log_sum_all(&c, prec)
    }

    fn center_on_grid(&self, n: u64) -> Integer {
        // c(K) = (2n + 1)/2 · 3^scale
        let h = pow3_rational(self.scale);
        let c = Rational::from(Integer::from(2 * n + 1)) * h / 2u32;
        self.grid.grid_point(&c).expect("centre lies on the grid")
    }

    /// The discrete term `Σ_{K' ≠ K} w(K')/(c(K') − c(K))` for the `pos`-th interval.
    pub fn discrete_term(&self, pos: usize, prec: u32) -> CertifiedValue {
        let n = self.indices[pos];
        let inv_h = pow3_rational(-self.scale);
        match &self.masses {
            Masses::Uniform(m) if self.indices.len() > EXACT_DISCRETE_LIMIT => {
                let level = match prec {
                    p if p <= self.base_precision => 0,
                    p if p <= self.base_precision * 2 => 1,
                    _ => 2,
                };
                let table = self.table(level);
                let mut acc = CertifiedValue::zero(table.precision());
                for &(s, e) in &self.blocks {
                    if s > n {
                        // j = n' − n runs over s−n ..= e−1−n
                        table.accumulate_range(&mut acc, s - n - 1, e - 1 - n, false);
                    } else if e <= n {
                        // j = n − n' runs over n−e+1 ..= n−s
                        table.accumulate_range(&mut acc, n - e, n - s, true);
                    } else {
                        table.accumulate_range(&mut acc, 0, e - 1 - n, false);
                        table.accumulate_range(&mut acc, 0, n - s, true);
                    }
                }
                acc.mul_rational(&Rational::from(m * &inv_h))
            }
            _ => {
                let mut sum = Rational::new();
                for (p, &n2) in self.indices.iter().enumerate() {
                    if n2 == n {
                        continue;
                    }
                    let m = match &self.masses {
                        Masses::Uniform(m) => m,
                        Masses::PerInterval(v) => &v[p],
                    };
                    let d = n2 as i128 - n as i128;
                    sum += Rational::from(m / Integer::from(d));
                }
                CertifiedValue::from_rational(&(sum * inv_h), prec)
            }
        }
    }

    /// Decider value at the given precision.
    pub fn decider_at(&self, pos: usize, prec: u32) -> Result<CertifiedValue> {
        let mut v = self.far_term(pos, prec)?;
        v.add_assign_value(&self.discrete_term(pos, prec));
        Ok(v)
    }

    /// Sign choice for the `pos`-th interval, raising precision up to four times before
    /// falling back to `+1` for values below the tolerance.
    pub fn decide(&self, pos: usize) -> Result<(Sign, CertifiedValue, bool)> {
        let mut last = None;
        for level in 0..3 {
            let v = self.decider_at(pos, self.base_precision << level)?;
            match v.certified_sign() {
                Some(Ordering::Greater) => return Ok((Sign::Plus, v, false)),
                Some(Ordering::Less) => return Ok((Sign::Minus, v, false)),
                _ => last = Some(v),
            }
        }
        let v = last.expect("at least one attempt");
        let exact_zero = v.midpoint().is_zero() && v.radius() == 0.0;
        if exact_zero || *v.midpoint().as_abs() < self.tolerance {
            Ok((Sign::Plus, v, true))
        } else {
            Err(Error::PrecisionExhausted(format!(
                "sign of the decider for the interval with index {} at scale {} is undecidable: {}",
                self.indices[pos], self.scale, v
            )))
        }
    }
}

/// Sign `ε(J)` for `J = K^m`, `K = ks[pos]`, decided from `w_prev` (= `w_{i−1}`).
pub fn choose_sign(
    w_prev: &StepMeasure,
    stage: u32,
    j: &TriadicInterval,
    ks: &[TriadicInterval],
    params: &ConstructionParams,
) -> Result<(Sign, CertifiedValue, bool)> {
    let pos = ks
        .iter()
        .position(|k| k.middle_third() == *j)
        .ok_or_else(|| Error::InvalidParameter(format!("{j} is not the middle third of a stage-{stage} interval")))?;
    let tol = params.sign_tolerance(&Rational::from(1));
    let ctx = DeciderContext::new(w_prev, ks, params.precision_bits, tol)?;
    ctx.decide(pos)
}

/// `w_i` from `w_{i−1}`: signs for every `K^m`, `K ∈ K_i`, are recorded in `signs`.
pub fn refine_stage(
    w_prev: &StepMeasure,
    stage: u32,
    ks: &[TriadicInterval],
    signs: &mut SignTable,
    params: &ConstructionParams,
) -> Result<StepMeasure> {
    let tol = params.sign_tolerance(w_prev.total_mass());
    let ctx = DeciderContext::new(w_prev, ks, params.precision_bits, tol)?;
    let decisions: Vec<Result<(Sign, CertifiedValue, bool)>> =
        (0..ks.len()).into_par_iter().map(|pos| ctx.decide(pos)).collect();
    let k = params.k;
    let mut new_pieces = Vec::with_capacity(ks.len());
    for (kk, decision) in ks.iter().zip(decisions) {
        let (eps, decider, defaulted) = decision?;
        let j = kk.middle_third();
        let comp = j.companion(eps, k)?;
        let mass = w_prev.mass(&kk.to_interval());
        let len = Rational::from(j.length() + comp.length());
        let density = mass / len;
        let (a, b) = match eps {
            Sign::Plus => (comp.left(), j.right()),
            Sign::Minus => (j.left(), comp.right()),
        };
        if density.cmp0() == Ordering::Greater {
            new_pieces.push(Piece::new(a, b, density));
        }
        signs.insert(SignEntry { interval: j, stage, eps, decider: Some(decider), defaulted });
    }
    let mut all: Vec<Piece> = ctx.far_field().pieces().to_vec();
    all.extend(new_pieces);
    StepMeasure::new(all)
}

/// Builds `w_0, …, w_N` with the full sign table.
pub fn build_stages(params: &ConstructionParams) -> Result<Construction> {
    params.validate()?;
    let k = params.k;
    let (w0, base_entry) = build_w0(k, params.base_support)?;
    let mut signs = SignTable::new();
    let mut base_entry = base_entry;
    base_entry.decider = Some(CertifiedValue::zero(params.precision_bits));
    signs.insert(base_entry);
    let mut stages = vec![w0];
    let mut collections = vec![vec![TriadicInterval::unit()]];
    for i in 1..=params.depth {
        let (_, ks) = stage_collections(k, i, collections.last().expect("K_0"))?;
        let next = refine_stage(stages.last().expect("w_0"), i, &ks, &mut signs, params)?;
        stages.push(next);
        collections.push(ks);
    }
    Ok(Construction { params: params.clone(), stages, collections, signs })
}

/// `(w_N, signs)`.
pub fn build_weight(params: &ConstructionParams) -> Result<(StepMeasure, SignTable)> {
    let c = build_stages(params)?;
    let w = c.stages.last().cloned().expect("w_0");
    Ok((w, c.signs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn base_measures() {
        let (w, e) = build_w0(2, BaseSupport::Recursive).unwrap();
        assert_eq!(w.len(), 1, "companion [2/9,1/3) touches [1/3,2/3)");
        assert_eq!(w.pieces()[0].density, q(9, 4));
        assert_eq!(*w.total_mass(), q(1, 1));
        assert_eq!(e.eps, Sign::Plus);
        assert!(e.defaulted);
        let (w, _) = build_w0(3, BaseSupport::Recursive).unwrap();
        assert_eq!(w.density_at(&q(17, 54)), q(27, 10));
        assert_eq!(w.density_at(&q(1, 2)), q(27, 10));
        let (w, e) = build_w0(2, BaseSupport::Literal).unwrap();
        assert_eq!(*w.total_mass(), q(1, 1));
        assert_eq!(w.len(), 2);
        assert_eq!(w.pieces()[0].interval, Interval::new(q(-2, 9), q(-1, 9)));
        assert_eq!(e.interval, TriadicInterval::unit());
    }

    #[test]
    fn first_refinement_k2() {
        let params = ConstructionParams::new(2, 1).unwrap();
        let c = build_stages(&params).unwrap();
        let w1 = c.weight();
        assert_eq!(*w1.total_mass(), q(1, 1));
        assert_eq!(w1.mass(&Interval::new(q(1, 3), q(4, 9))), q(1, 4));
        assert_eq!(w1.mass(&Interval::new(q(2, 9), q(3, 9))), q(1, 4));
        assert_eq!(w1.density_at(&q(5, 18)), q(9, 4));
        assert_eq!(w1.density_at(&q(21, 54)), q(81, 16));
        assert_eq!(w1.len(), 4);
        assert_eq!(c.signs.len(), 4);
    }

    #[test]
    fn stage_zero_decider_vanishes() {
        let params = ConstructionParams::new(3, 1).unwrap();
        let (sign, v, defaulted) = choose_sign(
            &StepMeasure::empty(),
            0,
            &TriadicInterval::unit().middle_third(),
            &[TriadicInterval::unit()],
            &params,
        )
        .unwrap();
        assert_eq!(sign, Sign::Plus);
        assert!(defaulted);
        assert!(v.contains_rational(&q(0, 1)));
    }

    #[test]
    fn harmonic_and_exact_discrete_terms_agree() {
        let params = ConstructionParams::new(5, 2).unwrap();
        let c = build_stages(&params).unwrap();
        let ks = &c.collections[2];
        assert!(ks.len() > EXACT_DISCRETE_LIMIT);
        let ctx = DeciderContext::new(&c.stages[1], ks, 128, q(0, 1)).unwrap();
        for pos in [0usize, 1, 17, 3280, ks.len() - 1] {
            let fast = ctx.discrete_term(pos, 128);
            let n = ks[pos].index().to_i64().unwrap();
            let mut exact = Rational::new();
            for other in ks {
                let m = other.index().to_i64().unwrap();
                if m != n {
                    exact += Rational::from((1, m - n));
                }
            }
            let m = c.stages[1].mass(&ks[0].to_interval());
            exact = exact * m * pow3_rational(-ks[0].scale());
            assert!(fast.contains_rational(&exact), "pos {pos}: {fast} vs {}", exact.to_f64());
        }
    }
}
