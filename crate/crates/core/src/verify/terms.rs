//! The six-term split of `Hw(x)` for `x ∈ I(J)^m`, `J = K^m`, `K ∈ K_i`:
//!
//! * `a1` principal value over `I(J)`;
//! * `a2` integral over `J`;
//! * `a3` kernel difference `1/(y − x) − 1/(y − c)` over `K^c`, `c = c(J) = c(K)`;
//! * `a4` integral against `1/(y − c)` over the complement of `∪K_i`;
//! * `a5` `Σ_{K' ≠ K} ∫_{K'} w(y)[1/(y − c) − 1/(c(K') − c)] dy`;
//! * `a6` `Σ_{K' ≠ K} w(K')/(c(K') − c)`.
//!
//! The measure vanishes on `K ∖ (I(J) ∪ J)`, so the six terms add up to `Hw(x)`.

use std::ops::Range;

use rug::{Integer, Rational};

use crate::ball::CertifiedValue;
use crate::measure::{DeciderContext, SignTable, StepMeasure};
use crate::operators::hilbert::{check_radius, GridMeasure};
use crate::operators::quadrature::{pv_quadrature_oracle_on_grid, Estimate, DEFAULT_EXCISIONS};
use crate::triadic::{pow3_rational, Interval, TriadicInterval};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TermBreakdown {
    pub a1: CertifiedValue,
    pub a2: CertifiedValue,
    pub a3: CertifiedValue,
    pub a4: CertifiedValue,
    pub a5: CertifiedValue,
    pub a6: CertifiedValue,
    pub x: Rational,
    pub stage: u32,
    pub k_interval: TriadicInterval,
    pub j: TriadicInterval,
    pub companion: TriadicInterval,
    pub w_at_x: Rational,
}

impl TermBreakdown {
    pub fn terms(&self) -> [&CertifiedValue; 6] {
        [&self.a1, &self.a2, &self.a3, &self.a4, &self.a5, &self.a6]
    }

    pub fn sum(&self) -> CertifiedValue {
        let mut s = self.a1.clone();
        for t in &self.terms()[1..] {
            s.add_assign_value(t);
        }
        s
    }

    /// `a4 + a6`, the quantity whose sign fixes `ε(J)`.
    pub fn decider(&self) -> CertifiedValue {
        self.a4.add(&self.a6)
    }
}

/// Everything shared by the evaluations for one stage collection `K_i` of a fixed
/// measure: one exact grid containing every sample point and center, the index ranges
/// of pieces inside the blocks of adjacent `K`s, and the discrete-term evaluator.
pub struct StageTerms<'a> {
    w: &'a StepMeasure,
    signs: &'a SignTable,
    k: u32,
    stage: u32,
    ks: Vec<TriadicInterval>,
    grid: GridMeasure,
    decider: DeciderContext,
    /// Piece ranges covered by `∪K_i`, left to right.
    blocks: Vec<Range<usize>>,
}

impl<'a> StageTerms<'a> {
    /// `extra` must be a multiple of the denominator of every point that will be
    /// evaluated.
    pub fn new(
        w: &'a StepMeasure,
        signs: &'a SignTable,
        k: u32,
        stage: u32,
        ks: Vec<TriadicInterval>,
        extra: &Integer,
        precision: u32,
    ) -> Result<Self> {
        let scale = ks
            .first()
            .map(|kk| kk.scale())
            .ok_or_else(|| Error::InvalidParameter("empty stage collection".into()))?;
        let mut den = Integer::from(pow3_rational(scale).denom() * 2u32);
        den.lcm_mut(extra);
        let grid = GridMeasure::with_denominator(w, &den);
        let decider = DeciderContext::new(w, &ks, precision, Rational::new())?;
        let mut sorted = ks.clone();
        sorted.sort_by(TriadicInterval::cmp_position);
        let mut block_ivs: Vec<(Rational, Rational)> = Vec::new();
        for kk in &sorted {
            match block_ivs.last_mut() {
                Some(last) if last.1 == kk.left() => last.1 = kk.right(),
                _ => block_ivs.push((kk.left(), kk.right())),
            }
        }
        let blocks = block_ivs.iter().map(|(a, b)| range_of(&grid, a, b)).collect();
        Ok(StageTerms { w, signs, k, stage, ks, grid, decider, blocks })
    }

    pub fn collection(&self) -> &[TriadicInterval] {
        &self.ks
    }

    pub fn stage(&self) -> u32 {
        self.stage
    }

    pub fn grid(&self) -> &GridMeasure {
        &self.grid
    }

    /// `J = K^m` and its companion `I(J)` for the `pos`-th `K`.
    pub fn j_and_companion(&self, pos: usize) -> Result<(TriadicInterval, TriadicInterval)> {
        let j = self.ks[pos].middle_third();
        let eps = self
            .signs
            .eps(&j)
            .ok_or_else(|| Error::NotApplicable(format!("no sign recorded for {j}")))?;
        let comp = j.companion(eps, self.k)?;
        Ok((j, comp))
    }

    fn on_grid(&self, x: &Rational) -> Result<Integer> {
        self.grid
            .grid_point(x)
            .ok_or_else(|| Error::InvalidParameter(format!("{x} is not on the prepared grid")))
    }

    fn sum_ranges(&self, ranges: &[Range<usize>], x: &Integer, prec: u32) -> Result<CertifiedValue> {
        let mut acc = CertifiedValue::zero(prec);
        for r in ranges {
            if !r.is_empty() {
                acc.add_assign_value(&self.grid.log_sum(r.clone(), x, prec)?);
            }
        }
        Ok(acc)
    }

    /// Piece ranges of `K^c`, of the complement of `∪K_i`, and of `∪K_i ∖ K`.
    fn regions(&self, kr: &Range<usize>) -> (Vec<Range<usize>>, Vec<Range<usize>>, Vec<Range<usize>>) {
        let n = self.grid.len();
        let outside = vec![0..kr.start, kr.end..n];
        let mut far = Vec::new();
        let mut near = Vec::new();
        let mut cursor = 0;
        for b in &self.blocks {
            far.push(cursor..b.start);
            if b.start <= kr.start && kr.end <= b.end {
                near.push(b.start..kr.start);
                near.push(kr.end..b.end);
            } else {
                near.push(b.clone());
            }
            cursor = b.end;
        }
        far.push(cursor..n);
        (outside, far, near)
    }

    /// Exact bookkeeping of the split: inside `K` only `I(J)` and `J` carry pieces, the
    /// far and near regions tile `K^c`, and no range overlaps another.
    fn check_partition(
        &self,
        kr: &Range<usize>,
        ir: &Range<usize>,
        jr: &Range<usize>,
        outside: &[Range<usize>],
        far: &[Range<usize>],
        near: &[Range<usize>],
    ) -> Result<()> {
        let n = self.grid.len();
        let mut owner = vec![0u8; n];
        let mut mark = |r: &Range<usize>, tag: u8| -> Result<()> {
            for p in r.clone() {
                if owner[p] != 0 {
                    return Err(Error::NotApplicable(format!("piece {p} lies in two regions")));
                }
                owner[p] = tag;
            }
            Ok(())
        };
        mark(ir, 1)?;
        mark(jr, 2)?;
        for r in outside {
            mark(r, 3)?;
        }
        if owner.iter().any(|&t| t == 0) {
            return Err(Error::NotApplicable(
                "the measure charges K outside I(J) ∪ J".into(),
            ));
        }
        let inside: usize = ir.len() + jr.len();
        if inside != kr.len() {
            return Err(Error::NotApplicable("pieces inside K are not covered by I(J) ∪ J".into()));
        }
        let mut seen = vec![false; n];
        for r in far.iter().chain(near) {
            for p in r.clone() {
                if seen[p] || kr.contains(&p) {
                    return Err(Error::NotApplicable(format!("piece {p} counted twice in K^c")));
                }
                seen[p] = true;
            }
        }
        let covered = seen.iter().filter(|&&s| s).count();
        if covered + kr.len() != n {
            return Err(Error::NotApplicable("far and near regions do not tile K^c".into()));
        }
        Ok(())
    }

    /// The six terms at `x` for the `pos`-th `K`.
    pub fn six_terms(&self, pos: usize, x: &Rational, prec: u32) -> Result<TermBreakdown> {
        let kk = &self.ks[pos];
        let (j, comp) = self.j_and_companion(pos)?;
        if !comp.middle_third().contains_point(x) {
            return Err(Error::InvalidParameter(format!("{x} is not in I(J)^m = {}", comp.middle_third())));
        }
        let gx = self.on_grid(x)?;
        let c = kk.center();
        let gc = self.on_grid(&c)?;
        let kr = range_of(&self.grid, &kk.left(), &kk.right());
        let ir = range_of(&self.grid, &comp.left(), &comp.right());
        let jr = range_of(&self.grid, &j.left(), &j.right());
        let (outside, far, near) = self.regions(&kr);
        self.check_partition(&kr, &ir, &jr, &outside, &far, &near)?;

        let a1 = self.grid.log_sum(ir, &gx, prec)?;
        let a2 = self.grid.log_sum(jr, &gx, prec)?;
        let out_x = self.sum_ranges(&outside, &gx, prec)?;
        let a4 = self.sum_ranges(&far, &gc, prec)?;
        let near_c = self.sum_ranges(&near, &gc, prec)?;
        let a6 = self.decider.discrete_term(pos, prec);
        let a5 = near_c.sub(&a6);
        let a3 = out_x.sub(&a4).sub(&near_c);
        Ok(TermBreakdown {
            a1,
            a2,
            a3,
            a4,
            a5,
            a6,
            x: x.clone(),
            stage: self.stage,
            k_interval: kk.clone(),
            j,
            companion: comp,
            w_at_x: self.w.density_at(x),
        })
    }

    /// Certified `Hw(x)` over the whole measure, on the shared grid.
    pub fn hilbert(&self, x: &Rational, prec: u32) -> Result<CertifiedValue> {
        let gx = self.on_grid(x)?;
        let v = self.grid.log_sum_all(&gx, prec)?;
        check_radius(&v, prec)?;
        Ok(v)
    }

    /// Quadrature oracle for `Hw(x)` on the shared grid.
    pub fn oracle(&self, x: &Rational) -> Result<Estimate> {
        let gx = self.on_grid(x)?;
        Ok(pv_quadrature_oracle_on_grid(&self.grid, &gx, 0..self.grid.len(), &DEFAULT_EXCISIONS))
    }

    /// Index of `K` in the collection.
    pub fn position(&self, kk: &TriadicInterval) -> Option<usize> {
        self.ks.iter().position(|x| x == kk)
    }
}

fn range_of(grid: &GridMeasure, a: &Rational, b: &Rational) -> Range<usize> {
    let lo = grid.grid_point(a).expect("endpoint on the grid");
    let hi = grid.grid_point(b).expect("endpoint on the grid");
    grid.range_within(&lo, &hi)
}

/// The six terms for one `(K, x)`.
///
/// `ks` is the full collection `K_i` that contains `K`.
#[allow(clippy::too_many_arguments)]
pub fn six_terms(
    w: &StepMeasure,
    signs: &SignTable,
    k: u32,
    stage: u32,
    ks: &[TriadicInterval],
    kk: &TriadicInterval,
    x: &Rational,
    precision: u32,
) -> Result<TermBreakdown> {
    let ctx = StageTerms::new(w, signs, k, stage, ks.to_vec(), x.denom(), precision)?;
    let pos = ctx
        .position(kk)
        .ok_or_else(|| Error::InvalidParameter(format!("{kk} is not in the stage-{stage} collection")))?;
    ctx.six_terms(pos, x, precision)
}

/// Region lists of the split as exact intervals: `I(J)`, `J`, and the two parts of
/// `K^c` within `[lo, hi)`.
pub fn region_intervals(
    kk: &TriadicInterval,
    j: &TriadicInterval,
    comp: &TriadicInterval,
    lo: &Rational,
    hi: &Rational,
) -> Vec<Interval> {
    let mut out = vec![comp.to_interval(), j.to_interval()];
    if *lo < kk.left() {
        out.push(Interval::new(lo.clone(), kk.left()));
    }
    if kk.right() < *hi {
        out.push(Interval::new(kk.right(), hi.clone()));
    }
    out
}
