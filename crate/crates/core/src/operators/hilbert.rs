//! Certified principal-value Hilbert transform `Hw(x) = p.v. ∫ w(y)/(y − x) dy` of step
//! measures, evaluated piecewise in closed form as `d·ln|(b − x)/(a − x)|`.

use std::cmp::Ordering;
use std::ops::Range;

use rug::{Assign, Integer, Rational};

use crate::ball::CertifiedValue;
use crate::measure::StepMeasure;
use crate::{Error, Result};

/// Piece endpoints of a step measure as integer numerators over one common denominator,
/// with densities grouped into classes so that each class is multiplied only once.
#[derive(Clone, Debug)]
pub struct GridMeasure {
    denom: Integer,
    a: Vec<Integer>,
    b: Vec<Integer>,
    class: Vec<u32>,
    densities: Vec<Rational>,
}

impl GridMeasure {
    pub fn new(w: &StepMeasure) -> Self {
        Self::with_denominator(w, &Integer::from(1))
    }

    /// Grid whose denominator is also a multiple of `extra`, so that points with
    /// denominator dividing `extra` are grid points.
    pub fn with_denominator(w: &StepMeasure, extra: &Integer) -> Self {
        let mut denom = w.endpoint_denominator();
        denom.lcm_mut(extra);
        let mut densities: Vec<Rational> = Vec::new();
        let mut class = Vec::with_capacity(w.len());
        let mut a = Vec::with_capacity(w.len());
        let mut b = Vec::with_capacity(w.len());
        for p in w.pieces() {
            a.push(to_grid(&p.interval.a, &denom));
            b.push(to_grid(&p.interval.b, &denom));
            let c = match densities.iter().position(|d| *d == p.density) {
                Some(c) => c,
                None => {
                    densities.push(p.density.clone());
                    densities.len() - 1
                }
            };
            class.push(c as u32);
        }
        GridMeasure { denom, a, b, class, densities }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn denominator(&self) -> &Integer {
        &self.denom
    }

    /// Grid numerator of `x`, when `x` lies on the grid.
    pub fn grid_point(&self, x: &Rational) -> Option<Integer> {
        let scaled = Rational::from(x * &self.denom);
        if *scaled.denom() == 1 {
            Some(scaled.numer().clone())
        } else {
            None
        }
    }

    pub fn density(&self, p: usize) -> &Rational {
        &self.densities[self.class[p] as usize]
    }

    /// `(a_p − x, b_p − x)` in real units, each within two roundings.
    pub fn offsets(&self, p: usize, x: &Integer) -> (f64, f64) {
        let den = self.denom.to_f64();
        let lo = Integer::from(&self.a[p] - x).to_f64() / den;
        let hi = Integer::from(&self.b[p] - x).to_f64() / den;
        (lo, hi)
    }

    /// Half-open grid range `[a_p, b_p)` of piece `p`.
    pub fn endpoints(&self, p: usize) -> (&Integer, &Integer) {
        (&self.a[p], &self.b[p])
    }

    /// Index range of pieces lying in `[lo, hi)` (grid numerators); pieces are assumed
    /// not to straddle either bound.
    pub fn range_within(&self, lo: &Integer, hi: &Integer) -> Range<usize> {
        let s = self.a.partition_point(|a| a < lo);
        let e = self.b.partition_point(|b| b <= hi);
        s..e.max(s)
    }

    /// `Σ_{p ∈ range} d_p·ln|(b_p − x)/(a_p − x)|` for the grid point `x`. The piece
    /// containing `x` (if any) contributes its principal value.
    pub fn log_sum(&self, range: Range<usize>, x: &Integer, prec: u32) -> Result<CertifiedValue> {
        let mut per_class: Vec<Option<CertifiedValue>> = vec![None; self.densities.len()];
        let mut num = Integer::new();
        let mut den = Integer::new();
        for p in range {
            num.assign(&self.b[p] - x);
            den.assign(&self.a[p] - x);
            if num.cmp0() == Ordering::Equal || den.cmp0() == Ordering::Equal {
                return Err(Error::UndefinedAtJump(format!(
                    "{}",
                    Rational::from((x.clone(), self.denom.clone()))
                )));
            }
            num.abs_mut();
            den.abs_mut();
            let term = CertifiedValue::ln_ratio(&num, &den, prec);
            match &mut per_class[self.class[p] as usize] {
                Some(acc) => acc.add_assign_value(&term),
                slot @ None => *slot = Some(term),
            }
        }
        let mut total = CertifiedValue::zero(prec);
        for (c, s) in per_class.into_iter().enumerate() {
            if let Some(s) = s {
                total.add_assign_value(&s.mul_rational(&self.densities[c]));
            }
        }
        Ok(total)
    }

    /// Same as [`GridMeasure::log_sum`] over every piece.
    pub fn log_sum_all(&self, x: &Integer, prec: u32) -> Result<CertifiedValue> {
        self.log_sum(0..self.len(), x, prec)
    }
}

fn to_grid(x: &Rational, denom: &Integer) -> Integer {
    let scaled = Rational::from(x * denom);
    debug_assert_eq!(*scaled.denom(), 1);
    scaled.numer().clone()
}

/// Certified `Hw(x)`.
///
/// Fails with [`Error::UndefinedAtJump`] when `x` is a piece endpoint, and with
/// [`Error::PrecisionExhausted`] when the radius exceeds `2^{-precision/2}` relative
/// to `max(1, |Hw(x)|)`.
pub fn hilbert_pv(w: &StepMeasure, x: &Rational, precision: u32) -> Result<CertifiedValue> {
    if w.is_jump(x) {
        return Err(Error::UndefinedAtJump(x.to_string()));
    }
    let grid = GridMeasure::with_denominator(w, x.denom());
    let gx = grid.grid_point(x).expect("grid contains x");
    let v = grid.log_sum_all(&gx, precision)?;
    check_radius(&v, precision)?;
    Ok(v)
}

/// Batch version of [`hilbert_pv`] sharing one grid; all points must lie on the grid
/// built with `extra` as additional denominator.
pub fn hilbert_pv_batch(
    w: &StepMeasure,
    xs: &[Rational],
    precision: u32,
) -> Result<Vec<CertifiedValue>> {
    use rayon::prelude::*;
    let mut extra = Integer::from(1);
    for x in xs {
        extra.lcm_mut(x.denom());
    }
    let grid = GridMeasure::with_denominator(w, &extra);
    xs.par_iter()
        .map(|x| {
            let gx = grid.grid_point(x).expect("grid contains x");
            let v = grid.log_sum_all(&gx, precision)?;
            check_radius(&v, precision)?;
            Ok(v)
        })
        .collect()
}

pub(crate) fn check_radius(v: &CertifiedValue, precision: u32) -> Result<()> {
    let scale = v.to_f64().abs().max(1.0);
    let target = scale * 2f64.powi(-((precision / 2).min(1000) as i32));
    if v.radius() > target {
        return Err(Error::PrecisionExhausted(format!(
            "radius {:.3e} exceeds target {:.3e} at {} bits",
            v.radius(),
            target,
            precision
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Piece;
    use rug::Float;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn unit() -> StepMeasure {
        StepMeasure::new(vec![Piece::new(q(0, 1), q(1, 1), q(1, 1))]).unwrap()
    }

    #[test]
    fn symmetric_point_vanishes() {
        let v = hilbert_pv(&unit(), &q(1, 2), 128).unwrap();
        assert!(v.contains_rational(&q(0, 1)));
        assert!(v.radius() < 1e-30);
    }

    #[test]
    fn outside_point_closed_form() {
        let v = hilbert_pv(&unit(), &q(2, 1), 128).unwrap();
        let ln2 = Float::with_val(200, Float::ln_u(2));
        assert!(v.lower() <= -ln2.clone() && -ln2 <= v.upper());
        let v = hilbert_pv(&unit(), &q(-1, 1), 128).unwrap();
        assert!((v.to_f64() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn jumps_are_rejected() {
        assert!(matches!(hilbert_pv(&unit(), &q(1, 1), 128), Err(Error::UndefinedAtJump(_))));
        assert!(matches!(hilbert_pv(&unit(), &q(0, 1), 128), Err(Error::UndefinedAtJump(_))));
    }

    #[test]
    fn batch_matches_single() {
        let w = StepMeasure::new(vec![
            Piece::new(q(0, 1), q(1, 3), q(2, 1)),
            Piece::new(q(1, 2), q(5, 7), q(1, 5)),
        ])
        .unwrap();
        let xs = vec![q(1, 4), q(2, 5), q(3, 5), q(9, 1)];
        let batch = hilbert_pv_batch(&w, &xs, 128).unwrap();
        for (x, b) in xs.iter().zip(&batch) {
            assert!(hilbert_pv(&w, x, 128).unwrap().overlaps(b));
        }
    }
}
