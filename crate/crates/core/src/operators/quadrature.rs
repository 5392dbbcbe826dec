//! Floating-point quadrature: Gauss–Legendre panels, adaptive bisection and a
//! principal-value oracle that never evaluates a logarithm.

use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rug::{Integer, Rational};

use super::hilbert::GridMeasure;
use crate::measure::StepMeasure;

/// Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = std::num::NonZeroUsize::new(order.max(1)).expect("positive order");
        let rule = GaussLegendre::new(order);
        let mut pairs: Vec<(f64, f64)> =
            rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = hi - lo;
        let mut s = CompensatedSum::default();
        for (t, wt) in self.nodes.iter().zip(&self.weights) {
            s.add(wt * f(lo + h * t));
        }
        s.value() * h
    }
}

/// The order-16 rule, built once.
pub fn default_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(16))
}

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A floating-point value with a heuristic error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const MAX_DEPTH: u32 = 60;

/// Adaptive integral of `f` over `[lo, hi]`: a panel is accepted once the rule on the
/// panel agrees with the rule on its two halves. Panels with a large ratio between the
/// endpoint magnitudes (and no sign change) are split geometrically.
pub fn adaptive_integrate(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> Estimate {
    let rule = default_rule();
    let whole = rule.integrate(lo, hi, f);
    let mut acc = CompensatedSum::default();
    let mut err = 0.0;
    refine(f, rule, lo, hi, whole, rel_tol, 0, &mut acc, &mut err);
    Estimate { value: acc.value(), error: err }
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    rule: &GaussRule,
    lo: f64,
    hi: f64,
    whole: f64,
    rel_tol: f64,
    depth: u32,
    acc: &mut CompensatedSum,
    err: &mut f64,
) {
    let mid = split_point(lo, hi);
    let left = rule.integrate(lo, mid, f);
    let right = rule.integrate(mid, hi, f);
    let halves = left + right;
    let diff = (halves - whole).abs();
    if diff <= rel_tol * halves.abs() || depth >= MAX_DEPTH || mid <= lo || mid >= hi {
        acc.add(halves);
        *err += diff;
        return;
    }
    refine(f, rule, lo, mid, left, rel_tol, depth + 1, acc, err);
    refine(f, rule, mid, hi, right, rel_tol, depth + 1, acc, err);
}

fn split_point(lo: f64, hi: f64) -> f64 {
    if lo * hi > 0.0 {
        let (small, large) = if lo.abs() < hi.abs() { (lo.abs(), hi.abs()) } else { (hi.abs(), lo.abs()) };
        if large > 4.0 * small {
            return lo.signum() * (small * large).sqrt();
        }
    }
    0.5 * (lo + hi)
}

/// Default excision radii, as fractions of the distance from `x` to the nearest
/// piece endpoint.
pub const DEFAULT_EXCISIONS: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

const ORACLE_TOL: f64 = 1e-14;

/// Principal value `∫ w(y)/(y − x) dy` by numerical integration of `1/(y − x)` over each
/// piece with `(x − δ, x + δ)` removed, for each `δ` in `excisions` (fractions of the
/// distance to the nearest endpoint, decreasing by halves), followed by Richardson
/// extrapolation in `δ²`. The error is the last extrapolation step plus the accumulated
/// panel errors. Returns `NaN` with infinite error when `x` is a piece endpoint.
pub fn pv_quadrature_oracle(w: &StepMeasure, x: &Rational, excisions: &[f64]) -> Estimate {
    let grid = GridMeasure::with_denominator(w, x.denom());
    let gx = grid.grid_point(x).expect("grid contains x");
    pv_quadrature_oracle_on_grid(&grid, &gx, 0..grid.len(), excisions)
}

/// [`pv_quadrature_oracle`] over the pieces `range` of a prepared grid, at the grid
/// point `gx`.
pub fn pv_quadrature_oracle_on_grid(
    grid: &GridMeasure,
    gx: &Integer,
    range: std::ops::Range<usize>,
    excisions: &[f64],
) -> Estimate {
    let recip = |u: f64| 1.0 / u;
    let mut far = CompensatedSum::default();
    let mut err = 0.0;
    let mut inner: Option<(f64, f64, f64)> = None;
    let mut dist = f64::INFINITY;
    for p in range {
        let (lo, hi) = grid.offsets(p, gx);
        if lo == 0.0 || hi == 0.0 {
            return Estimate { value: f64::NAN, error: f64::INFINITY };
        }
        dist = dist.min(lo.abs()).min(hi.abs());
        let d = grid.density(p).to_f64();
        if lo < 0.0 && hi > 0.0 {
            inner = Some((lo, hi, d));
            continue;
        }
        let e = adaptive_integrate(&recip, lo, hi, ORACLE_TOL);
        far.add(d * e.value);
        err += d.abs() * e.error;
    }
    let far = far.value();
    let Some((lo, hi, d)) = inner else {
        return Estimate { value: far, error: err };
    };
    let mut levels: Vec<f64> = Vec::with_capacity(excisions.len());
    for &frac in excisions {
        let delta = frac * dist;
        let left = adaptive_integrate(&recip, lo, -delta, ORACLE_TOL);
        let right = adaptive_integrate(&recip, delta, hi, ORACLE_TOL);
        err += d.abs() * (left.error + right.error);
        levels.push(far + d * (left.value + right.value));
    }
    let (value, step) = richardson(&levels);
    Estimate { value, error: err + step + 4.0 * f64::EPSILON * value.abs() }
}

/// Repeated Richardson extrapolation of values at step sizes halving each time, with
/// error expansion in even powers. Returns the final value and the size of the last
/// correction.
fn richardson(levels: &[f64]) -> (f64, f64) {
    if levels.is_empty() {
        return (f64::NAN, f64::INFINITY);
    }
    let mut row: Vec<f64> = levels.to_vec();
    let mut factor = 4.0;
    let mut last_step = 0.0;
    while row.len() > 1 {
        let next: Vec<f64> = row.windows(2).map(|p| (factor * p[1] - p[0]) / (factor - 1.0)).collect();
        last_step = (next[next.len() - 1] - row[row.len() - 1]).abs();
        row = next;
        factor *= 4.0;
    }
    (row[0], last_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Piece;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn unit() -> StepMeasure {
        StepMeasure::new(vec![Piece::new(q(0, 1), q(1, 1), q(1, 1))]).unwrap()
    }

    #[test]
    fn rule_integrates_polynomials() {
        let r = GaussRule::new(8);
        let v = r.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_wide_ranges() {
        let e = adaptive_integrate(&|u: f64| 1.0 / u, 1e-9, 1.0, 1e-14);
        assert!((e.value - 1e9f64.ln()).abs() < 1e-11, "{e:?}");
    }

    #[test]
    fn oracle_unit_interval() {
        let e = pv_quadrature_oracle(&unit(), &q(1, 2), &DEFAULT_EXCISIONS);
        assert!(e.value.abs() < 1e-10, "{e:?}");
        let e = pv_quadrature_oracle(&unit(), &q(-1, 1), &DEFAULT_EXCISIONS);
        assert!((e.value - std::f64::consts::LN_2).abs() < 1e-12, "{e:?}");
        let e = pv_quadrature_oracle(&unit(), &q(1, 5), &DEFAULT_EXCISIONS);
        assert!((e.value - 4f64.ln()).abs() < 1e-12, "{e:?}");
        assert!(pv_quadrature_oracle(&unit(), &q(1, 1), &DEFAULT_EXCISIONS).value.is_nan());
    }
}
