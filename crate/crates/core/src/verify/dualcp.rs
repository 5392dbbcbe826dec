//! The ratio `‖H(w1_[0,1))‖_{L²(w/(Mw)²)} / ‖1_[0,1)‖_{L²(w)}` and a lower bound for it
//! built from certified values of `Hw` on the companion middle thirds.
//!
//! The numerator is integrated piece by piece. On a piece `[a, b)` of density `d` the
//! integrand is `d·(Hw)²/(Mw)²`, which has `ln²` singularities at both ends, so each
//! half of the piece is cut into panels `[2^{−l−1}, 2^{−l}]` (relative to the nearer end)
//! down to `2^{−L}` and each panel gets a Gauss–Legendre rule. The error estimate
//! compares, at each end, the fine panels covering `[0, 2^{2−L}]` with a single
//! coarse panel there.

use rayon::prelude::*;
use rug::Rational;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checks::{collections, stage_samples, PointTerms, VerifyOptions};
use crate::measure::SignTable;
use crate::operators::hilbert::{check_radius, GridMeasure};
use crate::triadic::pow3_rational;
use crate::measure::StepMeasure;
use crate::operators::quadrature::{CompensatedSum, GaussRule};
use crate::operators::{piece_maximals, FastHilbert};
use crate::triadic::Interval;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureParams {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Number of geometric levels per half piece.
    pub levels: u32,
    /// Relative error above which the integration is reported as stalled.
    pub rel_tol: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        QuadratureParams { order: 16, levels: 12, rel_tol: 1e-3 }
    }
}

impl QuadratureParams {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.levels < 3 || self.levels > 50 || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("bad quadrature parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualcpResult {
    pub ratio: f64,
    /// Error estimate for `ratio`.
    pub error: f64,
    pub numerator: f64,
    pub numerator_error: f64,
    /// `w([0, 1))`.
    pub denominator: Rational,
    pub pieces: usize,
}

/// Nodes and weights on `[0, 1]` shared by every piece.
struct Mesh {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// For each end: indices of the fine nodes in `[0, 2^{2−L}]`, then the coarse
    /// nodes and weights there.
    ends: [(Vec<usize>, Vec<f64>, Vec<f64>); 2],
}

impl Mesh {
    fn new(p: &QuadratureParams) -> Self {
        let rule = GaussRule::new(p.order);
        let mut panels: Vec<(f64, f64)> = Vec::new();
        let l = p.levels as i32;
        panels.push((0.0, 2f64.powi(-l)));
        for lev in (1..l).rev() {
            panels.push((2f64.powi(-lev - 1), 2f64.powi(-lev)));
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let push_panel = |lo: f64, hi: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>| {
            for (t, wt) in rule.nodes().iter().zip(rule.weights()) {
                nodes.push(lo + (hi - lo) * t);
                weights.push((hi - lo) * wt);
            }
        };
        for &(lo, hi) in &panels {
            push_panel(lo, hi, &mut nodes, &mut weights);
        }
        for &(lo, hi) in panels.iter().rev() {
            push_panel(1.0 - hi, 1.0 - lo, &mut nodes, &mut weights);
        }
        let edge = 2f64.powi(2 - l);
        let per = rule.order();
        let left_fine: Vec<usize> = (0..3 * per).collect();
        let right_fine: Vec<usize> = (nodes.len() - 3 * per..nodes.len()).collect();
        let mut cl = (Vec::new(), Vec::new());
        push_panel(0.0, edge, &mut cl.0, &mut cl.1);
        let mut cr = (Vec::new(), Vec::new());
        push_panel(1.0 - edge, 1.0, &mut cr.0, &mut cr.1);
        Mesh { nodes, weights, ends: [(left_fine, cl.0, cl.1), (right_fine, cr.0, cr.1)] }
    }
}

/// `(∫ over the piece, error estimate)` of `d·(Hw)²/(Mw)²`.
fn piece_integral(mesh: &Mesh, len: f64, d: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let vals: Vec<f64> = mesh.nodes.iter().map(|&t| f(t)).collect();
    let mut s = CompensatedSum::default();
    for (v, wt) in vals.iter().zip(&mesh.weights) {
        s.add(v * wt);
    }
    let mut err = 0.0;
    for (fine, cn, cw) in &mesh.ends {
        let f_sum: f64 = fine.iter().map(|&i| vals[i] * mesh.weights[i]).sum();
        let c_sum: f64 = cn.iter().zip(cw).map(|(&t, wt)| f(t) * wt).sum();
        err += (f_sum - c_sum).abs();
    }
    (d * len * s.value(), d * len * err)
}

/// Ratio of the weighted `L²` norm of `H(w1_[0,1))` against `w/(Mw)²` to the `L²(w)`
/// norm of `1_[0,1)`.
pub fn dualcp_ratio(w: &StepMeasure, params: &QuadratureParams) -> Result<DualcpResult> {
    params.validate()?;
    let unit = Interval::new(Rational::from(0), Rational::from(1));
    let inside = w.restrict(std::slice::from_ref(&unit));
    let den = inside.total_mass().clone();
    if den.cmp0() != std::cmp::Ordering::Greater {
        return Err(Error::EmptyMeasure);
    }
    let fh = FastHilbert::from_measure(&inside);
    let maximals = piece_maximals(w);
    let mesh = Mesh::new(params);
    let scale = fh.denominator().clone();
    let parts: Vec<(f64, f64)> = w
        .pieces()
        .par_iter()
        .zip(maximals.par_iter())
        .map(|(p, pm)| {
            let start = fh.target(&p.interval.a);
            let grid_len = Rational::from(p.interval.length() * &scale).to_f64();
            let len = pm.length;
            piece_integral(&mesh, len, pm.density, |t| {
                let mut tg = start;
                tg.offset += t * grid_len;
                let h = fh.eval(tg);
                let m = pm.eval(t * len);
                h * h / (m * m)
            })
        })
        .collect();
    let mut num = CompensatedSum::default();
    let mut err = 0.0;
    for (v, e) in parts {
        num.add(v);
        err += e;
    }
    let num = num.value();
    if !(num.is_finite()) || err > params.rel_tol * num {
        return Err(Error::QuadratureStalled(format!(
            "numerator {num:e} with estimated error {err:e} exceeds relative tolerance {:e}",
            params.rel_tol
        )));
    }
    let d = den.to_f64();
    let ratio = (num / d).sqrt();
    let error = if num > 0.0 { 0.5 * ratio * err / num } else { 0.0 };
    Ok(DualcpResult { ratio, error, numerator: num, numerator_error: err, denominator: den, pieces: w.len() })
}

/// The lower bound `√(Σ_J |I(J)^m|·min_x |Hw(x)|²/(49·w(I(J)^m)) / w([0,1)))`, with the
/// minimum over the certified sample points of each `I(J)^m`. The restriction to
/// `∪I(J)^m` uses `Mw ≤ 7w` there.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBound {
    pub ratio: f64,
    /// Exact numerator built from the lower ends of the enclosures.
    pub numerator: Rational,
    pub intervals: usize,
}

pub fn lower_bound_from_points(points: &[PointTerms], denominator: &Rational) -> Result<LowerBound> {
    let mut by_j: Vec<(&PointTerms, Rational)> = Vec::new();
    for p in points {
        let v = p.hw.abs_lower().to_rational().unwrap_or_default();
        match by_j.iter_mut().find(|(q, _)| q.j == p.j) {
            Some((_, m)) if v < *m => *m = v,
            Some(_) => {}
            None => by_j.push((p, v)),
        }
    }
    let mut num = Rational::new();
    for (p, m) in &by_j {
        let len = p.companion.middle_third().length();
        num += Rational::from(m * m) * len / (Rational::from(&p.w_at_x * 49u32));
    }
    let ratio = (Rational::from(&num / denominator)).to_f64().sqrt();
    Ok(LowerBound { ratio, numerator: num, intervals: by_j.len() })
}

/// [`lower_bound_from_points`] with certified `Hw` at the sample points that the term
/// check uses, for stages `0..depth`.
pub fn certified_lower_bound(
    w: &StepMeasure,
    signs: &SignTable,
    k: u32,
    depth: u32,
    opts: &VerifyOptions,
) -> Result<LowerBound> {
    let cols = collections(k, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut num = Rational::new();
    let mut intervals = 0;
    for ks in cols.iter().take(depth as usize) {
        let (plan, mut den) = stage_samples(signs, k, ks, opts.samples, &mut rng)?;
        den.lcm_mut(pow3_rational(ks[0].scale()).denom());
        let grid = GridMeasure::with_denominator(w, &den);
        for (pos, eps, xs) in plan {
            let mut min: Option<Rational> = None;
            for x in &xs {
                let gx = grid.grid_point(x).expect("sample on the grid");
                let v = grid.log_sum_all(&gx, opts.precision)?;
                check_radius(&v, opts.precision)?;
                let lo = v.abs_lower().to_rational().unwrap_or_default();
                if min.as_ref().map_or(true, |m| lo < *m) {
                    min = Some(lo);
                }
            }
            let comp = ks[pos].middle_third().companion(eps, k)?.middle_third();
            let d = w.density_at(&comp.center());
            let m = min.unwrap_or_default();
            num += Rational::from(&m * &m) * comp.length() / (d * 49u32);
            intervals += 1;
        }
    }
    let ratio = Rational::from(&num / &unit_mass(w)).to_f64().sqrt();
    Ok(LowerBound { ratio, numerator: num, intervals })
}

/// `w([0, 1))`.
pub fn unit_mass(w: &StepMeasure) -> Rational {
    w.mass(&Interval::new(Rational::from(0), Rational::from(1)))
}
