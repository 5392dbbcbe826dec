//! Floating-point demonstration of the reduction from the `L²` estimate to the weak-type
//! failure. Maximal functions are exact; `Hw` and `Hf` come from the treecode, so the
//! results here are not certified.

use std::cmp::Ordering;

use rug::float::Round;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use crate::measure::{Piece, StepMeasure};
use crate::operators::{maximal_batch, weighted_maximal_batch, FastHilbert};
use crate::triadic::Interval;
use crate::{Error, Result};

/// One cell of the test function: `f = value` on `[a, b)`, where `w` has density `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub interval: Interval,
    pub value: f64,
    pub w: f64,
    /// `Mw` at the cell midpoint.
    pub mw: f64,
    /// Cell length.
    pub len: f64,
}

impl Cell {
    pub fn midpoint(&self) -> Rational {
        self.interval.center()
    }
}

/// Piecewise-constant approximation of `f = (Hw) w/(Mw)²` on `supp w`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub cells: Vec<Cell>,
    /// Cells per support piece.
    pub grid: usize,
}

impl TestFunction {
    pub fn l1_norm(&self) -> f64 {
        self.cells.iter().map(|c| c.value.abs() * c.len).sum()
    }
}

/// Splits every piece of `w` into `m` equal cells and evaluates `f` at their midpoints.
pub fn build_test_function(w: &StepMeasure, m: usize) -> Result<TestFunction> {
    if m == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    if w.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let mut ivs = Vec::with_capacity(w.len() * m);
    let mut dens = Vec::with_capacity(w.len() * m);
    for p in w.pieces() {
        let step = Rational::from(p.interval.length() / m as u32);
        for j in 0..m as u32 {
            let a = Rational::from(&step * j) + &p.interval.a;
            let b = Rational::from(&a + &step);
            ivs.push(Interval::new(a, b));
            dens.push(p.density.to_f64());
        }
    }
    let mids: Vec<Rational> = ivs.iter().map(Interval::center).collect();
    let mw = maximal_batch(w, &mids);
    let fh = FastHilbert::from_measure(w);
    let cells = ivs
        .into_iter()
        .zip(dens)
        .zip(mids.iter().zip(mw))
        .map(|((interval, d), (mid, m))| {
            let hw = fh.eval(fh.target(mid));
            let m = m.to_f64();
            let len = interval.length().to_f64();
            Cell { interval, value: hw * d / (m * m), w: d, mw: m, len }
        })
        .collect();
    Ok(TestFunction { cells, grid: m })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoResult {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Indices of the cells in `E = {|Hf| > t}`.
    pub e_cells: Vec<usize>,
    /// Cells per support piece.
    pub grid: usize,
}

/// `|Hf|` at every cell midpoint.
pub fn hf_at_cells(f: &TestFunction) -> Vec<f64> {
    let cells: Vec<(Rational, Rational, f64)> =
        f.cells.iter().map(|c| (c.interval.a.clone(), c.interval.b.clone(), c.value)).collect();
    let fh = FastHilbert::from_cells(&cells);
    (0..cells.len()).map(|i| fh.eval(fh.target_in_cell(i, 0.5)).abs()).collect()
}

/// `(t, w{|Hf| > t})` for every level `t` among the cell values, in decreasing order of `t`.
pub fn distribution(f: &TestFunction, hf: &[f64]) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..hf.len()).collect();
    order.sort_by(|&i, &j| hf[j].total_cmp(&hf[i]).then(i.cmp(&j)));
    let mut out = Vec::new();
    let mut above = 0.0;
    let mut i = 0;
    while i < order.len() {
        let t = hf[order[i]];
        out.push((t, above));
        while i < order.len() && hf[order[i]] == t {
            let c = &f.cells[order[i]];
            above += c.w * c.len;
            i += 1;
        }
    }
    out
}

/// `t` maximizing `t²·w{|Hf| > t}`, the two sides `t²·w(E)` and `∫ f² (Mw)²/w`, and `E`.
pub fn cuperez_functional(f: &TestFunction, hf: &[f64]) -> Result<DemoResult> {
    if hf.len() != f.cells.len() {
        return Err(Error::InvalidParameter("one |Hf| value per cell expected".into()));
    }
    let (t, we) = distribution(f, hf)
        .into_iter()
        .max_by(|a, b| (a.0 * a.0 * a.1).total_cmp(&(b.0 * b.0 * b.1)))
        .ok_or(Error::EmptyMeasure)?;
    let rhs: f64 = f.cells.iter().map(|c| c.value * c.value * c.mw * c.mw / c.w * c.len).sum();
    let e_cells: Vec<usize> = (0..hf.len()).filter(|&i| hf[i] > t).collect();
    let lhs = t * t * we;
    Ok(DemoResult { t, lhs, rhs, ratio: lhs / rhs, e_cells, grid: f.grid })
}

/// Sorted disjoint intervals covering the cells of `E`.
fn e_intervals(f: &TestFunction, e: &[usize]) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for &i in e {
        let iv = &f.cells[i].interval;
        match out.last_mut() {
            Some(last) if last.b == iv.a => last.b = iv.b.clone(),
            _ => out.push(iv.clone()),
        }
    }
    out
}

/// Everything computed for the weight `w1_E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremOutcome {
    pub result: DemoResult,
    /// Sampled points (cell midpoints) where `M(w1_E) ≤ Mw·M_w 1_E` was checked exactly.
    pub pointwise_checked: usize,
    pub pointwise_failures: usize,
    /// The discretized `∫|f| M(w1_E)` and the Cauchy–Schwarz bound
    /// `(∫ f² (Mw)²/w)^{1/2} ‖M_w 1_E‖_{L²(w)}`.
    pub holder_lhs: f64,
    pub holder_rhs: f64,
    /// Every cell of `E` lies in `[−2, 3]`.
    pub window_ok: bool,
}

/// `t·w(E)` against `∫|f|·M(w1_E)`, with `M(w1_E)` exact at cell midpoints.
pub fn theorem_main_ratio(w: &StepMeasure, f: &TestFunction, cup: &DemoResult) -> Result<TheoremOutcome> {
    let e = e_intervals(f, &cup.e_cells);
    let we_measure = w.restrict(&e);
    let indicator = StepMeasure::new(
        e.iter().map(|iv| Piece::new(iv.a.clone(), iv.b.clone(), Rational::from(1))).collect(),
    )?;
    let mids: Vec<Rational> = f.cells.iter().map(Cell::midpoint).collect();
    let m_we = maximal_batch(&we_measure, &mids);
    let mw = maximal_batch(w, &mids);
    let mw_e = weighted_maximal_batch(w, &indicator, &mids);
    let mut failures = 0;
    let mut rhs = 0.0;
    let mut cs_f = 0.0;
    let mut cs_m = 0.0;
    for (i, c) in f.cells.iter().enumerate() {
        if m_we[i] > Rational::from(&mw[i] * &mw_e[i]) {
            failures += 1;
        }
        rhs += c.value.abs() * m_we[i].to_f64() * c.len;
        cs_f += c.value * c.value * c.mw * c.mw / c.w * c.len;
        let g = mw_e[i].to_f64();
        cs_m += g * g * c.w * c.len;
    }
    let lo = Rational::from(-2);
    let hi = Rational::from(3);
    let window_ok = e.iter().all(|iv| iv.a >= lo && iv.b <= hi);
    let lhs = cup.t * we_measure.total_mass().to_f64();
    Ok(TheoremOutcome {
        result: DemoResult {
            t: cup.t,
            lhs,
            rhs,
            ratio: lhs / rhs,
            e_cells: cup.e_cells.clone(),
            grid: f.grid,
        },
        pointwise_checked: mids.len(),
        pointwise_failures: failures,
        holder_lhs: rhs,
        holder_rhs: cs_f.sqrt() * cs_m.sqrt(),
        window_ok,
    })
}

/// The whole pipeline on one weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoOutcome {
    pub cells: usize,
    pub f_l1: f64,
    pub cuperez: DemoResult,
    pub theorem: TheoremOutcome,
}

pub fn run_demo(w: &StepMeasure, grid: usize) -> Result<DemoOutcome> {
    let f = build_test_function(w, grid)?;
    let hf = hf_at_cells(&f);
    let cuperez = cuperez_functional(&f, &hf)?;
    let theorem = theorem_main_ratio(w, &f, &cuperez)?;
    Ok(DemoOutcome { cells: f.cells.len(), f_l1: f.l1_norm(), cuperez, theorem })
}

/// Bits used for `e^{−x²}` in [`gaussian_floor`].
const FLOOR_PRECISION: u32 = 64;

/// `w` plus a step function below `c·e^{−x²}` on `[−R, R]`: each of `resolution` equal
/// cells gets a rational lower bound for the minimum of `c·e^{−x²}` on the cell.
pub fn gaussian_floor(w: &StepMeasure, c: &Rational, r: &Rational, resolution: usize) -> Result<StepMeasure> {
    if c.cmp0() != Ordering::Greater || r.cmp0() != Ordering::Greater || resolution == 0 {
        return Err(Error::InvalidParameter("the floor needs c > 0, R > 0 and at least one cell".into()));
    }
    let step = Rational::from(r * 2u32) / resolution as u32;
    let mut pieces = Vec::with_capacity(resolution);
    for j in 0..resolution as u32 {
        let a = Rational::from(&step * j) - r;
        let b = Rational::from(&a + &step);
        let far = if Rational::from(a.abs_ref()) > Rational::from(b.abs_ref()) { &a } else { &b };
        let sq = Rational::from(far * far);
        let mut e = Float::with_val_round(FLOOR_PRECISION, -sq, Round::Down).0;
        e.exp_round(Round::Down);
        let lower = e.to_rational().expect("finite exponential");
        pieces.push(Piece::new(a, b, lower * c));
    }
    Ok(w.add(&StepMeasure::new(pieces)?))
}
