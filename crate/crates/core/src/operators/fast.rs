//! Floating-point evaluators for the quadrature and demonstration pipelines. Nothing
//! here is certified.
//!
//! [`FastHilbert`] sums `d·ln|(b − x)/(a − x)|` over signed step functions with a
//! multipole treecode. Endpoints are stored as integers on a common grid, so differences
//! between a target and nearby endpoints are exact before the target's own offset is
//! subtracted. [`piece_maximals`] returns, for every piece of a step measure, a cheap
//! exact-up-to-rounding formula for `Mw` on that piece.

use rug::{Integer, Rational};

use super::maximal::{vertices, CumulativeGrid, HullSweep, Slope};
use crate::measure::StepMeasure;

const LEAF: usize = 8;
/// Far-field expansion order.
const ORDER: usize = 40;
/// A cluster of radius `r` is expanded when the target is at least `SEPARATION·r` away.
const SEPARATION: f64 = 2.0;

#[derive(Clone, Debug)]
struct Node {
    lo: usize,
    hi: usize,
    z: f64,
    r: f64,
    children: Option<(usize, usize)>,
}

/// A target `x = anchor + offset`, both in grid units; `anchor` is an integer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Target {
    pub anchor: f64,
    pub offset: f64,
}

/// Treecode for `x ↦ Σ_p d_p ln|(b_p − x)/(a_p − x)|`.
#[derive(Clone, Debug)]
pub struct FastHilbert {
    denom: Integer,
    a: Vec<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
    nodes: Vec<Node>,
    moments: Vec<f64>,
}

impl FastHilbert {
    pub fn from_measure(w: &StepMeasure) -> Self {
        let cells: Vec<(Rational, Rational, f64)> = w
            .pieces()
            .iter()
            .map(|p| (p.interval.a.clone(), p.interval.b.clone(), p.density.to_f64()))
            .collect();
        Self::from_cells(&cells)
    }

    /// Cells `[a, b)` with real densities, sorted and pairwise disjoint.
    pub fn from_cells(cells: &[(Rational, Rational, f64)]) -> Self {
        let mut denom = Integer::from(1);
        for (a, b, _) in cells {
            denom.lcm_mut(a.denom());
            denom.lcm_mut(b.denom());
        }
        let to_grid = |x: &Rational| Rational::from(x * &denom).numer().to_f64();
        let a: Vec<f64> = cells.iter().map(|c| to_grid(&c.0)).collect();
        let b: Vec<f64> = cells.iter().map(|c| to_grid(&c.1)).collect();
        let d: Vec<f64> = cells.iter().map(|c| c.2).collect();
        let mut t = FastHilbert { denom, a, b, d, nodes: Vec::new(), moments: Vec::new() };
        if !t.a.is_empty() {
            t.build(0, t.a.len());
        }
        t
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Common denominator of all cell endpoints.
    pub fn denominator(&self) -> &Integer {
        &self.denom
    }

    /// Length of cell `i` in grid units.
    pub fn cell_length(&self, i: usize) -> f64 {
        self.b[i] - self.a[i]
    }

    pub fn target(&self, x: &Rational) -> Target {
        let s = Rational::from(x * &self.denom);
        let (fl, frac) = {
            let fl = s.clone().floor().numer().clone();
            let frac = Rational::from(&s - &fl);
            (fl, frac)
        };
        Target { anchor: fl.to_f64(), offset: frac.to_f64() }
    }

    /// The point at fraction `t` of cell `i`.
    pub fn target_in_cell(&self, i: usize, t: f64) -> Target {
        Target { anchor: self.a[i], offset: t * (self.b[i] - self.a[i]) }
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let z = 0.5 * (self.a[lo] + self.b[hi - 1]);
        let r = 0.5 * (self.b[hi - 1] - self.a[lo]);
        let id = self.nodes.len();
        self.nodes.push(Node { lo, hi, z, r, children: None });
        self.moments.extend(std::iter::repeat(0.0).take(ORDER));
        if r > 0.0 {
            for p in lo..hi {
                let ua = (self.a[p] - z) / r;
                let ub = (self.b[p] - z) / r;
                let delta = (self.b[p] - self.a[p]) / r;
                // u_b^j − u_a^j = u_b (u_b^{j−1} − u_a^{j−1}) + u_a^{j−1} δ
                let mut diff = delta;
                let mut pa = 1.0;
                for j in 1..=ORDER {
                    if j > 1 {
                        pa *= ua;
                        diff = ub * diff + pa * delta;
                    }
                    self.moments[id * ORDER + j - 1] += self.d[p] * diff / j as f64;
                }
            }
        }
        if hi - lo > LEAF {
            let mid = (lo + hi) / 2;
            let l = self.build(lo, mid);
            let r = self.build(mid, hi);
            self.nodes[id].children = Some((l, r));
        }
        id
    }

    #[inline]
    fn direct(&self, p: usize, t: Target) -> f64 {
        let lo = (self.a[p] - t.anchor) - t.offset;
        let hi = (self.b[p] - t.anchor) - t.offset;
        if lo < 0.0 && hi > 0.0 {
            self.d[p] * (hi / -lo).ln()
        } else {
            self.d[p] * ((self.b[p] - self.a[p]) / lo).ln_1p()
        }
    }

    /// `Σ_p d_p ln|(b_p − x)/(a_p − x)|`.
    pub fn eval(&self, t: Target) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let mut sum = 0.0;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(i) = stack.pop() {
            let n = &self.nodes[i];
            let dx = (t.anchor - n.z) + t.offset;
            if n.r > 0.0 && dx.abs() >= SEPARATION * n.r {
                let s = n.r / dx;
                let m = &self.moments[i * ORDER..(i + 1) * ORDER];
                let mut acc = 0.0;
                for mj in m.iter().rev() {
                    acc = acc * s + mj;
                }
                sum -= acc * s;
            } else if let Some((l, r)) = n.children {
                stack.push(l);
                stack.push(r);
            } else {
                for p in n.lo..n.hi {
                    sum += self.direct(p, t);
                }
            }
        }
        sum
    }
}

/// `Mw` restricted to one piece `[a, b)` of density `d`, as a function of `u = x − a`.
///
/// `Mw(x) = max(d, C, R(u), L(u))` where `C` is the best average over intervals from a
/// vertex left of the piece to a vertex right of it, `R(u)` the best average over
/// `[x, t]` and `L(u)` the best average over `[s, x]`. Only hull vertices between the
/// tangents from the two ends of the piece can be optimal for `R` and `L`.
#[derive(Clone, Debug)]
pub struct PieceMaximal {
    pub density: f64,
    pub length: f64,
    base: f64,
    right: Vec<(f64, f64)>,
    left: Vec<(f64, f64)>,
}

impl PieceMaximal {
    pub fn eval(&self, u: f64) -> f64 {
        let d = self.density;
        let mut m = self.base;
        for &(dx, df) in &self.right {
            if dx > u {
                m = m.max((df - d * u) / (dx - u));
            }
        }
        for &(dx, df) in &self.left {
            if u > dx {
                m = m.max((d * u - df) / (u - dx));
            }
        }
        m
    }
}

/// One [`PieceMaximal`] per piece of `w`.
pub fn piece_maximals(w: &StepMeasure) -> Vec<PieceMaximal> {
    if w.is_empty() {
        return Vec::new();
    }
    let vx = vertices(w);
    let vy: Vec<Rational> = vx.iter().map(|x| w.cumulative(x)).collect();
    let one = Integer::from(1);
    let grid = CumulativeGrid::build(vx, vy, &one, &one);
    let xd = grid.x_den.to_f64();
    let yd = grid.y_den.to_f64();
    let pts = &grid.points;
    let mut sweep = HullSweep::new(pts);
    let mut out = Vec::with_capacity(w.len());
    for piece in w.pieces() {
        let ia = grid.window(&piece.interval.a).0;
        let ib = grid.window(&piece.interval.b).0;
        sweep.advance(ia + 1, ib);
        let pa = &pts[ia];
        let rel = |v: usize| -> (f64, f64) {
            let dx = Integer::from(&pts[v].x - &pa.x).to_f64() / xd;
            let dy = Integer::from(&pts[v].y - &pa.y).to_f64() / yd;
            (dx, dy)
        };
        let density = piece.density.to_f64();
        let mut base = density;
        if let Some((p, s)) = sweep.bridge() {
            let sl = Slope::between(&pts[p], &pts[s]);
            base = base.max(grid.to_rational(&sl).to_f64());
        }
        let i_a = sweep.tangent_right_pos(pa).expect("suffix holds b");
        let top = i_a.max(1).min(sweep.upper_len() - 1);
        let right: Vec<(f64, f64)> = (0..=top).map(|pos| rel(sweep.upper_vertex(pos))).collect();
        let lower = sweep.lower_hull();
        let j_b = sweep.tangent_left_pos(&pts[ib]).expect("prefix holds a");
        let from = j_b.min(lower.len().saturating_sub(2));
        let left: Vec<(f64, f64)> = lower[from..].iter().map(|&v| rel(v)).collect();
        out.push(PieceMaximal {
            density,
            length: piece.interval.length().to_f64(),
            base,
            right,
            left,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Piece;
    use crate::operators::{hilbert_pv, maximal};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn sample() -> StepMeasure {
        StepMeasure::new(vec![
            Piece::new(q(0, 1), q(1, 10), q(5, 1)),
            Piece::new(q(1, 5), q(1, 2), q(1, 1)),
            Piece::new(q(3, 5), q(7, 10), q(3, 1)),
            Piece::new(q(7, 10), q(71, 100), q(40, 1)),
            Piece::new(q(9, 10), q(1, 1), q(1, 2)),
        ])
        .unwrap()
    }

    #[test]
    fn treecode_matches_certified_values() {
        let mut pieces = Vec::new();
        for i in 0..200i64 {
            pieces.push(Piece::new(q(3 * i, 700), q(3 * i + 2, 700), q(1 + (i * 7) % 11, 3)));
        }
        let w = StepMeasure::new(pieces).unwrap();
        let fh = FastHilbert::from_measure(&w);
        for x in [q(1, 1400), q(301, 700), q(5, 3), q(-1, 2), q(1999, 2800)] {
            let exact = hilbert_pv(&w, &x, 128).unwrap().to_f64();
            let fast = fh.eval(fh.target(&x));
            assert!((exact - fast).abs() < 1e-10 * exact.abs().max(1.0), "{x}: {exact} vs {fast}");
        }
    }

    #[test]
    fn piece_maximal_matches_exact() {
        let w = sample();
        let pm = piece_maximals(&w);
        for (piece, m) in w.pieces().iter().zip(&pm) {
            for t in [1i64, 3, 5, 7, 9] {
                let x = piece.interval.at(&q(t, 10));
                let exact = maximal(&w, &x).to_f64();
                let u = Rational::from(&x - &piece.interval.a).to_f64();
                let fast = m.eval(u);
                assert!((exact - fast).abs() < 1e-12 * exact, "{x}: {exact} vs {fast}");
            }
        }
    }
}
