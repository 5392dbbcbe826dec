//! Exact uncentered maximal functions of step measures.
//!
//! `Mw(x) = sup_{a ≤ x ≤ b, a < b} (F(b) − F(a))/(b − a)` with `F` the cumulative mass. `F`
//! is piecewise linear, so the supremum is a maximum over `a, b` in the vertex set
//! `{piece endpoints} ∪ {x}`. It is the largest slope between a point of
//! `P ∪ {Q}` and a point of `S ∪ {Q}`, where `P`/`S` are the vertices left/right of `x`
//! and `Q = (x, F(x))`. Only the lower convex hull of `P` and the upper convex hull of
//! `S` matter; both are maintained incrementally while sweeping sorted queries.

use std::cmp::Ordering;

use rug::{Integer, Rational};

use crate::measure::StepMeasure;

/// A point with integer coordinates on a fixed grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPoint {
    pub x: Integer,
    pub y: Integer,
}

/// `(a − o) × (b − o)`; positive for a counterclockwise turn.
fn cross(o: &GridPoint, a: &GridPoint, b: &GridPoint) -> Ordering {
    let lhs = Integer::from(&a.x - &o.x) * Integer::from(&b.y - &o.y);
    let rhs = Integer::from(&a.y - &o.y) * Integer::from(&b.x - &o.x);
    lhs.cmp(&rhs)
}

/// Slope `(dy, dx)` with `dx > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slope {
    pub dy: Integer,
    pub dx: Integer,
}

impl Slope {
    pub fn between(a: &GridPoint, b: &GridPoint) -> Slope {
        Slope { dy: Integer::from(&b.y - &a.y), dx: Integer::from(&b.x - &a.x) }
    }

    fn cmp(&self, other: &Slope) -> Ordering {
        Integer::from(&self.dy * &other.dx).cmp(&Integer::from(&other.dy * &self.dx))
    }

    fn max(self, other: Slope) -> Slope {
        if other.cmp(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Undo {
    pos: usize,
    old_len: usize,
    old: usize,
}

/// Sweep state over a vertex sequence with strictly increasing `x`.
///
/// The prefix hull holds the lower hull of vertices `[0, prefix_count)`, the suffix hull
/// the upper hull of vertices `[suffix_start, n)`. Both bounds only move right.
pub struct HullSweep<'a> {
    pts: &'a [GridPoint],
    lower: Vec<usize>,
    prefix_count: usize,
    /// Upper hull stored right to left in `upper[..upper_len]`.
    upper: Vec<usize>,
    upper_len: usize,
    log: Vec<Undo>,
    suffix_start: usize,
}

impl<'a> HullSweep<'a> {
    pub fn new(pts: &'a [GridPoint]) -> Self {
        debug_assert!(pts.windows(2).all(|w| w[0].x < w[1].x));
        let n = pts.len();
        let mut s = HullSweep {
            pts,
            lower: Vec::new(),
            prefix_count: 0,
            upper: vec![0; n],
            upper_len: 0,
            log: Vec::with_capacity(n),
            suffix_start: 0,
        };
        for v in (0..n).rev() {
            s.push_upper(v);
        }
        s
    }

    pub fn points(&self) -> &[GridPoint] {
        self.pts
    }

    fn push_upper(&mut self, v: usize) {
        let p = &self.pts[v];
        // largest L with upper[L-1] kept: cross(v, upper[L-1], upper[L-2]) < 0
        let keep = |l: usize, up: &[usize]| -> bool {
            l <= 1 || cross(p, &self.pts[up[l - 1]], &self.pts[up[l - 2]]) == Ordering::Less
        };
        let (mut lo, mut hi) = (0usize, self.upper_len);
        if self.upper_len > 0 {
            lo = 1;
            while lo < hi {
                let mid = (lo + hi + 1) / 2;
                if keep(mid, &self.upper) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
        }
        let pos = lo;
        self.log.push(Undo { pos, old_len: self.upper_len, old: self.upper[pos] });
        self.upper[pos] = v;
        self.upper_len = pos + 1;
    }

    fn pop_upper(&mut self) {
        let u = self.log.pop().expect("suffix insertion to undo");
        self.upper[u.pos] = u.old;
        self.upper_len = u.old_len;
    }

    fn push_lower(&mut self, v: usize) {
        let p = &self.pts[v];
        while self.lower.len() >= 2 {
            let m = self.lower.len();
            let o = &self.pts[self.lower[m - 2]];
            let a = &self.pts[self.lower[m - 1]];
            if cross(o, a, p) == Ordering::Greater {
                break;
            }
            self.lower.pop();
        }
        self.lower.push(v);
    }

    /// Moves the window so that the prefix is `[0, prefix_count)` and the suffix is
    /// `[suffix_start, n)`. Both arguments must not decrease between calls.
    pub fn advance(&mut self, prefix_count: usize, suffix_start: usize) {
        assert!(prefix_count >= self.prefix_count && suffix_start >= self.suffix_start);
        assert!(prefix_count <= suffix_start.max(prefix_count));
        while self.prefix_count < prefix_count {
            self.push_lower(self.prefix_count);
            self.prefix_count += 1;
        }
        while self.suffix_start < suffix_start {
            self.pop_upper();
            self.suffix_start += 1;
        }
    }

    /// Lower hull of the prefix, left to right.
    pub fn lower_hull(&self) -> &[usize] {
        &self.lower
    }

    /// Upper hull of the suffix, right to left.
    pub fn upper_hull_rev(&self) -> &[usize] {
        &self.upper[..self.upper_len]
    }

    fn upper_at(&self, i: usize) -> usize {
        // left-to-right index i
        self.upper[self.upper_len - 1 - i]
    }

    /// Suffix vertex maximizing the slope from `p`, which lies left of the suffix.
    pub fn best_right(&self, p: &GridPoint) -> Option<usize> {
        self.tangent_right_pos(p).map(|i| self.upper_at(i))
    }

    /// Left-to-right position in the suffix hull of [`HullSweep::best_right`].
    pub fn tangent_right_pos(&self, p: &GridPoint) -> Option<usize> {
        if self.upper_len == 0 {
            return None;
        }
        let m = self.upper_len;
        let (mut lo, mut hi) = (0usize, m - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let a = &self.pts[self.upper_at(mid)];
            let b = &self.pts[self.upper_at(mid + 1)];
            if cross(p, a, b) == Ordering::Greater {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// Number of vertices on the suffix hull.
    pub fn upper_len(&self) -> usize {
        self.upper_len
    }

    /// Vertex at a left-to-right position of the suffix hull.
    pub fn upper_vertex(&self, pos: usize) -> usize {
        self.upper_at(pos)
    }

    /// Prefix vertex maximizing the slope to `t`, which lies right of the prefix.
    pub fn best_left(&self, t: &GridPoint) -> Option<usize> {
        self.tangent_left_pos(t).map(|i| self.lower[i])
    }

    /// Position in the prefix hull of [`HullSweep::best_left`].
    pub fn tangent_left_pos(&self, t: &GridPoint) -> Option<usize> {
        if self.lower.is_empty() {
            return None;
        }
        let (mut lo, mut hi) = (0usize, self.lower.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let a = &self.pts[self.lower[mid]];
            let b = &self.pts[self.lower[mid + 1]];
            if cross(a, b, t) == Ordering::Greater {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// Pair `(p, s)` maximizing the slope between prefix and suffix.
    pub fn bridge(&self) -> Option<(usize, usize)> {
        let mut p = *self.lower.last()?;
        let mut s = self.best_right(&self.pts[p])?;
        let mut best = Slope::between(&self.pts[p], &self.pts[s]);
        loop {
            let p2 = self.best_left(&self.pts[s]).expect("prefix nonempty");
            let s2 = self.best_right(&self.pts[p2]).expect("suffix nonempty");
            let cand = Slope::between(&self.pts[p2], &self.pts[s2]);
            if cand.cmp(&best) == Ordering::Greater {
                best = cand;
                p = p2;
                s = s2;
            } else {
                return Some((p, s));
            }
        }
    }

    /// Largest slope over pairs from `prefix ∪ {q}` × `suffix ∪ {q}`.
    pub fn max_slope_through(&self, q: &GridPoint) -> Option<Slope> {
        let mut best: Option<Slope> = None;
        let mut offer = |s: Slope| {
            best = Some(match best.take() {
                Some(b) => b.max(s),
                None => s,
            })
        };
        if let Some((p, s)) = self.bridge() {
            offer(Slope::between(&self.pts[p], &self.pts[s]));
        }
        if let Some(s) = self.best_right(q) {
            offer(Slope::between(q, &self.pts[s]));
        }
        if let Some(p) = self.best_left(q) {
            offer(Slope::between(&self.pts[p], q));
        }
        best
    }
}

/// Vertices `(X_j, F_j)` of the cumulative distribution with a common grid.
pub struct CumulativeGrid {
    pub x_den: Integer,
    pub y_den: Integer,
    pub points: Vec<GridPoint>,
    xs: Vec<Rational>,
}

impl CumulativeGrid {
    /// Vertices of `t ↦ (A(t), B(t))` sampled at all breakpoints of `w`; with `A = x` this
    /// is the graph of `F`. `extra_x`/`extra_y` are additional denominators to include.
    pub(crate) fn build(xs: Vec<Rational>, ys: Vec<Rational>, extra_x: &Integer, extra_y: &Integer) -> Self {
        let mut x_den = extra_x.clone();
        let mut y_den = extra_y.clone();
        for x in &xs {
            x_den.lcm_mut(x.denom());
        }
        for y in &ys {
            y_den.lcm_mut(y.denom());
        }
        let points = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| GridPoint { x: scale(x, &x_den), y: scale(y, &y_den) })
            .collect();
        CumulativeGrid { x_den, y_den, points, xs }
    }

    pub fn to_rational(&self, s: &Slope) -> Rational {
        Rational::from((Integer::from(&s.dy * &self.x_den), Integer::from(&s.dx * &self.y_den)))
    }

    /// `(#vertices < x, #vertices <= x)`.
    pub fn window(&self, x: &Rational) -> (usize, usize) {
        (self.xs.partition_point(|v| v < x), self.xs.partition_point(|v| v <= x))
    }

    pub fn vertex_x(&self, i: usize) -> &Rational {
        &self.xs[i]
    }
}

fn scale(v: &Rational, den: &Integer) -> Integer {
    let s = Rational::from(v * den);
    debug_assert_eq!(*s.denom(), 1);
    s.numer().clone()
}

pub(crate) fn vertices(w: &StepMeasure) -> Vec<Rational> {
    let mut xs: Vec<Rational> = Vec::with_capacity(2 * w.len());
    for p in w.pieces() {
        if xs.last() != Some(&p.interval.a) {
            xs.push(p.interval.a.clone());
        }
        xs.push(p.interval.b.clone());
    }
    xs
}

fn lcm_denominators<'a>(vals: impl Iterator<Item = &'a Rational>) -> Integer {
    let mut d = Integer::from(1);
    for v in vals {
        d.lcm_mut(v.denom());
    }
    d
}

/// Sweep order of a query list.
fn sorted_order(xs: &[Rational]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].cmp(&xs[j]));
    order
}

/// Exact `Mw(x)` at every query point.
pub fn maximal_batch(w: &StepMeasure, xs: &[Rational]) -> Vec<Rational> {
    if w.is_empty() {
        return vec![Rational::new(); xs.len()];
    }
    let vx = vertices(w);
    let vy: Vec<Rational> = vx.iter().map(|x| w.cumulative(x)).collect();
    let qy: Vec<Rational> = xs.iter().map(|x| w.cumulative(x)).collect();
    let grid = CumulativeGrid::build(vx, vy, &lcm_denominators(xs.iter()), &lcm_denominators(qy.iter()));
    let dmax = w.max_density();
    let mut out = vec![Rational::new(); xs.len()];
    let mut sweep = HullSweep::new(&grid.points);
    for i in sorted_order(xs) {
        let x = &xs[i];
        let (l, r) = w.one_sided_densities(x);
        if l == dmax || r == dmax {
            out[i] = dmax.clone();
            continue;
        }
        let (pc, ss) = grid.window(x);
        sweep.advance(pc, ss);
        let q = GridPoint { x: scale(x, &grid.x_den), y: scale(&qy[i], &grid.y_den) };
        out[i] = sweep.max_slope_through(&q).map(|s| grid.to_rational(&s)).unwrap_or_default();
    }
    out
}

/// Exact `Mw(x)`.
pub fn maximal(w: &StepMeasure, x: &Rational) -> Rational {
    maximal_batch(w, std::slice::from_ref(x)).pop().expect("one query")
}

/// Brute-force `Mw(x)` over every candidate pair; `resolution > 1` adds
/// `resolution − 1` equally spaced interior points per piece to the candidate set.
pub fn maximal_oracle(w: &StepMeasure, x: &Rational, resolution: usize) -> Rational {
    let mut cands: Vec<Rational> = vec![x.clone()];
    for p in w.pieces() {
        cands.push(p.interval.a.clone());
        cands.push(p.interval.b.clone());
        for t in 1..resolution.max(1) {
            cands.push(p.interval.at(&Rational::from((t as u64, resolution as u64))));
        }
    }
    cands.sort();
    cands.dedup();
    let fs: Vec<Rational> = cands.iter().map(|c| w.cumulative(c)).collect();
    let mut best = Rational::new();
    for (i, a) in cands.iter().enumerate() {
        if a > x {
            break;
        }
        for (j, b) in cands.iter().enumerate().skip(i + 1) {
            if b < x {
                continue;
            }
            let avg = Rational::from(&fs[j] - &fs[i]) / Rational::from(b - a);
            if avg > best {
                best = avg;
            }
        }
    }
    best
}

/// Pointwise product of two step functions, as a step measure.
pub fn product(w: &StepMeasure, g: &StepMeasure) -> StepMeasure {
    let mut cuts: Vec<Rational> = Vec::new();
    for p in w.pieces().iter().chain(g.pieces()) {
        cuts.push(p.interval.a.clone());
        cuts.push(p.interval.b.clone());
    }
    cuts.sort();
    cuts.dedup();
    let mut pieces = Vec::new();
    for c in cuts.windows(2) {
        let mid = Rational::from(&c[0] + &c[1]) / 2u32;
        let d = w.density_at(&mid) * g.density_at(&mid);
        if d.cmp0() == Ordering::Greater {
            pieces.push(crate::measure::Piece::new(c[0].clone(), c[1].clone(), d));
        }
    }
    StepMeasure::new(pieces).expect("disjoint cells")
}

/// Exact `M_w g(x) = sup_{I ∋ x, w(I) > 0} (∫_I g dw)/w(I)` at every query point;
/// `g` is a nonnegative step function given as a step measure (its density is `g`).
pub fn weighted_maximal_batch(w: &StepMeasure, g: &StepMeasure, xs: &[Rational]) -> Vec<Rational> {
    if w.is_empty() {
        return vec![Rational::new(); xs.len()];
    }
    let gw = product(w, g);
    let mut cuts = vertices(w);
    cuts.extend(vertices(&gw));
    cuts.sort();
    cuts.dedup();
    // vertices in the (W, G) plane, deduplicated by W
    let mut ws: Vec<Rational> = Vec::with_capacity(cuts.len());
    let mut gs: Vec<Rational> = Vec::with_capacity(cuts.len());
    for c in &cuts {
        let wc = w.cumulative(c);
        if ws.last() == Some(&wc) {
            continue;
        }
        gs.push(gw.cumulative(c));
        ws.push(wc);
    }
    let qw: Vec<Rational> = xs.iter().map(|x| w.cumulative(x)).collect();
    let qg: Vec<Rational> = xs.iter().map(|x| gw.cumulative(x)).collect();
    let grid = CumulativeGrid::build(
        ws,
        gs,
        &lcm_denominators(qw.iter()),
        &lcm_denominators(qg.iter()),
    );
    let mut out = vec![Rational::new(); xs.len()];
    let mut sweep = HullSweep::new(&grid.points);
    for i in sorted_order(&qw) {
        let (pc, ss) = grid.window(&qw[i]);
        sweep.advance(pc, ss);
        let q = GridPoint { x: scale(&qw[i], &grid.x_den), y: scale(&qg[i], &grid.y_den) };
        out[i] = sweep.max_slope_through(&q).map(|s| grid.to_rational(&s)).unwrap_or_default();
    }
    out
}

pub fn weighted_maximal(w: &StepMeasure, g: &StepMeasure, x: &Rational) -> Rational {
    weighted_maximal_batch(w, g, std::slice::from_ref(x)).pop().expect("one query")
}

/// Brute-force [`weighted_maximal`] over all candidate pairs.
pub fn weighted_maximal_oracle(w: &StepMeasure, g: &StepMeasure, x: &Rational) -> Rational {
    let gw = product(w, g);
    let mut cands: Vec<Rational> = vec![x.clone()];
    for p in w.pieces().iter().chain(g.pieces()) {
        cands.push(p.interval.a.clone());
        cands.push(p.interval.b.clone());
    }
    cands.sort();
    cands.dedup();
    let ws: Vec<Rational> = cands.iter().map(|c| w.cumulative(c)).collect();
    let gs: Vec<Rational> = cands.iter().map(|c| gw.cumulative(c)).collect();
    let mut best = Rational::new();
    for (i, a) in cands.iter().enumerate() {
        if a > x {
            break;
        }
        for j in i + 1..cands.len() {
            if cands[j] < *x {
                continue;
            }
            let dw = Rational::from(&ws[j] - &ws[i]);
            if dw.cmp0() != Ordering::Greater {
                continue;
            }
            let avg = Rational::from(&gs[j] - &gs[i]) / dw;
            if avg > best {
                best = avg;
            }
        }
    }
    best
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
    fn unit_interval_values() {
        let w = unit();
        assert_eq!(maximal(&w, &q(1, 2)), q(1, 1));
        assert_eq!(maximal(&w, &q(2, 1)), q(1, 2));
        assert_eq!(maximal(&w, &q(-1, 1)), q(1, 2));
        for x in [q(0, 1), q(1, 2), q(2, 1), q(1, 1)] {
            assert_eq!(maximal(&w, &x), maximal_oracle(&w, &x, 1));
        }
    }

    #[test]
    fn two_bumps_against_oracle() {
        let w = StepMeasure::new(vec![
            Piece::new(q(0, 1), q(1, 10), q(5, 1)),
            Piece::new(q(1, 5), q(1, 2), q(1, 1)),
            Piece::new(q(3, 5), q(7, 10), q(3, 1)),
            Piece::new(q(9, 10), q(1, 1), q(1, 2)),
        ])
        .unwrap();
        let xs: Vec<Rational> = (-5..=25).map(|i| q(i, 20)).collect();
        let fast = maximal_batch(&w, &xs);
        for (x, f) in xs.iter().zip(&fast) {
            assert_eq!(*f, maximal_oracle(&w, x, 3), "x = {x}");
        }
    }

    #[test]
    fn weighted_constant_function() {
        let w = StepMeasure::new(vec![
            Piece::new(q(0, 1), q(1, 3), q(2, 1)),
            Piece::new(q(1, 2), q(1, 1), q(1, 1)),
        ])
        .unwrap();
        let one = StepMeasure::new(vec![Piece::new(q(-10, 1), q(10, 1), q(1, 1))]).unwrap();
        for x in [q(1, 10), q(2, 5), q(3, 4)] {
            assert_eq!(weighted_maximal(&w, &one, &x), q(1, 1));
        }
        let g = StepMeasure::new(vec![Piece::new(q(0, 1), q(1, 3), q(1, 1))]).unwrap();
        for x in [q(1, 10), q(2, 5), q(3, 4), q(2, 1)] {
            assert_eq!(weighted_maximal(&w, &g, &x), weighted_maximal_oracle(&w, &g, &x), "{x}");
        }
        assert_eq!(weighted_maximal(&StepMeasure::empty(), &g, &q(0, 1)), q(0, 1));
    }
}
