use std::cmp::Ordering;

use rug::{Integer, Rational};

use crate::triadic::Interval;
use crate::{Error, Result};

/// A half-open interval carrying a constant density.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub interval: Interval,
    pub density: Rational,
}

impl Piece {
    pub fn new(a: Rational, b: Rational, density: Rational) -> Self {
        Piece { interval: Interval::new(a, b), density }
    }

    pub fn a(&self) -> &Rational {
        &self.interval.a
    }

    pub fn b(&self) -> &Rational {
        &self.interval.b
    }

    pub fn mass(&self) -> Rational {
        self.interval.length() * &self.density
    }
}

/// Finitely many disjoint constant-density pieces, sorted left to right, with adjacent
/// pieces of equal density merged. Densities are positive.
///
/// Cumulative masses at piece starts are cached so that [`StepMeasure::cumulative`] and
/// [`StepMeasure::mass`] cost one binary search.
#[derive(Clone, Debug)]
pub struct StepMeasure {
    pieces: Vec<Piece>,
    prefix: Vec<Rational>,
}

impl PartialEq for StepMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.pieces == other.pieces
    }
}

impl Eq for StepMeasure {}

impl StepMeasure {
    /// Validates and canonicalizes a piece list: rejects overlaps and nonpositive
    /// densities, sorts, and merges touching pieces with equal density.
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self> {
        pieces.sort_by(|p, q| p.interval.a.cmp(&q.interval.a));
        for p in &pieces {
            if p.interval.a >= p.interval.b {
                return Err(Error::InvalidParameter(format!("empty piece {}", p.interval)));
            }
            if p.density.cmp0() != Ordering::Greater {
                return Err(Error::InvalidParameter(format!(
                    "nonpositive density {} on {}",
                    p.density, p.interval
                )));
            }
        }
        for w in pieces.windows(2) {
            if w[0].interval.b > w[1].interval.a {
                return Err(Error::InvalidParameter(format!(
                    "overlapping pieces {} and {}",
                    w[0].interval, w[1].interval
                )));
            }
        }
        Ok(Self::from_sorted(pieces))
    }

    /// Same as [`StepMeasure::new`] for input already known to be sorted and disjoint.
    pub(crate) fn from_sorted(pieces: Vec<Piece>) -> Self {
        let mut merged: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if let Some(last) = merged.last_mut() {
                if last.interval.b == p.interval.a && last.density == p.density {
                    last.interval.b = p.interval.b;
                    continue;
                }
            }
            merged.push(p);
        }
        let mut prefix = Vec::with_capacity(merged.len() + 1);
        let mut acc = Rational::new();
        prefix.push(acc.clone());
        for p in &merged {
            acc += p.mass();
            prefix.push(acc.clone());
        }
        StepMeasure { pieces: merged, prefix }
    }

    pub fn empty() -> Self {
        StepMeasure { pieces: Vec::new(), prefix: vec![Rational::new()] }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn total_mass(&self) -> &Rational {
        self.prefix.last().expect("prefix is never empty")
    }

    /// Mass of the pieces strictly before index `i`.
    pub fn prefix_mass(&self, i: usize) -> &Rational {
        &self.prefix[i]
    }

    /// Index of the piece containing `x`, if any.
    pub fn piece_index(&self, x: &Rational) -> Option<usize> {
        let i = self.pieces.partition_point(|p| p.interval.b <= *x);
        (i < self.pieces.len() && self.pieces[i].interval.a <= *x).then_some(i)
    }

    /// Density at `x` (zero off the support).
    pub fn density_at(&self, x: &Rational) -> Rational {
        self.piece_index(x).map(|i| self.pieces[i].density.clone()).unwrap_or_default()
    }

    /// Density just left of `x` and just right of `x`.
    pub fn one_sided_densities(&self, x: &Rational) -> (Rational, Rational) {
        let right = self.density_at(x);
        let i = self.pieces.partition_point(|p| p.interval.b < *x);
        let left = if i < self.pieces.len() && self.pieces[i].interval.a < *x {
            self.pieces[i].density.clone()
        } else {
            Rational::new()
        };
        (left, right)
    }

    /// Whether the density has a jump at `x`.
    pub fn is_jump(&self, x: &Rational) -> bool {
        let (l, r) = self.one_sided_densities(x);
        l != r
    }

    /// `F(x) = w((-∞, x))`.
    pub fn cumulative(&self, x: &Rational) -> Rational {
        let i = self.pieces.partition_point(|p| p.interval.b <= *x);
        let mut f = self.prefix[i].clone();
        if i < self.pieces.len() && self.pieces[i].interval.a < *x {
            let p = &self.pieces[i];
            f += Rational::from(x - &p.interval.a) * &p.density;
        }
        f
    }

    /// Exact mass of `[a, b)`.
    pub fn mass(&self, iv: &Interval) -> Rational {
        self.cumulative(&iv.b) - self.cumulative(&iv.a)
    }

    pub fn support_length(&self) -> Rational {
        self.pieces.iter().map(|p| p.interval.length()).sum()
    }

    /// Smallest common denominator of all piece endpoints.
    pub fn endpoint_denominator(&self) -> Integer {
        let mut d = Integer::from(1);
        for p in &self.pieces {
            d.lcm_mut(p.interval.a.denom());
            d.lcm_mut(p.interval.b.denom());
        }
        d
    }

    /// Restriction to a sorted list of disjoint intervals.
    pub fn restrict(&self, set: &[Interval]) -> StepMeasure {
        let mut out = Vec::new();
        let mut j = 0;
        for p in &self.pieces {
            while j < set.len() && set[j].b <= p.interval.a {
                j += 1;
            }
            let mut t = j;
            while t < set.len() && set[t].a < p.interval.b {
                if let Some(iv) = p.interval.intersect(&set[t]) {
                    out.push(Piece { interval: iv, density: p.density.clone() });
                }
                t += 1;
            }
        }
        StepMeasure::from_sorted(out)
    }

    /// Restriction to the complement of a sorted list of disjoint intervals.
    pub fn restrict_complement(&self, set: &[Interval]) -> StepMeasure {
        let mut out = Vec::new();
        let mut j = 0;
        for p in &self.pieces {
            while j < set.len() && set[j].b <= p.interval.a {
                j += 1;
            }
            let mut cursor = p.interval.a.clone();
            let mut t = j;
            while t < set.len() && set[t].a < p.interval.b {
                if set[t].a > cursor {
                    out.push(Piece::new(cursor.clone(), set[t].a.clone(), p.density.clone()));
                }
                if set[t].b > cursor {
                    cursor = set[t].b.clone();
                }
                t += 1;
            }
            if cursor < p.interval.b {
                out.push(Piece::new(cursor, p.interval.b.clone(), p.density.clone()));
            }
        }
        StepMeasure::from_sorted(out)
    }

    /// Pointwise sum of two step measures.
    pub fn add(&self, other: &StepMeasure) -> StepMeasure {
        let mut cuts: Vec<Rational> = Vec::with_capacity(2 * (self.len() + other.len()));
        for p in self.pieces.iter().chain(other.pieces.iter()) {
            cuts.push(p.interval.a.clone());
            cuts.push(p.interval.b.clone());
        }
        cuts.sort();
        cuts.dedup();
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let mid = Rational::from(&w[0] + &w[1]) / 2u32;
            let d = self.density_at(&mid) + other.density_at(&mid);
            if d.cmp0() == Ordering::Greater {
                out.push(Piece::new(w[0].clone(), w[1].clone(), d));
            }
        }
        StepMeasure::from_sorted(out)
    }

    /// Mirror image under `x ↦ 2s - x` (half-open convention preserved up to endpoints).
    pub fn reflect(&self, s: &Rational) -> StepMeasure {
        let two_s = Rational::from(s * 2u32);
        let out = self
            .pieces
            .iter()
            .rev()
            .map(|p| {
                Piece::new(
                    Rational::from(&two_s - &p.interval.b),
                    Rational::from(&two_s - &p.interval.a),
                    p.density.clone(),
                )
            })
            .collect();
        StepMeasure::from_sorted(out)
    }

    /// The measure with every density multiplied by `c > 0`.
    pub fn scaled(&self, c: &Rational) -> StepMeasure {
        let out = self
            .pieces
            .iter()
            .map(|p| Piece { interval: p.interval.clone(), density: Rational::from(&p.density * c) })
            .collect();
        StepMeasure::from_sorted(out)
    }

    pub fn max_density(&self) -> Rational {
        self.pieces.iter().map(|p| &p.density).max().cloned().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn unit() -> StepMeasure {
        StepMeasure::new(vec![Piece::new(q(0, 1), q(1, 1), q(1, 1))]).unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        let overlap = vec![
            Piece::new(q(0, 1), q(1, 2), q(1, 1)),
            Piece::new(q(1, 3), q(1, 1), q(1, 1)),
        ];
        assert!(StepMeasure::new(overlap).is_err());
        assert!(StepMeasure::new(vec![Piece::new(q(0, 1), q(1, 1), q(0, 1))]).is_err());
    }

    #[test]
    fn merges_equal_neighbours() {
        let w = StepMeasure::new(vec![
            Piece::new(q(1, 2), q(1, 1), q(2, 1)),
            Piece::new(q(0, 1), q(1, 2), q(2, 1)),
        ])
        .unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(*w.total_mass(), q(2, 1));
    }

    #[test]
    fn queries() {
        let w = StepMeasure::new(vec![
            Piece::new(q(2, 9), q(3, 9), q(9, 4)),
            Piece::new(q(1, 3), q(2, 3), q(9, 4)),
        ])
        .unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(*w.total_mass(), q(1, 1));
        assert_eq!(w.density_at(&q(1, 2)), q(9, 4));
        assert_eq!(w.density_at(&q(1, 10)), q(0, 1));
        assert_eq!(w.density_at(&q(2, 3)), q(0, 1));
        assert_eq!(w.mass(&Interval::new(q(1, 3), q(4, 9))), q(1, 4));
        assert_eq!(w.mass(&Interval::new(q(-5, 1), q(5, 1))), q(1, 1));
        assert!(w.is_jump(&q(2, 9)));
        assert!(!w.is_jump(&q(1, 3)));
        assert!(!w.is_jump(&q(1, 2)));
    }

    #[test]
    fn restriction_and_complement_partition_mass() {
        let w = unit();
        let set = vec![Interval::new(q(-1, 1), q(1, 4)), Interval::new(q(1, 2), q(2, 3))];
        let inside = w.restrict(&set);
        let outside = w.restrict_complement(&set);
        assert_eq!(*inside.total_mass(), q(1, 4) + q(1, 6));
        assert_eq!(Rational::from(inside.total_mass() + outside.total_mass()), q(1, 1));
        assert_eq!(inside.add(&outside), w);
    }

    #[test]
    fn reflection_and_scaling() {
        let w = StepMeasure::new(vec![Piece::new(q(0, 1), q(1, 3), q(3, 1))]).unwrap();
        let r = w.reflect(&q(1, 2));
        assert_eq!(r.pieces()[0].interval, Interval::new(q(2, 3), q(1, 1)));
        assert_eq!(*w.scaled(&q(1, 3)).total_mass(), q(1, 3));
        assert_eq!(w.endpoint_denominator(), Integer::from(3));
    }
}
