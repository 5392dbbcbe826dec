//! Triadic intervals `[n·3^e, (n+1)·3^e)` and the nested collections `K_i`, `J_i`.
//!
//! Everything here is exact: endpoints are [`Rational`]s and containment is decided by
//! integer comparisons after rescaling both intervals to the finer scale.

use std::cmp::Ordering;
use std::fmt;

use rug::{Integer, Rational};

use crate::{Error, Result};

/// Largest |scale| accepted anywhere in the crate.
pub const MAX_SCALE: i64 = 1_000_000;

/// `3^e` as an exact integer.
pub fn pow3(e: u32) -> Integer {
    Integer::from(Integer::u_pow_u(3, e))
}

/// `3^e` for any sign of `e`.
pub fn pow3_rational(e: i64) -> Rational {
    let p = pow3(e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from(p)
    } else {
        Rational::from((Integer::from(1), p))
    }
}

/// Orientation of a companion interval: `Plus` puts it immediately left of `J`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// The half-open interval `[index·3^scale, (index+1)·3^scale)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TriadicInterval {
    scale: i64,
    index: Integer,
}

impl TriadicInterval {
    pub fn new(scale: i64, index: impl Into<Integer>) -> Self {
        assert!(scale.abs() <= MAX_SCALE, "triadic scale {scale} out of range");
        TriadicInterval { scale, index: index.into() }
    }

    /// `[0, 1)`.
    pub fn unit() -> Self {
        TriadicInterval::new(0, 0)
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn index(&self) -> &Integer {
        &self.index
    }

    pub fn length(&self) -> Rational {
        pow3_rational(self.scale)
    }

    pub fn left(&self) -> Rational {
        Rational::from(&self.index) * pow3_rational(self.scale)
    }

    pub fn right(&self) -> Rational {
        Rational::from(Integer::from(&self.index + 1u32)) * pow3_rational(self.scale)
    }

    pub fn center(&self) -> Rational {
        let twice = Integer::from(&self.index * 2u32) + 1u32;
        Rational::from((twice, 2)) * pow3_rational(self.scale)
    }

    /// The child of one third the length that contains the center: `n ↦ 3n + 1`.
    pub fn middle_third(&self) -> TriadicInterval {
        TriadicInterval::new(self.scale - 1, Integer::from(&self.index * 3u32) + 1u32)
    }

    /// The triadic interval of length `3^{1-k}|J|` abutting `self` on the left
    /// (`Sign::Plus`) or on the right (`Sign::Minus`).
    pub fn companion(&self, eps: Sign, k: u32) -> Result<TriadicInterval> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "companion intervals need k >= 2, got k = {k}"
            )));
        }
        let scale = self.scale + 1 - k as i64;
        let factor = pow3(k - 1);
        let index = match eps {
            Sign::Plus => Integer::from(&self.index * &factor) - 1u32,
            Sign::Minus => Integer::from(&self.index + 1u32) * factor,
        };
        Ok(TriadicInterval::new(scale, index))
    }

    /// The triadic interval three times as long that contains `self`.
    pub fn parent(&self) -> TriadicInterval {
        TriadicInterval::new(self.scale + 1, self.index.clone().div_rem_floor(Integer::from(3)).0)
    }

    /// Exact containment of another triadic interval.
    pub fn contains(&self, other: &TriadicInterval) -> bool {
        if other.scale > self.scale {
            return false;
        }
        let d = (self.scale - other.scale) as u32;
        let f = pow3(d);
        let lo = Integer::from(&self.index * &f);
        let hi = Integer::from(&self.index + 1u32) * f;
        lo <= other.index && other.index < hi
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        let l = self.left();
        if *x < l {
            return false;
        }
        *x < self.right()
    }

    /// Left-to-right order of two intervals with equal length.
    pub fn cmp_position(&self, other: &TriadicInterval) -> Ordering {
        self.left().cmp(&other.left()).then(self.right().cmp(&other.right()))
    }

    pub fn to_interval(&self) -> Interval {
        Interval::new(self.left(), self.right())
    }
}

impl fmt::Display for TriadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left(), self.right())
    }
}

/// A half-open interval with rational endpoints, `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub a: Rational,
    pub b: Rational,
}

impl Interval {
    pub fn new(a: Rational, b: Rational) -> Self {
        debug_assert!(a < b, "empty interval");
        Interval { a, b }
    }

    pub fn length(&self) -> Rational {
        Rational::from(&self.b - &self.a)
    }

    pub fn center(&self) -> Rational {
        Rational::from(&self.a + &self.b) / 2u32
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        self.a <= *x && *x < self.b
    }

    /// The point `a + t·(b - a)`.
    pub fn at(&self, t: &Rational) -> Rational {
        Rational::from(&self.b - &self.a) * t + &self.a
    }

    /// Middle third `[a + ℓ/3, a + 2ℓ/3)`.
    pub fn middle_third(&self) -> Interval {
        Interval::new(self.at(&Rational::from((1, 3))), self.at(&Rational::from((2, 3))))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let a = if self.a > other.a { &self.a } else { &other.a };
        let b = if self.b < other.b { &self.b } else { &other.b };
        if a < b {
            Some(Interval::new(a.clone(), b.clone()))
        } else {
            None
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.a, self.b)
    }
}

/// One step of the recursion: `J_i = {K^m : K ∈ K_{i-1}}` and `K_i` = all triadic
/// intervals of length `3^{-ik}` inside `∪J_i`, both left to right.
pub fn stage_collections(
    k: u32,
    i: u32,
    prior: &[TriadicInterval],
) -> Result<(Vec<TriadicInterval>, Vec<TriadicInterval>)> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    if i < 1 {
        return Err(Error::InvalidParameter("stage index must be >= 1".into()));
    }
    let target = -(i as i64) * k as i64;
    if target.abs() > MAX_SCALE {
        return Err(Error::InvalidParameter(format!("scale {target} exceeds the supported range")));
    }
    let mut js: Vec<TriadicInterval> = prior.iter().map(TriadicInterval::middle_third).collect();
    js.sort_by(TriadicInterval::cmp_position);
    let mut ks = Vec::new();
    for j in &js {
        if j.scale < target {
            return Err(Error::InvalidParameter(format!(
                "interval {j} is finer than the stage-{i} scale"
            )));
        }
        let d = (j.scale - target) as u32;
        let f = pow3(d);
        let start = Integer::from(&j.index * &f);
        let count = f.to_u64().expect("collection too large");
        for off in 0..count {
            ks.push(TriadicInterval::new(target, Integer::from(&start + off)));
        }
    }
    Ok((js, ks))
}
