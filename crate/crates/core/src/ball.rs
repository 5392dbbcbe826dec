//! Midpoint-radius enclosures over MPFR floats.
//!
//! The midpoint carries the working precision; the radius is an `f64` upper bound that
//! is only ever rounded upwards. Every operation adds the rounding error of the midpoint
//! to the radius, so the true value always lies in `[mid - rad, mid + rad]`.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::rc::Rc;

use rug::float::Round;
use rug::ops::{AddAssignRound, MulAssignRound, SubAssignRound, SubFrom};
use rug::{Float, Integer, Rational};

/// `2^-p`, saturating at `2^-1000` so that the bound never underflows.
pub fn unit_roundoff(prec: u32) -> f64 {
    2f64.powi(-(prec.min(1000) as i32))
}

/// `a + b` rounded upwards, for nonnegative operands.
#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        b
    } else if b == 0.0 {
        a
    } else {
        (a + b).next_up()
    }
}

/// `a * b` rounded upwards, for nonnegative operands.
#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        (a * b).next_up()
    }
}

/// Upper bound for `|x|` as an `f64`.
#[inline]
pub fn abs_up(x: &Float) -> f64 {
    x.as_abs().to_f64_round(Round::Up)
}

/// Upper bound for `|q|` as an `f64`.
pub fn rational_abs_up(q: &Rational) -> f64 {
    let f = Float::with_val_round(64, q, Round::Up).0;
    f.as_abs().to_f64_round(Round::Up)
}

/// Smallest `-exponent` of `u` for which [`ln1p_series`] applies.
const SERIES_MIN_SHIFT: i32 = 4;

thread_local! {
    static RECIPROCALS: RefCell<Vec<(u32, Rc<Vec<Float>>)>> = const { RefCell::new(Vec::new()) };
}

/// `1/j` for `j = 1..=ceil((prec + 2)/4)`, rounded to nearest.
fn reciprocals(prec: u32) -> Rc<Vec<Float>> {
    RECIPROCALS.with(|cell| {
        let mut cache = cell.borrow_mut();
        if let Some((_, t)) = cache.iter().find(|(p, _)| *p == prec) {
            return t.clone();
        }
        let n = (prec as usize + 2).div_ceil(SERIES_MIN_SHIFT as usize) + 1;
        let t: Rc<Vec<Float>> = Rc::new(
            (1..=n as u32)
                .map(|j| {
                    let mut f = Float::with_val(prec, 1);
                    f /= j;
                    f
                })
                .collect(),
        );
        cache.push((prec, t.clone()));
        t
    })
}

/// `ln(1 + u)` by its Taylor series when `|u| < 1/16`, otherwise `None`.
///
/// `u` may carry a relative error up to `2·2^-prec` from its own computation; the radius
/// covers that, the rounding of the Horner evaluation and the truncated tail.
fn ln1p_series(u: &Float, prec: u32) -> Option<CertifiedValue> {
    if u.is_zero() {
        return Some(CertifiedValue::zero(prec));
    }
    let shift = -u.get_exp()?;
    if shift < SERIES_MIN_SHIFT {
        return None;
    }
    // |u| < 2^-shift, so n terms leave a tail below |u|·2^-(prec+2)
    let n = (prec as usize + 2).div_ceil(shift as usize).max(1);
    let inv = reciprocals(prec);
    let mut t = inv[n - 1].clone();
    for c in inv[..n - 1].iter().rev() {
        t *= u;
        t.sub_from(c);
    }
    t *= u;
    let rad = mul_up(abs_up(u), 9.0 * unit_roundoff(prec));
    Some(CertifiedValue { mid: t, rad })
}

/// Certified real value: the true number lies within `radius` of `midpoint`.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedValue {
    mid: Float,
    rad: f64,
}

impl CertifiedValue {
    pub fn zero(prec: u32) -> Self {
        CertifiedValue { mid: Float::new(prec), rad: 0.0 }
    }

    pub fn from_parts(mid: Float, rad: f64) -> Self {
        assert!(rad >= 0.0 && !rad.is_nan(), "radius must be nonnegative");
        CertifiedValue { mid, rad }
    }

    /// Encloses an exact rational.
    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, q, Round::Nearest);
        let rad = if ord == Ordering::Equal { 0.0 } else { mul_up(abs_up(&mid), unit_roundoff(prec)) };
        CertifiedValue { mid, rad }
    }

    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        let (mid, ord) = Float::with_val_round(prec, n, Round::Nearest);
        let rad = if ord == Ordering::Equal { 0.0 } else { mul_up(abs_up(&mid), unit_roundoff(prec)) };
        CertifiedValue { mid, rad }
    }

    /// `ln(num / den)` for positive integers.
    pub fn ln_ratio(num: &Integer, den: &Integer, prec: u32) -> Self {
        debug_assert!(num.cmp0() == Ordering::Greater && den.cmp0() == Ordering::Greater);
        let eps = unit_roundoff(prec);
        let diff = Integer::from(num - den);
        let twice = Integer::from(diff.abs_ref()) * 2u32;
        if twice <= *den {
            // ln(1 + u) with |u| <= 1/2; a relative perturbation of u moves the
            // result by at most 2|u| times that perturbation
            let (mut u, o0) = Float::with_val_round(prec, &diff, Round::Nearest);
            let o1 = u.div_assign_round_int(den);
            let u_abs = abs_up(&u);
            if let Some(v) = ln1p_series(&u, prec) {
                return v;
            }
            let o2 = u.ln_1p_round(Round::Nearest);
            let mut rad = 0.0;
            if o0 != Ordering::Equal || o1 != Ordering::Equal {
                rad = mul_up(u_abs, 8.0 * eps);
            }
            if o2 != Ordering::Equal {
                rad = add_up(rad, mul_up(abs_up(&u), eps));
            }
            CertifiedValue { mid: u, rad }
        } else {
            // the numerator conversion and the division each cost at most one rounding
            let (mut r, o0) = Float::with_val_round(prec, num, Round::Nearest);
            let o1 = r.div_assign_round_int(den);
            let o1 = if o0 != Ordering::Equal { Ordering::Less } else { o1 };
            let o2 = r.ln_round(Round::Nearest);
            let mut rad = 0.0;
            if o1 != Ordering::Equal {
                rad = 4.0 * eps;
            }
            if o2 != Ordering::Equal {
                rad = add_up(rad, mul_up(abs_up(&r), eps));
            }
            CertifiedValue { mid: r, rad }
        }
    }

    pub fn midpoint(&self) -> &Float {
        &self.mid
    }

    pub fn radius(&self) -> f64 {
        self.rad
    }

    pub fn precision(&self) -> u32 {
        self.mid.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    /// Lower endpoint, rounded down.
    pub fn lower(&self) -> Float {
        let mut lo = self.mid.clone();
        lo.sub_assign_round(self.rad, Round::Down);
        lo
    }

    /// Upper endpoint, rounded up.
    pub fn upper(&self) -> Float {
        let mut hi = self.mid.clone();
        hi.add_assign_round(self.rad, Round::Up);
        hi
    }

    /// Lower bound on `|x|` (zero when the enclosure contains zero).
    pub fn abs_lower(&self) -> Float {
        if self.contains_zero() {
            return Float::new(self.precision());
        }
        let mut lo = Float::with_val(self.precision(), self.mid.abs_ref());
        lo.sub_assign_round(self.rad, Round::Down);
        lo
    }

    /// Upper bound on `|x|`.
    pub fn abs_upper(&self) -> Float {
        let mut hi = Float::with_val(self.precision(), self.mid.abs_ref());
        hi.add_assign_round(self.rad, Round::Up);
        hi
    }

    pub fn contains_zero(&self) -> bool {
        !(self.is_positive() || self.is_negative())
    }

    /// Certainly `> 0`.
    pub fn is_positive(&self) -> bool {
        self.lower() > 0
    }

    /// Certainly `< 0`.
    pub fn is_negative(&self) -> bool {
        self.upper() < 0
    }

    /// Sign when certified, `None` when the enclosure straddles zero.
    pub fn certified_sign(&self) -> Option<Ordering> {
        if self.is_positive() {
            Some(Ordering::Greater)
        } else if self.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lower() <= *q && self.upper() >= *q
    }

    pub fn overlaps(&self, other: &CertifiedValue) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }

    fn round_err(&self, ord: Ordering) -> f64 {
        if ord == Ordering::Equal {
            0.0
        } else {
            mul_up(abs_up(&self.mid), unit_roundoff(self.mid.prec()))
        }
    }

    pub fn add_assign_value(&mut self, other: &CertifiedValue) {
        let ord = self.mid.add_assign_round(&other.mid, Round::Nearest);
        self.rad = add_up(add_up(self.rad, other.rad), self.round_err(ord));
    }

    pub fn sub_assign_value(&mut self, other: &CertifiedValue) {
        let ord = self.mid.sub_assign_round(&other.mid, Round::Nearest);
        self.rad = add_up(add_up(self.rad, other.rad), self.round_err(ord));
    }

    /// `self += (mid ± rad)` without building an intermediate value.
    pub fn add_assign_parts(&mut self, mid: &Float, rad: f64) {
        let ord = self.mid.add_assign_round(mid, Round::Nearest);
        self.rad = add_up(add_up(self.rad, rad), self.round_err(ord));
    }

    /// `self -= (mid ± rad)`.
    pub fn sub_assign_parts(&mut self, mid: &Float, rad: f64) {
        let ord = self.mid.sub_assign_round(mid, Round::Nearest);
        self.rad = add_up(add_up(self.rad, rad), self.round_err(ord));
    }

    pub fn add(&self, other: &CertifiedValue) -> CertifiedValue {
        let mut out = self.clone();
        out.add_assign_value(other);
        out
    }

    pub fn sub(&self, other: &CertifiedValue) -> CertifiedValue {
        let mut out = self.clone();
        out.sub_assign_value(other);
        out
    }

    pub fn neg(&self) -> CertifiedValue {
        CertifiedValue { mid: Float::with_val(self.precision(), -&self.mid), rad: self.rad }
    }

    pub fn mul(&self, other: &CertifiedValue) -> CertifiedValue {
        let prec = self.precision().max(other.precision());
        let (mid, ord) = Float::with_val_round(prec, &self.mid * &other.mid, Round::Nearest);
        let mut rad = add_up(mul_up(abs_up(&self.mid), other.rad), mul_up(abs_up(&other.mid), self.rad));
        rad = add_up(rad, mul_up(self.rad, other.rad));
        let mut out = CertifiedValue { mid, rad };
        out.rad = add_up(out.rad, out.round_err(ord));
        out
    }

    pub fn mul_rational(&self, q: &Rational) -> CertifiedValue {
        let mut out = self.clone();
        out.mul_assign_rational(q);
        out
    }

    pub fn mul_assign_rational(&mut self, q: &Rational) {
        let ord = self.mid.mul_assign_round(q, Round::Nearest);
        self.rad = mul_up(self.rad, rational_abs_up(q));
        self.rad = add_up(self.rad, self.round_err(ord));
    }

    /// Widens the radius by a nonnegative amount.
    pub fn widen(&mut self, extra: f64) {
        assert!(extra >= 0.0);
        self.rad = add_up(self.rad, extra);
    }

    /// Same value at a different working precision (midpoint rounded, error absorbed).
    pub fn with_precision(&self, prec: u32) -> CertifiedValue {
        let (mid, ord) = Float::with_val_round(prec, &self.mid, Round::Nearest);
        let mut out = CertifiedValue { mid, rad: self.rad };
        out.rad = add_up(out.rad, out.round_err(ord));
        out
    }

    /// Whether the whole enclosure lies strictly above `q`.
    pub fn certainly_gt(&self, q: &Rational) -> bool {
        self.lower() > *q
    }

    /// Whether the whole enclosure lies strictly below `q`.
    pub fn certainly_lt(&self, q: &Rational) -> bool {
        self.upper() < *q
    }
}

/// `self /= n` for an integer divisor, correctly rounded.
trait DivAssignRoundInt {
    fn div_assign_round_int(&mut self, n: &Integer) -> Ordering;
}

impl DivAssignRoundInt for Float {
    fn div_assign_round_int(&mut self, n: &Integer) -> Ordering {
        use rug::ops::DivAssignRound;
        self.div_assign_round(n, Round::Nearest)
    }
}

impl fmt::Display for CertifiedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.3e}", self.mid.to_string_radix(10, Some(20)), self.rad)
    }
}
