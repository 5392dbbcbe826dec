//! Certified harmonic numbers `H_n = Σ_{j=1}^n 1/j`.
//!
//! Small indices come from a cumulative table; large ones from the asymptotic expansion
//! `ln n + γ + 1/(2n) − 1/(12n²) + 1/(120n⁴) − 1/(252n⁶) + θ/(240n⁸)` with `0 < θ < 1`.

use rug::float::{Constant, Round};
use rug::ops::{AddAssignRound, DivAssignRound, SubAssignRound};
use rug::Float;

use crate::ball::{abs_up, add_up, mul_up, unit_roundoff, CertifiedValue};

/// Largest index stored in a table.
pub const TABLE_LIMIT: u64 = 1 << 21;

pub struct HarmonicTable {
    prec: u32,
    mids: Vec<Float>,
    rads: Vec<f64>,
}

impl HarmonicTable {
    /// Table of `H_0..=H_n` (capped at [`TABLE_LIMIT`]).
    pub fn new(n: u64, prec: u32) -> Self {
        let n = n.min(TABLE_LIMIT) as usize;
        let eps = unit_roundoff(prec);
        let mut mids = Vec::with_capacity(n + 1);
        let mut rads = Vec::with_capacity(n + 1);
        let mut acc = Float::new(prec);
        let mut rad = 0.0f64;
        mids.push(acc.clone());
        rads.push(0.0);
        for j in 1..=n {
            let mut inv = Float::with_val(prec, 1);
            let o1 = inv.div_assign_round(j as u32, Round::Nearest);
            if o1 != std::cmp::Ordering::Equal {
                rad = add_up(rad, mul_up(abs_up(&inv), eps));
            }
            let o2 = acc.add_assign_round(&inv, Round::Nearest);
            if o2 != std::cmp::Ordering::Equal {
                rad = add_up(rad, mul_up(abs_up(&acc), eps));
            }
            mids.push(acc.clone());
            rads.push(rad);
        }
        HarmonicTable { prec, mids, rads }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn limit(&self) -> u64 {
        (self.mids.len() - 1) as u64
    }

    /// Enclosure of `H_n`.
    pub fn get(&self, n: u64) -> CertifiedValue {
        if (n as usize) < self.mids.len() {
            CertifiedValue::from_parts(self.mids[n as usize].clone(), self.rads[n as usize])
        } else {
            harmonic_asymptotic(n, self.prec)
        }
    }

    /// `acc += sign·(H_q − H_p)` for `p <= q`, reading table entries in place.
    pub fn accumulate_range(&self, acc: &mut CertifiedValue, p: u64, q: u64, negate: bool) {
        debug_assert!(p <= q);
        if p == q {
            return;
        }
        let in_table = (q as usize) < self.mids.len();
        if !in_table {
            let r = self.range(p, q);
            if negate {
                acc.sub_assign_value(&r);
            } else {
                acc.add_assign_value(&r);
            }
            return;
        }
        let (p, q) = (p as usize, q as usize);
        if negate {
            acc.sub_assign_parts(&self.mids[q], self.rads[q]);
            acc.add_assign_parts(&self.mids[p], self.rads[p]);
        } else {
            acc.add_assign_parts(&self.mids[q], self.rads[q]);
            acc.sub_assign_parts(&self.mids[p], self.rads[p]);
        }
    }

    /// Enclosure of `H_q - H_p = Σ_{j=p+1}^{q} 1/j` for `p <= q`.
    pub fn range(&self, p: u64, q: u64) -> CertifiedValue {
        debug_assert!(p <= q);
        if p == q {
            return CertifiedValue::zero(self.prec);
        }
        self.get(q).sub(&self.get(p))
    }
}

/// `H_n` for `n >= 1` from the asymptotic series with a rigorous remainder bound.
pub fn harmonic_asymptotic(n: u64, prec: u32) -> CertifiedValue {
    assert!(n >= 1);
    if n < 64 {
        let t = HarmonicTable::new(n, prec);
        return t.get(n);
    }
    let eps = unit_roundoff(prec);
    let work = prec + 16;
    let mut rad = 0.0;
    let mut s = Float::with_val(work, n);
    s.ln_round(Round::Nearest);
    rad = add_up(rad, mul_up(abs_up(&s), eps));
    let gamma = Float::with_val(work, Constant::Euler);
    rad = add_up(rad, mul_up(abs_up(&gamma), eps));
    s.add_assign_round(&gamma, Round::Nearest);
    let nf = Float::with_val(work, n);
    let mut t1 = Float::with_val(work, 1);
    t1.div_assign_round(&nf, Round::Nearest);
    t1 /= 2u32;
    let mut t2 = Float::with_val(work, &nf * &nf);
    t2 *= 12u32;
    t2.recip_round(Round::Nearest);
    let n2 = Float::with_val(work, &nf * &nf);
    let mut t4 = Float::with_val(work, &n2 * &n2);
    t4 *= 120u32;
    t4.recip_round(Round::Nearest);
    let mut t6 = Float::with_val(work, &n2 * &n2);
    t6 *= &n2;
    t6 *= 252u32;
    t6.recip_round(Round::Nearest);
    let mut t8 = Float::with_val(work, &n2 * &n2);
    t8.square_round(Round::Nearest);
    t8 *= 480u32;
    t8.recip_round(Round::Nearest);
    s.add_assign_round(&t1, Round::Nearest);
    s.sub_assign_round(&t2, Round::Nearest);
    s.add_assign_round(&t4, Round::Nearest);
    s.sub_assign_round(&t6, Round::Nearest);
    s.add_assign_round(&t8, Round::Nearest);
    // every operation above is off by at most a few ulps at the work precision
    rad = add_up(rad, mul_up(abs_up(&s), 32.0 * unit_roundoff(work)));
    // remainder θ/(240 n⁸), 0 < θ < 1, centred at 1/(480 n⁸)
    rad = add_up(rad, mul_up(abs_up(&t8), 1.0 + eps));
    let mut out = CertifiedValue::from_parts(s, rad);
    out = out.with_precision(prec);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn exact_h(n: u64) -> Rational {
        (1..=n).map(|j| Rational::from((1, j))).sum()
    }

    #[test]
    fn table_contains_exact_values() {
        let t = HarmonicTable::new(300, 128);
        for n in [0u64, 1, 2, 3, 10, 81, 243, 300] {
            assert!(t.get(n).contains_rational(&exact_h(n)), "H_{n}");
        }
        assert!(t.range(10, 81).contains_rational(&(exact_h(81) - exact_h(10))));
    }

    #[test]
    fn asymptotic_matches_exact() {
        for n in [64u64, 100, 729, 2000] {
            let v = harmonic_asymptotic(n, 128);
            assert!(v.contains_rational(&exact_h(n)), "H_{n}: {v}");
            assert!(v.radius() < 1e-12);
        }
    }

    #[test]
    fn beyond_table_uses_asymptotics() {
        let t = HarmonicTable::new(50, 128);
        assert_eq!(t.limit(), 50);
        assert!(t.get(500).contains_rational(&exact_h(500)));
    }
}
