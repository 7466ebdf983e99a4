//! Positive weights stored as a normalized mantissa and a binary exponent.
//!
//! Products of transition probabilities and contraction ratios decay
//! geometrically with word length, so plain `f64` products underflow once
//! words reach a few hundred letters. A `Weight` keeps the mantissa in
//! `[0.5, 1)` and carries the power of two separately. Rescaling by powers of
//! two is exact, so a product of `Weight`s rounds exactly like the same
//! product of `f64`s would (without the underflow), and comparisons are exact.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Mul, MulAssign};

const EXP_MASK: u64 = 0x7ff << 52;
const BIAS_HALF: u64 = 1022 << 52;

#[derive(Clone, Copy, PartialEq)]
pub struct Weight {
    mant: f64,
    exp: i64,
}

impl Weight {
    pub const ONE: Weight = Weight { mant: 0.5, exp: 1 };

    /// Builds a weight from a positive finite float.
    ///
    /// Returns `None` for zero, negative, subnormal or non-finite input.
    pub fn new(value: f64) -> Option<Weight> {
        if !(value.is_normal() && value > 0.0) {
            return None;
        }
        let bits = value.to_bits();
        let exp = ((bits & EXP_MASK) >> 52) as i64 - 1022;
        let mant = f64::from_bits((bits & !EXP_MASK) | BIAS_HALF);
        Some(Weight { mant, exp })
    }

    fn normalized(mant: f64, exp: i64) -> Weight {
        // mant is a product of two mantissas, so it lies in [0.25, 1).
        let w = Weight::new(mant).expect("mantissa product is a normal positive float");
        Weight {
            mant: w.mant,
            exp: w.exp + exp,
        }
    }

    pub fn mantissa(self) -> f64 {
        self.mant
    }

    pub fn exponent(self) -> i64 {
        self.exp
    }

    /// Natural logarithm of the weight.
    pub fn ln(self) -> f64 {
        self.mant.ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    /// Linear value; underflows to zero (or overflows) outside the `f64` range.
    pub fn value(self) -> f64 {
        if self.exp > 1023 {
            return f64::INFINITY;
        }
        if self.exp < -1100 {
            return 0.0;
        }
        // Split the scaling so intermediate powers stay representable.
        let half = self.exp / 2;
        self.mant * 2f64.powi(half as i32) * 2f64.powi((self.exp - half) as i32)
    }

    /// `self^e` as a linear value, computed through the logarithm.
    pub fn powf(self, e: f64) -> f64 {
        if e == 0.0 {
            return 1.0;
        }
        (self.ln() * e).exp()
    }

    /// `self^k` by repeated multiplication, matching the rounding of a word
    /// built from `k` identical factors.
    pub fn powi(self, k: u32) -> Weight {
        let mut acc = Weight::ONE;
        for _ in 0..k {
            acc *= self;
        }
        acc
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::ONE
    }
}

impl Mul for Weight {
    type Output = Weight;

    fn mul(self, rhs: Weight) -> Weight {
        Weight::normalized(self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl MulAssign for Weight {
    fn mul_assign(&mut self, rhs: Weight) {
        *self = *self * rhs;
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Weight) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Eq for Weight {}

impl Ord for Weight {
    fn cmp(&self, other: &Weight) -> Ordering {
        self.exp
            .cmp(&other.exp)
            .then_with(|| self.mant.total_cmp(&other.mant))
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({} * 2^{})", self.mant, self.exp)
    }
}
