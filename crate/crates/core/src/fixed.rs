//! Fixed-point values with 64 fractional bits.
//!
//! Prefix sums and noise totals are accumulated in this representation so
//! that adding and later subtracting the same noise value is exact. This is
//! what lets the incremental noise total match a from-scratch recomputation,
//! and lets a coupled re-run on a neighbouring stream reproduce the original
//! outputs bit for bit.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

const FRAC_BITS: i32 = 64;
const SCALE: f64 = 18446744073709551616.0; // 2^64

/// Magnitudes at or above this bound are rejected by [`Fixed::from_f64`].
pub const FIXED_LIMIT: f64 = 4611686018427387904.0; // 2^62

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed(i128);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);

    /// Rounds `v` to the nearest multiple of `2^-64`.
    pub fn from_f64(v: f64) -> Option<Fixed> {
        if !v.is_finite() || v.abs() >= FIXED_LIMIT {
            return None;
        }
        Some(Fixed((v * SCALE).round() as i128))
    }

    pub fn from_int(n: i64) -> Fixed {
        Fixed((n as i128) << FRAC_BITS)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE
    }

    pub fn raw(self) -> i128 {
        self.0
    }

    pub fn abs(self) -> Fixed {
        Fixed(self.0.abs())
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 + rhs.0)
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 - rhs.0)
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(-self.0)
    }
}

impl AddAssign for Fixed {
    fn add_assign(&mut self, rhs: Fixed) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Fixed {
    fn sub_assign(&mut self, rhs: Fixed) {
        self.0 -= rhs.0;
    }
}

impl Sum for Fixed {
    fn sum<I: Iterator<Item = Fixed>>(iter: I) -> Fixed {
        iter.fold(Fixed::ZERO, Add::add)
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}
