//! Sign/log-magnitude numbers for quantities between e^{-e^{40}} and e^{e^{40}}.
//!
//! A [`LogReal`] stores `sign` in {-1, 0, +1} and the natural log of the
//! absolute value. Products, quotients and rational powers are exact in the
//! log domain; sums go through log-sum-exp anchored on the larger term.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VexError};

/// Exact rational exponent, used by [`LogReal::pow`].
pub type Rational = num_rational::Rational64;

/// Relative magnitude difference below which opposite-signed sums are
/// reported as cancelled instead of returning rounding noise.
pub const CANCELLATION_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LogReal {
    sign: i8,
    ln: f64,
}

/// Result of a sum that may have cancelled catastrophically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sum {
    pub value: LogReal,
    pub cancelled: bool,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal { sign: 0, ln: f64::NEG_INFINITY };
    pub const ONE: LogReal = LogReal { sign: 1, ln: 0.0 };
    /// Sentinel for divergent positive quantities.
    pub const INFINITY: LogReal = LogReal { sign: 1, ln: f64::INFINITY };

    /// Encodes a finite real.
    pub fn encode(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(VexError::NonFinite(x));
        }
        Ok(Self::from_f64_unchecked(x))
    }

    pub(crate) fn from_f64_unchecked(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogReal { sign: if x > 0.0 { 1 } else { -1 }, ln: x.abs().ln() }
        }
    }

    /// Positive number `e^ln`. `ln = -inf` gives zero.
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogReal { sign: 1, ln }
        }
    }

    pub fn new(sign: i8, ln: f64) -> Self {
        if sign == 0 || ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogReal { sign: sign.signum(), ln }
        }
    }

    /// `e^{-e^{t}}`, the doubly-exponential building block.
    pub fn exp_neg_exp(t: f64) -> Self {
        Self::from_ln(-t.exp())
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.ln
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_infinite(&self) -> bool {
        self.sign != 0 && self.ln == f64::INFINITY
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    /// Decodes to `f64`; underflows to zero and overflows to infinity.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * self.ln.exp(),
        }
    }

    pub fn abs(&self) -> Self {
        LogReal { sign: self.sign.abs(), ln: self.ln }
    }

    pub fn recip(&self) -> Self {
        match self.sign {
            0 => Self::INFINITY,
            s => LogReal { sign: s, ln: -self.ln },
        }
    }

    /// Sum with cancellation reporting.
    pub fn add_flagged(self, other: Self) -> Sum {
        if self.sign == 0 {
            return Sum { value: other, cancelled: false };
        }
        if other.sign == 0 {
            return Sum { value: self, cancelled: false };
        }
        let (hi, lo) = if self.ln >= other.ln { (self, other) } else { (other, self) };
        if hi.ln == f64::INFINITY {
            return Sum { value: hi, cancelled: false };
        }
        let d = lo.ln - hi.ln;
        if hi.sign == lo.sign {
            let value = LogReal { sign: hi.sign, ln: hi.ln + d.exp().ln_1p() };
            return Sum { value, cancelled: false };
        }
        if d == 0.0 {
            return Sum { value: Self::ZERO, cancelled: false };
        }
        if -d < CANCELLATION_THRESHOLD {
            return Sum { value: Self::ZERO, cancelled: true };
        }
        let value = LogReal { sign: hi.sign, ln: hi.ln + (-d.exp_m1()).ln() };
        Sum { value, cancelled: false }
    }

    pub fn pow(&self, q: Rational) -> Result<Self> {
        match self.sign {
            0 => {
                if q.is_positive() {
                    Ok(Self::ZERO)
                } else {
                    Err(VexError::Domain(format!("0^{q}")))
                }
            }
            1 => Ok(LogReal { sign: 1, ln: scale_exact(self.ln, q) }),
            _ => {
                if !q.is_integer() {
                    return Err(VexError::Domain(format!("negative base to non-integer power {q}")));
                }
                let odd = (q.numer() % 2) != 0;
                Ok(LogReal { sign: if odd { -1 } else { 1 }, ln: scale_exact(self.ln, q) })
            }
        }
    }

    /// Real power of a positive number (magnitude_ln times `q`).
    pub fn powf(&self, q: f64) -> Result<Self> {
        match self.sign {
            1 => Ok(LogReal { sign: 1, ln: self.ln * q }),
            0 if q > 0.0 => Ok(Self::ZERO),
            _ => Err(VexError::Domain(format!("power {q} of {self}"))),
        }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.ln.total_cmp(&other.ln),
                _ => other.ln.total_cmp(&self.ln),
            },
            o => o,
        }
    }
}

fn scale_exact(ln: f64, q: Rational) -> f64 {
    let (n, d) = (*q.numer() as f64, *q.denom() as f64);
    if q.is_zero() {
        0.0
    } else if *q.denom() == 1 {
        ln * n
    } else {
        ln * n / d
    }
}

/// Total order consistent with real order.
pub fn lr_cmp(a: &LogReal, b: &LogReal) -> Ordering {
    a.key_cmp(b)
}

impl PartialEq for LogReal {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for LogReal {}

impl PartialOrd for LogReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.key_cmp(other))
    }
}

impl Ord for LogReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

impl Add for LogReal {
    type Output = LogReal;
    fn add(self, rhs: Self) -> LogReal {
        self.add_flagged(rhs).value
    }
}

impl Sub for LogReal {
    type Output = LogReal;
    fn sub(self, rhs: Self) -> LogReal {
        self.add_flagged(-rhs).value
    }
}

impl Neg for LogReal {
    type Output = LogReal;
    fn neg(self) -> LogReal {
        LogReal { sign: -self.sign, ln: self.ln }
    }
}

impl Mul for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: Self) -> LogReal {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        LogReal { sign: self.sign * rhs.sign, ln: self.ln + rhs.ln }
    }
}

impl Div for LogReal {
    type Output = LogReal;
    fn div(self, rhs: Self) -> LogReal {
        self * rhs.recip()
    }
}

impl std::iter::Sum for LogReal {
    fn sum<I: Iterator<Item = LogReal>>(iter: I) -> LogReal {
        iter.fold(LogReal::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s if self.ln.abs() < 700.0 => write!(f, "{}", s as f64 * self.ln.exp()),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "" }, self.ln),
        }
    }
}

/// `ln(e^a + e^b)` for log-magnitudes, tolerant of `-inf`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^hi - e^lo)` for `hi >= lo`.
pub fn ln_sub_exp(hi: f64, lo: f64) -> f64 {
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    let d = lo - hi;
    if d >= 0.0 {
        return f64::NEG_INFINITY;
    }
    hi + (-d.exp_m1()).ln()
}

/// Log-sum-exp over a slice, anchored on the maximum.
pub fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 36.0 {
        z + (-z).exp()
    } else {
        z.exp().ln_1p()
    }
}
