//! Complex numbers kept as `(log|z|, z/|z|)`.
//!
//! Corner entries of the similarity-transformed matrix grow like `e^{±gn}` and
//! characteristic polynomials like `e^{nΦ}`; both overflow long before the
//! quantities they combine into do. Products add log-moduli, sums factor out
//! the larger modulus.

use std::ops::{Div, Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    /// `ln |z|`; `-inf` encodes zero.
    pub log_mod: f64,
    /// Unit-modulus phase factor `z/|z|` (1 for zero).
    pub phase: Complex64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        log_mod: f64::NEG_INFINITY,
        phase: Complex64::new(1.0, 0.0),
    };
    pub const ONE: LogComplex = LogComplex {
        log_mod: 0.0,
        phase: Complex64::new(1.0, 0.0),
    };

    pub fn from_complex(z: Complex64) -> Self {
        let r = z.norm();
        if r == 0.0 {
            Self::ZERO
        } else {
            LogComplex {
                log_mod: r.ln(),
                phase: z / r,
            }
        }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// `sign · e^{log_mod}` for a real sign.
    pub fn from_log_real(log_mod: f64, negative: bool) -> Self {
        LogComplex {
            log_mod,
            phase: Complex64::new(if negative { -1.0 } else { 1.0 }, 0.0),
        }
    }

    pub fn from_log_parts(log_mod: f64, phase: Complex64) -> Self {
        let r = phase.norm();
        if r == 0.0 || log_mod == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogComplex {
                log_mod,
                phase: phase / r,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_mod == f64::NEG_INFINITY
    }

    /// Principal complex logarithm `ln|z| + i arg z`.
    pub fn ln(&self) -> Complex64 {
        Complex64::new(self.log_mod, self.phase.arg())
    }

    /// Materialize; saturates to infinity past the f64 range.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            self.phase * self.log_mod.exp()
        }
    }

    pub fn scale_log(self, delta: f64) -> Self {
        if self.is_zero() {
            self
        } else {
            LogComplex {
                log_mod: self.log_mod + delta,
                phase: self.phase,
            }
        }
    }

    pub fn recip(self) -> Self {
        LogComplex {
            log_mod: -self.log_mod,
            phase: self.phase.conj(),
        }
    }

    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.log_mod >= other.log_mod {
            (self, other)
        } else {
            (other, self)
        };
        let rel = (small.log_mod - big.log_mod).exp();
        let sum = big.phase + small.phase * rel;
        let r = sum.norm();
        if r == 0.0 {
            return Self::ZERO;
        }
        LogComplex {
            log_mod: big.log_mod + r.ln(),
            phase: sum / r,
        }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(-other)
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        let p = self.phase * rhs.phase;
        LogComplex {
            log_mod: self.log_mod + rhs.log_mod,
            // renormalize to keep |phase| = 1 over long products
            phase: p / p.norm(),
        }
    }
}

impl Div for LogComplex {
    type Output = LogComplex;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for LogComplex {
    type Output = LogComplex;
    fn neg(self) -> Self {
        LogComplex {
            log_mod: self.log_mod,
            phase: -self.phase,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn huge_cancels_back_to_moderate() {
        let a = LogComplex::from_log_real(900.0, true);
        let b = LogComplex::from_log_real(-899.0, false);
        let p = (a * b).to_complex();
        assert!((p - c(-std::f64::consts::E, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn one_plus_huge() {
        let big = LogComplex::from_log_real(1000.0, false);
        let s = LogComplex::ONE.add(big);
        assert!((s.log_mod - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn exact_cancellation_is_zero() {
        let a = LogComplex::from_complex(c(1.5, -2.0));
        assert!(a.sub(a).is_zero());
    }

    proptest! {
        #[test]
        fn arithmetic_matches_plain(
            ar in -10.0f64..10.0, ai in -10.0f64..10.0,
            br in -10.0f64..10.0, bi in -10.0f64..10.0,
        ) {
            let (x, y) = (c(ar, ai), c(br, bi));
            prop_assume!(x.norm() > 1e-6 && y.norm() > 1e-6);
            let (lx, ly) = (LogComplex::from_complex(x), LogComplex::from_complex(y));
            let tol = 1e-12 * (1.0 + x.norm() * y.norm() + x.norm() / y.norm());
            prop_assert!(((lx * ly).to_complex() - x * y).norm() < tol);
            prop_assert!(((lx / ly).to_complex() - x / y).norm() < tol);
            prop_assert!((lx.add(ly).to_complex() - (x + y)).norm() < 1e-12 * (x.norm() + y.norm()));
        }
    }
}
