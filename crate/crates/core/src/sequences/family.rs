use serde::{Deserialize, Serialize};

use super::{normalize_weight, Sequence, WeightSequence};
use crate::error::{Error, Result};

/// The power-law parameter family
/// `beta(k) = 1+k`, `mu(k) = (1+k)^-b`, `w(k) ~ (1+k)^-c`, `w'(k) ~ (1+k)^-a`
/// with `3 < a < 2b - 1 < c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFamily {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PowerLawFamily {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let ok = 3.0 < a && a < 2.0 * b - 1.0 && 2.0 * b - 1.0 < c;
        if !ok || !a.is_finite() || !b.is_finite() || !c.is_finite() {
            return Err(Error::InvalidFamily { a, b, c });
        }
        Ok(Self { a, b, c })
    }

    pub fn beta(&self) -> Sequence {
        Sequence::affine(1.0, 1.0)
    }

    pub fn mu(&self) -> Sequence {
        Sequence::power_law(-self.b, 1.0)
    }

    /// Weights `(w, w')`, normalized to relative accuracy `tol`.
    pub fn weights(&self, tol: f64) -> (WeightSequence, WeightSequence) {
        let w = normalize_weight(&Sequence::power_law(-self.c, 1.0), tol)
            .expect("c > 1 in a valid family");
        let w_prime = normalize_weight(&Sequence::power_law(-self.a, 1.0), tol)
            .expect("a > 1 in a valid family");
        (w, w_prime)
    }

    /// Exponent of the terms of `sum (1+k)^(2n) |mu(k)|^-2 w(k)`.
    pub fn kernel_exponent(&self, n: usize) -> f64 {
        2.0 * n as f64 + 2.0 * self.b - self.c
    }

    /// Least `n >= 0` for which `sum (1+k)^(2n) |mu(k)|^-2 w(k)` diverges:
    /// `max(0, ceil((c - 2b - 1) / 2))`, an exact integer value of the
    /// quotient counting as divergent.
    pub fn predicted_n(&self) -> usize {
        let x = (self.c - 2.0 * self.b - 1.0) / 2.0;
        if x <= 0.0 {
            return 0;
        }
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            nearest as usize
        } else {
            x.ceil() as usize
        }
    }
}
