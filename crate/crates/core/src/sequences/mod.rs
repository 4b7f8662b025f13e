//! Scalar sequences on the nonnegative integers.
//!
//! Every coefficient of the theory (the derivation symbol `beta`, the gauge
//! `mu`, the weights `w` and `w'`) is a map `k -> C` evaluated on demand.
//! Sequences carry just enough asymptotic metadata (limits, limits of first
//! differences, growth exponents) for the analysis layer to reason about
//! tails without materializing anything infinite.

mod family;
pub mod series;
mod weight;

pub use family::PowerLawFamily;
pub use weight::{normalize_weight, WeightSequence};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A closed-form or tabulated sequence `k -> C` on `k >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sequence {
    /// `scale * (1 + k)^exponent`.
    PowerLaw { exponent: f64, scale: f64 },
    /// `offset + slope * k`.
    Affine {
        #[serde(with = "scalar")]
        slope: C64,
        #[serde(with = "scalar")]
        offset: C64,
    },
    /// `prefix[k]` for `k < prefix.len()`, `tail` afterwards.
    EventuallyConstant {
        #[serde(with = "scalar::vec")]
        prefix: Vec<C64>,
        #[serde(with = "scalar")]
        tail: C64,
    },
    /// `table[k]` inside the table, extended linearly past its end with the
    /// declared limit of first differences.
    Tabulated {
        #[serde(with = "scalar::vec")]
        table: Vec<C64>,
        #[serde(with = "scalar")]
        difference_limit: C64,
    },
}

impl Sequence {
    pub fn power_law(exponent: f64, scale: f64) -> Self {
        Sequence::PowerLaw { exponent, scale }
    }

    pub fn affine(slope: f64, offset: f64) -> Self {
        Sequence::Affine {
            slope: C64::new(slope, 0.0),
            offset: C64::new(offset, 0.0),
        }
    }

    pub fn constant(value: C64) -> Self {
        Sequence::EventuallyConstant {
            prefix: Vec::new(),
            tail: value,
        }
    }

    pub fn eventually_constant(prefix: Vec<C64>, tail: C64) -> Self {
        Sequence::EventuallyConstant { prefix, tail }
    }

    pub fn tabulated(table: Vec<C64>, difference_limit: C64) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidSequence(
                "tabulated sequence needs at least one entry".into(),
            ));
        }
        Ok(Sequence::Tabulated {
            table,
            difference_limit,
        })
    }

    /// Checked evaluation; negative indices are a domain error.
    pub fn eval(&self, k: i64) -> Result<C64> {
        if k < 0 {
            return Err(Error::NegativeIndex(k));
        }
        Ok(self.at(k as usize))
    }

    /// Evaluation at a nonnegative index.
    pub fn at(&self, k: usize) -> C64 {
        match self {
            Sequence::PowerLaw { exponent, scale } => {
                C64::new(scale * (1.0 + k as f64).powf(*exponent), 0.0)
            }
            Sequence::Affine { slope, offset } => offset + slope * k as f64,
            Sequence::EventuallyConstant { prefix, tail } => prefix.get(k).copied().unwrap_or(*tail),
            Sequence::Tabulated {
                table,
                difference_limit,
            } => match table.get(k) {
                Some(v) => *v,
                None => {
                    let last = table.len() - 1;
                    table[last] + difference_limit * (k - last) as f64
                }
            },
        }
    }

    /// `ln |s(k)|`, computed without forming `s(k)` for power laws so that
    /// long products stay finite.
    pub fn ln_abs(&self, k: usize) -> f64 {
        match self {
            Sequence::PowerLaw { exponent, scale } => {
                scale.abs().ln() + exponent * (k as f64).ln_1p()
            }
            _ => self.at(k).norm().ln(),
        }
    }

    /// `lim s(k)` when it exists and is known from the closed form.
    pub fn limit(&self) -> Option<C64> {
        match self {
            Sequence::PowerLaw { exponent, scale } => {
                if *exponent < 0.0 || *scale == 0.0 {
                    Some(C64::new(0.0, 0.0))
                } else if *exponent == 0.0 {
                    Some(C64::new(*scale, 0.0))
                } else {
                    None
                }
            }
            Sequence::Affine { slope, offset } => (slope.norm() == 0.0).then_some(*offset),
            Sequence::EventuallyConstant { tail, .. } => Some(*tail),
            Sequence::Tabulated {
                table,
                difference_limit,
            } => (difference_limit.norm() == 0.0).then(|| table[table.len() - 1]),
        }
    }

    /// `lim (s(k+1) - s(k))`; for `beta` this is `beta_inf`.
    pub fn difference_limit(&self) -> Option<C64> {
        match self {
            Sequence::PowerLaw { exponent, scale } => {
                if *exponent < 1.0 || *scale == 0.0 {
                    Some(C64::new(0.0, 0.0))
                } else if *exponent == 1.0 {
                    Some(C64::new(*scale, 0.0))
                } else {
                    None
                }
            }
            Sequence::Affine { slope, .. } => Some(*slope),
            Sequence::EventuallyConstant { .. } => Some(C64::new(0.0, 0.0)),
            Sequence::Tabulated {
                difference_limit, ..
            } => Some(*difference_limit),
        }
    }

    /// Index from which the sequence is constant, if it is eventually constant.
    pub fn settled_after(&self) -> Option<usize> {
        match self {
            Sequence::EventuallyConstant { prefix, .. } => Some(prefix.len()),
            Sequence::Affine { slope, .. } if slope.norm() == 0.0 => Some(0),
            Sequence::Tabulated {
                table,
                difference_limit,
            } if difference_limit.norm() == 0.0 => Some(table.len() - 1),
            Sequence::PowerLaw { exponent, scale } if *exponent == 0.0 || *scale == 0.0 => Some(0),
            _ => None,
        }
    }

    /// Growth exponent `e` with `|s(k)| ~ C (1+k)^e`, when known in closed
    /// form. `None` for sequences that are eventually zero.
    pub fn growth_exponent(&self) -> Option<f64> {
        match self {
            Sequence::PowerLaw { exponent, scale } => (*scale != 0.0).then_some(*exponent),
            Sequence::Affine { slope, offset } => {
                if slope.norm() != 0.0 {
                    Some(1.0)
                } else if offset.norm() != 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            Sequence::EventuallyConstant { tail, .. } => (tail.norm() != 0.0).then_some(0.0),
            Sequence::Tabulated {
                table,
                difference_limit,
            } => {
                if difference_limit.norm() != 0.0 {
                    Some(1.0)
                } else if table[table.len() - 1].norm() != 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }

    /// Last index where a zero can occur without contradicting the closed
    /// form; past it the sequence is provably nonvanishing. `None` when the
    /// sequence vanishes identically from some point on.
    pub fn nonvanishing_beyond(&self) -> Option<usize> {
        match self {
            Sequence::PowerLaw { scale, .. } => (*scale != 0.0).then_some(0),
            Sequence::Affine { slope, offset } => {
                if slope.norm() == 0.0 {
                    return (offset.norm() != 0.0).then_some(0);
                }
                // |offset + slope k| >= |slope| k - |offset| > 0 once k > |offset|/|slope|
                Some((offset.norm() / slope.norm()).floor() as usize + 1)
            }
            Sequence::EventuallyConstant { prefix, tail } => {
                (tail.norm() != 0.0).then_some(prefix.len())
            }
            Sequence::Tabulated {
                table,
                difference_limit,
            } => {
                let last = table.len() - 1;
                let end = table[last];
                if difference_limit.norm() == 0.0 {
                    return (end.norm() != 0.0).then_some(last);
                }
                Some(last + (end.norm() / difference_limit.norm()).floor() as usize + 1)
            }
        }
    }

    /// Power-law sequences with positive scale are real and positive.
    pub fn is_power_law(&self) -> bool {
        matches!(self, Sequence::PowerLaw { scale, .. } if *scale > 0.0)
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            Sequence::PowerLaw { exponent, .. } => Some(*exponent),
            _ => None,
        }
    }

    pub fn power_scale(&self) -> Option<f64> {
        match self {
            Sequence::PowerLaw { scale, .. } => Some(*scale),
            _ => None,
        }
    }
}

/// `alpha(k) = beta(k) mu(k+1) / mu(k)`, evaluated lazily.
#[derive(Clone, Debug)]
pub struct Alpha {
    beta: Sequence,
    mu: Sequence,
}

impl Alpha {
    pub fn at(&self, k: usize) -> C64 {
        self.beta.at(k) * self.mu.at(k + 1) / self.mu.at(k)
    }

    pub fn beta(&self) -> &Sequence {
        &self.beta
    }

    pub fn mu(&self) -> &Sequence {
        &self.mu
    }
}

/// Builds `alpha` from `beta` and `mu`, probing `mu` on `[0, probe]` for
/// zeros (and using its closed form beyond when available).
pub fn alpha_from(beta: &Sequence, mu: &Sequence, probe: usize) -> Result<Alpha> {
    let scan_to = match mu.nonvanishing_beyond() {
        Some(k0) => probe.max(k0) + 1,
        None => {
            return Err(Error::SingularSymbol {
                what: "mu",
                k: mu.settled_after().unwrap_or(0),
            })
        }
    };
    if let Some(k) = (0..=scan_to).find(|&k| mu.at(k).norm() == 0.0) {
        return Err(Error::SingularSymbol { what: "mu", k });
    }
    Ok(Alpha {
        beta: beta.clone(),
        mu: mu.clone(),
    })
}

/// Serde helpers: a complex scalar is written as a plain number when real
/// and as `[re, im]` otherwise.
pub mod scalar {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair([f64; 2]),
    }

    impl From<C64> for Repr {
        fn from(z: C64) -> Self {
            if z.im == 0.0 {
                Repr::Real(z.re)
            } else {
                Repr::Pair([z.re, z.im])
            }
        }
    }

    impl From<Repr> for C64 {
        fn from(r: Repr) -> Self {
            match r {
                Repr::Real(x) => C64::new(x, 0.0),
                Repr::Pair([re, im]) => C64::new(re, im),
            }
        }
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        Repr::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Repr::deserialize(d).map(C64::from)
    }

    pub mod vec {
        use super::{Repr, C64};
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|z| Repr::from(*z)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
            Ok(Vec::<Repr>::deserialize(d)?
                .into_iter()
                .map(C64::from)
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn power_law_mu_is_one_at_origin() {
        let mu = Sequence::power_law(-3.0, 1.0);
        assert_eq!(mu.eval(0).unwrap(), re(1.0));
    }

    #[test]
    fn affine_beta() {
        let beta = Sequence::affine(1.0, 1.0);
        assert_eq!(beta.eval(4).unwrap(), re(5.0));
        assert_eq!(beta.difference_limit(), Some(re(1.0)));
    }

    #[test]
    fn weight_ratio_closed_form() {
        let w = Sequence::power_law(-5.5, 0.37);
        let ratio = w.at(3) / w.at(0);
        assert!((ratio.re - 4f64.powf(-5.5)).abs() < 1e-15);
    }

    #[test]
    fn negative_index_rejected() {
        let s = Sequence::affine(1.0, 0.0);
        assert_eq!(s.eval(-1), Err(Error::NegativeIndex(-1)));
    }

    #[test]
    fn eventually_constant_tail() {
        let s = Sequence::eventually_constant(vec![re(2.0), re(3.0)], re(-1.0));
        assert_eq!(s.at(1), re(3.0));
        assert_eq!(s.at(2), re(-1.0));
        assert_eq!(s.at(1000), re(-1.0));
        assert_eq!(s.settled_after(), Some(2));
        assert_eq!(s.limit(), Some(re(-1.0)));
    }

    #[test]
    fn tabulated_extends_linearly() {
        let s = Sequence::tabulated(vec![re(1.0), re(5.0)], re(2.0)).unwrap();
        assert_eq!(s.at(1), re(5.0));
        assert_eq!(s.at(4), re(11.0));
        assert_eq!(s.difference_limit(), Some(re(2.0)));
        assert!(Sequence::tabulated(vec![], re(0.0)).is_err());
    }

    #[test]
    fn alpha_at_origin() {
        let beta = Sequence::affine(1.0, 1.0);
        let mu = Sequence::power_law(-3.0, 1.0);
        let alpha = alpha_from(&beta, &mu, 100).unwrap();
        assert!((alpha.at(0) - re(0.125)).norm() < 1e-15);
    }

    #[test]
    fn unit_mu_gives_alpha_equal_beta() {
        let beta = Sequence::affine(1.0, 1.0);
        let mu = Sequence::constant(re(1.0));
        let alpha = alpha_from(&beta, &mu, 100).unwrap();
        for k in 0..50 {
            assert_eq!(alpha.at(k), beta.at(k));
        }
    }

    #[test]
    fn alpha_minus_beta_tends_to_minus_b() {
        // (1+k)[((1+k)/(2+k))^3 - 1] -> -3; the correction is O(1/k).
        let beta = Sequence::affine(1.0, 1.0);
        let mu = Sequence::power_law(-3.0, 1.0);
        let alpha = alpha_from(&beta, &mu, 10).unwrap();
        let diffs: Vec<f64> = [1_000usize, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&k| (alpha.at(k) - beta.at(k)).re)
            .collect();
        for w in diffs.windows(2) {
            assert!((w[1] + 3.0).abs() < (w[0] + 3.0).abs());
        }
        // Richardson step on the last two horizons removes the 1/k term.
        let extrapolated = (10.0 * diffs[3] - diffs[2]) / 9.0;
        assert!((extrapolated + 3.0).abs() < 1e-9, "{extrapolated}");
    }

    #[test]
    fn alpha_identity_is_exact() {
        let beta = Sequence::affine(1.0, 1.0);
        let mu = Sequence::power_law(-3.0, 1.0);
        let alpha = alpha_from(&beta, &mu, 10).unwrap();
        for k in 0..200 {
            let lhs = beta.at(k) * mu.at(k + 1);
            let rhs = alpha.at(k) * mu.at(k);
            assert!((lhs - rhs).norm() <= 1e-15 * lhs.norm());
        }
    }

    #[test]
    fn vanishing_mu_is_singular() {
        let beta = Sequence::affine(1.0, 1.0);
        let mu = Sequence::eventually_constant(vec![re(1.0), re(2.0), re(0.0)], re(1.0));
        assert_eq!(
            alpha_from(&beta, &mu, 10).unwrap_err(),
            Error::SingularSymbol { what: "mu", k: 2 }
        );
    }

    #[test]
    fn scalar_serde_roundtrip() {
        let s = Sequence::Tabulated {
            table: vec![re(1.0), C64::new(0.5, -2.0)],
            difference_limit: re(1.0),
        };
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("[0.5,-2.0]"), "{text}");
        assert!(text.contains("\"kind\":\"tabulated\""), "{text}");
        let back: Sequence = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
