use serde::Serialize;

use super::series::{power_tail_bound, zeta_shifted, SeriesOptions, SeriesVerdict};
use super::{Sequence, C64};
use crate::error::{Error, Result};

/// A strictly positive weight normalized to total mass one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSequence {
    base: Sequence,
    normalization: f64,
    /// Absolute error of `sum_k w(k) = 1` incurred by the normalization.
    normalization_error: f64,
}

impl WeightSequence {
    pub fn at(&self, k: usize) -> f64 {
        self.normalization * self.base.at(k).re
    }

    pub fn ln_at(&self, k: usize) -> f64 {
        self.normalization.ln() + self.base.ln_abs(k)
    }

    /// The shifted weight `k -> w(k - shift)`; callers only evaluate it
    /// where `k - shift >= 0`.
    pub fn shifted(&self, k: usize, shift: i64) -> f64 {
        let idx = k as i64 - shift;
        assert!(idx >= 0, "shifted weight evaluated at k - m = {idx} < 0");
        self.at(idx as usize)
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn normalization_error(&self) -> f64 {
        self.normalization_error
    }

    pub fn base(&self) -> &Sequence {
        &self.base
    }

    /// `w(k) = w(0) (1+k)^-p` for power-law weights.
    pub fn power_decay(&self) -> Option<f64> {
        self.base.power_exponent().map(|e| -e)
    }

    /// Upper bound on `sum_{k > K} w(k)`.
    pub fn tail_mass_bound(&self, horizon: usize) -> f64 {
        match self.base {
            Sequence::PowerLaw { exponent, scale } => {
                self.normalization * scale * power_tail_bound(exponent, horizon)
            }
            _ => {
                let partial: f64 = (0..=horizon).map(|k| self.at(k)).sum();
                (1.0 - partial).max(0.0) + self.normalization_error
            }
        }
    }

    /// `sum_{k <= K} w(k)`.
    pub fn partial_mass(&self, horizon: usize) -> f64 {
        (0..=horizon).rev().map(|k| self.at(k)).sum()
    }
}

/// Normalizes a strictly positive summable sequence to a probability weight.
///
/// Power laws `(1+k)^-p` are summed exactly up to an Euler-Maclaurin tail
/// with relative accuracy `tol`. Other kinds are accepted only if they are
/// positive and pass the numeric convergence test; with the closed-form
/// kinds available (affine, eventually constant, tabulated-linear) that
/// never happens, so they are rejected with the first nonpositive index or
/// a divergence error.
pub fn normalize_weight(raw: &Sequence, tol: f64) -> Result<WeightSequence> {
    match raw {
        Sequence::PowerLaw { exponent, scale } => {
            if *scale <= 0.0 {
                return Err(Error::NotPositive { k: 0 });
            }
            let p = -exponent;
            if p <= 1.0 {
                return Err(Error::Divergent(format!(
                    "sum of (1+k)^{exponent} diverges (need exponent < -1)"
                )));
            }
            let (z, err) = zeta_shifted(p, tol);
            let total = scale * z;
            Ok(WeightSequence {
                base: raw.clone(),
                normalization: 1.0 / total,
                normalization_error: err / z,
            })
        }
        _ => {
            check_positive(raw)?;
            let verdict = crate::sequences::series::analyze_log_series(
                |k| raw.ln_abs(k),
                SeriesOptions::default(),
            );
            match verdict {
                SeriesVerdict::Convergent {
                    partial,
                    tail_bound,
                    ..
                } => Ok(WeightSequence {
                    base: raw.clone(),
                    normalization: 1.0 / (partial + 0.5 * tail_bound),
                    normalization_error: 0.5 * tail_bound / partial,
                }),
                other => Err(Error::Divergent(format!(
                    "weight is not summable: {other:?}"
                ))),
            }
        }
    }
}

fn check_positive(raw: &Sequence) -> Result<()> {
    let positive = |z: C64| z.im == 0.0 && z.re > 0.0;
    let scan_to = match raw {
        Sequence::EventuallyConstant { prefix, .. } => prefix.len() + 1,
        Sequence::Tabulated { table, .. } => table.len() + 1,
        _ => 1,
    };
    if let Some(k) = (0..=scan_to).find(|&k| !positive(raw.at(k))) {
        return Err(Error::NotPositive { k });
    }
    // Past the scanned prefix the value is affine in k with a known slope.
    let slope = raw.difference_limit().unwrap_or_default();
    if slope.im != 0.0 || slope.re < 0.0 {
        // Eventually leaves the positive half-line; find the witness.
        let start = raw.at(scan_to);
        let k = scan_to + (start.re / -slope.re.min(-f64::MIN_POSITIVE)).floor() as usize + 1;
        return Err(Error::NotPositive { k });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basel_normalization() {
        let w = normalize_weight(&Sequence::power_law(-2.0, 1.0), 1e-12).unwrap();
        assert!((w.normalization() - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!((w.at(0) - 0.607_927_101_854_026_6).abs() < 1e-12);
    }

    #[test]
    fn normalized_mass_is_one() {
        for &p in &[1.5, 2.0, 4.0, 5.5, 9.0] {
            let tol = 1e-10;
            let w = normalize_weight(&Sequence::power_law(-p, 3.0), tol).unwrap();
            let horizon = 200_000;
            let total = w.partial_mass(horizon) + w.tail_mass_bound(horizon);
            assert!(total >= 1.0 - tol, "p={p} total={total}");
            // The integral tail over-estimates by at most (1+K)^-p.
            let slack = w.normalization() * 3.0 * (1.0 + horizon as f64).powf(-p);
            assert!(total - 1.0 <= slack + tol, "p={p} total={total}");
        }
    }

    #[test]
    fn nonpositive_rejected() {
        let raw = Sequence::eventually_constant(vec![C64::new(1.0, 0.0)], C64::new(0.0, 0.0));
        assert_eq!(normalize_weight(&raw, 1e-10), Err(Error::NotPositive { k: 1 }));
        let neg = Sequence::power_law(-2.0, -1.0);
        assert!(matches!(normalize_weight(&neg, 1e-10), Err(Error::NotPositive { .. })));
        let falling = Sequence::affine(-1.0, 3.5);
        assert_eq!(normalize_weight(&falling, 1e-10), Err(Error::NotPositive { k: 4 }));
    }

    #[test]
    fn harmonic_diverges() {
        let raw = Sequence::power_law(-1.0, 1.0);
        assert!(matches!(normalize_weight(&raw, 1e-10), Err(Error::Divergent(_))));
        let flat = Sequence::constant(C64::new(0.5, 0.0));
        assert!(matches!(normalize_weight(&flat, 1e-10), Err(Error::Divergent(_))));
    }
}
