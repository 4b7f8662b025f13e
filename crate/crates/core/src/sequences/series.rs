//! Tail bounds and convergence verdicts for nonnegative series.
//!
//! Closed-form power-law terms get rigorous integral-comparison bounds.
//! Everything else goes through [`analyze_log_series`], which estimates the
//! local growth exponent of the terms and only commits to a verdict when
//! that estimate is stable and clearly on one side of `-1`.

use serde::Serialize;

/// `|s+1|` below this counts as the logarithmic boundary case `s = -1`.
pub const EXPONENT_EPS: f64 = 1e-9;

/// Upper bound for `sum_{j > K} (1+j)^e`, valid for `e < -1`:
/// `(1+K)^(e+1) / (-e-1)`.
pub fn power_tail_bound(e: f64, horizon: usize) -> f64 {
    assert!(e < -1.0, "power tail needs exponent < -1, got {e}");
    (1.0 + horizon as f64).powf(e + 1.0) / (-e - 1.0)
}

/// Upper bound for `sum_{j > K} (1+j)^e (1 + ln(1+j))`, valid for `e < -1`.
pub fn power_log_tail_bound(e: f64, horizon: usize) -> f64 {
    assert!(e < -1.0, "power tail needs exponent < -1, got {e}");
    let x = 1.0 + horizon as f64;
    let q = -e - 1.0;
    x.powf(e + 1.0) * ((1.0 + x.ln()) / q + 1.0 / (q * q))
}

/// `C (1+j)^e`, optionally times `(1 + ln(1+j))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerEnvelope {
    pub coef: f64,
    pub exponent: f64,
    pub log: bool,
}

impl PowerEnvelope {
    pub fn new(coef: f64, exponent: f64) -> Self {
        Self {
            coef,
            exponent,
            log: false,
        }
    }

    pub fn at(&self, j: usize) -> f64 {
        let x = 1.0 + j as f64;
        let base = self.coef * x.powf(self.exponent);
        if self.log {
            base * (1.0 + x.ln())
        } else {
            base
        }
    }

    /// Bound on the partial sums `sum_{k <= j} (1+k)^s` as an envelope in `j`.
    pub fn partial_sums(s: f64) -> Self {
        if (s + 1.0).abs() < EXPONENT_EPS {
            Self {
                coef: 1.0,
                exponent: 0.0,
                log: true,
            }
        } else if s > -1.0 {
            Self::new(1f64.max(1.0 / (s + 1.0)), s + 1.0)
        } else {
            Self::new(1.0 + 1.0 / (-s - 1.0), 0.0)
        }
    }

    pub fn times(self, coef: f64, exponent: f64) -> Self {
        Self {
            coef: self.coef * coef,
            exponent: self.exponent + exponent,
            log: self.log,
        }
    }

    pub fn summable(&self) -> bool {
        self.coef == 0.0 || self.exponent < -1.0 - EXPONENT_EPS
    }

    /// Bound on `sum_{j > K}` of the envelope; infinite when not summable.
    pub fn tail(&self, horizon: usize) -> f64 {
        if self.coef == 0.0 {
            return 0.0;
        }
        if !self.summable() {
            return f64::INFINITY;
        }
        if self.log {
            self.coef * power_log_tail_bound(self.exponent, horizon)
        } else {
            self.coef * power_tail_bound(self.exponent, horizon)
        }
    }
}

/// `sum_{k >= 0} (1+k)^(-p)` for `p > 1`, with an error bound.
///
/// The partial sum runs to a horizon `K` and the remainder is the
/// Euler-Maclaurin expansion through the `f'` term; the error of that
/// expansion is at most `p(p+1)(p+2) (K+2)^(-p-3) / 720` for this completely
/// monotone integrand. `K` doubles until the error is below `rel_tol` times
/// the total.
pub fn zeta_shifted(p: f64, rel_tol: f64) -> (f64, f64) {
    assert!(p > 1.0);
    let mut horizon = 64usize;
    loop {
        let s = (horizon + 2) as f64;
        let err = p * (p + 1.0) * (p + 2.0) * s.powf(-p - 3.0) / 720.0;
        let partial: f64 = (0..=horizon).rev().map(|k| (1.0 + k as f64).powf(-p)).sum();
        let tail = s.powf(1.0 - p) / (p - 1.0) + 0.5 * s.powf(-p) + p * s.powf(-p - 1.0) / 12.0;
        let total = partial + tail;
        if err <= rel_tol * total || horizon >= 1 << 24 {
            return (total, err);
        }
        horizon *= 2;
    }
}

/// Numerically stable accumulation of `ln sum exp(x_i)`.
#[derive(Clone, Copy, Debug)]
pub struct LogSum(f64);

impl Default for LogSum {
    fn default() -> Self {
        LogSum(f64::NEG_INFINITY)
    }
}

impl LogSum {
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if self.0 == f64::NEG_INFINITY {
            self.0 = x;
        } else if x > self.0 {
            self.0 = x + (self.0 - x).exp().ln_1p();
        } else {
            self.0 += (x - self.0).exp().ln_1p();
        }
    }

    pub fn ln(&self) -> f64 {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0.exp()
    }
}

/// Local exponent `e(K) = log2(t(2K) / t(K))` of a term sequence given
/// through `ln t`.
pub fn local_exponent(ln_term: impl Fn(usize) -> f64, k: usize) -> f64 {
    (ln_term(2 * k) - ln_term(k)) / std::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SeriesVerdict {
    /// Partial sum over `[0, horizon]` plus an upper bound for the rest.
    Convergent {
        partial: f64,
        tail_bound: f64,
        horizon: usize,
        exponent: f64,
    },
    /// Terms decay no faster than `(1+k)^-1`.
    Divergent {
        exponent: f64,
        partial_sums: Vec<(usize, f64)>,
    },
    Inconclusive {
        exponent: f64,
        partial_sums: Vec<(usize, f64)>,
    },
}

impl SeriesVerdict {
    pub fn converges(&self) -> bool {
        matches!(self, SeriesVerdict::Convergent { .. })
    }

    pub fn diverges(&self) -> bool {
        matches!(self, SeriesVerdict::Divergent { .. })
    }

    pub fn certified_total(&self) -> Option<f64> {
        match self {
            SeriesVerdict::Convergent {
                partial,
                tail_bound,
                ..
            } => Some(partial + tail_bound),
            _ => None,
        }
    }
}

/// Settings for the numeric convergence analysis.
#[derive(Clone, Copy, Debug)]
pub struct SeriesOptions {
    /// Horizon of the explicit partial sum.
    pub horizon: usize,
    /// Points at which the local exponent is sampled (must be increasing).
    pub probes: [usize; 3],
    /// Exponents within this distance of `-1` are not decided.
    pub margin: f64,
    /// Allowed drift of the exponent between the last two probes.
    pub stability: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            horizon: 100_000,
            probes: [10_000, 1_000_000, 100_000_000],
            margin: 0.02,
            stability: 0.01,
        }
    }
}

/// Convergence analysis of `sum_k t(k)` for terms given by `ln t(k)`.
///
/// The verdict follows the sign of `e + 1` for the local exponent `e` at the
/// largest probe. A convergent verdict carries a tail bound from a power
/// envelope `t(j) <= C (1+j)^q` with `q` halfway between `e` and `-1` and
/// `C` fitted on `[K, 4K]`; this certifies the tail whenever the terms are
/// eventually dominated by that envelope, which holds for every
/// regularly-varying term with exponent `e`.
pub fn analyze_log_series(ln_term: impl Fn(usize) -> f64, opts: SeriesOptions) -> SeriesVerdict {
    let exps: Vec<f64> = opts
        .probes
        .iter()
        .map(|&k| local_exponent(&ln_term, k))
        .collect();
    let e = exps[2];
    let drift = (exps[2] - exps[1]).abs();

    let mut acc = LogSum::default();
    let mut checkpoints = Vec::new();
    let mut next = 1000usize.min(opts.horizon);
    for k in 0..=opts.horizon {
        acc.add(ln_term(k));
        if k == next {
            checkpoints.push((k, acc.value()));
            next = (next * 10).min(opts.horizon);
            if next == k {
                next = usize::MAX;
            }
        }
    }

    if !e.is_finite() || drift > opts.stability {
        return SeriesVerdict::Inconclusive {
            exponent: e,
            partial_sums: checkpoints,
        };
    }
    if e >= -1.0 - EXPONENT_EPS {
        return SeriesVerdict::Divergent {
            exponent: e,
            partial_sums: checkpoints,
        };
    }
    if e > -1.0 - opts.margin {
        return SeriesVerdict::Inconclusive {
            exponent: e,
            partial_sums: checkpoints,
        };
    }
    let q = 0.5 * (e - 1.0);
    let k0 = opts.horizon;
    let coef = (k0..=4 * k0)
        .step_by((k0 / 64).max(1))
        .map(|j| (ln_term(j) - q * (1.0 + j as f64).ln()).exp())
        .fold(0.0, f64::max);
    SeriesVerdict::Convergent {
        partial: acc.value(),
        tail_bound: coef * power_tail_bound(q, k0),
        horizon: k0,
        exponent: e,
    }
}
