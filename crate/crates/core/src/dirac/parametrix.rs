use serde::Serialize;

use super::TripleData;
use crate::error::{Error, Result};
use crate::sequences::series::{
    analyze_log_series, power_tail_bound, LogSum, PowerEnvelope, SeriesOptions, SeriesVerdict,
};
use crate::sequences::C64;

/// `ln |prod|` and the phase of `beta(start) ... beta(start + count - 1)`.
fn beta_product(data: &TripleData, start: usize, count: usize) -> (f64, f64) {
    (start..start + count).fold((0.0, 0.0), |(l, p), i| {
        let b = data.beta().at(i);
        (l + b.norm().ln(), p + b.arg())
    })
}

fn mu_log(data: &TripleData, k: usize) -> (f64, f64) {
    (data.mu().ln_abs(k), data.mu().at(k).arg())
}

fn from_log((ln, phase): (f64, f64)) -> C64 {
    if ln == f64::NEG_INFINITY {
        return C64::new(0.0, 0.0);
    }
    C64::from_polar(ln.exp(), phase)
}

/// `h^(n)(k) = beta(k) ... beta(k+n-1) / mu(k)`, the formal kernel of `D_n`.
#[derive(Clone, Copy, Debug)]
pub struct KernelVector<'a> {
    data: &'a TripleData,
    n: usize,
}

impl<'a> KernelVector<'a> {
    pub fn new(data: &'a TripleData, n: usize) -> Self {
        Self { data, n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ln_at(&self, k: usize) -> (f64, f64) {
        let (lb, pb) = beta_product(self.data, k, self.n);
        let (lm, pm) = mu_log(self.data, k);
        (lb - lm, pb - pm)
    }

    pub fn at(&self, k: usize) -> C64 {
        from_log(self.ln_at(k))
    }

    pub fn values(&self, len: usize) -> Vec<C64> {
        (0..len).map(|k| self.at(k)).collect()
    }

    /// Whether `h^(n)` lies in `l^2_w`, with the partial-sum evidence.
    pub fn membership(&self) -> KernelMembership {
        let verdict = match self.data.family() {
            Some(fam) => family_membership(self, fam.kernel_exponent(self.n), fam.predicted_n()),
            None => analyze_log_series(
                |k| 2.0 * self.ln_at(k).0 + self.data.w().ln_at(k),
                SeriesOptions::default(),
            ),
        };
        KernelMembership {
            mode: self.n,
            verdict,
        }
    }
}

const MEMBERSHIP_HORIZON: usize = 100_000;

fn family_membership(h: &KernelVector<'_>, exponent: f64, big_n: usize) -> SeriesVerdict {
    let w = h.data.w();
    let ln_term = |k: usize| 2.0 * h.ln_at(k).0 + w.ln_at(k);
    let mut acc = LogSum::default();
    let mut checkpoints = Vec::new();
    for k in 0..=MEMBERSHIP_HORIZON {
        acc.add(ln_term(k));
        if k == 1000 || k == 10_000 || k == MEMBERSHIP_HORIZON {
            checkpoints.push((k, acc.value()));
        }
    }
    if h.n < big_n {
        // |h(k)|^2 w(k) <= w(0) (1+k)^e (1 + (n-1)/(1+K))^(2n) for k > K
        let n = h.n as f64;
        let horizon = MEMBERSHIP_HORIZON;
        let stretch = (1.0 + (n - 1.0).max(0.0) / (1.0 + horizon as f64)).powf(2.0 * n);
        let tail = w.at(0) * stretch * power_tail_bound(exponent, horizon);
        SeriesVerdict::Convergent {
            partial: acc.value(),
            tail_bound: tail,
            horizon,
            exponent,
        }
    } else {
        SeriesVerdict::Divergent {
            exponent,
            partial_sums: checkpoints,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelMembership {
    pub mode: usize,
    pub verdict: SeriesVerdict,
}

impl KernelMembership {
    /// `Some(true)` when `h^(n)` is square summable, `None` if undecided.
    pub fn in_space(&self) -> Option<bool> {
        match self.verdict {
            SeriesVerdict::Convergent { .. } => Some(true),
            SeriesVerdict::Divergent { .. } => Some(false),
            SeriesVerdict::Inconclusive { .. } => None,
        }
    }
}

impl TripleData {
    pub fn kernel_vector(&self, n: usize) -> KernelVector<'_> {
        KernelVector::new(self, n)
    }

    pub fn kernel_membership(&self, n: usize) -> KernelMembership {
        self.kernel_vector(n).membership()
    }

    /// `N`: the number of modes `n >= 0` whose kernel vector is square
    /// summable, read off the convergence verdicts.
    pub fn kernel_count(&self) -> Result<usize> {
        for n in 0..64 {
            match self.kernel_membership(n).in_space() {
                Some(true) => continue,
                Some(false) => return Ok(n),
                None => return Err(Error::CannotBound),
            }
        }
        Err(Error::CannotBound)
    }

    pub fn parametrix(&self, n: i64, big_n: usize) -> Result<ModeParametrix<'_>> {
        ModeParametrix::new(self, n, big_n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `n >= N`: upper-triangular two-sided inverse.
    Inverse,
    /// `0 <= n < N`: upper-triangular inverse corrected by a rank-one term.
    Corrected,
    /// `n < 0`: lower-triangular two-sided inverse.
    Lower,
}

/// `Q_n`, with kernel factorized as `left(k) right(j)` on its triangle.
#[derive(Clone, Copy, Debug)]
pub struct ModeParametrix<'a> {
    data: &'a TripleData,
    n: i64,
    regime: Regime,
}

impl<'a> ModeParametrix<'a> {
    pub fn new(data: &'a TripleData, n: i64, big_n: usize) -> Result<Self> {
        data.check_beta_nonvanishing(4096)?;
        let regime = if n < 0 {
            Regime::Lower
        } else if n as usize >= big_n {
            Regime::Inverse
        } else {
            Regime::Corrected
        };
        Ok(Self { data, n, regime })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    fn m(&self) -> usize {
        self.n.unsigned_abs() as usize
    }

    /// Row factor: `h^(n)(k)` for `n >= 0`,
    /// `1 / (beta(k) ... beta(k+m-1) mu(k+m))` for `n = -m < 0`.
    fn left_log(&self, k: usize) -> (f64, f64) {
        match self.regime {
            Regime::Lower => {
                let m = self.m();
                let (lb, pb) = beta_product(self.data, k, m);
                let (lm, pm) = mu_log(self.data, k + m);
                (-lb - lm, -pb - pm)
            }
            _ => KernelVector::new(self.data, self.n as usize).ln_at(k),
        }
    }

    /// Column factor: `mu(j) / (beta(j) ... beta(j+n))` for `n >= 0`,
    /// `beta(j) ... beta(j+m-2) mu(j+m-1)` for `n = -m < 0`.
    fn right_log(&self, j: usize) -> (f64, f64) {
        match self.regime {
            Regime::Lower => {
                let m = self.m();
                let (lb, pb) = beta_product(self.data, j, m - 1);
                let (lm, pm) = mu_log(self.data, j + m - 1);
                (lb + lm, pb + pm)
            }
            _ => {
                let (lb, pb) = beta_product(self.data, j, self.n as usize + 1);
                let (lm, pm) = mu_log(self.data, j);
                (lm - lb, pm - pb)
            }
        }
    }

    /// `Q~_n`, the upper-triangular inverse formula without the rank-one
    /// correction. Its compressions invert the square truncations of `D_n`
    /// for every `n >= 0`.
    pub fn upper_inverse(&self) -> Self {
        assert!(self.n >= 0);
        Self {
            regime: Regime::Inverse,
            ..*self
        }
    }

    /// Kernel entry `Q_n(k, j)`.
    pub fn entry(&self, k: usize, j: usize) -> C64 {
        let inside = match self.regime {
            Regime::Inverse => j >= k,
            Regime::Corrected => j < k,
            Regime::Lower => j <= k,
        };
        if !inside {
            return C64::new(0.0, 0.0);
        }
        let (a, p) = self.left_log(k);
        let (b, q) = self.right_log(j);
        let v = from_log((a + b, p + q));
        if self.regime == Regime::Corrected {
            -v
        } else {
            v
        }
    }

    /// `Q_n g` on `[0, len)`. The sums are finite for finitely supported `g`.
    pub fn apply(&self, g: &[C64], len: usize) -> Vec<C64> {
        (0..len)
            .map(|k| {
                let range = match self.regime {
                    Regime::Inverse => k..g.len(),
                    Regime::Corrected => 0..k.min(g.len()),
                    Regime::Lower => 0..(k + 1).min(g.len()),
                };
                range.map(|j| self.entry(k, j) * g[j]).sum()
            })
            .collect()
    }

    /// The corrected parametrix in its defining form
    /// `Q~ g(k) - Q~ g(0) / (beta(0) ... beta(n-1)) h^(n)(k)`.
    pub fn apply_as_correction(&self, g: &[C64], len: usize) -> Vec<C64> {
        assert_eq!(self.regime, Regime::Corrected);
        let inverse = Self {
            regime: Regime::Inverse,
            ..*self
        };
        let tilde = inverse.apply(g, len.max(1));
        let scale = tilde[0] / from_log(beta_product(self.data, 0, self.n as usize));
        let h = KernelVector::new(self.data, self.n as usize);
        (0..len).map(|k| tilde[k] - scale * h.at(k)).collect()
    }

    /// `C_n f = f(0) / (beta(0) ... beta(n-1)) h^(n)`, zero outside the
    /// corrected regime.
    pub fn defect(&self, f: &[C64], len: usize) -> Vec<C64> {
        let zero = C64::new(0.0, 0.0);
        if self.regime != Regime::Corrected || f.is_empty() {
            return vec![zero; len];
        }
        let scale = f[0] / from_log(beta_product(self.data, 0, self.n as usize));
        let h = KernelVector::new(self.data, self.n as usize);
        (0..len).map(|k| scale * h.at(k)).collect()
    }

    /// Rank of the defect operator.
    pub fn defect_rank(&self) -> usize {
        usize::from(self.regime == Regime::Corrected)
    }

    /// Hilbert-Schmidt norm of `Q_n` as an operator from the codomain space
    /// of `D_n` back to its domain space.
    pub fn hs_norm(&self, tol: f64) -> HsNorm {
        hs_norm(self, tol, HS_MAX_HORIZON)
    }

    pub fn hs_norm_with_horizon(&self, tol: f64, max_horizon: usize) -> HsNorm {
        hs_norm(self, tol, max_horizon)
    }
}

const HS_MAX_HORIZON: usize = 1 << 20;
const HS_MIN_HORIZON: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HsStatus {
    /// Tail bounded in closed form.
    Certified,
    /// Tail estimated from the local decay exponent of the terms.
    Estimated,
    Divergent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HsNorm {
    pub mode: i64,
    /// `sqrt` of the partial double sum.
    pub value: f64,
    /// `sqrt(partial + tail)`.
    pub upper: f64,
    /// Bound on the omitted part of `||Q_n||_HS^2`.
    pub tail_bound: f64,
    pub horizon: usize,
    pub status: HsStatus,
}

impl HsNorm {
    pub fn is_finite(&self) -> bool {
        self.status != HsStatus::Divergent && self.upper.is_finite()
    }
}

/// Terms of the HS double sum, organized so that each outer term is a
/// row/column weight times a running inner sum:
/// `Inverse`: sum_j |R(j)|^2/w'(j) sum_{k<=j} |L(k)|^2 w(k);
/// `Corrected`: sum_k |L(k)|^2 w(k) sum_{j<k} |R(j)|^2/w'(j);
/// `Lower`: sum_k |L(k)|^2 w(k+m) sum_{j<=k} |R(j)|^2/w'(j+m-1).
/// Logs are advanced by recurrences so each step costs O(1).
fn hs_norm(q: &ModeParametrix<'_>, tol: f64, max_horizon: usize) -> HsNorm {
    let d = q.data;
    let (lb, lm) = (|i: usize| d.beta().ln_abs(i), |i: usize| d.mu().ln_abs(i));
    let m = q.m();
    let n = q.n.max(0) as usize;
    let mut left = q.left_log(0).0;
    let mut right = q.right_log(0).0;
    let mut inner = LogSum::default();
    let mut outer = LogSum::default();
    let (mut mid_term, mut end_term) = (f64::NAN, f64::NAN);
    let mut k = 0usize;
    let mut checkpoint = HS_MIN_HORIZON;
    loop {
        let term = match q.regime {
            Regime::Inverse => {
                inner.add(2.0 * left + d.w().ln_at(k));
                2.0 * right - d.w_prime().ln_at(k) + inner.ln()
            }
            Regime::Corrected => {
                let t = 2.0 * left + d.w().ln_at(k) + inner.ln();
                inner.add(2.0 * right - d.w_prime().ln_at(k));
                t
            }
            Regime::Lower => {
                inner.add(2.0 * right - d.w_prime().ln_at(k + m - 1));
                2.0 * left + d.w().ln_at(k + m) + inner.ln()
            }
        };
        outer.add(term);
        if k + 1 == checkpoint / 2 {
            mid_term = term;
        } else if k + 1 == checkpoint {
            end_term = term;
        }
        // advance the factor logs to k + 1
        match q.regime {
            Regime::Lower => {
                left += lb(k) - lb(k + m) + lm(k + m) - lm(k + m + 1);
                right += lb(k + m - 1) - lb(k) + lm(k + m) - lm(k + m - 1);
            }
            _ => {
                left += lb(k + n) - lb(k) + lm(k) - lm(k + 1);
                right += lm(k + 1) - lm(k) + lb(k) - lb(k + n + 1);
            }
        }
        k += 1;
        if k == checkpoint {
            let horizon = k - 1;
            let partial = outer.value();
            let (tail, status) = match d.family() {
                Some(fam) => (family_tail(q, fam.a, fam.b, fam.c, horizon), HsStatus::Certified),
                None => estimated_tail(mid_term, end_term, horizon),
            };
            let done = tail <= tol * partial || k >= max_horizon || status == HsStatus::Divergent;
            if done {
                return HsNorm {
                    mode: q.n,
                    value: partial.sqrt(),
                    upper: (partial + tail).sqrt(),
                    tail_bound: tail,
                    horizon,
                    status,
                };
            }
            checkpoint *= 2;
            mid_term = end_term;
        }
    }
}

/// Closed-form bound on `sum_{outer > K}` for the power-law family, using
/// `beta(k) = 1+k`, `mu(k) = (1+k)^-b`, `w = w0 (1+k)^-c`, `w' = w0' (1+k)^-a`.
fn family_tail(q: &ModeParametrix<'_>, a: f64, b: f64, c: f64, horizon: usize) -> f64 {
    let ratio = q.data.w().at(0) / q.data.w_prime().at(0);
    match q.regime {
        // product ratios are <= 1, leaving 1/(1+j+n)^2 <= (1+j)^-2
        Regime::Inverse => PowerEnvelope::partial_sums(2.0 * b - c)
            .times(ratio, a - 2.0 * b - 2.0)
            .tail(horizon),
        // product ratios are <= ((1+k)/(1+j))^n
        Regime::Corrected => {
            let n = q.n as f64;
            PowerEnvelope::partial_sums(a - 2.0 * b - 2.0 * n - 2.0)
                .times(ratio, 2.0 * n + 2.0 * b - c)
                .tail(horizon)
        }
        Regime::Lower => {
            // In k' = k + m > K the inner sum is bounded either by
            // zeta(2b - a) or, keeping the product ratio
            // ((j'-1)/(k'-1))^(2m-2), by (k'-1)^-(2m-2) sum_{j'<=k'} j'^(s')
            // with s' = 2m - 2 + a - 2b; (k'-1)/(1+k') >= 1 - 2/(K+1).
            let m = q.m() as f64;
            let shift = q.m() + horizon;
            let stretch = (1.0 - 2.0 / (horizon as f64 + 1.0)).powf(-2.0 * m);
            let s_prime = 2.0 * m - 2.0 + a - 2.0 * b;
            let env = if s_prime > -1.0 {
                PowerEnvelope::partial_sums(s_prime).times(ratio * stretch, 2.0 * b - c - 2.0 - (2.0 * m - 2.0))
            } else {
                let zeta = 1.0 + 1.0 / (2.0 * b - a - 1.0);
                PowerEnvelope::new(ratio * stretch * zeta, 2.0 * b - c - 2.0)
            };
            env.tail(shift)
        }
    }
}

/// Tail estimate from the decay of the last outer terms, for sequences
/// without a closed form.
fn estimated_tail(t_half: f64, t_end: f64, horizon: usize) -> (f64, HsStatus) {
    let e = (t_end - t_half) / std::f64::consts::LN_2;
    if !e.is_finite() || e >= -1.02 {
        return (f64::INFINITY, HsStatus::Divergent);
    }
    // halfway envelope through the last term
    let q = 0.5 * (e - 1.0);
    let tail = t_end.exp() * (1.0 + horizon as f64) / (-q - 1.0);
    (tail, HsStatus::Estimated)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{data, random_coeffs};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn kernel_vector_closed_forms() {
        let d = data(5.5);
        let h0 = d.kernel_vector(0);
        assert!((h0.at(2) - re(27.0)).norm() < 1e-12);
        let h1 = d.kernel_vector(1);
        for k in 0..20 {
            assert!((h1.at(k) - re((1.0 + k as f64).powi(4))).norm() < 1e-9 * (1.0 + k as f64).powi(4));
        }
        for n in 0..6 {
            let h = d.kernel_vector(n).values(30);
            let out = d.mode(n as i64).apply(&h);
            for (k, v) in out.iter().enumerate().take(29) {
                assert!(v.norm() <= 1e-12 * h[k + 1].norm() * (k + n + 2) as f64, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn membership_examples() {
        let d9 = data(9.0);
        assert_eq!(d9.kernel_membership(0).in_space(), Some(true));
        assert_eq!(d9.kernel_membership(1).in_space(), Some(false));
        assert_eq!(data(5.5).kernel_membership(0).in_space(), Some(false));
        assert_eq!(d9.kernel_count().unwrap(), 1);
        assert_eq!(data(10.0).kernel_count().unwrap(), 2);
    }

    #[test]
    fn membership_bound_is_certified() {
        let d = data(12.0);
        for n in 0..2 {
            let SeriesVerdict::Convergent { partial, tail_bound, .. } = d.kernel_membership(n).verdict else {
                panic!("mode {n} should converge");
            };
            let h = d.kernel_vector(n);
            let longer: f64 = (0..1_000_000).rev().map(|k| h.at(k).norm_sqr() * d.w().at(k)).sum();
            assert!(longer >= partial * (1.0 - 1e-12));
            assert!(longer <= (partial + tail_bound) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn parametrix_examples() {
        let d = data(5.5);
        let q0 = d.parametrix(0, 0).unwrap();
        assert_eq!(q0.regime(), Regime::Inverse);
        let g = vec![re(1.0)];
        assert!((q0.apply(&g, 1)[0] - re(1.0)).norm() < 1e-15);
        let back = d.mode(0).apply(&q0.apply(&g, 1));
        assert!((back[0] - re(1.0)).norm() < 1e-15);

        let qm = d.parametrix(-1, 0).unwrap();
        for j in 0..2 {
            let mut g = vec![re(0.0); j + 1];
            g[j] = re(1.0);
            let qg = qm.apply(&g, 12);
            let out = d.mode(-1).apply(&qg);
            for (k, v) in out.iter().enumerate().take(12) {
                let want = if k == j { 1.0 } else { 0.0 };
                let scale = 1.0 + (d.alpha(k) * qg[k]).norm();
                assert!((v - re(want)).norm() < 1e-14 * scale);
            }
        }

        let d9 = data(9.0);
        let qc = d9.parametrix(0, 1).unwrap();
        assert_eq!(qc.regime(), Regime::Corrected);
        let f = vec![re(2.0), re(-1.0), re(0.5)];
        let qdf = qc.apply(&d9.mode(0).apply(&f), 10);
        let h = d9.kernel_vector(0);
        for (k, got) in qdf.iter().enumerate() {
            let want = f.get(k).copied().unwrap_or_default() - f[0] * h.at(k);
            assert!((got - want).norm() < 1e-12 * h.at(k).norm().max(1.0));
        }
    }

    #[test]
    fn corrected_forms_agree() {
        let d = data(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 0..2 {
            let q = d.parametrix(n, 2).unwrap();
            for _ in 0..10 {
                let len = rng.gen_range(1..10);
                let g = random_coeffs(&mut rng, len);
                let a = q.apply(&g, 15);
                let b = q.apply_as_correction(&g, 15);
                for k in 0..15 {
                    assert!((a[k] - b[k]).norm() <= 1e-10 * a[k].norm().max(b[k].norm()).max(1e-12));
                }
            }
        }
    }

    #[test]
    fn hs_norms_of_power_family() {
        let d = data(5.5);
        // values from an independent float64 evaluation of the double sums
        let reference = [(-10, 0.04425), (-5, 0.1150), (0, 1.1607), (1, 0.6001), (5, 0.2174), (10, 0.1242)];
        for (n, want) in reference {
            let hs = d.parametrix(n, 0).unwrap().hs_norm(1e-8);
            assert_eq!(hs.status, HsStatus::Certified);
            assert!(hs.is_finite());
            assert!((hs.value - want).abs() < 5e-4 * want, "n={n}: {} vs {want}", hs.value);
            assert!(hs.upper >= hs.value);
        }
    }

    #[test]
    fn hs_tail_bound_holds() {
        // a longer horizon must stay inside the certified bound
        let d = data(5.5);
        for n in [-3, -1, 0, 2] {
            let q = d.parametrix(n, 0).unwrap();
            let short = q.hs_norm_with_horizon(0.0, 1 << 12);
            let long = q.hs_norm_with_horizon(0.0, 1 << 16);
            let (s2, l2) = (short.value.powi(2), long.value.powi(2));
            assert!(l2 >= s2 && l2 <= s2 + short.tail_bound, "n={n}");
        }
    }

    #[test]
    fn hs_norm_matches_entrywise_sum() {
        let d = data(9.0);
        for (n, big_n) in [(0, 1), (1, 1), (-2, 1)] {
            let q = d.parametrix(n, big_n).unwrap();
            let op = d.mode(n);
            let horizon = 300;
            let mut direct = 0.0;
            for k in 0..horizon {
                for j in 0..horizon {
                    direct += q.entry(k, j).norm_sqr() * op.domain_weight(k) / op.codomain_weight(j);
                }
            }
            let hs = q.hs_norm(1e-10);
            assert!(direct <= hs.value.powi(2) * (1.0 + 1e-9));
            assert!(hs.value.powi(2) - direct < 1e-3 * direct, "n={n}");
        }
    }
}
