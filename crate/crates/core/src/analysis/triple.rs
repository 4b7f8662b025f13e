use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_all, commutator_norm, kernel_dimension, ConditionReport};
use crate::dirac::{HsNorm, ModeOperator, ModeParametrix, Regime, TripleData};
use crate::gns::GnsVector;
use crate::sequences::C64;
use crate::toeplitz::{Symbol, ToeplitzElement};

/// Sizes, windows, tolerances and seed of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub size: usize,
    pub n_min: i64,
    pub n_max: i64,
    pub seed: u64,
    /// Random samples per identity check (and per mode for parametrices).
    pub samples: usize,
    pub identity_tol: f64,
    pub covariance_tol: f64,
    pub parametrix_tol: f64,
    pub stabilization_tol: f64,
    /// Relative accuracy asked of series partial sums.
    pub tail_tol: f64,
    /// Truncation sizes for the commutator stabilization check.
    pub commutator_sizes: Vec<usize>,
    pub commutator_modes: (i64, i64),
    pub grading_size: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            size: 200,
            n_min: -20,
            n_max: 20,
            seed: 0,
            samples: 100,
            identity_tol: 1e-10,
            covariance_tol: 1e-12,
            parametrix_tol: 1e-10,
            stabilization_tol: 1e-6,
            tail_tol: 1e-6,
            commutator_sizes: vec![100, 400],
            commutator_modes: (-2, 2),
            grading_size: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeReport {
    pub n: i64,
    pub regime: Regime,
    /// Largest relative residual of `D_n Q_n g = g`.
    pub dq_residual: f64,
    /// Largest relative residual of `Q_n D_n f = f - C_n f`.
    pub qd_residual: f64,
    pub defect_rank: usize,
    pub hs: HsNorm,
    /// Smallest singular value of the square truncation of `D_n`.
    pub sigma_min: f64,
    /// `1 / ||Q||_HS` for the operator whose compressions invert the
    /// truncations (`Q~_n` in the corrected regime).
    pub sigma_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementResidual {
    pub element: String,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradingReport {
    pub size: usize,
    pub n_min: i64,
    pub n_max: i64,
    /// `max |Gamma D + D Gamma|`.
    pub anticommutator: f64,
    pub self_adjoint_residual: f64,
    /// `max |Gamma pi(a) - pi(a) Gamma|` per element.
    pub algebra: Vec<ElementResidual>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub generator: String,
    pub sizes: Vec<usize>,
    pub norms: Vec<f64>,
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripleReport {
    pub settings: VerifyOptions,
    pub conditions: Vec<ConditionReport>,
    pub kernel_dimension: Option<usize>,
    pub implementation_residual: f64,
    pub covariance_residual: f64,
    pub modes: Vec<ModeReport>,
    /// `max_{|n|>=20} ||Q_n||_HS / max_{|n|<=5} ||Q_n||_HS` when the window
    /// reaches both ranges.
    pub hs_decay_ratio: Option<f64>,
    pub grading: GradingReport,
    pub commutators: Vec<CommutatorReport>,
    pub failures: Vec<String>,
    pub pass: bool,
}

fn random_c64(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_coeffs(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<C64> {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| random_c64(rng)).collect()
}

/// Random element with eventually constant symbols on modes `-2..=2`.
pub(crate) fn random_element(rng: &mut ChaCha8Rng) -> ToeplitzElement {
    let mut a = ToeplitzElement::zero();
    for p in -2..=2 {
        if rng.gen_bool(0.3) {
            continue;
        }
        let prefix_len = rng.gen_range(0..4);
        let prefix = (0..prefix_len).map(|_| random_c64(rng)).collect();
        a = a.add(&ToeplitzElement::monomial(p, Symbol::table(prefix, random_c64(rng))));
    }
    a
}

/// Random finitely supported vector on modes `-3..=3`.
pub(crate) fn random_vector(rng: &mut ChaCha8Rng) -> GnsVector {
    GnsVector::from_modes((-3..=3).filter_map(|n| {
        if rng.gen_bool(0.3) {
            return None;
        }
        Some((n, random_coeffs(rng, 8)))
    }))
}

/// `max |D(af) - a(Df) - d(a) f| / max(|D(af)|, |a Df|, 1)`.
pub fn implementation_residual(data: &TripleData, a: &ToeplitzElement, f: &GnsVector) -> f64 {
    let daf = data.apply_d(&f.act(a));
    let adf = data.apply_d(f).act(a);
    let da_f = f.act(&a.derive(data.beta()));
    let scale = daf.max_abs().max(adf.max_abs()).max(1.0);
    daf.sub(&adf).sub(&da_f).max_abs() / scale
}

/// `max |U_theta D U_theta^-1 f - e^{i theta} D f| / max(|Df|, 1)`.
pub fn covariance_residual(data: &TripleData, f: &GnsVector, theta: f64) -> f64 {
    let lhs = data.apply_d(&f.rotate(-theta)).rotate(theta);
    let df = data.apply_d(f);
    let rhs = df.scale(C64::from_polar(1.0, theta));
    lhs.sub(&rhs).max_abs() / df.max_abs().max(1.0)
}

/// `|Q| g` with entrywise moduli, the scale of rounding in `Q g`.
fn abs_apply(q: &ModeParametrix<'_>, g: &[f64], len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| g.iter().enumerate().map(|(j, x)| q.entry(k, j).norm() * x).sum())
        .collect()
}

fn stencil_abs(op: &ModeOperator<'_>, v: &[f64], k: usize) -> f64 {
    (k.saturating_sub(1)..=k + 1)
        .filter(|&j| j < v.len())
        .map(|j| op.entry(k, j).norm() * v[j])
        .sum()
}

/// Relative residual of `D_n Q_n g = g` on the rows computed exactly.
pub fn dq_residual(op: &ModeOperator<'_>, q: &ModeParametrix<'_>, g: &[C64]) -> f64 {
    let len = g.len() + 8;
    let qg = q.apply(g, len);
    let g_abs: Vec<f64> = g.iter().map(|z| z.norm()).collect();
    let qg_abs = abs_apply(q, &g_abs, len);
    let dqg = op.apply(&qg);
    let rows = if op.n() >= 0 { len - 1 } else { len };
    (0..rows)
        .map(|k| {
            let gk = g.get(k).copied().unwrap_or_default();
            let scale = gk.norm() + stencil_abs(op, &qg_abs, k);
            (dqg[k] - gk).norm() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Relative residual of `Q_n D_n f = f - C_n f`.
pub fn qd_residual(op: &ModeOperator<'_>, q: &ModeParametrix<'_>, f: &[C64]) -> f64 {
    let len = f.len() + 8;
    let df = op.apply(f);
    let f_abs: Vec<f64> = f.iter().map(|z| z.norm()).collect();
    let df_abs: Vec<f64> = (0..df.len()).map(|k| stencil_abs(op, &f_abs, k)).collect();
    let qdf = q.apply(&df, len);
    let qdf_abs = abs_apply(q, &df_abs, len);
    let cf = q.defect(f, len);
    (0..len)
        .map(|k| {
            let fk = f.get(k).copied().unwrap_or_default();
            let want = fk - cf[k];
            let scale = qdf_abs[k] + fk.norm() + cf[k].norm();
            (qdf[k] - want).norm() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

fn mode_seed(seed: u64, n: i64) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn mode_report(data: &TripleData, n: i64, big_n: usize, opts: &VerifyOptions) -> crate::Result<ModeReport> {
    let q = data.parametrix(n, big_n)?;
    let op = data.mode(n);
    let mut rng = ChaCha8Rng::seed_from_u64(mode_seed(opts.seed, n));
    let (mut dq, mut qd) = (0.0f64, 0.0f64);
    for _ in 0..opts.samples {
        let g = random_coeffs(&mut rng, 12);
        dq = dq.max(dq_residual(&op, &q, &g));
        let f = random_coeffs(&mut rng, 12);
        qd = qd.max(qd_residual(&op, &q, &f));
    }
    let hs = q.hs_norm(opts.tail_tol);
    let inverse_hs = if q.regime() == Regime::Corrected {
        q.upper_inverse().hs_norm(opts.tail_tol)
    } else {
        hs
    };
    let sigma_min = op.singular_values(opts.size).last().copied().unwrap_or(0.0);
    Ok(ModeReport {
        n,
        regime: q.regime(),
        dq_residual: dq,
        qd_residual: qd,
        defect_rank: q.defect_rank(),
        hs,
        sigma_min,
        sigma_bound: 1.0 / inverse_hs.upper,
    })
}

/// Per-mode reports, computed on worker threads and returned in mode order.
fn mode_reports(data: &TripleData, big_n: usize, opts: &VerifyOptions) -> Vec<crate::Result<ModeReport>> {
    let modes: Vec<i64> = (opts.n_min..=opts.n_max).collect();
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(modes.len().max(1));
    let chunk = modes.len().div_ceil(workers.max(1)).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = modes
            .chunks(chunk)
            .map(|ns| s.spawn(move || ns.iter().map(|&n| mode_report(data, n, big_n, opts)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("mode worker panicked")).collect()
    })
}

fn grading_report(data: &TripleData, opts: &VerifyOptions) -> GradingReport {
    let (n_min, n_max) = (opts.n_min.max(-2), opts.n_max.min(2).max(opts.n_min.max(-2)));
    let size = opts.grading_size;
    let asm = data.assemble(size, n_min, n_max);
    let elements = [
        ("U", ToeplitzElement::shift()),
        ("U*", ToeplitzElement::shift_adjoint()),
        ("beta(K)", ToeplitzElement::diagonal(Symbol::sequence(data.beta().clone()))),
    ];
    GradingReport {
        size,
        n_min,
        n_max,
        anticommutator: asm.grading_residual(),
        self_adjoint_residual: asm.self_adjoint_residual(),
        algebra: elements
            .iter()
            .map(|(name, a)| ElementResidual {
                element: name.to_string(),
                residual: asm.grading_commutator(&asm.represent(a)),
            })
            .collect(),
    }
}

fn commutator_reports(data: &TripleData, opts: &VerifyOptions) -> Vec<CommutatorReport> {
    let generators = [
        ("U", ToeplitzElement::shift()),
        ("U*", ToeplitzElement::shift_adjoint()),
        ("1", ToeplitzElement::identity()),
    ];
    let (lo, hi) = opts.commutator_modes;
    generators
        .iter()
        .map(|(name, a)| {
            let norms: Vec<f64> = opts
                .commutator_sizes
                .iter()
                .map(|&size| commutator_norm(data, a, size, lo, hi))
                .collect();
            let spread = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - norms.iter().cloned().fold(f64::INFINITY, f64::min);
            CommutatorReport {
                generator: name.to_string(),
                sizes: opts.commutator_sizes.clone(),
                norms,
                spread: spread.max(0.0),
            }
        })
        .collect()
}

fn hs_decay_ratio(modes: &[ModeReport]) -> Option<f64> {
    let max_over = |pred: &dyn Fn(i64) -> bool, f: &dyn Fn(&HsNorm) -> f64| {
        modes
            .iter()
            .filter(|m| pred(m.n))
            .map(|m| f(&m.hs))
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
    };
    let small = max_over(&|n| n.abs() <= 5, &|h| h.value)?;
    let large = max_over(&|n| n.abs() >= 20, &|h| h.upper)?;
    Some(large / small)
}

/// Runs the whole battery: hypotheses, implementation and covariance
/// identities, parametrix identities with defect ranks, HS norms and
/// `sigma_min` bounds per mode, grading, and commutator stabilization.
pub fn verify_triple(data: &TripleData, opts: &VerifyOptions) -> TripleReport {
    let mut failures = Vec::new();
    let conditions = check_all(data, opts.tail_tol);
    for c in &conditions {
        if !c.holds() {
            failures.push(format!("condition {}: {:?}: {}", c.condition.label(), c.verdict, c.detail));
        }
    }
    let kernel_dim = match kernel_dimension(data) {
        Ok(n) => Some(n),
        Err(e) => {
            failures.push(format!("kernel dimension: {e}"));
            None
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut implementation = 0.0f64;
    for i in 0..opts.samples {
        let (a, f) = (random_element(&mut rng), random_vector(&mut rng));
        let r = implementation_residual(data, &a, &f);
        if r > opts.identity_tol && implementation <= opts.identity_tol {
            failures.push(format!("implementation identity: sample {i} residual {r:.3e}"));
        }
        implementation = implementation.max(r);
    }
    let mut covariance = 0.0f64;
    let thetas = [std::f64::consts::PI / 7.0, 1.0, 2.0 * std::f64::consts::PI / 3.0];
    for i in 0..opts.samples {
        let f = random_vector(&mut rng);
        for theta in thetas {
            let r = covariance_residual(data, &f, theta);
            if r > opts.covariance_tol && covariance <= opts.covariance_tol {
                failures.push(format!("covariance: sample {i}, theta {theta:.6}, residual {r:.3e}"));
            }
            covariance = covariance.max(r);
        }
    }

    let mut modes = Vec::new();
    if let Some(big_n) = kernel_dim {
        for result in mode_reports(data, big_n, opts) {
            match result {
                Ok(m) => {
                    if m.dq_residual > opts.parametrix_tol {
                        failures.push(format!("mode {}: D_n Q_n residual {:.3e}", m.n, m.dq_residual));
                    }
                    if m.qd_residual > opts.parametrix_tol {
                        failures.push(format!("mode {}: Q_n D_n residual {:.3e}", m.n, m.qd_residual));
                    }
                    let rank_ok = match m.regime {
                        Regime::Corrected => m.defect_rank <= 1,
                        _ => m.defect_rank == 0,
                    };
                    if !rank_ok {
                        failures.push(format!("mode {}: defect rank {}", m.n, m.defect_rank));
                    }
                    if !m.hs.is_finite() {
                        failures.push(format!("mode {}: Hilbert-Schmidt norm not finite", m.n));
                    }
                    if m.sigma_min < m.sigma_bound * (1.0 - 1e-9) {
                        failures.push(format!(
                            "mode {}: sigma_min {:.6e} below 1/||Q||_HS = {:.6e}",
                            m.n, m.sigma_min, m.sigma_bound
                        ));
                    }
                    modes.push(m);
                }
                Err(e) => {
                    failures.push(format!("parametrix: {e}"));
                    break;
                }
            }
        }
    }
    let hs_decay = hs_decay_ratio(&modes);
    if let Some(r) = hs_decay {
        if r >= 0.25 {
            failures.push(format!("HS decay: ratio {r:.4} >= 0.25"));
        }
    }

    let grading = grading_report(data, opts);
    if grading.anticommutator != 0.0 {
        failures.push(format!("grading: Gamma D + D Gamma = {:.3e}", grading.anticommutator));
    }
    if grading.self_adjoint_residual > 1e-12 {
        failures.push(format!("assembly not self-adjoint: {:.3e}", grading.self_adjoint_residual));
    }
    for e in &grading.algebra {
        if e.residual != 0.0 {
            failures.push(format!("grading: [Gamma, pi({})] = {:.3e}", e.element, e.residual));
        }
    }

    let commutators = commutator_reports(data, opts);
    for c in &commutators {
        if c.spread.is_nan() || c.spread > opts.stabilization_tol {
            failures.push(format!("commutator [D, {}]: spread {:.3e} across sizes", c.generator, c.spread));
        }
    }

    TripleReport {
        settings: opts.clone(),
        conditions,
        kernel_dimension: kernel_dim,
        implementation_residual: implementation,
        covariance_residual: covariance,
        modes,
        hs_decay_ratio: hs_decay,
        grading,
        commutators,
        pass: failures.is_empty(),
        failures,
    }
}
