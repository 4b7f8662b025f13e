//! The implementation `D f = U beta(K) f - f U alpha(K)` of the covariant
//! derivation between the GNS spaces `H_w` and `H_w'`, its mode components
//! `D_n`, kernel vectors, parametrices and the assembled even operator.
//!
//! Mode conventions: `D_n` acts on `l^2_w` for `n >= 0` and on the shifted
//! space `l^2_{w_n}`, `w_n(k) = w(k - n)`, for `n < 0`. Its codomain is the
//! `w'` space of mode `n + 1` under the same shift rule.
//!
//! For `n < 0` the bidiagonal formula of [`ModeOperator::apply`] is the
//! negative of the actual mode component of `U beta f - f U alpha`;
//! [`ModeOperator::apply_signed`] carries the sign used when assembling `D`.

mod assembly;
mod parametrix;

use num_complex::ComplexFloat;

pub use assembly::DiracAssembly;
pub use parametrix::{HsNorm, HsStatus, KernelMembership, KernelVector, ModeParametrix, Regime};

use crate::error::{Error, Result};
use crate::gns::{GnsVector, WeightedSpace};
use crate::sequences::{alpha_from, Alpha, PowerLawFamily, Sequence, WeightSequence, C64};
use crate::toeplitz::{Symbol, ToeplitzElement};

/// How far `mu` is scanned for zeros beyond its closed-form guarantee.
const MU_PROBE: usize = 4096;

/// The sequences `beta`, `mu`, `w`, `w'` that determine `D`.
#[derive(Clone, Debug)]
pub struct TripleData {
    beta: Sequence,
    alpha: Alpha,
    w: WeightSequence,
    w_prime: WeightSequence,
    family: Option<PowerLawFamily>,
}

impl TripleData {
    pub fn new(beta: Sequence, mu: Sequence, w: WeightSequence, w_prime: WeightSequence) -> Result<Self> {
        let alpha = alpha_from(&beta, &mu, MU_PROBE)?;
        Ok(Self {
            beta,
            alpha,
            w,
            w_prime,
            family: None,
        })
    }

    /// The power-law family; closed-form tail bounds are used throughout.
    pub fn from_family(family: PowerLawFamily, tol: f64) -> Result<Self> {
        let (w, w_prime) = family.weights(tol);
        let mut data = Self::new(family.beta(), family.mu(), w, w_prime)?;
        data.family = Some(family);
        Ok(data)
    }

    pub fn beta(&self) -> &Sequence {
        &self.beta
    }

    pub fn mu(&self) -> &Sequence {
        self.alpha.mu()
    }

    pub fn alpha(&self, k: usize) -> C64 {
        self.alpha.at(k)
    }

    pub fn ln_alpha(&self, k: usize) -> f64 {
        self.beta.ln_abs(k) + self.mu().ln_abs(k + 1) - self.mu().ln_abs(k)
    }

    pub fn w(&self) -> &WeightSequence {
        &self.w
    }

    pub fn w_prime(&self) -> &WeightSequence {
        &self.w_prime
    }

    pub fn family(&self) -> Option<&PowerLawFamily> {
        self.family.as_ref()
    }

    /// `H_w`, the domain of `D`.
    pub fn domain(&self) -> WeightedSpace {
        WeightedSpace::new(self.w.clone())
    }

    /// `H_w'`, the codomain of `D`.
    pub fn codomain(&self) -> WeightedSpace {
        WeightedSpace::new(self.w_prime.clone())
    }

    pub fn mode(&self, n: i64) -> ModeOperator<'_> {
        ModeOperator { data: self, n }
    }

    /// Index from which `beta` is provably nonzero, after scanning the
    /// prefix for an explicit zero.
    pub fn check_beta_nonvanishing(&self, probe: usize) -> Result<()> {
        let Some(k0) = self.beta.nonvanishing_beyond() else {
            return Err(Error::SingularSymbol {
                what: "beta",
                k: self.beta.settled_after().unwrap_or(0),
            });
        };
        match (0..=probe.max(k0)).find(|&k| self.beta.at(k).norm() == 0.0) {
            Some(k) => Err(Error::SingularSymbol { what: "beta", k }),
            None => Ok(()),
        }
    }

    /// `D f` computed mode by mode.
    pub fn apply_d(&self, f: &GnsVector) -> GnsVector {
        GnsVector::from_modes(f.modes().map(|(n, c)| (n + 1, self.mode(n).apply_signed(c))))
    }

    /// `D f = U beta(K) f - f U alpha(K)` computed in the algebra.
    pub fn apply_d_algebraic(&self, f: &GnsVector) -> GnsVector {
        let ubeta = ToeplitzElement::monomial(1, Symbol::sequence(self.beta.clone()));
        // f U alpha only samples alpha below the support plus the mode radius.
        let reach = f.modes().map(|(n, c)| c.len() + n.unsigned_abs() as usize).max().unwrap_or(0) + 2;
        let alpha = Symbol::table((0..reach).map(|k| self.alpha(k)).collect(), C64::new(0.0, 0.0));
        let ualpha = ToeplitzElement::monomial(1, alpha);
        let left = f.act(&ubeta);
        let right = f.right_mul(&ualpha).expect("finite times table is finite");
        left.sub(&right)
    }

    /// `D* g` for `g` in `H_w'`, the weighted adjoint taken mode by mode.
    pub fn apply_d_adjoint(&self, g: &GnsVector) -> GnsVector {
        GnsVector::from_modes(g.modes().map(|(p, c)| (p - 1, self.mode(p - 1).adjoint_apply_signed(c))))
    }
}

/// `D_n`, a bidiagonal operator between weighted sequence spaces.
#[derive(Clone, Copy, Debug)]
pub struct ModeOperator<'a> {
    data: &'a TripleData,
    n: i64,
}

impl<'a> ModeOperator<'a> {
    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn data(&self) -> &'a TripleData {
        self.data
    }

    /// Domain weight at `k`: `w(k)` or `w(k - n)` for `n < 0`.
    pub fn domain_weight(&self, k: usize) -> f64 {
        if self.n >= 0 {
            self.data.w.at(k)
        } else {
            self.data.w.at(k + self.n.unsigned_abs() as usize)
        }
    }

    /// Codomain weight at `k`: `w'(k)` or `w'(k - n - 1)` for `n < -1`.
    pub fn codomain_weight(&self, k: usize) -> f64 {
        if self.n >= -1 {
            self.data.w_prime.at(k)
        } else {
            self.data.w_prime.at(k + (-self.n - 1) as usize)
        }
    }

    /// Matrix entry `D_n(k, j)` of the bidiagonal stencil.
    pub fn entry(&self, k: usize, j: usize) -> C64 {
        let d = self.data;
        if self.n >= 0 {
            if j == k {
                d.beta.at(k + self.n as usize)
            } else if j == k + 1 {
                -d.alpha(k)
            } else {
                C64::new(0.0, 0.0)
            }
        } else {
            let m = self.n.unsigned_abs() as usize;
            if j == k {
                d.alpha(k + m - 1)
            } else if j + 1 == k {
                -d.beta.at(j)
            } else {
                C64::new(0.0, 0.0)
            }
        }
    }

    /// `D_n f` on a finitely supported array. For `n >= 0` the output has
    /// the length of `f`; for `n < 0` it is one longer.
    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let zero = C64::new(0.0, 0.0);
        let d = self.data;
        if self.n >= 0 {
            let n = self.n as usize;
            (0..f.len())
                .map(|k| {
                    let next = f.get(k + 1).copied().unwrap_or(zero);
                    d.beta.at(k + n) * f[k] - d.alpha(k) * next
                })
                .collect()
        } else {
            let m = self.n.unsigned_abs() as usize;
            (0..=f.len())
                .map(|k| {
                    let here = f.get(k).copied().unwrap_or(zero);
                    let prev = if k == 0 { zero } else { d.beta.at(k - 1) * f[k - 1] };
                    d.alpha(k + m - 1) * here - prev
                })
                .collect()
        }
    }

    /// The sign of this mode inside `D`: `+1` for `n >= 0`, `-1` for `n < 0`.
    pub fn sign(&self) -> f64 {
        if self.n >= 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The mode-`n` component of `D` itself.
    pub fn apply_signed(&self, f: &[C64]) -> Vec<C64> {
        let s = self.sign();
        let mut out = self.apply(f);
        out.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// The weighted adjoint `D_n*`, defined by
    /// `<D_n f, g>_codomain = <f, D_n* g>_domain`.
    pub fn adjoint_apply(&self, g: &[C64]) -> Vec<C64> {
        let zero = C64::new(0.0, 0.0);
        let len = if self.n >= 0 { g.len() + 1 } else { g.len() };
        (0..len)
            .map(|j| {
                // rows k with D(k, j) != 0 are j and j - 1 (n >= 0) or j and
                // j + 1 (n < 0)
                let rows = if self.n >= 0 {
                    [Some(j), j.checked_sub(1)]
                } else {
                    [Some(j), Some(j + 1)]
                };
                let acc: C64 = rows
                    .into_iter()
                    .flatten()
                    .filter_map(|k| g.get(k).map(|gk| (k, *gk)))
                    .map(|(k, gk)| self.entry(k, j).conj() * self.codomain_weight(k) * gk)
                    .fold(zero, |a, b| a + b);
                acc / self.domain_weight(j)
            })
            .collect()
    }

    pub fn adjoint_apply_signed(&self, g: &[C64]) -> Vec<C64> {
        let s = self.sign();
        let mut out = self.adjoint_apply(g);
        out.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// `<f, g>` in the domain space.
    pub fn domain_inner(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter()
            .zip(g)
            .enumerate()
            .map(|(k, (x, y))| self.domain_weight(k) * x.conj() * y)
            .sum()
    }

    /// `<f, g>` in the codomain space.
    pub fn codomain_inner(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter()
            .zip(g)
            .enumerate()
            .map(|(k, (x, y))| self.codomain_weight(k) * x.conj() * y)
            .sum()
    }

    /// The `rows x cols` truncation of `D_n` (stencil sign) in the orthonormal
    /// bases `e_k / sqrt(weight(k))` of domain and codomain.
    pub fn orthonormal_matrix(&self, rows: usize, cols: usize) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(rows, cols, |k, j| {
            let e = self.entry(k, j);
            if e == C64::new(0.0, 0.0) {
                return e;
            }
            e * (self.codomain_weight(k) / self.domain_weight(j)).sqrt()
        })
    }

    /// Singular values of the square `K x K` orthonormalized truncation,
    /// in descending order.
    pub fn singular_values(&self, size: usize) -> Vec<f64> {
        let svd = self.orthonormal_matrix(size, size).svd(false, false);
        let mut s: Vec<f64> = svd.singular_values.iter().map(|x| x.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn kernel_vector(&self) -> Option<KernelVector<'a>> {
        (self.n >= 0).then(|| KernelVector::new(self.data, self.n as usize))
    }
}
