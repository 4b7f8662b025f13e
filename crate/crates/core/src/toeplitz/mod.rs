//! The quantum disk: canonical forms in the Toeplitz algebra.
//!
//! Every element is kept as a finite Fourier sum
//! `sum_{n>=0} U^n a_n(K) + sum_{n<0} a_n(K) (U*)^{-n}`
//! and all operations rewrite back into that shape using
//! `a(K) U = U a(K+1)`, `U* a(K) = a(K+1) U*`, `U* U = I` and
//! `U^m c(K) (U*)^m = [K >= m] c(K - m)`.

mod symbol;

pub use symbol::{Symbol, SymbolSpec};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequences::{Sequence, WeightSequence, C64};

/// Element of the Toeplitz algebra in canonical form, keyed by mode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ToeplitzElement {
    modes: BTreeMap<i64, Symbol>,
}

/// `U^i c(K) (U*)^j` with `(i, j)` read off a canonical monomial.
fn legs(mode: i64) -> (i64, i64) {
    if mode >= 0 {
        (mode, 0)
    } else {
        (0, -mode)
    }
}

/// Canonical form of `U^p c(K) (U*)^q`.
fn compress(p: i64, c: Symbol, q: i64) -> (i64, Symbol) {
    let m = p.min(q);
    (p - q, c.shift(-m))
}

/// Canonical form of `(mode x, symbol a) * (mode y, symbol b)`.
fn monomial_product(x: i64, a: &Symbol, y: i64, b: &Symbol) -> (i64, Symbol) {
    let (i, j) = legs(x);
    let (k, l) = legs(y);
    // U^i a (U*)^j U^k b (U*)^l with (U*)^j U^k = U^(k-j) or (U*)^(j-k)
    let r = k - j;
    if r >= 0 {
        // a U^r b = U^r a(K + r) b(K)
        compress(i + r, a.shift(r).mul(b), l)
    } else {
        // a (U*)^s b = a(K) b(K + s) (U*)^s
        let s = -r;
        compress(i, a.mul(&b.shift(s)), s + l)
    }
}

impl ToeplitzElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::diagonal(Symbol::one())
    }

    pub fn diagonal(symbol: Symbol) -> Self {
        Self::monomial(0, symbol)
    }

    /// `U^n a(K)` for `n >= 0`, `a(K) (U*)^-n` for `n < 0`.
    pub fn monomial(mode: i64, symbol: Symbol) -> Self {
        let mut e = Self::zero();
        e.add_term(mode, symbol);
        e
    }

    /// The unilateral shift `U`.
    pub fn shift() -> Self {
        Self::monomial(1, Symbol::one())
    }

    /// `U*`.
    pub fn shift_adjoint() -> Self {
        Self::monomial(-1, Symbol::one())
    }

    fn add_term(&mut self, mode: i64, symbol: Symbol) {
        let updated = match self.modes.get(&mode) {
            Some(existing) => existing.add(&symbol),
            None => symbol,
        };
        if updated.is_zero() {
            self.modes.remove(&mode);
        } else {
            self.modes.insert(mode, updated);
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, &Symbol)> {
        self.modes.iter().map(|(n, s)| (*n, s))
    }

    pub fn symbol(&self, mode: i64) -> Symbol {
        self.modes.get(&mode).cloned().unwrap_or_else(Symbol::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest `|n|` with a nonzero symbol.
    pub fn mode_radius(&self) -> i64 {
        self.modes.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, s) in other.modes() {
            out.add_term(n, s.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero();
        for (n, s) in self.modes() {
            out.add_term(n, s.scale(c));
        }
        out
    }

    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (x, a) in self.modes() {
            for (y, b) in other.modes() {
                let (n, c) = monomial_product(x, a, y, b);
                out.add_term(n, c);
            }
        }
        out
    }

    /// `(U^n a(K))* = conj(a)(K) (U*)^n` and vice versa.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (n, s) in self.modes() {
            out.add_term(-n, s.conj());
        }
        out
    }

    /// The rotation automorphism: mode `n` picks up `e^{i n theta}`.
    pub fn rho(&self, theta: f64) -> Self {
        let mut out = Self::zero();
        for (n, s) in self.modes() {
            out.add_term(n, s.scale(C64::from_polar(1.0, n as f64 * theta)));
        }
        out
    }

    /// The covariant derivation `d(x) = [U beta(K), x]`.
    ///
    /// Output symbols are written through increments of `beta`, so each
    /// carries the limit `n beta_inf` (times the input tail) when the input
    /// is in `c00+`.
    pub fn derive(&self, beta: &Sequence) -> Self {
        let b = Symbol::sequence(beta.clone());
        let mut out = Self::zero();
        for (n, a) in self.modes() {
            let symbol = if n >= 0 {
                // beta(k+n) a(k) - beta(k) a(k+1)
                //   = beta(k) (a(k) - a(k+1)) + (beta(k+n) - beta(k)) a(k)
                let jump = b.mul(&a.sub(&a.shift(1)));
                jump.add(&Symbol::increment(beta, 0, n).mul(a))
            } else {
                // [k>=1] beta(k-1) a(k-1) - beta(k+m-1) a(k)
                //   = [k>=1] beta(k-1) (a(k-1) - a(k)) - (beta(k+m-1) - [k>=1] beta(k-1)) a(k)
                let m = -n;
                let jump = b.shift(-1).mul(&a.shift(-1).sub(a));
                jump.sub(&Symbol::increment(beta, -1, m - 1).mul(a))
            };
            out.add_term(n + 1, symbol);
        }
        out
    }

    /// Matrix of the compression to `span{E_0, ..., E_K}`.
    pub fn represent(&self, k_max: usize) -> DMatrix<C64> {
        let dim = k_max + 1;
        let mut m = DMatrix::zeros(dim, dim);
        for (n, s) in self.modes() {
            if n >= 0 {
                // U^n a(K) E_k = a(k) E_{k+n}
                let n = n as usize;
                for k in 0..dim.saturating_sub(n) {
                    m[(k + n, k)] += s.at(k);
                }
            } else {
                // a(K) (U*)^m E_k = a(k-m) E_{k-m}
                let sh = (-n) as usize;
                for k in sh..dim {
                    m[(k - sh, k)] += s.at(k - sh);
                }
            }
        }
        m
    }

    /// Probe window on which two elements with `c00+` symbols are equal
    /// iff they are equal everywhere.
    pub fn probe_window(&self) -> usize {
        self.modes().map(|(_, s)| s.probe_len()).max().unwrap_or(0) + self.mode_radius() as usize
    }

    /// Equality of canonical forms: symbols agree on `[0, window)` and in
    /// their limits.
    pub fn agrees_with(&self, other: &Self, window: usize, tol: f64) -> bool {
        let keys: std::collections::BTreeSet<i64> =
            self.modes.keys().chain(other.modes.keys()).copied().collect();
        keys.into_iter()
            .all(|n| self.symbol(n).agrees_with(&other.symbol(n), window, tol))
    }

    /// `tau_w(x) = tr(w(K) x) = sum_k w(k) a_0(k)`.
    ///
    /// Returns the value and an error bound. Eventually constant symbols
    /// are summed exactly against the unit total mass; symbols with only a
    /// declared limit use a horizon where the weight tail is below `tol`.
    pub fn tau(&self, w: &WeightSequence, tol: f64) -> Result<(C64, f64)> {
        let a0 = self.symbol(0);
        if let Some(bound) = a0.support_bound() {
            let value = (0..bound).map(|k| a0.at(k) * w.at(k)).sum();
            return Ok((value, 0.0));
        }
        let limit = a0.limit().ok_or(Error::CannotBound)?;
        if let Some(settle) = a0.settled_after() {
            let head: C64 = (0..settle).map(|k| (a0.at(k) - limit) * w.at(k)).sum();
            return Ok((head + limit, limit.norm() * w.normalization_error()));
        }
        let mut horizon = 64usize;
        while w.tail_mass_bound(horizon) > tol && horizon < 1 << 26 {
            horizon *= 2;
        }
        let head: C64 = (0..=horizon).map(|k| (a0.at(k) - limit) * w.at(k)).sum();
        let deviation = (horizon..=2 * horizon)
            .step_by((horizon / 32).max(1))
            .map(|k| (a0.at(k) - limit).norm())
            .fold(0.0, f64::max);
        let bound = deviation * w.tail_mass_bound(horizon) + limit.norm() * w.normalization_error();
        Ok((head + limit, bound))
    }

    /// Structured-text form: a list of `{mode, symbol}` entries.
    pub fn to_spec(&self) -> Result<Vec<ModeEntry>> {
        self.modes()
            .map(|(mode, s)| {
                s.spec()
                    .map(|symbol| ModeEntry { mode, symbol })
                    .ok_or_else(|| {
                        Error::NotRepresentable(format!("symbol in mode {mode} has no closed form"))
                    })
            })
            .collect()
    }

    pub fn from_spec(entries: Vec<ModeEntry>) -> Self {
        let mut out = Self::zero();
        for e in entries {
            out.add_term(e.mode, e.symbol.into());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub mode: i64,
    pub symbol: SymbolSpec,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{normalize_weight, Sequence};

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn shift_matrix(dim: usize) -> DMatrix<C64> {
        DMatrix::from_fn(dim, dim, |i, j| if i == j + 1 { re(1.0) } else { re(0.0) })
    }

    #[test]
    fn isometry_relation() {
        let u = ToeplitzElement::shift();
        let us = ToeplitzElement::shift_adjoint();
        let p = us.multiply(&u);
        assert!(p.agrees_with(&ToeplitzElement::identity(), 10, 0.0));
    }

    #[test]
    fn range_projection() {
        let u = ToeplitzElement::shift();
        let p = u.multiply(&ToeplitzElement::shift_adjoint());
        assert_eq!(p.modes().count(), 1);
        let s = p.symbol(0);
        assert_eq!(s.at(0), re(0.0));
        assert_eq!(s.at(1), re(1.0));
        assert!(s.is_eventually_constant());
        // 6x6 matrix oracle, interior only
        let m = shift_matrix(6);
        let oracle = &m * m.adjoint();
        let rep = p.represent(5);
        assert_eq!(rep, oracle);
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            [0.0, 1.0, 1.0, 1.0].iter().map(|&x| re(x)).collect(),
        ));
        assert_eq!(p.represent(3), expected);
    }

    #[test]
    fn shift_times_shift_with_symbols() {
        let ka = Symbol::sequence(Sequence::affine(1.0, 0.0)); // a(k) = k
        let x = ToeplitzElement::monomial(1, ka);
        let y = ToeplitzElement::monomial(1, Symbol::one());
        let p = x.multiply(&y);
        assert_eq!(p.modes().map(|(n, _)| n).collect::<Vec<_>>(), vec![2]);
        for k in 0..20 {
            assert_eq!(p.symbol(2).at(k), re(k as f64 + 1.0));
        }
        // matrix oracle on the interior
        let (mx, my) = (x.represent(5), y.represent(5));
        let prod = mx * my;
        let rep = p.represent(5);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(prod[(i, j)], rep[(i, j)]);
            }
        }
    }

    #[test]
    fn adjoint_basics() {
        let u = ToeplitzElement::shift();
        assert_eq!(u.adjoint(), ToeplitzElement::shift_adjoint());
        assert_eq!(ToeplitzElement::identity().adjoint(), ToeplitzElement::identity());
        let a = Symbol::table(vec![C64::new(1.0, 2.0), re(3.0)], C64::new(0.0, -1.0));
        let x = ToeplitzElement::monomial(2, a);
        let back = x.adjoint().adjoint();
        assert!(back.agrees_with(&x, 10, 0.0));
    }

    #[test]
    fn rotation_examples() {
        let theta = 0.7;
        let r = ToeplitzElement::shift().rho(theta);
        assert!((r.symbol(1).at(3) - C64::from_polar(1.0, theta)).norm() < 1e-15);
        let d = ToeplitzElement::diagonal(Symbol::finite(vec![re(2.0)]));
        assert_eq!(d.rho(theta), d);
        let rs = ToeplitzElement::shift_adjoint().rho(std::f64::consts::PI);
        assert!((rs.symbol(-1).at(0) + re(1.0)).norm() < 1e-15);
        // matrix oracle: conjugation by diag(e^{i k pi})
        let dim = 6;
        let phase = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| {
            C64::from_polar(1.0, k as f64 * std::f64::consts::PI)
        }));
        let conj = &phase * ToeplitzElement::shift_adjoint().represent(dim - 1) * phase.adjoint();
        assert!((conj - rs.represent(dim - 1)).norm() < 1e-14);
    }

    #[test]
    fn derivation_of_generators() {
        let beta = Sequence::affine(1.0, 1.0);
        let du = ToeplitzElement::shift().derive(&beta);
        let u2 = ToeplitzElement::monomial(2, Symbol::one());
        assert!(du.agrees_with(&u2, 50, 0.0));
        let dus = ToeplitzElement::shift_adjoint().derive(&beta);
        let minus_i = ToeplitzElement::identity().scale(re(-1.0));
        assert!(dus.agrees_with(&minus_i, 50, 0.0));
        assert!(ToeplitzElement::identity().derive(&beta).is_zero());
    }

    #[test]
    fn derivation_matches_truncated_commutator() {
        let beta = Sequence::affine(1.0, 1.0);
        let dim = 8;
        let ub = ToeplitzElement::monomial(1, Symbol::sequence(beta.clone()));
        for x in [ToeplitzElement::shift(), ToeplitzElement::shift_adjoint()] {
            let (a, b) = (ub.represent(dim - 1), x.represent(dim - 1));
            let comm = &a * &b - &b * &a;
            let d = x.derive(&beta).represent(dim - 1);
            // Rows and columns touching the cut are truncation artifacts.
            for i in 0..dim - 2 {
                for j in 0..dim - 2 {
                    assert!((comm[(i, j)] - d[(i, j)]).norm() < 1e-14, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn tau_examples() {
        let w = normalize_weight(&Sequence::power_law(-5.5, 1.0), 1e-13).unwrap();
        let (one, err) = ToeplitzElement::identity().tau(&w, 1e-12).unwrap();
        assert!((one - re(1.0)).norm() < 1e-12 && err < 1e-12);
        let (zero, _) = ToeplitzElement::shift().tau(&w, 1e-12).unwrap();
        assert_eq!(zero, re(0.0));
        let p = ToeplitzElement::shift().multiply(&ToeplitzElement::shift_adjoint());
        let (v, _) = p.tau(&w, 1e-12).unwrap();
        // partial-sum oracle
        let direct: f64 = (1..2_000_000).rev().map(|k| w.at(k)).sum();
        assert!((v.re - (1.0 - w.at(0))).abs() < 1e-12);
        assert!((v.re - direct).abs() < 1e-9);
        let unbounded = ToeplitzElement::diagonal(Symbol::sequence(Sequence::affine(1.0, 0.0)));
        assert_eq!(unbounded.tau(&w, 1e-12), Err(Error::CannotBound));
    }

    #[test]
    fn tau_with_declared_limit() {
        // mode-0 symbol of d(U*) d(U) for beta = 1+k is -U^2... use a symbol
        // built from increments: k -> beta(k+2) - beta(k) = 2
        let beta = Sequence::affine(1.0, 1.0);
        let x = ToeplitzElement::diagonal(Symbol::increment(&beta, 0, 2));
        let w = normalize_weight(&Sequence::power_law(-4.0, 1.0), 1e-13).unwrap();
        let (v, err) = x.tau(&w, 1e-12).unwrap();
        assert!((v - re(2.0)).norm() < 1e-10, "{v} +- {err}");
    }

    #[test]
    fn spec_roundtrip() {
        let x = ToeplitzElement::shift()
            .add(&ToeplitzElement::monomial(-2, Symbol::table(vec![re(1.0)], re(2.0))));
        let spec = x.to_spec().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: Vec<ModeEntry> = serde_json::from_str(&json).unwrap();
        assert_eq!(ToeplitzElement::from_spec(back), x);
        let derived = ToeplitzElement::shift().derive(&Sequence::affine(2.0, 1.0));
        assert!(derived.to_spec().is_err());
    }
}
