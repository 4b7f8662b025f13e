//! GNS spaces `H_w` of the invariant states `tau_w`.
//!
//! A vector is a finite family of coefficient arrays `f_n(k)`, read as
//! `sum_{n>=0} U^n f_n(K) + sum_{n<0} f_n(K) (U*)^{-n}`. The norm is
//! `sum_{n>=0} sum_k w(k)|f_n(k)|^2 + sum_{n<0} sum_k w(k-n)|f_n(k)|^2`,
//! so negative modes see the weight shifted by `|n|`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sequences::{WeightSequence, C64};
use crate::toeplitz::{Symbol, ToeplitzElement};

/// `H_w`: a weight plus the mode-shift convention.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSpace {
    weight: WeightSequence,
}

impl WeightedSpace {
    pub fn new(weight: WeightSequence) -> Self {
        Self { weight }
    }

    pub fn weight(&self) -> &WeightSequence {
        &self.weight
    }

    /// Weight of coefficient `k` in mode `n`: `w(k)` for `n >= 0`,
    /// `w(k - n)` for `n < 0`.
    pub fn weight_at(&self, mode: i64, k: usize) -> f64 {
        if mode >= 0 {
            self.weight.at(k)
        } else {
            self.weight.at(k + (-mode) as usize)
        }
    }

    /// `(f, g)_w`, conjugate-linear in `f`.
    pub fn inner(&self, f: &GnsVector, g: &GnsVector) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (n, fv) in &f.modes {
            if let Some(gv) = g.modes.get(n) {
                for (k, (x, y)) in fv.iter().zip(gv).enumerate() {
                    acc += self.weight_at(*n, k) * x.conj() * y;
                }
            }
        }
        acc
    }

    pub fn norm_sq(&self, f: &GnsVector) -> f64 {
        f.modes
            .iter()
            .flat_map(|(n, v)| {
                v.iter()
                    .enumerate()
                    .map(move |(k, x)| self.weight_at(*n, k) * x.norm_sqr())
            })
            .sum()
    }

    pub fn norm(&self, f: &GnsVector) -> f64 {
        self.norm_sq(f).sqrt()
    }

    /// Whether `pi_w(rho_theta(a)) = U_theta pi_w(a) U_theta^{-1}` holds on
    /// `f` within `tol` in this space's norm.
    pub fn check_implementing(&self, a: &ToeplitzElement, theta: f64, f: &GnsVector, tol: f64) -> bool {
        let lhs = f.act(&a.rho(theta));
        let rhs = f.rotate(-theta).act(a).rotate(theta);
        self.norm(&lhs.sub(&rhs)) <= tol
    }
}

/// Finitely supported element of the formal series space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GnsVector {
    modes: BTreeMap<i64, Vec<C64>>,
}

impl GnsVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Single mode with the given coefficients.
    pub fn mode(n: i64, coeffs: Vec<C64>) -> Self {
        let mut v = Self::zero();
        v.insert(n, coeffs);
        v
    }

    pub fn from_modes(modes: impl IntoIterator<Item = (i64, Vec<C64>)>) -> Self {
        let mut v = Self::zero();
        for (n, c) in modes {
            v.insert(n, c);
        }
        v
    }

    /// Adds `coeffs` into mode `n`.
    pub fn insert(&mut self, n: i64, coeffs: Vec<C64>) {
        let slot = self.modes.entry(n).or_default();
        if slot.len() < coeffs.len() {
            slot.resize(coeffs.len(), C64::new(0.0, 0.0));
        }
        for (s, c) in slot.iter_mut().zip(coeffs) {
            *s += c;
        }
        trim(slot);
        if slot.is_empty() {
            self.modes.remove(&n);
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, &[C64])> {
        self.modes.iter().map(|(n, v)| (*n, v.as_slice()))
    }

    pub fn coeffs(&self, n: i64) -> &[C64] {
        self.modes.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn coeff(&self, n: i64, k: usize) -> C64 {
        self.coeffs(n).get(k).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, c) in other.modes() {
            out.insert(n, c.to_vec());
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_modes(self.modes().map(|(n, v)| (n, v.iter().map(|x| x * c).collect())))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.modes()
            .flat_map(|(_, v)| v.iter().map(|x| x.norm()))
            .fold(0.0, f64::max)
    }

    /// Reads an algebra element as a vector, truncating every symbol to
    /// `k < horizon`. Exact when all symbols vanish from `horizon` on.
    pub fn embed(a: &ToeplitzElement, horizon: usize) -> Self {
        Self::from_modes(a.modes().map(|(n, s)| (n, (0..horizon).map(|k| s.at(k)).collect())))
    }

    /// The same series as an algebra element with finitely supported symbols.
    pub fn to_element(&self) -> ToeplitzElement {
        let mut out = ToeplitzElement::zero();
        for (n, c) in self.modes() {
            out = out.add(&ToeplitzElement::monomial(n, Symbol::finite(c.to_vec())));
        }
        out
    }

    /// Inverse of [`GnsVector::to_element`]; every symbol must be finitely
    /// supported.
    pub fn from_element(e: &ToeplitzElement) -> Result<Self> {
        let mut out = Self::zero();
        for (n, s) in e.modes() {
            let bound = s.support_bound().ok_or_else(|| {
                Error::NotRepresentable(format!("mode {n} symbol is not finitely supported"))
            })?;
            out.insert(n, (0..bound).map(|k| s.at(k)).collect());
        }
        Ok(out)
    }

    /// `pi_w(a) f = a f`, computed by the canonical-form product.
    pub fn act(&self, a: &ToeplitzElement) -> Self {
        Self::from_element(&a.multiply(&self.to_element()))
            .expect("products with finitely supported vectors are finitely supported")
    }

    /// Right multiplication `f a`, used by the direct form of `D`.
    pub fn right_mul(&self, a: &ToeplitzElement) -> Result<Self> {
        Self::from_element(&self.to_element().multiply(a))
    }

    /// `U_theta f`: mode `n` scaled by `e^{i n theta}`.
    pub fn rotate(&self, theta: f64) -> Self {
        Self::from_modes(self.modes().map(|(n, v)| {
            let phase = C64::from_polar(1.0, n as f64 * theta);
            (n, v.iter().map(|x| x * phase).collect())
        }))
    }
}

fn trim(v: &mut Vec<C64>) {
    while v.last().is_some_and(|x| *x == C64::new(0.0, 0.0)) {
        v.pop();
    }
}

/// Convenience for test fixtures: mode-0 vector `delta_j`.
pub fn delta(mode: i64, j: usize) -> GnsVector {
    let mut v = vec![C64::new(0.0, 0.0); j + 1];
    v[j] = C64::new(1.0, 0.0);
    GnsVector::mode(mode, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{normalize_weight, Sequence};

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn space(c: f64) -> WeightedSpace {
        WeightedSpace::new(normalize_weight(&Sequence::power_law(-c, 1.0), 1e-13).unwrap())
    }

    #[test]
    fn norm_of_truncated_shift() {
        let h = space(5.5);
        let mut prev = 0.0;
        for horizon in [10usize, 100, 1000, 10_000] {
            let u = GnsVector::embed(&ToeplitzElement::shift(), horizon);
            let n2 = h.norm_sq(&u);
            let partial: f64 = (0..horizon).map(|k| h.weight().at(k)).sum();
            assert!((n2 - partial).abs() < 1e-15);
            assert!(n2 >= prev && n2 <= 1.0 + 1e-12, "{n2}");
            prev = n2;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_is_the_state() {
        let h = space(5.5);
        let a = ToeplitzElement::monomial(2, Symbol::finite(vec![re(1.0), C64::new(0.0, 2.0), re(-1.0)]))
            .add(&ToeplitzElement::monomial(-1, Symbol::finite(vec![re(0.5), re(3.0)])));
        let b = ToeplitzElement::monomial(2, Symbol::finite(vec![re(2.0), re(1.0)]))
            .add(&ToeplitzElement::monomial(-1, Symbol::finite(vec![re(-1.0), re(1.0), re(4.0)])))
            .add(&ToeplitzElement::diagonal(Symbol::finite(vec![re(7.0)])));
        let (fa, fb) = (GnsVector::embed(&a, 8), GnsVector::embed(&b, 8));
        let (t, err) = a.adjoint().multiply(&b).tau(h.weight(), 1e-13).unwrap();
        assert!(err < 1e-12);
        assert!((h.inner(&fa, &fb) - t).norm() < 1e-12);
        let (t_aa, _) = a.adjoint().multiply(&a).tau(h.weight(), 1e-13).unwrap();
        assert!((h.norm_sq(&fa) - t_aa.re).abs() < 1e-12);
    }

    #[test]
    fn modes_are_orthogonal() {
        let h = space(4.0);
        let f = GnsVector::mode(1, vec![re(1.0), re(2.0)]);
        let g = GnsVector::mode(2, vec![re(1.0), re(2.0)]);
        assert_eq!(h.inner(&f, &g), re(0.0));
    }

    #[test]
    fn delta_norm() {
        let h = space(4.0);
        let f = GnsVector::mode(0, vec![re(0.0), re(0.0), C64::new(3.0, 4.0)]);
        assert!((h.norm_sq(&f) - 25.0 * h.weight().at(2)).abs() < 1e-16);
        // negative modes use the shifted weight
        let g = GnsVector::mode(-2, vec![re(0.0), re(1.0)]);
        assert_eq!(h.norm_sq(&g), h.weight().at(3));
    }

    #[test]
    fn act_examples() {
        let f0 = GnsVector::mode(0, vec![re(1.0), re(2.0), re(3.0), re(4.0), re(5.0), re(6.0)]);
        assert_eq!(f0.act(&ToeplitzElement::identity()), f0);
        let uf = f0.act(&ToeplitzElement::shift());
        assert_eq!(uf, GnsVector::mode(1, f0.coeffs(0).to_vec()));
        let usf = f0.act(&ToeplitzElement::shift_adjoint());
        // U* f_0(K) = f_0(K+1) U*
        assert_eq!(usf, GnsVector::mode(-1, f0.coeffs(0)[1..].to_vec()));
    }

    #[test]
    fn act_matches_matrix_on_columns() {
        // Mode-0 vectors embed as diagonal operators; compare a f against
        // the matrix product on the interior window.
        let a = ToeplitzElement::shift_adjoint()
            .add(&ToeplitzElement::monomial(2, Symbol::table(vec![re(2.0)], re(-1.0))));
        let f = GnsVector::mode(1, vec![re(1.0), re(-2.0), C64::new(0.0, 1.0)]);
        let af = f.act(&a);
        let dim = 12;
        let prod = a.represent(dim - 1) * f.to_element().represent(dim - 1);
        let direct = af.to_element().represent(dim - 1);
        for i in 0..dim - 4 {
            for j in 0..dim - 4 {
                assert!((prod[(i, j)] - direct[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_is_unitary_group() {
        let h = space(5.5);
        let f = GnsVector::from_modes([
            (-2, vec![re(1.0), C64::new(0.5, 0.5)]),
            (1, vec![re(3.0)]),
        ]);
        assert_eq!(f.rotate(0.0), f);
        let g = GnsVector::mode(1, vec![re(1.0), re(2.0)]);
        let r = g.rotate(std::f64::consts::PI);
        assert!(h.norm(&r.add(&g)) < 1e-15);
        for theta in [0.3, 1.0, 2.5] {
            assert!((h.norm(&f.rotate(theta)) - h.norm(&f)).abs() < 1e-15);
            let two = f.rotate(theta).rotate(0.4);
            let one = f.rotate(theta + 0.4);
            assert!(h.norm(&two.sub(&one)) < 1e-15);
        }
    }

    #[test]
    fn implementing_rotation() {
        let h = space(5.5);
        let f = GnsVector::from_modes([
            (-1, vec![re(1.0), re(2.0), re(-1.0)]),
            (0, vec![C64::new(0.0, 1.0), re(1.0)]),
            (2, vec![re(0.5)]),
        ]);
        for theta in [0.4, 2.0 * std::f64::consts::PI / 3.0] {
            assert!(h.check_implementing(&ToeplitzElement::shift(), theta, &f, 1e-12));
            assert!(h.check_implementing(&ToeplitzElement::shift_adjoint(), theta, &f, 1e-12));
            let diag = ToeplitzElement::diagonal(Symbol::table(vec![re(3.0)], re(1.0)));
            assert!(h.check_implementing(&diag, theta, &f, 1e-12));
        }
    }
}
