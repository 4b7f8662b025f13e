use proptest::prelude::*;
use qdisk::analysis::{covariance_residual, dq_residual, implementation_residual, qd_residual};
use qdisk::dirac::TripleData;
use qdisk::gns::GnsVector;
use qdisk::sequences::{PowerLawFamily, Sequence};
use qdisk::toeplitz::{Symbol, ToeplitzElement};
use qdisk::C64;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn symbol() -> impl Strategy<Value = Symbol> {
    (prop::collection::vec(c64(), 0..4), c64()).prop_map(|(prefix, tail)| Symbol::table(prefix, tail))
}

fn element() -> impl Strategy<Value = ToeplitzElement> {
    prop::collection::vec((-2i64..=2, symbol()), 0..4).prop_map(|terms| {
        terms
            .into_iter()
            .fold(ToeplitzElement::zero(), |acc, (n, s)| acc.add(&ToeplitzElement::monomial(n, s)))
    })
}

fn vector() -> impl Strategy<Value = GnsVector> {
    prop::collection::vec((-3i64..=3, prop::collection::vec(c64(), 1..8)), 0..5)
        .prop_map(GnsVector::from_modes)
}

fn coeffs() -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(c64(), 1..12)
}

fn family(c: f64) -> TripleData {
    TripleData::from_family(PowerLawFamily::new(4.0, 3.0, c).unwrap(), 1e-13).unwrap()
}

fn max_rel_diff(x: &nalgebra::DMatrix<C64>, y: &nalgebra::DMatrix<C64>) -> f64 {
    let scale = x.iter().chain(y.iter()).map(|z| z.norm()).fold(1.0, f64::max);
    (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

/// Top-left `size x size` block.
fn block(m: nalgebra::DMatrix<C64>, size: usize) -> nalgebra::DMatrix<C64> {
    m.view((0, 0), (size, size)).into_owned()
}

const K: usize = 32;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn products_match_matrix_products(a in element(), b in element()) {
        // radius <= 2 per factor, so a padding of 8 keeps the block exact
        let lhs = block(a.multiply(&b).represent(K + 8), K);
        let rhs = block(a.represent(K + 8) * b.represent(K + 8), K);
        prop_assert!(max_rel_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn adjoint_reverses_products(a in element(), b in element()) {
        let lhs = a.multiply(&b).adjoint().represent(K);
        let rhs = b.adjoint().multiply(&a.adjoint()).represent(K);
        prop_assert!(max_rel_diff(&lhs, &rhs) < 1e-12);
        prop_assert!(max_rel_diff(&a.adjoint().represent(K), &a.represent(K).adjoint()) == 0.0);
    }

    #[test]
    fn leibniz_rule(a in element(), b in element()) {
        let beta = Sequence::affine(1.0, 1.0);
        let lhs = a.multiply(&b).derive(&beta);
        let rhs = a.derive(&beta).multiply(&b).add(&a.multiply(&b.derive(&beta)));
        prop_assert!(max_rel_diff(&block(lhs.represent(K + 8), K), &block(rhs.represent(K + 8), K)) < 1e-12);
    }

    #[test]
    fn derivation_is_covariant(a in element(), theta in 0.0..std::f64::consts::TAU) {
        let beta = Sequence::affine(1.0, 1.0);
        let lhs = a.derive(&beta).rho(theta);
        let rhs = a.rho(theta).derive(&beta).scale(C64::from_polar(1.0, theta));
        prop_assert!(max_rel_diff(&lhs.represent(K), &rhs.represent(K)) < 1e-12);
    }

    #[test]
    fn state_is_rotation_invariant_and_positive(a in element(), theta in 0.0..std::f64::consts::TAU) {
        let (w, _) = PowerLawFamily::new(4.0, 3.0, 5.5).unwrap().weights(1e-13);
        let (t, e) = a.tau(&w, 1e-12).unwrap();
        let (tr, er) = a.rho(theta).tau(&w, 1e-12).unwrap();
        prop_assert!((t - tr).norm() <= 1e-14 + e + er);
        let (p, ep) = a.adjoint().multiply(&a).tau(&w, 1e-12).unwrap();
        prop_assert!(p.re >= -ep - 1e-14 && p.im.abs() <= ep + 1e-14);
    }

    #[test]
    fn implementation_identity(a in element(), f in vector(), kernel in any::<bool>()) {
        let d = family(if kernel { 9.0 } else { 5.5 });
        prop_assert!(implementation_residual(&d, &a, &f) < 1e-10);
    }

    #[test]
    fn covariance_of_d(f in vector(), theta in 0.0..std::f64::consts::TAU) {
        let d = family(5.5);
        prop_assert!(covariance_residual(&d, &f, theta) < 1e-12);
    }

    #[test]
    fn parametrix_identities(n in -15i64..=15, g in coeffs(), f in coeffs(), kernel in any::<bool>()) {
        let d = family(if kernel { 9.0 } else { 5.5 });
        let big_n = d.kernel_count().unwrap();
        let q = d.parametrix(n, big_n).unwrap();
        let op = d.mode(n);
        prop_assert!(dq_residual(&op, &q, &g) < 1e-10);
        prop_assert!(qd_residual(&op, &q, &f) < 1e-10);
    }
}

#[test]
fn kernel_count_matches_closed_form_on_grid() {
    let mut checked = 0;
    for a in [3.5, 4.0, 5.0] {
        for b in [2.5, 3.0, 4.0] {
            for c in [2.0 * b - 0.5, 2.0 * b + 1.0, 2.0 * b + 2.0, 2.0 * b + 3.0, 2.0 * b + 6.0] {
                let Ok(fam) = PowerLawFamily::new(a, b, c) else { continue };
                let d = TripleData::from_family(fam, 1e-13).unwrap();
                assert_eq!(d.kernel_count().unwrap(), fam.predicted_n(), "({a},{b},{c})");
                checked += 1;
            }
        }
    }
    assert!(checked >= 10, "{checked}");
}
