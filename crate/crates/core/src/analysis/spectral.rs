use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dirac::TripleData;
use crate::gns::{delta, GnsVector};
use crate::sequences::C64;
use crate::toeplitz::ToeplitzElement;

/// Rows/columns dropped at the cut of a truncation: `max(4, K/50)`.
pub fn edge_width(size: usize) -> usize {
    (size / 50).max(4)
}

/// Singular values of the square orthonormalized truncation of `D_n`,
/// descending.
pub fn singular_values(data: &TripleData, n: i64, size: usize) -> Vec<f64> {
    data.mode(n).singular_values(size)
}

/// Number of singular values below `rel * sigma_max` for each size; grows
/// with the size when `alpha` vanishes on a whole tail.
pub fn near_kernel_counts(data: &TripleData, n: i64, sizes: &[usize], rel: f64) -> Vec<(usize, usize)> {
    sizes
        .iter()
        .map(|&size| {
            let s = singular_values(data, n, size);
            let cut = rel * s.first().copied().unwrap_or(0.0);
            (size, s.iter().filter(|&&x| x <= cut).count())
        })
        .collect()
}

/// Null direction of the rows of `D_n` that the truncation keeps exactly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelEvidence {
    pub mode: usize,
    pub size: usize,
    pub null_singular_value: f64,
    pub largest_singular_value: f64,
    /// `|<v, h>|` for the null vector `v` and the normalized truncated
    /// kernel vector, both in orthonormal coordinates.
    pub cosine: f64,
    /// Share of `|v|^2` on the last `edge_width(size)` indices.
    pub edge_mass: f64,
    pub in_space: bool,
}

/// Kernel evidence for `n >= 0` from the `(K-1) x K` truncation whose rows
/// are exact. Its null vector is always the truncated `h^(n)`; whether that
/// vector is a genuine element of `l^2_w` shows in how much of its mass sits
/// at the cut.
pub fn kernel_evidence(data: &TripleData, n: usize, size: usize, edge_threshold: f64) -> KernelEvidence {
    let op = data.mode(n as i64);
    let mut a = DMatrix::zeros(size, size);
    a.view_mut((0, 0), (size - 1, size)).copy_from(&op.orthonormal_matrix(size - 1, size));
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let v: Vec<C64> = v_t.row(imin).iter().map(|z| z.conj()).collect();

    let h = data.kernel_vector(n);
    let logs: Vec<(f64, f64)> = (0..size)
        .map(|k| {
            let (l, p) = h.ln_at(k);
            (l + 0.5 * data.w().ln_at(k), p)
        })
        .collect();
    let top = logs.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    let ht: Vec<C64> = logs.iter().map(|&(l, p)| C64::from_polar((l - top).exp(), p)).collect();
    let hn = ht.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let dot: C64 = v.iter().zip(&ht).map(|(x, y)| x.conj() * y).sum();
    let cosine = dot.norm() / hn;
    let edge = edge_width(size);
    let edge_mass = v[size - edge..].iter().map(|z| z.norm_sqr()).sum::<f64>();
    KernelEvidence {
        mode: n,
        size,
        null_singular_value: smin,
        largest_singular_value: smax,
        cosine,
        edge_mass,
        in_space: edge_mass < edge_threshold,
    }
}

/// Largest singular value of `[D, pi(a)]` restricted to interior vectors
/// `e_{n,j}`, `n_min <= n <= n_max`, `j < K - edge_width(K)`.
///
/// The off-diagonal blocks are `X(a) = D pi_w(a) - pi_w'(a) D` and
/// `-X(a*)^*`, so the norm is `max(|X(a)|, |X(a*)|)`. Since
/// `X(a) f = pi_w'(d(a)) f` with `f` read as an element of `H_w'`, both the
/// source and the image are measured in `H_w'`. (Measured from `H_w`
/// instead, `X(U) = pi(U^2)` picks up the unbounded factor
/// `sqrt(w'(k) / w(k))` whenever `w'` decays slower than `w`.) Columns are
/// computed exactly on finitely supported vectors, so no row is cut.
pub fn commutator_norm(data: &TripleData, a: &ToeplitzElement, size: usize, n_min: i64, n_max: i64) -> f64 {
    block_norm(data, a, size, n_min, n_max).max(block_norm(data, &a.adjoint(), size, n_min, n_max))
}

fn block_norm(data: &TripleData, a: &ToeplitzElement, size: usize, n_min: i64, n_max: i64) -> f64 {
    let cols = size.saturating_sub(edge_width(size));
    let cod = data.codomain();
    let column = |n: i64, j: usize| -> GnsVector {
        let e = delta(n, j);
        let x = data.apply_d(&e.act(a)).sub(&data.apply_d(&e).act(a));
        x.scale(C64::new(1.0 / cod.weight_at(n, j).sqrt(), 0.0))
    };
    let dense = |columns: &[GnsVector]| -> f64 {
        let mut rows: BTreeMap<(i64, usize), usize> = BTreeMap::new();
        for c in columns {
            for (p, v) in c.modes() {
                for k in 0..v.len() {
                    let next = rows.len();
                    rows.entry((p, k)).or_insert(next);
                }
            }
        }
        if rows.is_empty() {
            return 0.0;
        }
        let mut m = DMatrix::<C64>::zeros(rows.len(), columns.len());
        for (jc, c) in columns.iter().enumerate() {
            for (p, v) in c.modes() {
                for (k, z) in v.iter().enumerate() {
                    m[(rows[&(p, k)], jc)] = z * cod.weight_at(p, k).sqrt();
                }
            }
        }
        m.svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
    };
    if a.modes().count() <= 1 {
        // a homogeneous element maps distinct source modes to distinct
        // target modes, so the blocks are orthogonal
        (n_min..=n_max)
            .map(|n| dense(&(0..cols).map(|j| column(n, j)).collect::<Vec<_>>()))
            .fold(0.0, f64::max)
    } else {
        let all: Vec<GnsVector> = (n_min..=n_max).flat_map(|n| (0..cols).map(move |j| (n, j))).map(|(n, j)| column(n, j)).collect();
        dense(&all)
    }
}
