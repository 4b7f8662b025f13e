use nalgebra::DMatrix;

use super::TripleData;
use crate::gns::{GnsVector, WeightedSpace};
use crate::sequences::C64;
use crate::toeplitz::ToeplitzElement;

/// Truncation of the even operator `[[0, D], [D*, 0]]` on `H_w' + H_w`,
/// written in weight-orthonormal coordinates.
///
/// The `H_w` half keeps modes `n_min..=n_max` and the `H_w'` half the
/// modes one higher, so `D` maps the truncated halves onto each other; both
/// keep indices `k < size` in every mode.
#[derive(Clone, Debug)]
pub struct DiracAssembly {
    size: usize,
    n_min: i64,
    n_max: i64,
    matrix: DMatrix<C64>,
    grading: Vec<f64>,
    domain: WeightedSpace,
    codomain: WeightedSpace,
}

impl TripleData {
    pub fn assemble(&self, size: usize, n_min: i64, n_max: i64) -> DiracAssembly {
        assert!(size >= 1 && n_min <= n_max);
        let modes = (n_max - n_min + 1) as usize;
        let half = modes * size;
        let mut matrix = DMatrix::zeros(2 * half, 2 * half);
        for n in n_min..=n_max {
            let op = self.mode(n);
            let block = (n - n_min) as usize * size;
            for j in 0..size {
                let mut delta = vec![C64::new(0.0, 0.0); j + 1];
                delta[j] = C64::new(1.0, 0.0);
                // column (n, j) of D
                for (k, v) in op.apply_signed(&delta).into_iter().enumerate().take(size) {
                    let scale = (op.codomain_weight(k) / op.domain_weight(j)).sqrt();
                    matrix[(block + k, half + block + j)] = v * scale;
                }
                // column (n + 1, j) of D*
                for (i, v) in op.adjoint_apply_signed(&delta).into_iter().enumerate().take(size) {
                    let scale = (op.domain_weight(i) / op.codomain_weight(j)).sqrt();
                    matrix[(half + block + i, block + j)] = v * scale;
                }
            }
        }
        let grading = (0..2 * half).map(|i| if i < half { 1.0 } else { -1.0 }).collect();
        DiracAssembly {
            size,
            n_min,
            n_max,
            matrix,
            grading,
            domain: self.domain(),
            codomain: self.codomain(),
        }
    }
}

impl DiracAssembly {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn grading(&self) -> &[f64] {
        &self.grading
    }

    pub fn dim(&self) -> usize {
        self.grading.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn modes(&self) -> (i64, i64) {
        (self.n_min, self.n_max)
    }

    fn half(&self) -> usize {
        self.dim() / 2
    }

    /// The `D` block, rows in `H_w'` and columns in `H_w`.
    pub fn d_block(&self) -> DMatrix<C64> {
        let h = self.half();
        self.matrix.view((0, h), (h, h)).into_owned()
    }

    /// `max |M - M^H| / max |M|` over entries.
    pub fn self_adjoint_residual(&self) -> f64 {
        let adj = self.matrix.adjoint();
        let top = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let worst = (&self.matrix - adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if top > 0.0 {
            worst / top
        } else {
            0.0
        }
    }

    /// `max |Gamma M + M Gamma|` over entries.
    pub fn grading_residual(&self) -> f64 {
        anti_or_commutator(&self.matrix, &self.grading, 1.0)
    }

    /// `pi(a) = (pi_w'(a), pi_w(a))` compressed to the truncation.
    pub fn represent(&self, a: &ToeplitzElement) -> DMatrix<C64> {
        let h = self.half();
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        let halves = [(0usize, &self.codomain, self.n_min + 1), (h, &self.domain, self.n_min)];
        for (offset, space, first) in halves {
            let last = first + (self.n_max - self.n_min);
            for n in first..=last {
                for j in 0..self.size {
                    let mut delta = vec![C64::new(0.0, 0.0); j + 1];
                    delta[j] = C64::new(1.0, 0.0);
                    let image = GnsVector::mode(n, delta).act(a);
                    let col = offset + (n - first) as usize * self.size + j;
                    for (p, coeffs) in image.modes() {
                        if p < first || p > last {
                            continue;
                        }
                        for (k, v) in coeffs.iter().enumerate().take(self.size) {
                            let scale = (space.weight_at(p, k) / space.weight_at(n, j)).sqrt();
                            out[(offset + (p - first) as usize * self.size + k, col)] = v * scale;
                        }
                    }
                }
            }
        }
        out
    }

    /// `max |Gamma pi(a) - pi(a) Gamma|` over entries.
    pub fn grading_commutator(&self, represented: &DMatrix<C64>) -> f64 {
        anti_or_commutator(represented, &self.grading, -1.0)
    }

    /// Dense text export: a header line with the dimension, then one row
    /// per line of `re,im` pairs separated by spaces.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.dim(), self.dim());
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    format!("{:e},{:e}", z.re, z.im)
                })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// `max |G M + sign M G|` for diagonal `G`.
fn anti_or_commutator(m: &DMatrix<C64>, g: &[f64], sign: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)] * g[i] + m[(i, j)] * g[j] * sign;
            worst = worst.max(v.norm());
        }
    }
    worst
}
