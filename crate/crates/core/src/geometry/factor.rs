use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{Provenance, SimilarityMatrix, TransformMatrix, SYMMETRY_TOL};

/// Eigenvalues at or below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-12;

/// Factors a symmetric `T` as `H'H` with `H = Lambda_+^{1/2} V'`.
///
/// Negative eigenvalues are clamped to zero and rows belonging to zero
/// eigenvalues dropped, so `H` has one row per retained eigenvalue. Rows are
/// ordered by decreasing eigenvalue and each row's largest-magnitude entry is
/// positive. The returned transform is tagged [`Provenance::Diffusion`];
/// callers re-tag it.
pub fn factorize_t(t: &SimilarityMatrix) -> Result<TransformMatrix> {
    let dev = t.asymmetry();
    if dev > SYMMETRY_TOL {
        return Err(Error::AsymmetricSimilarity(dev));
    }
    let m = t.matrix();
    let sym = (m + m.transpose()) * 0.5;
    let n = sym.nrows();
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let max = order.first().map_or(0.0, |&k| eig.eigenvalues[k]).max(0.0);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&k| eig.eigenvalues[k] > RANK_TOL * max && eig.eigenvalues[k] > 0.0)
        .collect();
    let mut h = DMatrix::zeros(keep.len(), n);
    for (row, &k) in keep.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let scale = eig.eigenvalues[k].sqrt() * sign;
        for j in 0..n {
            h[(row, j)] = v[j] * scale;
        }
    }
    TransformMatrix::new(Matrix::Dense(h), Provenance::Diffusion)
}
