use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

use super::PointCloud;

/// Fitted two-component PCA.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub mean: DVector<f64>,
    /// `m x 2`, orthonormal columns ordered by decreasing variance.
    pub components: DMatrix<f64>,
    /// Variance captured by each component (population normalization).
    pub variances: [f64; 2],
    pub total_variance: f64,
}

impl PcaProjection {
    pub fn project(&self, data: &DMatrix<f64>) -> Vec<[f64; 2]> {
        (0..data.nrows())
            .map(|i| {
                let centered = data.row(i).transpose() - &self.mean;
                [
                    centered.dot(&self.components.column(0)),
                    centered.dot(&self.components.column(1)),
                ]
            })
            .collect()
    }
}

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-12;

/// Fits the top-2 principal axes.
///
/// Uses the `m x m` covariance when `n_docs >= m`, otherwise the `n x n`
/// Gram matrix of the centered data. Each axis is signed so that its
/// largest-magnitude loading is positive. Missing axes (rank below 2) are
/// completed with unit vectors orthogonal to the found ones.
pub fn pca_projection(points: &PointCloud) -> Result<PcaProjection> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidConfig("PCA needs at least 2 points".into()));
    }
    let x = &points.data;
    let m = x.ncols();
    let mean = x.row_mean().transpose();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= mean.transpose();
    }
    let total_variance = xc.iter().map(|v| v * v).sum::<f64>() / n as f64;

    let mut axes: Vec<(f64, DVector<f64>)> = Vec::new();
    if n >= m {
        let cov = (xc.transpose() * &xc) / n as f64;
        for (val, vec) in top_eigen(cov, 2) {
            axes.push((val, vec));
        }
    } else {
        let gram = (&xc * xc.transpose()) / n as f64;
        for (val, u) in top_eigen(gram, 2) {
            // Covariance and Gram share nonzero eigenvalues; X'u maps between eigenvectors.
            let v = xc.transpose() * u;
            let norm = v.norm();
            if norm > 0.0 {
                axes.push((val, v / norm));
            }
        }
    }
    let largest = axes.first().map_or(0.0, |(v, _)| *v).max(0.0);
    axes.retain(|(v, _)| *v > RANK_TOL * largest && *v > 0.0);

    let mut components = DMatrix::zeros(m, 2);
    let mut variances = [0.0; 2];
    for (k, (val, vec)) in axes.iter().take(2).enumerate() {
        components.set_column(k, &fix_sign(vec.clone()));
        variances[k] = *val;
    }
    for k in axes.len().min(2)..2 {
        let v = orthogonal_completion(&components, k);
        components.set_column(k, &v);
    }
    Ok(PcaProjection {
        mean,
        components,
        variances,
        total_variance,
    })
}

/// Projects `points` onto their top-2 principal axes.
pub fn pca(points: &PointCloud) -> Result<Vec<[f64; 2]>> {
    let p = pca_projection(points)?;
    Ok(p.project(&points.data))
}

fn top_eigen(matrix: DMatrix<f64>, k: usize) -> Vec<(f64, DVector<f64>)> {
    let sym = (&matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .collect()
}

fn fix_sign(v: DVector<f64>) -> DVector<f64> {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        -v
    } else {
        v
    }
}

/// A unit vector orthogonal to the first `k` columns, found by Gram-Schmidt
/// over the standard basis. Zero if the dimension is exhausted.
fn orthogonal_completion(components: &DMatrix<f64>, k: usize) -> DVector<f64> {
    let m = components.nrows();
    for e in 0..m {
        let mut v = DVector::zeros(m);
        v[e] = 1.0;
        for j in 0..k {
            let c = components.column(j);
            v -= c * c.dot(&v);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
    DVector::zeros(m)
}
