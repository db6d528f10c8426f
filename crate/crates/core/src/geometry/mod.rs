//! Linguistic geometries over a vocabulary.
//!
//! A geometry is a symmetric positive semidefinite word-similarity matrix
//! `T` inducing the document distance `d_T(x, y) = sqrt((x - y)' T (x - y))`,
//! or equivalently a transform `H` with `T = H'H`, so that `d_T` is the
//! Euclidean distance between `Hx` and `Hy`. Manually specified geometries
//! are built as `H = R D`: a column-stochastic blending matrix `R` and a
//! nonnegative diagonal importance matrix `D`.

mod factor;
mod manual;
pub mod spec;

use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::TermCounts;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use factor::factorize_t;
pub use manual::{build_manual_d, build_manual_r, build_soft_d, build_soft_r};

/// Column sums of a Markov matrix must be within this of 1.
pub const STOCHASTIC_TOL: f64 = 1e-9;
/// Symmetry tolerance for similarity matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Relative eigenvalue floor for PSD certification.
pub const PSD_REL_TOL: f64 = 1e-8;

/// One named block of a word partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub name: String,
    pub members: Vec<usize>,
}

/// A partition of the vocabulary into named clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct WordClustering {
    clusters: Vec<Cluster>,
    assignment: Vec<usize>,
}

impl WordClustering {
    /// Validates that `clusters` partition `0..n_words` and that names are unique.
    pub fn new(n_words: usize, clusters: Vec<Cluster>) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n_words];
        let mut names = std::collections::HashSet::new();
        for (a, c) in clusters.iter().enumerate() {
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate cluster name {:?}", c.name)));
            }
            for &w in &c.members {
                if w >= n_words {
                    return Err(Error::InvalidSpec(format!("word index {w} out of range")));
                }
                if assignment[w] != usize::MAX {
                    return Err(Error::InvalidSpec(format!(
                        "word {w} assigned to both {:?} and {:?}",
                        clusters[assignment[w]].name, c.name
                    )));
                }
                assignment[w] = a;
            }
        }
        if let Some(w) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(Error::InvalidSpec(format!("word {w} is not in any cluster")));
        }
        Ok(Self { clusters, assignment })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_words(&self) -> usize {
        self.assignment.len()
    }

    /// Cluster index of word `w`.
    pub fn cluster_of(&self, w: usize) -> usize {
        self.assignment[w]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.clusters.iter().position(|c| c.name == name)
    }
}

/// Blend and importance parameters of a manual geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    /// Self-affinity `rho_a` per cluster.
    pub rho_self: Vec<f64>,
    /// Cross affinity `rho_ab` per unordered cluster pair, including `a == b`.
    /// Keys are stored with `a <= b`; missing pairs are 0.
    pub rho_pair: std::collections::BTreeMap<(usize, usize), f64>,
    /// Importance `d_a` per cluster.
    pub importance: Vec<f64>,
}

impl GeometryParams {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            rho_self: vec![1.0; n_clusters],
            rho_pair: Default::default(),
            importance: vec![1.0; n_clusters],
        }
    }

    pub fn rho(&self, a: usize, b: usize) -> f64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.rho_pair.get(&key).copied().unwrap_or(0.0)
    }

    pub fn set_rho(&mut self, a: usize, b: usize, value: f64) {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.rho_pair.insert(key, value);
    }

    pub fn validate(&self, clustering: &WordClustering) -> Result<()> {
        let r = clustering.n_clusters();
        if self.rho_self.len() != r || self.importance.len() != r {
            return Err(Error::InvalidSpec(format!(
                "parameters cover {} / {} clusters, expected {r}",
                self.rho_self.len(),
                self.importance.len()
            )));
        }
        let all = self
            .rho_self
            .iter()
            .chain(self.importance.iter())
            .chain(self.rho_pair.values());
        if all.clone().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSpec(
                "rho and importance values must be finite and >= 0".into(),
            ));
        }
        if self.rho_pair.keys().any(|&(a, b)| a >= r || b >= r) {
            return Err(Error::InvalidSpec("rho pair refers to an unknown cluster".into()));
        }
        Ok(())
    }
}

/// Per-word relatedness scores over a fixed cluster list plus importances.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftScoreSpec {
    pub cluster_names: Vec<String>,
    /// One score vector per vocabulary word, values in `[0, 2]`.
    pub scores: Vec<Vec<f64>>,
    /// One importance per vocabulary word, values in `[0, 3]`.
    pub importance: Vec<f64>,
    pub rho_self: f64,
}

impl SoftScoreSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.cluster_names.len();
        if self.scores.len() != self.importance.len() {
            return Err(Error::InvalidSpec("scores and importances differ in length".into()));
        }
        for s in &self.scores {
            if s.len() != k {
                return Err(Error::InvalidSpec(format!(
                    "score vector of length {} (expected {k})",
                    s.len()
                )));
            }
            if s.iter().any(|v| !(0.0..=2.0).contains(v)) {
                return Err(Error::InvalidSpec("relatedness scores must lie in [0, 2]".into()));
            }
        }
        if self.importance.iter().any(|v| !(0.0..=3.0).contains(v)) {
            return Err(Error::InvalidSpec("importance must lie in [0, 3]".into()));
        }
        if !self.rho_self.is_finite() || self.rho_self < 0.0 {
            return Err(Error::InvalidSpec("rho_self must be >= 0".into()));
        }
        Ok(())
    }
}

/// Nonnegative matrix with unit column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMatrix(Matrix);

impl MarkovMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch("Markov matrix must be square".into()));
        }
        for j in 0..m.ncols() {
            let col = m.column_entries(j);
            if col.iter().any(|&(_, v)| v < 0.0) {
                return Err(Error::InvalidSpec(format!("negative entry in column {j}")));
            }
            let s: f64 = col.iter().map(|&(_, v)| v).sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidSpec(format!("column {j} sums to {s}")));
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }
}

/// Nonnegative diagonal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalWeights(Vec<f64>);

impl DiagonalWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidSpec("diagonal weights must be finite and >= 0".into()));
        }
        Ok(Self(weights))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Where a transform came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Identity,
    Manual,
    Soft,
    Diffusion,
    Ngram,
    Taxonomy,
    Combination,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Identity => "identity",
            Provenance::Manual => "manual",
            Provenance::Soft => "soft",
            Provenance::Diffusion => "diffusion",
            Provenance::Ngram => "ngram",
            Provenance::Taxonomy => "taxonomy",
            Provenance::Combination => "combination",
        };
        f.write_str(s)
    }
}

/// The map `x -> Hx`, an `m x n` matrix over an `n`-word vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformMatrix {
    pub matrix: Matrix,
    pub provenance: Provenance,
}

impl TransformMatrix {
    pub fn new(matrix: Matrix, provenance: Provenance) -> Result<Self> {
        let finite = match &matrix {
            Matrix::Dense(m) => m.iter().all(|v| v.is_finite()),
            Matrix::Sparse(_) => {
                (0..matrix.ncols()).all(|j| matrix.column_entries(j).iter().all(|(_, v)| v.is_finite()))
            }
        };
        if !finite {
            return Err(Error::InvalidSpec("transform has non-finite entries".into()));
        }
        Ok(Self { matrix, provenance })
    }

    pub fn identity(n: usize) -> Self {
        let cols = (0..n).map(|j| vec![(j, 1.0)]).collect();
        Self {
            matrix: Matrix::from_columns(n, cols),
            provenance: Provenance::Identity,
        }
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Matrix text preceded by a `# provenance: <name>` line.
    pub fn to_text(&self) -> String {
        format!("# provenance: {}\n{}", self.provenance, self.matrix.to_text())
    }

    /// Parses [`TransformMatrix::to_text`] output. Without a provenance line
    /// the provenance is taken from `fallback`.
    pub fn from_text(text: &str, source: &str, fallback: Provenance) -> Result<Self> {
        let mut provenance = fallback;
        let mut body = text;
        while let Some(rest) = body.strip_prefix('#') {
            let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
            if let Some(name) = line.trim().strip_prefix("provenance:") {
                provenance = serde_json::from_value(serde_json::Value::String(name.trim().to_string()))
                    .map_err(|_| Error::parse(source, 1, format!("unknown provenance {:?}", name.trim())))?;
            }
            body = tail;
        }
        Self::new(Matrix::from_text(body, source)?, provenance)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string(), Provenance::Combination)
    }

    /// `H'H`, the similarity this transform induces.
    pub fn gram(&self) -> DMatrix<f64> {
        let h = self.matrix.to_dense();
        h.transpose() * h
    }
}

/// Symmetric word-similarity matrix `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    matrix: DMatrix<f64>,
    psd_certified: bool,
}

impl SimilarityMatrix {
    /// Wraps a square matrix without certifying it.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch("similarity matrix must be square".into()));
        }
        Ok(Self {
            matrix,
            psd_certified: false,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_psd_certified(&self) -> bool {
        self.psd_certified
    }

    /// Largest absolute difference between `T` and its transpose.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    fn check_symmetric(&self) -> Result<()> {
        let dev = self.asymmetry();
        if dev > SYMMETRY_TOL {
            return Err(Error::AsymmetricSimilarity(dev));
        }
        Ok(())
    }

    /// Certifies PSD: smallest eigenvalue `>= -1e-8 * largest`.
    pub fn certify(mut self) -> Result<Self> {
        self.check_symmetric()?;
        let eig = nalgebra::SymmetricEigen::new(self.matrix.clone()).eigenvalues;
        let max = eig.max();
        let min = eig.min();
        if min < -PSD_REL_TOL * max.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotPsd(min));
        }
        self.psd_certified = true;
        Ok(self)
    }

    /// Replaces `T` by its nearest PSD matrix (negative eigenvalues set to 0).
    pub fn clamp_psd(self) -> Result<Self> {
        let h = factorize_t(&self)?;
        let gram = h.gram();
        Ok(Self {
            matrix: (&gram + gram.transpose()) * 0.5,
            psd_certified: true,
        })
    }
}

/// Nonnegative convex weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CombinationWeights(Vec<f64>);

impl CombinationWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidSpec("weights must be nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSpec(format!("weights sum to {s}, expected 1")));
        }
        Ok(Self(weights))
    }

    /// The simplex vertex selecting component `i` of `k`.
    pub fn vertex(k: usize, i: usize) -> Self {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for CombinationWeights {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CombinationWeights> for Vec<f64> {
    fn from(w: CombinationWeights) -> Self {
        w.0
    }
}

/// `H = R D`: column `j` of `R` scaled by `D_jj`.
pub fn compose_h(r: &MarkovMatrix, d: &DiagonalWeights, provenance: Provenance) -> Result<TransformMatrix> {
    if r.dim() != d.as_slice().len() {
        return Err(Error::ShapeMismatch(format!(
            "R is {0}x{0} but D has {1} entries",
            r.dim(),
            d.as_slice().len()
        )));
    }
    let mut m = r.matrix().clone();
    m.scale_columns(d.as_slice());
    TransformMatrix::new(m, provenance)
}

/// `H* = sum_i alpha_i H_i`. Components with fewer rows are padded with zero rows.
pub fn convex_combination(components: &[TransformMatrix], alpha: &CombinationWeights) -> Result<TransformMatrix> {
    let weights = alpha.as_slice();
    if components.is_empty() || components.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} components but {} weights",
            components.len(),
            weights.len()
        )));
    }
    let n = components[0].ncols();
    if let Some(bad) = components.iter().find(|h| h.ncols() != n) {
        return Err(Error::ShapeMismatch(format!(
            "component has {} columns, expected {n}",
            bad.ncols()
        )));
    }
    let m = components.iter().map(TransformMatrix::nrows).max().unwrap_or(0);
    let all_dense = components.iter().all(|h| !h.matrix.is_sparse());
    let matrix = if all_dense {
        let mut acc = DMatrix::zeros(m, n);
        for (h, &w) in components.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let Matrix::Dense(d) = &h.matrix else { unreachable!() };
            let mut view = acc.view_mut((0, 0), (d.nrows(), n));
            view += d * w;
        }
        Matrix::Dense(acc)
    } else {
        let cols = (0..n)
            .map(|j| {
                components
                    .iter()
                    .zip(weights)
                    .filter(|(_, &w)| w != 0.0)
                    .flat_map(|(h, &w)| h.matrix.column_entries(j).into_iter().map(move |(i, v)| (i, v * w)))
                    .collect()
            })
            .collect();
        Matrix::Sparse(crate::matrix::SparseColumns::from_columns(m, cols))
    };
    let provenance = match weights.iter().filter(|&&w| w != 0.0).count() {
        1 => components[weights.iter().position(|&w| w != 0.0).unwrap()].provenance,
        _ => Provenance::Combination,
    };
    TransformMatrix::new(matrix, provenance)
}

/// How tf vectors are scaled before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TfScaling {
    /// L1-normalized relative frequencies.
    #[default]
    Relative,
    Raw,
}

/// Maps every document's tf vector `x` to `Hx`. Returns an `n_docs x m` matrix.
pub fn transform(h: &TransformMatrix, docs: &TermCounts, scaling: TfScaling) -> Result<DMatrix<f64>> {
    if h.ncols() != docs.n_terms() {
        return Err(Error::ShapeMismatch(format!(
            "transform has {} columns but the vocabulary has {} words",
            h.ncols(),
            docs.n_terms()
        )));
    }
    let m = h.nrows();
    let mut out = DMatrix::zeros(docs.n_docs(), m);
    for (d, row) in docs.rows.iter().enumerate() {
        let total: u64 = row.iter().map(|&(_, c)| c as u64).sum();
        let scale = match scaling {
            TfScaling::Relative if total > 0 => 1.0 / total as f64,
            _ => 1.0,
        };
        let x: Vec<(usize, f64)> = row.iter().map(|&(t, c)| (t as usize, c as f64 * scale)).collect();
        let hx = h.matrix.mul_sparse_vec(&x);
        for (k, v) in hx.into_iter().enumerate() {
            out[(d, k)] = v;
        }
    }
    Ok(out)
}

/// `d_T(x, y) = sqrt((x - y)' T (x - y))` for a PSD-certified `T`.
pub fn distance(t: &SimilarityMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    if !t.is_psd_certified() {
        return Err(Error::InvalidConfig("similarity matrix is not PSD-certified".into()));
    }
    let n = t.dim();
    if x.len() != n || y.len() != n {
        return Err(Error::ShapeMismatch(format!("vectors must have length {n}")));
    }
    let diff: Vec<(usize, f64)> = x
        .iter()
        .zip(y)
        .enumerate()
        .filter_map(|(i, (a, b))| (a != b).then_some((i, a - b)))
        .collect();
    let m = t.matrix();
    let mut q = 0.0;
    for &(i, di) in &diff {
        let mut row = 0.0;
        for &(j, dj) in &diff {
            row += m[(i, j)] * dj;
        }
        q += di * row;
    }
    if q < -1e-8 {
        return Err(Error::NotPsd(q));
    }
    Ok(q.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: usize, cols: usize, vals: &[f64]) -> Matrix {
        Matrix::Dense(DMatrix::from_row_slice(rows, cols, vals))
    }

    #[test]
    fn compose_h_examples() {
        let r = MarkovMatrix::new(dense(2, 2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        let h = compose_h(&r, &DiagonalWeights::new(vec![2.0, 3.0]).unwrap(), Provenance::Manual).unwrap();
        assert_eq!(
            h.matrix.to_dense(),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0])
        );

        let r = MarkovMatrix::new(dense(2, 2, &[0.5, 0.25, 0.5, 0.75])).unwrap();
        let h = compose_h(&r, &DiagonalWeights::identity(2), Provenance::Manual).unwrap();
        assert_eq!(&h.matrix, r.matrix());
        assert!(compose_h(&r, &DiagonalWeights::identity(3), Provenance::Manual).is_err());
    }

    #[test]
    fn markov_matrix_rejects_bad_columns() {
        assert!(MarkovMatrix::new(dense(2, 2, &[0.5, 0.0, 0.4, 1.0])).is_err());
        assert!(MarkovMatrix::new(dense(2, 2, &[1.5, 0.0, -0.5, 1.0])).is_err());
    }

    #[test]
    fn convex_combination_examples() {
        let i2 = TransformMatrix::identity(2);
        let two = TransformMatrix::new(dense(2, 2, &[2.0, 0.0, 0.0, 2.0]), Provenance::Manual).unwrap();
        let w = CombinationWeights::new(vec![0.5, 0.5]).unwrap();
        let h = convex_combination(&[i2.clone(), two.clone()], &w).unwrap();
        assert_eq!(
            h.matrix.to_dense(),
            DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 1.5])
        );
        assert_eq!(h.provenance, Provenance::Combination);

        let h = convex_combination(&[two.clone(), i2.clone()], &CombinationWeights::vertex(2, 0)).unwrap();
        assert_eq!(h.matrix, two.matrix);

        let h = convex_combination(
            &[two.clone(), two.clone()],
            &CombinationWeights::new(vec![0.3, 0.7]).unwrap(),
        )
        .unwrap();
        assert!((h.matrix.to_dense() - two.matrix.to_dense()).abs().max() < 1e-15);
    }

    #[test]
    fn convex_combination_pads_rows_and_checks_columns() {
        let short = TransformMatrix::new(dense(1, 2, &[1.0, 1.0]), Provenance::Diffusion).unwrap();
        let h = convex_combination(
            &[short.clone(), TransformMatrix::identity(2)],
            &CombinationWeights::new(vec![0.5, 0.5]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            h.matrix.to_dense(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 0.5])
        );
        let bad = convex_combination(
            &[short, TransformMatrix::identity(3)],
            &CombinationWeights::new(vec![0.5, 0.5]).unwrap(),
        );
        assert!(matches!(bad, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn combination_weights_must_be_on_simplex() {
        assert!(CombinationWeights::new(vec![0.5, 0.6]).is_err());
        assert!(CombinationWeights::new(vec![1.5, -0.5]).is_err());
        assert!(CombinationWeights::new(vec![]).is_err());
    }

    #[test]
    fn distance_examples() {
        let t = SimilarityMatrix::new(DMatrix::identity(3, 3))
            .unwrap()
            .certify()
            .unwrap();
        assert_eq!(distance(&t, &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((distance(&t, &[1.0, 1.0, 0.0], &[0.0; 3]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let t = SimilarityMatrix::new(DMatrix::from_diagonal(&nalgebra::dvector![4.0, 1.0]))
            .unwrap()
            .certify()
            .unwrap();
        assert!((distance(&t, &[1.0, 1.0], &[0.0, 0.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn distance_requires_certification() {
        let t = SimilarityMatrix::new(DMatrix::identity(2, 2)).unwrap();
        assert!(distance(&t, &[1.0, 0.0], &[0.0, 0.0]).is_err());
        let indefinite = SimilarityMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert!(matches!(indefinite.certify(), Err(Error::NotPsd(_))));
    }

    #[test]
    fn transform_examples() {
        use crate::corpus::{count_matrix, Vocabulary};
        let vocab = Vocabulary::new(["a", "b", "c"]);
        let docs = count_matrix(&[vec!["a", "a", "b"], vec!["c"]], &vocab);
        let x = transform(&TransformMatrix::identity(3), &docs, TfScaling::Raw).unwrap();
        assert_eq!(x, DMatrix::from_row_slice(2, 3, &[2.0, 1.0, 0.0, 0.0, 0.0, 1.0]));
        let x = transform(&TransformMatrix::identity(3), &docs, TfScaling::Relative).unwrap();
        assert!((x[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);

        // A zero column annihilates its word.
        let h = TransformMatrix::new(
            dense(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            Provenance::Manual,
        )
        .unwrap();
        let x = transform(&h, &docs, TfScaling::Raw).unwrap();
        assert_eq!(x.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0]);
        assert!(transform(&TransformMatrix::identity(2), &docs, TfScaling::Raw).is_err());
    }

    #[test]
    fn transform_text_round_trip() {
        let h = TransformMatrix::new(
            Matrix::Dense(DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 0.5, 1e-17])),
            Provenance::Soft,
        )
        .unwrap();
        let back = TransformMatrix::from_text(&h.to_text(), "t", Provenance::Identity).unwrap();
        assert_eq!(back, h);
        let plain = TransformMatrix::from_text(&h.matrix.to_text(), "t", Provenance::Ngram).unwrap();
        assert_eq!(plain.provenance, Provenance::Ngram);
        assert!(TransformMatrix::from_text("# provenance: bogus\n", "t", Provenance::Identity).is_err());
    }
}
