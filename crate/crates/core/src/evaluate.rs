//! Separation measures for labeled 2-D embeddings and the convex-combination
//! weight search.
//!
//! * measure (i): `tr((S_T + ridge I)^-1 S_W)`, lower is better
//! * measure (ii): Davies-Bouldin index, lower is better
//! * measure (iii): leave-one-out k-NN accuracy, higher is better
//! * measure (iv): overlap of the two classes' Gaussians along the Fisher direction, lower is better

use std::collections::BTreeMap;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::corpus::DocumentMatrix;
use crate::error::{Error, Result};
use crate::geometry::{convex_combination, transform, CombinationWeights, TfScaling, TransformMatrix};
use crate::reduce::{Embedding2D, PointCloud, Reducer};

/// Default neighbor count for measure (iii).
pub const DEFAULT_K: usize = 5;

/// Points with one label each. Classes are indexed in sorted label order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbedding {
    points: Vec<Vector2<f64>>,
    class_of: Vec<usize>,
    classes: Vec<String>,
}

impl LabeledEmbedding {
    pub fn new(coords: &[[f64; 2]], labels: &[String]) -> Result<Self> {
        if coords.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} points but {} labels",
                coords.len(),
                labels.len()
            )));
        }
        if coords.is_empty() {
            return Err(Error::Measure("no points".into()));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Measure("non-finite coordinates".into()));
        }
        let index: BTreeMap<&str, usize> = labels
            .iter()
            .map(String::as_str)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        Ok(Self {
            points: coords.iter().map(|c| Vector2::new(c[0], c[1])).collect(),
            class_of: labels.iter().map(|l| index[l.as_str()]).collect(),
            classes: index.keys().map(|s| s.to_string()).collect(),
        })
    }

    pub fn from_embedding(embedding: &Embedding2D, labels: &[String]) -> Result<Self> {
        Self::new(&embedding.coords, labels)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.classes.len()];
        for &c in &self.class_of {
            sizes[c] += 1;
        }
        sizes
    }

    fn centroids(&self) -> Vec<Vector2<f64>> {
        let mut sums = vec![Vector2::zeros(); self.classes.len()];
        for (p, &c) in self.points.iter().zip(&self.class_of) {
            sums[c] += p;
        }
        sums.iter().zip(self.class_sizes()).map(|(s, n)| s / n as f64).collect()
    }

    fn require_classes(&self, min: usize) -> Result<()> {
        if self.classes.len() < min {
            return Err(Error::Measure(format!(
                "need at least {min} classes, got {}",
                self.classes.len()
            )));
        }
        Ok(())
    }
}

/// Within, between and total scatter of a labeled embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterMatrices {
    pub within: Matrix2<f64>,
    pub between: Matrix2<f64>,
    pub total: Matrix2<f64>,
}

pub fn scatter_matrices(emb: &LabeledEmbedding) -> ScatterMatrices {
    let n = emb.len() as f64;
    let mean = emb.points.iter().sum::<Vector2<f64>>() / n;
    let centroids = emb.centroids();
    let mut within = Matrix2::zeros();
    let mut total = Matrix2::zeros();
    for (p, &c) in emb.points.iter().zip(&emb.class_of) {
        let dw = p - centroids[c];
        within += dw * dw.transpose();
        let dt = p - mean;
        total += dt * dt.transpose();
    }
    let mut between = Matrix2::zeros();
    for (mu, size) in centroids.iter().zip(emb.class_sizes()) {
        let d = mu - mean;
        between += d * d.transpose() * size as f64;
    }
    ScatterMatrices { within, between, total }
}

/// Measure (i).
///
/// `ridge = None` inverts `S_T` exactly when it is numerically invertible and
/// otherwise adds `1e-9 * tr(S_T)` to its diagonal (collinear embeddings).
/// Skipping the ridge in the regular case keeps the measure invariant under
/// nonsingular linear maps of the plane.
pub fn intra_inter(emb: &LabeledEmbedding, ridge: Option<f64>) -> f64 {
    let s = scatter_matrices(emb);
    let trace = s.total.trace();
    let ridge = ridge.unwrap_or_else(|| {
        let smallest = SymmetricEigen::new(s.total).eigenvalues.min();
        if smallest > 1e-12 * trace {
            0.0
        } else {
            1e-9 * trace
        }
    });
    let reg = s.total + Matrix2::identity() * ridge;
    match reg.try_inverse() {
        Some(inv) => (inv * s.within).trace(),
        // Only reachable when every point coincides and ridge is zero.
        None => 0.0,
    }
}

/// Measure (ii), the standard Davies-Bouldin index.
pub fn davies_bouldin(emb: &LabeledEmbedding) -> Result<f64> {
    emb.require_classes(2)?;
    let centroids = emb.centroids();
    let sizes = emb.class_sizes();
    let mut spread = vec![0.0; centroids.len()];
    for (p, &c) in emb.points.iter().zip(&emb.class_of) {
        spread[c] += (p - centroids[c]).norm();
    }
    for (s, &n) in spread.iter_mut().zip(&sizes) {
        *s /= n as f64;
    }
    let scale = emb.points.iter().map(|p| p.amax()).fold(0.0, f64::max);
    let k = centroids.len();
    let mut sum = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = (centroids[i] - centroids[j]).norm();
            if d <= 1e-12 * scale || d == 0.0 {
                return Err(Error::DegenerateCentroids);
            }
            worst = worst.max((spread[i] + spread[j]) / d);
        }
        sum += worst;
    }
    Ok(sum / k as f64)
}

/// Measure (iii): leave-one-out k-NN accuracy with Euclidean distance.
/// Distance ties go to the lower point index, vote ties to the earlier label.
pub fn knn_accuracy(emb: &LabeledEmbedding, k: usize) -> Result<f64> {
    let n = emb.len();
    if k == 0 || k >= n {
        return Err(Error::Measure(format!("k = {k} must be in 1..{n}")));
    }
    let correct: usize = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut neighbors: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((emb.points[i] - emb.points[j]).norm_squared(), j))
                .collect();
            neighbors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; emb.n_classes()];
            for &(_, j) in &neighbors[..k] {
                votes[emb.class_of[j]] += 1;
            }
            let best = votes.iter().copied().max().unwrap_or(0);
            let predicted = votes.iter().position(|&v| v == best).unwrap_or(0);
            usize::from(predicted == emb.class_of[i])
        })
        .sum();
    Ok(correct as f64 / n as f64)
}

/// `\int min(f1, f2)` for two univariate Gaussians given by mean and standard deviation.
pub fn gaussian_overlap(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let n1 = Normal::new(m1, s1).expect("positive standard deviation");
    let n2 = Normal::new(m2, s2).expect("positive standard deviation");
    if ((s1 - s2) / s1.max(s2)).abs() <= 1e-12 {
        let s = 0.5 * (s1 + s2);
        let std = Normal::new(0.0, 1.0).expect("standard normal");
        return 2.0 * std.cdf(-(m1 - m2).abs() / (2.0 * s));
    }
    // log f1 - log f2 = a x^2 + b x + c; unequal variances cross exactly twice.
    let (v1, v2) = (s1 * s1, s2 * s2);
    let a = 0.5 / v2 - 0.5 / v1;
    let b = m1 / v1 - m2 / v2;
    let c = m2 * m2 / (2.0 * v2) - m1 * m1 / (2.0 * v1) - (s1 / s2).ln();
    let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let q = -0.5 * (b + b.signum() * disc);
    let (mut r1, mut r2) = if q != 0.0 {
        (q / a, c / q)
    } else {
        (-b / (2.0 * a), -b / (2.0 * a))
    };
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let mass = |d: &Normal, lo: f64, hi: f64| {
        let upper = if hi.is_infinite() { 1.0 } else { d.cdf(hi) };
        let lower = if lo.is_infinite() { 0.0 } else { d.cdf(lo) };
        (upper - lower).max(0.0)
    };
    // The narrower Gaussian is the smaller one outside [r1, r2].
    let (narrow, wide) = if s1 < s2 { (&n1, &n2) } else { (&n2, &n1) };
    mass(narrow, f64::NEG_INFINITY, r1) + mass(wide, r1, r2) + mass(narrow, r2, f64::INFINITY)
}

/// Measure (iv) for exactly two classes.
pub fn lda_overlap(emb: &LabeledEmbedding) -> Result<f64> {
    if emb.n_classes() != 2 {
        return Err(Error::Measure(format!(
            "overlap needs exactly 2 classes, got {}",
            emb.n_classes()
        )));
    }
    if emb.class_sizes().iter().any(|&n| n < 2) {
        return Err(Error::Measure("overlap needs at least 2 points per class".into()));
    }
    let s = scatter_matrices(emb);
    let centroids = emb.centroids();
    let diff = centroids[0] - centroids[1];
    let ridge = 1e-12 * s.total.trace().max(f64::MIN_POSITIVE);
    let direction = match (s.within + Matrix2::identity() * ridge).try_inverse() {
        Some(inv) if diff.norm() > 0.0 => inv * diff,
        _ => Vector2::zeros(),
    };
    let direction = if direction.norm() > 0.0 && direction.iter().all(|v| v.is_finite()) {
        direction.normalize()
    } else {
        // Coincident means: the distributions are not separated along any
        // direction, so take the leading within-class axis.
        let eig = SymmetricEigen::new(s.within);
        let k = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
        eig.eigenvectors.column(k).into_owned()
    };
    let mut stats = [(0.0, 0.0, 0usize); 2];
    for (p, &c) in emb.points.iter().zip(&emb.class_of) {
        let z = p.dot(&direction);
        stats[c].0 += z;
        stats[c].2 += 1;
    }
    let means = [stats[0].0 / stats[0].2 as f64, stats[1].0 / stats[1].2 as f64];
    for (p, &c) in emb.points.iter().zip(&emb.class_of) {
        let z = p.dot(&direction) - means[c];
        stats[c].1 += z * z;
    }
    let sd: Vec<f64> = (0..2).map(|c| (stats[c].1 / stats[c].2 as f64).sqrt()).collect();
    let scale = means.iter().map(|m| m.abs()).fold(sd[0].max(sd[1]), f64::max);
    if sd.iter().any(|&s| s <= 1e-12 * scale || s == 0.0) {
        return Err(Error::DegenerateProjection);
    }
    Ok(gaussian_overlap(means[0], sd[0], means[1], sd[1]).clamp(0.0, 1.0))
}

/// Measure (iii) value together with its `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnMeasure {
    pub k: usize,
    pub accuracy: f64,
}

/// The four measures of one embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// `tr(S_T^-1 S_W)`, lower is better.
    pub measure_i: f64,
    /// Davies-Bouldin, lower is better.
    pub measure_ii: f64,
    /// Leave-one-out k-NN accuracy, higher is better.
    pub measure_iii: KnnMeasure,
    /// Two-class Gaussian overlap, lower is better; absent for other class counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_iv: Option<f64>,
    pub geometry: String,
    pub reducer: String,
    pub seed: Option<u64>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Computes every applicable measure for `embedding` under `labels`.
pub fn evaluate(embedding: &Embedding2D, labels: &[String], k: usize) -> Result<EvaluationReport> {
    let emb = LabeledEmbedding::from_embedding(embedding, labels)?;
    emb.require_classes(2)?;
    let measure_iv = if emb.n_classes() == 2 {
        Some(lda_overlap(&emb)?)
    } else {
        None
    };
    Ok(EvaluationReport {
        measure_i: intra_inter(&emb, None),
        measure_ii: davies_bouldin(&emb)?,
        measure_iii: KnnMeasure {
            k,
            accuracy: knn_accuracy(&emb, k)?,
        },
        measure_iv,
        geometry: embedding.provenance.geometry.clone(),
        reducer: embedding.provenance.reducer.clone(),
        seed: embedding.provenance.seed,
    })
}

/// Which measure the weight search optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    IntraInter,
    #[default]
    DaviesBouldin,
    Knn,
    Overlap,
}

impl Objective {
    /// Value to minimize.
    fn loss(self, report: &EvaluationReport) -> f64 {
        match self {
            Objective::IntraInter => report.measure_i,
            Objective::DaviesBouldin => report.measure_ii,
            Objective::Knn => -report.measure_iii.accuracy,
            Objective::Overlap => report.measure_iv.unwrap_or(f64::INFINITY),
        }
    }
}

/// Settings of [`search_convex_combination`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub reducer: Reducer,
    pub grid_step: f64,
    pub objective: Objective,
    pub k: usize,
    pub scaling: TfScaling,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            reducer: Reducer::Pca,
            grid_step: 0.1,
            objective: Objective::DaviesBouldin,
            k: DEFAULT_K,
            scaling: TfScaling::Relative,
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub weights: CombinationWeights,
    pub report: Result<EvaluationReport, String>,
}

/// Outcome of a weight search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub weights: CombinationWeights,
    pub report: EvaluationReport,
    pub embedding: Embedding2D,
    /// Every grid point in enumeration order.
    pub candidates: Vec<Candidate>,
}

/// All points of the simplex with `components` coordinates at resolution
/// `step`, in descending lexicographic order: `(1, 0, ..., 0)` comes first.
pub fn simplex_grid(components: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    if components == 0 {
        return Err(Error::InvalidConfig("need at least one component".into()));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidConfig(format!("grid step {step} must be in (0, 1]")));
    }
    let parts = (1.0 / step).round() as usize;
    if ((parts as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("grid step {step} does not divide 1")));
    }
    fn fill(left: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in (0..=left).rev() {
            prefix.push(v);
            fill(left - v, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut counts = Vec::new();
    fill(parts, components, &mut Vec::new(), &mut counts);
    Ok(counts
        .into_iter()
        .map(|c| c.into_iter().map(|v| v as f64 / parts as f64).collect())
        .collect())
}

fn embed_combination(
    components: &[TransformMatrix],
    weights: &CombinationWeights,
    docs: &DocumentMatrix,
    labels: &[String],
    config: &SearchConfig,
) -> Result<(Embedding2D, EvaluationReport)> {
    let h = convex_combination(components, weights)?;
    let points = PointCloud::new(docs.ids.clone(), transform(&h, docs.unlabeled(), config.scaling)?)?;
    let geometry = format!("{}{:?}", h.provenance, weights.as_slice());
    let embedding = config.reducer.embed(&points, &geometry)?;
    let report = evaluate(&embedding, labels, config.k)?;
    Ok((embedding, report))
}

/// Grid search over convex weights `alpha` for `H* = sum_i alpha_i H_i`.
///
/// Every grid point is embedded with the same reducer (and seed) and scored;
/// the first point in enumeration order with the lowest objective wins. The
/// vertices are on the grid, so the result is never worse than the best pure
/// component on the objective.
pub fn search_convex_combination(
    components: &[TransformMatrix],
    docs: &DocumentMatrix,
    config: &SearchConfig,
) -> Result<SearchResult> {
    let labels = docs
        .labels
        .as_deref()
        .ok_or_else(|| Error::Measure("weight search needs document labels".into()))?;
    let grid = simplex_grid(components.len(), config.grid_step)?;
    let evaluated: Vec<(CombinationWeights, Result<(Embedding2D, EvaluationReport)>)> = grid
        .into_par_iter()
        .map(|w| {
            let weights = CombinationWeights::new(w)?;
            let out = embed_combination(components, &weights, docs, labels, config);
            Ok((weights, out))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (i, (_, out)) in evaluated.iter().enumerate() {
        if let Ok((_, report)) = out {
            let loss = config.objective.loss(report);
            if loss.is_finite() && best.is_none_or(|(_, b)| loss < b) {
                best = Some((i, loss));
            }
        }
    }
    let Some((best, _)) = best else {
        return match evaluated.into_iter().next() {
            Some((_, Err(e))) => Err(e),
            _ => Err(Error::Measure("no grid point could be scored".into())),
        };
    };
    let candidates = evaluated
        .iter()
        .map(|(w, out)| Candidate {
            weights: w.clone(),
            report: out.as_ref().map(|(_, r)| r.clone()).map_err(|e| e.to_string()),
        })
        .collect();
    let (weights, out) = evaluated.into_iter().nth(best).expect("best index in range");
    let (embedding, report) = out.expect("best candidate succeeded");
    Ok(SearchResult {
        weights,
        report,
        embedding,
        candidates,
    })
}
