//! Manually specified geometries: cluster blends and per-word soft scores.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{DiagonalWeights, GeometryParams, MarkovMatrix, SoftScoreSpec, WordClustering};

/// Builds the column-stochastic blend `R` from a word clustering.
///
/// Before normalization `R_jj = rho_a` for `v_j` in `C_a`, and
/// `R_ij = rho_ab` for `i != j` with `v_i` in `C_a`, `v_j` in `C_b`.
/// `names` gives the word strings used in error messages.
pub fn build_manual_r(clustering: &WordClustering, params: &GeometryParams, names: &[String]) -> Result<MarkovMatrix> {
    params.validate(clustering)?;
    let n = clustering.n_words();
    let clusters = clustering.clusters();
    let columns: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|j| {
            let b = clustering.cluster_of(j);
            let mut col = Vec::new();
            for (a, cluster) in clusters.iter().enumerate() {
                let rho = params.rho(a, b);
                if rho == 0.0 {
                    continue;
                }
                col.extend(cluster.members.iter().filter(|&&i| i != j).map(|&i| (i, rho)));
            }
            if params.rho_self[b] != 0.0 {
                col.push((j, params.rho_self[b]));
            }
            col.sort_by_key(|&(i, _)| i);
            col
        })
        .collect();
    normalize_columns(n, columns, names)
}

fn normalize_columns(n: usize, columns: Vec<Vec<(usize, f64)>>, names: &[String]) -> Result<MarkovMatrix> {
    let mut normalized = Vec::with_capacity(columns.len());
    for (j, col) in columns.into_iter().enumerate() {
        let sum: f64 = col.iter().map(|&(_, v)| v).sum();
        if sum <= 0.0 {
            let name = names.get(j).cloned().unwrap_or_else(|| j.to_string());
            return Err(Error::IsolatedWordColumn(name));
        }
        normalized.push(col.into_iter().map(|(i, v)| (i, v / sum)).collect());
    }
    MarkovMatrix::new(Matrix::from_columns(n, normalized))
}

/// `D_ii = d_a` for `v_i` in `C_a`.
pub fn build_manual_d(clustering: &WordClustering, params: &GeometryParams) -> Result<DiagonalWeights> {
    params.validate(clustering)?;
    DiagonalWeights::new(
        (0..clustering.n_words())
            .map(|w| params.importance[clustering.cluster_of(w)])
            .collect(),
    )
}

/// Builds `R` from per-word relatedness score vectors.
///
/// Off-diagonal affinity is the cosine similarity of two words' score
/// vectors (0 when either is all-zero); the diagonal is `rho_self`.
pub fn build_soft_r(spec: &SoftScoreSpec, names: &[String]) -> Result<MarkovMatrix> {
    spec.validate()?;
    let norms: Vec<f64> = spec
        .scores
        .iter()
        .map(|s| s.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if norms.iter().all(|&n| n == 0.0) {
        return Err(Error::DegenerateScoreTable);
    }
    let unit: Vec<Option<Vec<f64>>> = spec
        .scores
        .iter()
        .zip(&norms)
        .map(|(s, &n)| (n > 0.0).then(|| s.iter().map(|v| v / n).collect()))
        .collect();
    let n = spec.scores.len();
    let columns = (0..n)
        .map(|j| {
            let mut col = Vec::new();
            for i in 0..n {
                let v = if i == j {
                    spec.rho_self
                } else {
                    match (&unit[i], &unit[j]) {
                        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
                        _ => 0.0,
                    }
                };
                if v != 0.0 {
                    col.push((i, v));
                }
            }
            col
        })
        .collect();
    normalize_columns(n, columns, names)
}

/// `D_ii` is word `i`'s importance.
pub fn build_soft_d(spec: &SoftScoreSpec) -> Result<DiagonalWeights> {
    spec.validate()?;
    DiagonalWeights::new(spec.importance.clone())
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    use super::super::{compose_h, Cluster, Provenance};
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{}", i + 1)).collect()
    }

    /// Two clusters {v1,v2,v3}, {v4,v5} with the blend and importance values
    /// of the worked two-cluster example.
    fn two_cluster_example() -> (WordClustering, GeometryParams) {
        let clustering = WordClustering::new(
            5,
            vec![
                Cluster {
                    name: "c1".into(),
                    members: vec![0, 1, 2],
                },
                Cluster {
                    name: "c2".into(),
                    members: vec![3, 4],
                },
            ],
        )
        .unwrap();
        let mut params = GeometryParams::new(2);
        params.rho_self = vec![0.8, 0.9];
        params.set_rho(0, 0, 0.1);
        params.set_rho(1, 1, 0.1);
        params.set_rho(0, 1, 0.0);
        params.importance = vec![5.0, 3.0];
        (clustering, params)
    }

    fn expected_r() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            5,
            5,
            &[
                0.8, 0.1, 0.1, 0.0, 0.0, //
                0.1, 0.8, 0.1, 0.0, 0.0, //
                0.1, 0.1, 0.8, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.9, 0.1, //
                0.0, 0.0, 0.0, 0.1, 0.9,
            ],
        )
    }

    #[test]
    fn two_cluster_example_r_and_d() {
        let (clustering, params) = two_cluster_example();
        let r = build_manual_r(&clustering, &params, &names(5)).unwrap();
        assert!((r.matrix().to_dense() - expected_r()).abs().max() < 1e-15);
        let d = build_manual_d(&clustering, &params).unwrap();
        assert_eq!(d.as_slice(), &[5.0, 5.0, 5.0, 3.0, 3.0]);
        let h = compose_h(&r, &d, Provenance::Manual).unwrap().matrix.to_dense();
        let r = expected_r();
        for j in 0..5 {
            let scale = if j < 3 { 5.0 } else { 3.0 };
            assert!((h.column(j) - r.column(j) * scale).abs().max() < 1e-14);
        }
    }

    #[test]
    fn single_cluster_cases() {
        let one = |n| {
            WordClustering::new(
                n,
                vec![Cluster {
                    name: "c".into(),
                    members: (0..n).collect(),
                }],
            )
            .unwrap()
        };
        let mut params = GeometryParams::new(1);
        params.set_rho(0, 0, 0.0);
        let r = build_manual_r(&one(3), &params, &names(3)).unwrap();
        assert_eq!(r.matrix().to_dense(), DMatrix::identity(3, 3));

        params.set_rho(0, 0, 1.0);
        let r = build_manual_r(&one(2), &params, &names(2)).unwrap();
        assert_eq!(r.matrix().to_dense(), DMatrix::from_element(2, 2, 0.5));
    }

    #[test]
    fn zero_importance_annihilates_cluster() {
        let (clustering, mut params) = two_cluster_example();
        params.importance = vec![1.0, 0.0];
        let r = build_manual_r(&clustering, &params, &names(5)).unwrap();
        let d = build_manual_d(&clustering, &params).unwrap();
        let h = compose_h(&r, &d, Provenance::Manual).unwrap().matrix.to_dense();
        assert_eq!(h.column(3).amax(), 0.0);
        assert_eq!(h.column(4).amax(), 0.0);
    }

    #[test]
    fn isolated_column_names_the_word() {
        let clustering = WordClustering::new(
            2,
            vec![
                Cluster {
                    name: "a".into(),
                    members: vec![0],
                },
                Cluster {
                    name: "b".into(),
                    members: vec![1],
                },
            ],
        )
        .unwrap();
        let mut params = GeometryParams::new(2);
        params.rho_self = vec![1.0, 0.0];
        let err = build_manual_r(&clustering, &params, &["x".into(), "y".into()]).unwrap_err();
        assert!(matches!(err, Error::IsolatedWordColumn(ref w) if w == "y"), "{err}");
    }

    fn soft(scores: Vec<Vec<f64>>, rho_self: f64) -> SoftScoreSpec {
        SoftScoreSpec {
            cluster_names: vec!["p".into(), "q".into()],
            importance: vec![1.0; scores.len()],
            scores,
            rho_self,
        }
    }

    #[test]
    fn soft_r_examples() {
        let r = build_soft_r(&soft(vec![vec![2.0, 1.0], vec![2.0, 1.0]], 1.0), &names(2)).unwrap();
        assert!((r.matrix().to_dense() - DMatrix::from_element(2, 2, 0.5)).abs().max() < 1e-15);

        let r = build_soft_r(&soft(vec![vec![2.0, 0.0], vec![0.0, 1.0]], 1.0), &names(2)).unwrap();
        assert_eq!(r.matrix().to_dense(), DMatrix::identity(2, 2));

        let r = build_soft_r(
            &soft(vec![vec![1.0, 1.0], vec![0.0, 0.0], vec![1.0, 0.0]], 1.0),
            &names(3),
        )
        .unwrap();
        let col = r.matrix().to_dense().column(1).clone_owned();
        assert_eq!(col.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn soft_r_errors() {
        let err = build_soft_r(&soft(vec![vec![0.0, 0.0], vec![0.0, 0.0]], 1.0), &names(2));
        assert!(matches!(err, Err(Error::DegenerateScoreTable)));
        assert!(build_soft_r(&soft(vec![vec![3.0, 0.0]], 1.0), &names(1)).is_err());
        let mut bad = soft(vec![vec![1.0, 0.0]], 1.0);
        bad.importance = vec![4.0];
        assert!(build_soft_d(&bad).is_err());
    }

    fn random_spec() -> impl Strategy<Value = (WordClustering, GeometryParams)> {
        (1usize..5, 1usize..12).prop_flat_map(|(r, extra)| {
            let n = r + extra;
            (
                proptest::collection::vec(0..r, n),
                proptest::collection::vec(0.01f64..3.0, r),
                proptest::collection::vec(0.0f64..2.0, r * (r + 1) / 2),
                proptest::collection::vec(0.0f64..3.0, r),
            )
                .prop_map(move |(assign, rho_self, pairs, importance)| {
                    // Ensure every cluster is non-empty.
                    let mut assign = assign;
                    for (a, slot) in assign.iter_mut().enumerate().take(r) {
                        *slot = a;
                    }
                    let clusters = (0..r)
                        .map(|a| Cluster {
                            name: format!("c{a}"),
                            members: (0..assign.len()).filter(|&w| assign[w] == a).collect(),
                        })
                        .collect();
                    let clustering = WordClustering::new(assign.len(), clusters).unwrap();
                    let mut params = GeometryParams::new(r);
                    params.rho_self = rho_self;
                    params.importance = importance;
                    let mut k = 0;
                    for a in 0..r {
                        for b in a..r {
                            params.set_rho(a, b, pairs[k]);
                            k += 1;
                        }
                    }
                    (clustering, params)
                })
        })
    }

    proptest! {
        #[test]
        fn manual_r_is_column_stochastic((clustering, params) in random_spec()) {
            let n = clustering.n_words();
            let r = build_manual_r(&clustering, &params, &names(n)).unwrap();
            for j in 0..n {
                prop_assert!((r.matrix().column_sum(j) - 1.0).abs() <= 1e-9);
            }
            prop_assert!(r.matrix().to_dense().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn no_cross_affinity_gives_block_diagonal((clustering, mut params) in random_spec()) {
            let r_count = clustering.n_clusters();
            for a in 0..r_count {
                for b in 0..r_count {
                    if a != b {
                        params.set_rho(a, b, 0.0);
                    }
                }
            }
            let n = clustering.n_words();
            let r = build_manual_r(&clustering, &params, &names(n)).unwrap().matrix().to_dense();
            for i in 0..n {
                for j in 0..n {
                    if clustering.cluster_of(i) != clustering.cluster_of(j) {
                        prop_assert_eq!(r[(i, j)], 0.0);
                    }
                }
            }
        }
    }
}
