//! JSON geometry specification files.
//!
//! Two layouts are accepted. The cluster layout:
//!
//! ```json
//! {"clusters": [{"name": "pos", "words": ["good", "great"], "rho_self": 1.0, "importance": 3.0}],
//!  "rho_pairs": [{"a": "pos", "b": "pos", "value": 0.2}],
//!  "tree": {"name": "root", "children": [{"name": "pos"}, {"name": "neg"}]},
//!  "beta": 0.5,
//!  "rest": {"name": "neutral", "rho_self": 1.0, "importance": 0.5}}
//! ```
//!
//! and the soft-score layout:
//!
//! ```json
//! {"cluster_names": ["syntax", "semantics"],
//!  "words": [{"word": "parser", "scores": [2, 0], "importance": 3}],
//!  "rho_self": 1.0}
//! ```
//!
//! Spec words are normalized with the corpus preprocessing before lookup;
//! words outside the vocabulary are ignored. In the cluster layout every
//! vocabulary word not listed goes to the `rest` cluster (default name
//! `"rest"`, `rho_self = 1`, `importance = 1`). In the soft layout unlisted
//! words get all-zero scores and importance 1.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Preprocessor, Vocabulary};
use crate::error::{Error, Result};

use super::{
    build_manual_d, build_manual_r, build_soft_d, build_soft_r, compose_h, Cluster, GeometryParams, Provenance,
    SoftScoreSpec, TransformMatrix, WordClustering,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub name: String,
    pub words: Vec<String>,
    #[serde(default = "one")]
    pub rho_self: f64,
    #[serde(default = "one")]
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoPair {
    pub a: String,
    pub b: String,
    pub value: f64,
}

/// Nested cluster hierarchy; leaves name clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ClusterTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestCluster {
    #[serde(default = "rest_name")]
    pub name: String,
    #[serde(default = "one")]
    pub rho_self: f64,
    #[serde(default = "one")]
    pub importance: f64,
}

impl Default for RestCluster {
    fn default() -> Self {
        Self {
            name: rest_name(),
            rho_self: 1.0,
            importance: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn rest_name() -> String {
    "rest".into()
}

fn default_beta() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualSpec {
    pub clusters: Vec<ClusterEntry>,
    #[serde(default)]
    pub rho_pairs: Vec<RhoPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<ClusterTree>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub rest: RestCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftWord {
    pub word: String,
    pub scores: Vec<f64>,
    #[serde(default = "one")]
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftSpec {
    pub cluster_names: Vec<String>,
    pub words: Vec<SoftWord>,
    #[serde(default = "one")]
    pub rho_self: f64,
}

/// Either geometry spec layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySpec {
    Manual(ManualSpec),
    Soft(SoftSpec),
}

impl GeometrySpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(canonical))
    }

    /// Builds `H = R D` over `vocab`.
    pub fn build(&self, vocab: &Vocabulary, pre: &Preprocessor) -> Result<TransformMatrix> {
        match self {
            GeometrySpec::Manual(spec) => {
                let (clustering, params) = spec.resolve(vocab, pre)?;
                let r = build_manual_r(&clustering, &params, vocab.words())?;
                let d = build_manual_d(&clustering, &params)?;
                compose_h(&r, &d, Provenance::Manual)
            }
            GeometrySpec::Soft(spec) => {
                let soft = spec.resolve(vocab, pre)?;
                let r = build_soft_r(&soft, vocab.words())?;
                let d = build_soft_d(&soft)?;
                compose_h(&r, &d, Provenance::Soft)
            }
        }
    }
}

fn lookup(vocab: &Vocabulary, pre: &Preprocessor, word: &str) -> Option<usize> {
    vocab
        .id(word)
        .or_else(|| pre.normalize_word(word).and_then(|w| vocab.id(&w)))
}

impl ManualSpec {
    /// Maps the spec onto `vocab`, producing a partition and its parameters.
    pub fn resolve(&self, vocab: &Vocabulary, pre: &Preprocessor) -> Result<(WordClustering, GeometryParams)> {
        let mut assigned: HashMap<usize, usize> = HashMap::new();
        let mut clusters: Vec<Cluster> = Vec::new();
        for (a, entry) in self.clusters.iter().enumerate() {
            let mut members = Vec::new();
            for w in &entry.words {
                let Some(id) = lookup(vocab, pre, w) else { continue };
                match assigned.get(&id) {
                    Some(&prev) if prev == a => {}
                    Some(&prev) => {
                        return Err(Error::InvalidSpec(format!(
                            "word {:?} appears in clusters {:?} and {:?}",
                            vocab.word(id),
                            self.clusters[prev].name,
                            entry.name
                        )))
                    }
                    None => {
                        assigned.insert(id, a);
                        members.push(id);
                    }
                }
            }
            members.sort_unstable();
            clusters.push(Cluster {
                name: entry.name.clone(),
                members,
            });
        }
        let rest: Vec<usize> = (0..vocab.len()).filter(|w| !assigned.contains_key(w)).collect();
        let mut rho_self: Vec<f64> = self.clusters.iter().map(|c| c.rho_self).collect();
        let mut importance: Vec<f64> = self.clusters.iter().map(|c| c.importance).collect();
        if !rest.is_empty() {
            clusters.push(Cluster {
                name: self.rest.name.clone(),
                members: rest,
            });
            rho_self.push(self.rest.rho_self);
            importance.push(self.rest.importance);
        }
        let clustering = WordClustering::new(vocab.len(), clusters)?;

        let mut params = GeometryParams::new(clustering.n_clusters());
        params.rho_self = rho_self;
        params.importance = importance;
        if let Some(tree) = &self.tree {
            if !(self.beta > 0.0 && self.beta < 1.0) {
                return Err(Error::InvalidSpec("beta must lie in (0, 1)".into()));
            }
            for ((a, b), dist) in tree_distances(tree)? {
                let (Some(ia), Some(ib)) = (clustering.index_of(&a), clustering.index_of(&b)) else {
                    continue;
                };
                if ia != ib {
                    params.set_rho(ia, ib, self.beta.powi(dist as i32));
                }
            }
        }
        for pair in &self.rho_pairs {
            let find = |name: &str| {
                clustering
                    .index_of(name)
                    .ok_or_else(|| Error::InvalidSpec(format!("rho pair names unknown cluster {name:?}")))
            };
            params.set_rho(find(&pair.a)?, find(&pair.b)?, pair.value);
        }
        params.validate(&clustering)?;
        Ok((clustering, params))
    }
}

/// Edge distances between every pair of distinct leaves of `tree`.
fn tree_distances(tree: &ClusterTree) -> Result<BTreeMap<(String, String), usize>> {
    // Root-to-leaf paths; distance is the sum of both depths below the
    // deepest shared ancestor.
    fn walk(node: &ClusterTree, path: &mut Vec<usize>, next_id: &mut usize, out: &mut Vec<(String, Vec<usize>)>) {
        let id = *next_id;
        *next_id += 1;
        path.push(id);
        if node.children.is_empty() {
            out.push((node.name.clone(), path.clone()));
        }
        for child in &node.children {
            walk(child, path, next_id, out);
        }
        path.pop();
    }
    let mut leaves = Vec::new();
    walk(tree, &mut Vec::new(), &mut 0, &mut leaves);
    let mut out = BTreeMap::new();
    for (i, (a, pa)) in leaves.iter().enumerate() {
        for (b, pb) in &leaves[i + 1..] {
            if a == b {
                return Err(Error::InvalidSpec(format!("cluster {a:?} appears twice in the tree")));
            }
            let shared = pa.iter().zip(pb).take_while(|(x, y)| x == y).count();
            let d = (pa.len() - shared) + (pb.len() - shared);
            out.insert((a.clone(), b.clone()), d);
        }
    }
    Ok(out)
}

impl SoftSpec {
    pub fn resolve(&self, vocab: &Vocabulary, pre: &Preprocessor) -> Result<SoftScoreSpec> {
        let k = self.cluster_names.len();
        let mut scores = vec![vec![0.0; k]; vocab.len()];
        let mut importance = vec![1.0; vocab.len()];
        for entry in &self.words {
            if entry.scores.len() != k {
                return Err(Error::InvalidSpec(format!(
                    "word {:?} has {} scores, expected {k}",
                    entry.word,
                    entry.scores.len()
                )));
            }
            if let Some(id) = lookup(vocab, pre, &entry.word) {
                scores[id] = entry.scores.clone();
                importance[id] = entry.importance;
            }
        }
        let spec = SoftScoreSpec {
            cluster_names: self.cluster_names.clone(),
            scores,
            importance,
            rho_self: self.rho_self,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Cluster-level summary of a manual geometry: mean block values of `R` and
/// the per-cluster importances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub clusters: Vec<String>,
    pub sizes: Vec<usize>,
    /// `blocks[a][b]` is the mean of `R_ij` over `v_i` in `a`, `v_j` in `b`.
    pub blocks: Vec<Vec<f64>>,
    pub importance: Vec<f64>,
}

impl ManualSpec {
    pub fn summarize(&self, vocab: &Vocabulary, pre: &Preprocessor) -> Result<ClusterSummary> {
        let (clustering, params) = self.resolve(vocab, pre)?;
        let r = build_manual_r(&clustering, &params, vocab.words())?;
        let k = clustering.n_clusters();
        let mut sums = vec![vec![0.0; k]; k];
        for j in 0..vocab.len() {
            let b = clustering.cluster_of(j);
            for (i, v) in r.matrix().column_entries(j) {
                sums[clustering.cluster_of(i)][b] += v;
            }
        }
        let sizes: Vec<usize> = clustering.clusters().iter().map(|c| c.members.len()).collect();
        let blocks = (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| sums[a][b] / (sizes[a] * sizes[b]).max(1) as f64)
                    .collect()
            })
            .collect();
        Ok(ClusterSummary {
            clusters: clustering.clusters().iter().map(|c| c.name.clone()).collect(),
            sizes,
            blocks,
            importance: params.importance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn plain() -> Preprocessor {
        Preprocessor {
            lowercase: true,
            stem: false,
            stopwords: Default::default(),
        }
    }

    fn two_cluster_json() -> &'static str {
        r#"{"clusters": [
              {"name": "c1", "words": ["v1", "v2", "v3"], "rho_self": 0.8, "importance": 5},
              {"name": "c2", "words": ["v4", "v5"], "rho_self": 0.9, "importance": 3}],
            "rho_pairs": [{"a": "c1", "b": "c1", "value": 0.1},
                          {"a": "c2", "b": "c2", "value": 0.1}]}"#
    }

    #[test]
    fn two_cluster_spec_file_reproduces_h() {
        let spec: GeometrySpec = serde_json::from_str(two_cluster_json()).unwrap();
        assert!(matches!(spec, GeometrySpec::Manual(_)));
        let vocab = Vocabulary::new(["v1", "v2", "v3", "v4", "v5"]);
        let h = spec.build(&vocab, &plain()).unwrap().matrix.to_dense();
        let expected = DMatrix::from_row_slice(
            5,
            5,
            &[
                4.0, 0.5, 0.5, 0.0, 0.0, //
                0.5, 4.0, 0.5, 0.0, 0.0, //
                0.5, 0.5, 4.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 2.7, 0.3, //
                0.0, 0.0, 0.0, 0.3, 2.7,
            ],
        );
        assert!((h - expected).abs().max() < 1e-14);
    }

    #[test]
    fn unlisted_words_fall_into_rest() {
        let spec: ManualSpec = serde_json::from_str(
            r#"{"clusters": [{"name": "a", "words": ["x", "unknown"]}],
                "rest": {"name": "other", "importance": 0.5}}"#,
        )
        .unwrap();
        let vocab = Vocabulary::new(["x", "y", "z"]);
        let (clustering, params) = spec.resolve(&vocab, &plain()).unwrap();
        assert_eq!(clustering.n_clusters(), 2);
        assert_eq!(clustering.clusters()[1].name, "other");
        assert_eq!(clustering.clusters()[1].members, vec![1, 2]);
        assert_eq!(params.importance, vec![1.0, 0.5]);
    }

    #[test]
    fn words_are_normalized_like_the_corpus() {
        let spec: ManualSpec =
            serde_json::from_str(r#"{"clusters": [{"name": "a", "words": ["Running", "cats"]}]}"#).unwrap();
        let pre = Preprocessor { stem: true, ..plain() };
        let vocab = Vocabulary::new(["run", "cat", "dog"]);
        let (clustering, _) = spec.resolve(&vocab, &pre).unwrap();
        assert_eq!(clustering.clusters()[0].members, vec![0, 1]);
    }

    #[test]
    fn word_in_two_clusters_is_rejected() {
        let spec: ManualSpec =
            serde_json::from_str(r#"{"clusters": [{"name": "a", "words": ["x"]}, {"name": "b", "words": ["x"]}]}"#)
                .unwrap();
        assert!(spec.resolve(&Vocabulary::new(["x"]), &plain()).is_err());
    }

    #[test]
    fn tree_sets_cross_affinities() {
        let spec: ManualSpec = serde_json::from_str(
            r#"{"clusters": [{"name": "a", "words": ["x"]}, {"name": "b", "words": ["y"]},
                             {"name": "c", "words": ["z"]}],
                "tree": {"name": "root", "children": [
                    {"name": "ab", "children": [{"name": "a"}, {"name": "b"}]},
                    {"name": "c"}]},
                "beta": 0.5,
                "rho_pairs": [{"a": "a", "b": "c", "value": 0.01}]}"#,
        )
        .unwrap();
        let (_, params) = spec.resolve(&Vocabulary::new(["x", "y", "z"]), &plain()).unwrap();
        assert_eq!(params.rho(0, 1), 0.25);
        assert_eq!(params.rho(1, 2), 0.125);
        // Explicit pairs override the tree.
        assert_eq!(params.rho(0, 2), 0.01);
        assert_eq!(params.rho(0, 0), 0.0);
    }

    #[test]
    fn soft_spec_resolution() {
        let spec: GeometrySpec = serde_json::from_str(
            r#"{"cluster_names": ["p", "q"],
                "words": [{"word": "x", "scores": [2, 1], "importance": 3},
                          {"word": "y", "scores": [2, 1]}],
                "rho_self": 1}"#,
        )
        .unwrap();
        let vocab = Vocabulary::new(["x", "y", "z"]);
        let h = spec.build(&vocab, &plain()).unwrap();
        assert_eq!(h.provenance, Provenance::Soft);
        let h = h.matrix.to_dense();
        assert!((h[(0, 0)] - 1.5).abs() < 1e-15);
        assert!((h[(1, 0)] - 1.5).abs() < 1e-15);
        assert_eq!(h[(2, 2)], 1.0);
    }

    #[test]
    fn content_hash_tracks_values() {
        let spec: GeometrySpec = serde_json::from_str(two_cluster_json()).unwrap();
        let mut edited = spec.clone();
        if let GeometrySpec::Manual(m) = &mut edited {
            m.clusters[0].rho_self = 0.7;
        }
        assert_eq!(spec.content_hash(), spec.clone().content_hash());
        assert_ne!(spec.content_hash(), edited.content_hash());
    }

    #[test]
    fn summary_blocks() {
        let spec: ManualSpec = serde_json::from_str(two_cluster_json()).unwrap();
        let vocab = Vocabulary::new(["v1", "v2", "v3", "v4", "v5"]);
        let s = spec.summarize(&vocab, &plain()).unwrap();
        assert_eq!(s.sizes, vec![3, 2]);
        assert!((s.blocks[0][0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.blocks[0][1], 0.0);
        assert_eq!(s.importance, vec![5.0, 3.0]);
    }
}
