//! Contextual distributions and the Fisher diffusion kernel.
//!
//! The contextual distribution `q_w` of a word is the distribution of words
//! found in documents containing `w`:
//!
//! `q_w(u) = sum_x tfrel(u, x) tf(w, x) / sum_x tf(w, x)`
//!
//! where `tf` is a raw count and `tfrel` the length-normalized count. Each
//! document is weighted by how often it contains `w`, and contributes its
//! relative term frequencies, so every `q_w` is a proper distribution.
//! Similarity between words is the diffusion kernel on the multinomial
//! simplex, `T(u, v) = exp(-c * arccos^2(sum_w sqrt(q_u(w) q_v(w))))`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::corpus::{CountRow, Preprocessor, TermCounts, Vocabulary};
use crate::error::{Error, Result};
use crate::geometry::SimilarityMatrix;

/// A sparse distribution over vocabulary ids, sorted by id.
pub type SparseDist = Vec<(usize, f64)>;

/// Per-word contextual distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualTable {
    dists: Vec<SparseDist>,
    support: Vec<u64>,
}

impl ContextualTable {
    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }

    /// `q_w` as sparse `(id, probability)` pairs.
    pub fn dist(&self, w: usize) -> &[(usize, f64)] {
        &self.dists[w]
    }

    /// `q_w` as a dense vector.
    pub fn dense(&self, w: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dists.len()];
        for &(u, p) in &self.dists[w] {
            v[u] = p;
        }
        v
    }

    /// Number of documents (or n-gram records) containing `w`.
    pub fn support_count(&self, w: usize) -> u64 {
        self.support[w]
    }
}

/// Accumulates the mixture over weighted micro-documents.
///
/// Each item is `(weight, counts)`: a document repeated `weight` times.
fn accumulate<'a, I>(n_terms: usize, docs: I) -> ContextualTable
where
    I: IntoIterator<Item = (f64, &'a CountRow)>,
{
    let mut numer: Vec<HashMap<u32, f64>> = vec![HashMap::new(); n_terms];
    let mut denom = vec![0.0f64; n_terms];
    let mut support = vec![0u64; n_terms];
    for (weight, row) in docs {
        let len: u64 = row.iter().map(|&(_, c)| c as u64).sum();
        if len == 0 {
            continue;
        }
        let len = len as f64;
        for &(w, cw) in row {
            let selection = weight * cw as f64;
            denom[w as usize] += selection;
            support[w as usize] += weight as u64;
            let acc = &mut numer[w as usize];
            for &(u, cu) in row {
                *acc.entry(u).or_default() += selection * (cu as f64 / len);
            }
        }
    }
    let dists = numer
        .into_iter()
        .zip(&denom)
        .enumerate()
        .map(|(w, (acc, &z))| {
            if z == 0.0 {
                // Unseen word: all of its context is itself.
                return vec![(w, 1.0)];
            }
            let mut d: SparseDist = acc.into_iter().map(|(u, v)| (u as usize, v / z)).collect();
            d.sort_by_key(|&(u, _)| u);
            d
        })
        .collect();
    ContextualTable { dists, support }
}

/// Estimates `q_w` for every vocabulary word from a corpus.
pub fn contextual_distributions(docs: &TermCounts) -> Result<ContextualTable> {
    if docs.n_docs() == 0 || docs.rows.iter().all(|r| r.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    Ok(accumulate(docs.n_terms(), docs.rows.iter().map(|r| (1.0, r))))
}

/// `(tokens, count)` records of fixed gram length.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramTable {
    pub n: usize,
    pub records: Vec<(Vec<String>, u64)>,
}

impl NgramTable {
    pub fn new(n: usize, records: Vec<(Vec<String>, u64)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig("n-gram length must be at least 2".into()));
        }
        if let Some((gram, _)) = records.iter().find(|(g, c)| g.len() != n || *c == 0) {
            return Err(Error::InvalidConfig(format!(
                "record {gram:?} must have {n} tokens and a positive count"
            )));
        }
        Ok(Self { n, records })
    }

    /// Parses `"tok tok tok<TAB>count"` lines, normalizing tokens with `pre`
    /// and dropping every token outside `vocab`. Records left with no
    /// vocabulary word are skipped; identical reduced grams are merged.
    pub fn load_filtered(path: &Path, pre: &Preprocessor, vocab: &Vocabulary) -> Result<FilteredNgrams> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_filtered(&text, &path.display().to_string(), pre, vocab)
    }

    pub fn parse_filtered(text: &str, source: &str, pre: &Preprocessor, vocab: &Vocabulary) -> Result<FilteredNgrams> {
        let mut merged: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        let mut n = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (gram, count) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(source, i + 1, "expected '<tokens>\\t<count>'"))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(source, i + 1, "bad count"))?;
            if count == 0 {
                return Err(Error::parse(source, i + 1, "count must be positive"));
            }
            let tokens: Vec<&str> = gram.split_whitespace().collect();
            match n {
                None => n = Some(tokens.len()),
                Some(len) if len != tokens.len() => {
                    return Err(Error::parse(source, i + 1, format!("expected {len} tokens")))
                }
                _ => {}
            }
            let mut ids: Vec<u32> = tokens
                .iter()
                .filter_map(|t| pre.normalize_word(t).and_then(|w| vocab.id(&w)))
                .map(|id| id as u32)
                .collect();
            if ids.is_empty() {
                continue;
            }
            ids.sort_unstable();
            *merged.entry(ids).or_default() += count;
        }
        Ok(FilteredNgrams {
            n: n.unwrap_or(0),
            n_terms: vocab.len(),
            grams: merged.into_iter().map(|(ids, c)| (bag(&ids), c)).collect(),
        })
    }

    /// Drops out-of-vocabulary tokens from every record.
    pub fn filter(&self, vocab: &Vocabulary) -> FilteredNgrams {
        let mut merged: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (gram, count) in &self.records {
            let mut ids: Vec<u32> = gram.iter().filter_map(|t| vocab.id(t)).map(|id| id as u32).collect();
            if ids.is_empty() {
                continue;
            }
            ids.sort_unstable();
            *merged.entry(ids).or_default() += count;
        }
        FilteredNgrams {
            n: self.n,
            n_terms: vocab.len(),
            grams: merged.into_iter().map(|(ids, c)| (bag(&ids), c)).collect(),
        }
    }
}

fn bag(sorted_ids: &[u32]) -> CountRow {
    let mut row: CountRow = Vec::new();
    for &id in sorted_ids {
        match row.last_mut() {
            Some((last, c)) if *last == id => *c += 1,
            _ => row.push((id, 1)),
        }
    }
    row
}

/// N-gram records reduced to in-vocabulary term bags.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredNgrams {
    pub n: usize,
    pub n_terms: usize,
    pub grams: Vec<(CountRow, u64)>,
}

/// Estimates `q_w` from n-grams: a record with count `k` is a micro-document
/// repeated `k` times.
pub fn ngram_contextual_distributions(grams: &FilteredNgrams) -> Result<ContextualTable> {
    if grams.grams.is_empty() {
        return Err(Error::EmptyNgramTable);
    }
    Ok(accumulate(
        grams.n_terms,
        grams.grams.iter().map(|(row, k)| (*k as f64, row)),
    ))
}

/// Bhattacharyya coefficient `sum_w sqrt(q_u(w) q_v(w))`, clamped to `[0, 1]`.
pub fn hellinger_affinity(qu: &[(usize, f64)], qv: &[(usize, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    while i < qu.len() && j < qv.len() {
        match qu[i].0.cmp(&qv[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += (qu[i].1 * qv[j].1).sqrt();
                i += 1;
                j += 1;
            }
        }
    }
    s.clamp(0.0, 1.0)
}

/// Kernel scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionConfig {
    pub c: f64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

/// `exp(-c * arccos^2(affinity))`.
pub fn kernel_value(affinity: f64, c: f64) -> f64 {
    let a = affinity.clamp(0.0, 1.0).acos();
    (-c * a * a).exp()
}

/// Builds the diffusion similarity matrix over all vocabulary words.
pub fn diffusion_kernel(table: &ContextualTable, config: DiffusionConfig) -> Result<SimilarityMatrix> {
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::InvalidConfig("kernel scale c must be > 0".into()));
    }
    let n = table.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|u| {
            ((u + 1)..n)
                .map(|v| kernel_value(hellinger_affinity(table.dist(u), table.dist(v)), config.c))
                .collect()
        })
        .collect();
    let mut t = DMatrix::identity(n, n);
    for (u, row) in upper.into_iter().enumerate() {
        for (k, val) in row.into_iter().enumerate() {
            let v = u + 1 + k;
            t[(u, v)] = val;
            t[(v, u)] = val;
        }
    }
    SimilarityMatrix::new(t)
}
