//! Corpus ingestion: tokenization, preprocessing and the document-term matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stem::porter_stem;

/// A document as read from disk. The label is carried for evaluation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Preprocessing block of the pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub stem: bool,
    pub stopword_file: Option<PathBuf>,
    pub vocab_cap: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stem: true,
            stopword_file: None,
            vocab_cap: 2000,
        }
    }
}

/// The resolved preprocessing recipe: configuration plus the loaded stopword set.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    pub lowercase: bool,
    pub stem: bool,
    pub stopwords: HashSet<String>,
}

impl Preprocessor {
    pub fn from_config(config: &PreprocessConfig) -> Result<Self> {
        let stopwords = match &config.stopword_file {
            Some(path) => load_stopwords(path)?,
            None => HashSet::new(),
        };
        Ok(Self {
            lowercase: config.lowercase,
            stem: config.stem,
            stopwords,
        })
    }

    /// Tokenizes and preprocesses one text.
    pub fn process(&self, text: &str) -> Vec<String> {
        let tokens = if self.lowercase {
            tokenize(text)
        } else {
            split_alphabetic(text)
        };
        preprocess(tokens, &self.stopwords, self.stem)
    }

    /// Maps a single external word (spec file, taxonomy member, n-gram token)
    /// onto the form vocabulary entries take. Stopwords map to `None`.
    pub fn normalize_word(&self, word: &str) -> Option<String> {
        let mut tokens = self.process(word);
        if tokens.len() == 1 {
            tokens.pop()
        } else {
            None
        }
    }
}

/// Reads a stopword list, one word per line. Blank lines are skipped.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

fn split_alphabetic(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Lowercased maximal runs of alphabetic characters.
///
/// ```
/// assert_eq!(lingeo::corpus::tokenize("The cat, the CAT!"), ["the", "cat", "the", "cat"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Drops stopwords and optionally replaces each token by its Porter stem.
pub fn preprocess(tokens: Vec<String>, stopwords: &HashSet<String>, stem: bool) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .map(|t| if stem { porter_stem(&t) } else { t })
        .collect()
}

/// Ordered list of distinct terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from distinct words. Later duplicates are ignored.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Vocabulary {
            words: Vec::new(),
            index: HashMap::new(),
        };
        for w in words {
            let w = w.into();
            if !out.index.contains_key(&w) {
                out.index.insert(w.clone(), out.words.len());
                out.words.push(w);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        Vocabulary::new(words)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

/// Keeps the `cap` most frequent tokens. Ties at equal count go to the
/// lexicographically smaller token; the vocabulary is ordered by rank.
pub fn build_vocabulary<S: AsRef<str>>(docs: &[Vec<S>], cap: usize) -> Result<Vocabulary> {
    if cap == 0 {
        return Err(Error::InvalidConfig("vocabulary cap must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for token in docs.iter().flatten() {
        *counts.entry(token.as_ref()).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    // BTreeMap order is lexicographic; a stable sort on count keeps it for ties.
    ranked.sort_by_key(|&(_, count)| std::cmp::Reverse(count));
    Ok(Vocabulary::new(
        ranked.into_iter().take(cap).map(|(w, _)| w.to_string()),
    ))
}

/// Sparse term counts of one document, sorted by term id.
pub type CountRow = Vec<(u32, u32)>;

/// Unlabeled view of a document-term matrix.
///
/// Geometry construction, diffusion estimation and reduction only ever see
/// this type, so labels cannot leak into the unsupervised stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCounts {
    pub vocab: Vocabulary,
    pub rows: Vec<CountRow>,
}

impl TermCounts {
    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    /// Total per-term counts across all documents.
    pub fn term_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.vocab.len()];
        for row in &self.rows {
            for &(t, c) in row {
                totals[t as usize] += c as u64;
            }
        }
        totals
    }

    /// Dense tf vector of document `doc`, optionally L1-normalized.
    pub fn dense_row(&self, doc: usize, normalize: bool) -> Vec<f64> {
        let mut v = vec![0.0; self.vocab.len()];
        let row = &self.rows[doc];
        let total: u64 = row.iter().map(|&(_, c)| c as u64).sum();
        let scale = if normalize && total > 0 {
            1.0 / total as f64
        } else {
            1.0
        };
        for &(t, c) in row {
            v[t as usize] = c as f64 * scale;
        }
        v
    }
}

/// Document-term count matrix with document ids and optional labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMatrix {
    pub counts: TermCounts,
    pub ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
}

impl DocumentMatrix {
    pub fn vocab(&self) -> &Vocabulary {
        &self.counts.vocab
    }

    pub fn n_docs(&self) -> usize {
        self.ids.len()
    }

    /// The label-free view handed to unsupervised stages.
    pub fn unlabeled(&self) -> &TermCounts {
        &self.counts
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Counts in-vocabulary tokens of each document. Out-of-vocabulary tokens are dropped.
pub fn count_matrix<S: AsRef<str>>(docs: &[Vec<S>], vocab: &Vocabulary) -> TermCounts {
    let rows = docs
        .iter()
        .map(|doc| {
            let mut row: BTreeMap<u32, u32> = BTreeMap::new();
            for tok in doc {
                if let Some(id) = vocab.id(tok.as_ref()) {
                    *row.entry(id as u32).or_default() += 1;
                }
            }
            row.into_iter().collect()
        })
        .collect();
    TermCounts {
        vocab: vocab.clone(),
        rows,
    }
}

/// Full ingest: preprocess every document, build the capped vocabulary and count.
pub fn ingest(docs: &[RawDocument], config: &PreprocessConfig) -> Result<DocumentMatrix> {
    let pre = Preprocessor::from_config(config)?;
    check_unique_ids(docs)?;
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| pre.process(&d.text)).collect();
    let vocab = build_vocabulary(&tokens, config.vocab_cap)?;
    Ok(assemble(docs, &tokens, &vocab, config))
}

/// Counts `docs` over an existing vocabulary, e.g. a held-out estimation corpus.
pub fn ingest_with_vocabulary(
    docs: &[RawDocument],
    vocab: &Vocabulary,
    config: &PreprocessConfig,
) -> Result<DocumentMatrix> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let pre = Preprocessor::from_config(config)?;
    check_unique_ids(docs)?;
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| pre.process(&d.text)).collect();
    Ok(assemble(docs, &tokens, vocab, config))
}

fn assemble(
    docs: &[RawDocument],
    tokens: &[Vec<String>],
    vocab: &Vocabulary,
    config: &PreprocessConfig,
) -> DocumentMatrix {
    let labels = if docs.iter().any(|d| d.label.is_some()) {
        Some(docs.iter().map(|d| d.label.clone().unwrap_or_default()).collect())
    } else {
        None
    };
    DocumentMatrix {
        counts: count_matrix(tokens, vocab),
        ids: docs.iter().map(|d| d.id.clone()).collect(),
        labels,
        preprocess: config.clone(),
    }
}

fn check_unique_ids(docs: &[RawDocument]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for d in docs {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::DuplicateDocument(d.id.clone()));
        }
    }
    Ok(())
}

/// Reads a JSON-lines corpus (`{"id", "text", "label"?}` per line) or a
/// directory of `.txt` files whose stems are the document ids.
pub fn load_corpus(path: &Path) -> Result<Vec<RawDocument>> {
    if path.is_dir() {
        return load_text_directory(path);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument =
            serde_json::from_str(line).map_err(|e| Error::parse(path.display().to_string(), i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

fn load_text_directory(dir: &Path) -> Result<Vec<RawDocument>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(RawDocument { id, text, label: None })
        })
        .collect()
}

/// Writes documents as JSON lines.
pub fn write_corpus(path: &Path, docs: &[RawDocument]) -> Result<()> {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(d)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat, the CAT!"), toks(&["the", "cat", "the", "cat"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("state-of-the-art 2009"), toks(&["state", "of", "the", "art"]));
    }

    #[test]
    fn preprocess_examples() {
        let stop: HashSet<String> = ["the".to_string()].into();
        assert_eq!(
            preprocess(toks(&["the", "cats", "running"]), &stop, true),
            toks(&["cat", "run"])
        );
        assert_eq!(preprocess(toks(&["a", "b"]), &HashSet::new(), false), toks(&["a", "b"]));
        assert!(preprocess(toks(&["the", "the"]), &stop, false).is_empty());
    }

    #[test]
    fn vocabulary_cap_and_ties() {
        let v = build_vocabulary(&[toks(&["a", "a", "b"]), toks(&["b", "c"])], 2).unwrap();
        assert_eq!(v.words(), toks(&["a", "b"]));
        let v = build_vocabulary(&[toks(&["a"])], 5).unwrap();
        assert_eq!(v.words(), toks(&["a"]));
        let v = build_vocabulary(&[toks(&["a", "b"]), toks(&["a", "c"])], 2).unwrap();
        assert_eq!(v.words(), toks(&["a", "b"]));
    }

    #[test]
    fn vocabulary_errors() {
        let empty: Vec<Vec<String>> = vec![vec![]];
        assert!(matches!(build_vocabulary(&empty, 3), Err(Error::EmptyCorpus)));
        assert!(build_vocabulary(&[toks(&["a"])], 0).is_err());
    }

    #[test]
    fn count_matrix_examples() {
        let vocab = Vocabulary::new(["a", "b", "c"]);
        let m = count_matrix(&[toks(&["a", "a", "b"]), toks(&["b", "c"])], &vocab);
        assert_eq!(m.rows, vec![vec![(0, 2), (1, 1)], vec![(1, 1), (2, 1)]]);
        let m = count_matrix(&[toks(&["z"])], &Vocabulary::new(["a"]));
        assert!(m.rows[0].is_empty());
    }

    #[test]
    fn ingest_keeps_labels_aside_and_rejects_duplicates() {
        let docs = vec![
            RawDocument {
                id: "d1".into(),
                text: "Cats running".into(),
                label: Some("x".into()),
            },
            RawDocument {
                id: "d2".into(),
                text: "cat".into(),
                label: None,
            },
        ];
        let config = PreprocessConfig::default();
        let m = ingest(&docs, &config).unwrap();
        assert_eq!(m.vocab().words(), toks(&["cat", "run"]));
        assert_eq!(m.labels.as_deref(), Some(&["x".to_string(), String::new()][..]));
        let dup = vec![docs[0].clone(), docs[0].clone()];
        assert!(matches!(ingest(&dup, &config), Err(Error::DuplicateDocument(_))));
    }

    #[test]
    fn dense_row_normalization() {
        let vocab = Vocabulary::new(["a", "b"]);
        let m = count_matrix(&[toks(&["a", "a", "b", "b"])], &vocab);
        assert_eq!(m.dense_row(0, false), vec![2.0, 2.0]);
        assert_eq!(m.dense_row(0, true), vec![0.5, 0.5]);
    }
}
