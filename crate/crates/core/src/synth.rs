//! Seeded synthetic corpora for demos, tests and benchmarks.
//!
//! Words are pronounceable pseudo-words that are fixed points of the Porter
//! stemmer, so specs, taxonomies and n-gram tables can name them directly.
//!
//! * [`sentiment_corpus`]: two labels; a small positive and a small negative
//!   lexicon mixed into a large Zipfian neutral vocabulary.
//! * [`topical_corpus`]: three topics, each a set of concepts with several
//!   synonyms, over a Zipfian background vocabulary, plus a held-out
//!   estimation corpus, a trigram table and a concept taxonomy.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ingest, ingest_with_vocabulary, PreprocessConfig, Preprocessor, RawDocument};
use crate::diffusion::NgramTable;
use crate::error::Result;
use crate::evaluate::DEFAULT_K;
use crate::geometry::spec::{ClusterEntry, GeometrySpec, ManualSpec, RestCluster};
use crate::geometry::TfScaling;
use crate::pipeline::Session;
use crate::stem::porter_stem;
use crate::taxonomy::Taxonomy;

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "kl", "tr", "gr", "pl",
];
const VOWELS: &[&str] = &["a", "o", "u", "i", "ae", "oa"];
const CODAS: &[&str] = &["k", "m", "p", "t", "v", "x", "nk", "rd", "lm", "sk"];

/// Distinct pseudo-words, each unchanged by stemming and absent from `taken`.
pub fn pseudo_words(rng: &mut impl Rng, count: usize, taken: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).unwrap());
            w.push_str(VOWELS.choose(rng).unwrap());
        }
        w.push_str(CODAS.choose(rng).unwrap());
        if porter_stem(&w) == w && taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn zipf(n: usize, s: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / (r as f64).powf(s))).expect("positive weights")
}

/// Settings of [`sentiment_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentParams {
    pub n_docs: usize,
    pub n_estimation: usize,
    pub lexicon_size: usize,
    pub neutral_size: usize,
    pub doc_len: (usize, usize),
    /// Fraction of tokens drawn from a sentiment lexicon.
    pub sentiment_rate: f64,
    /// Fraction of sentiment tokens drawn from the opposite lexicon.
    pub cross_rate: f64,
    pub seed: u64,
}

impl Default for SentimentParams {
    fn default() -> Self {
        Self {
            n_docs: 240,
            n_estimation: 400,
            lexicon_size: 30,
            neutral_size: 600,
            doc_len: (60, 120),
            sentiment_rate: 0.08,
            cross_rate: 0.3,
            seed: 2009,
        }
    }
}

/// Two-class sentiment-like data with a lexicon-based manual spec.
#[derive(Debug, Clone)]
pub struct SentimentData {
    pub docs: Vec<RawDocument>,
    /// Held-out documents from the same source, for corpus statistics.
    pub estimation: Vec<RawDocument>,
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub neutral: Vec<String>,
    /// Clusters `positive` and `negative` with high importance; every other
    /// word falls into a low-importance rest cluster.
    pub lexicon_spec: GeometrySpec,
}

impl SentimentData {
    /// Ingests the documents; the held-out set becomes the estimation corpus.
    pub fn session(&self, preprocess: &PreprocessConfig) -> Result<Session> {
        let docs = ingest(&self.docs, preprocess)?;
        let estimation = ingest_with_vocabulary(&self.estimation, docs.vocab(), preprocess)?.counts;
        Ok(Session {
            preprocessor: Preprocessor::from_config(preprocess)?,
            docs,
            estimation: Some(estimation),
            ngrams: None,
            taxonomy: None,
            scaling: TfScaling::Relative,
            k: DEFAULT_K,
        })
    }
}

pub fn sentiment_corpus(params: &SentimentParams) -> SentimentData {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut taken = HashSet::new();
    let positive = pseudo_words(&mut rng, params.lexicon_size, &mut taken);
    let negative = pseudo_words(&mut rng, params.lexicon_size, &mut taken);
    let neutral = pseudo_words(&mut rng, params.neutral_size, &mut taken);
    let neutral_dist = zipf(neutral.len(), 1.0);

    let make = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| -> Vec<RawDocument> {
        (0..n)
            .map(|i| {
                let positive_doc = i % 2 == 0;
                let len = rng.gen_range(params.doc_len.0..=params.doc_len.1);
                let tokens: Vec<&str> = (0..len)
                    .map(|_| {
                        if rng.gen_bool(params.sentiment_rate) {
                            let own = !rng.gen_bool(params.cross_rate);
                            let lex = if own == positive_doc { &positive } else { &negative };
                            lex.choose(rng).unwrap().as_str()
                        } else {
                            neutral[neutral_dist.sample(rng)].as_str()
                        }
                    })
                    .collect();
                RawDocument {
                    id: format!("{prefix}{i:04}"),
                    text: tokens.join(" "),
                    label: Some(if positive_doc { "positive" } else { "negative" }.into()),
                }
            })
            .collect()
    };
    let docs = make("doc", params.n_docs, &mut rng);
    let estimation = make("est", params.n_estimation, &mut rng);

    let lexicon_spec = GeometrySpec::Manual(ManualSpec {
        clusters: vec![
            ClusterEntry {
                name: "positive".into(),
                words: positive.clone(),
                rho_self: 1.0,
                importance: 3.0,
            },
            ClusterEntry {
                name: "negative".into(),
                words: negative.clone(),
                rho_self: 1.0,
                importance: 3.0,
            },
        ],
        rho_pairs: Vec::new(),
        tree: None,
        beta: 0.5,
        rest: RestCluster {
            name: "rest".into(),
            rho_self: 1.0,
            importance: 0.2,
        },
    });
    SentimentData {
        docs,
        estimation,
        positive,
        negative,
        neutral,
        lexicon_spec,
    }
}

/// Settings of [`topical_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct TopicalParams {
    pub n_docs: usize,
    pub n_estimation: usize,
    pub topics: usize,
    pub concepts_per_topic: usize,
    pub synonyms_per_concept: usize,
    pub background_size: usize,
    pub doc_len: (usize, usize),
    /// Fraction of tokens drawn from a topic.
    pub topical_rate: f64,
    /// Fraction of topical tokens drawn from another topic.
    pub cross_rate: f64,
    /// Number of generated sentences for the trigram table.
    pub ngram_sentences: usize,
    pub seed: u64,
}

impl Default for TopicalParams {
    fn default() -> Self {
        Self {
            n_docs: 300,
            n_estimation: 300,
            topics: 3,
            concepts_per_topic: 8,
            synonyms_per_concept: 6,
            background_size: 150,
            doc_len: (40, 80),
            topical_rate: 0.35,
            cross_rate: 0.15,
            ngram_sentences: 6000,
            seed: 1998,
        }
    }
}

/// Three-topic data with every auxiliary input the geometries need.
#[derive(Debug, Clone)]
pub struct TopicalData {
    pub docs: Vec<RawDocument>,
    pub estimation: Vec<RawDocument>,
    /// `concepts[t][c]` lists the synonyms of concept `c` of topic `t`.
    pub concepts: Vec<Vec<Vec<String>>>,
    pub topic_names: Vec<String>,
    pub background: Vec<String>,
    /// `"w1 w2 w3<TAB>count"` lines.
    pub ngram_table: String,
    /// Taxonomy file text: root, topics, concepts, word memberships.
    pub taxonomy: String,
    /// One cluster per topic holding its words; background words are left to
    /// a low-importance rest cluster.
    pub topic_spec: GeometrySpec,
}

impl TopicalData {
    /// Ingests the documents together with the estimation corpus, trigram
    /// table and taxonomy.
    pub fn session(&self, preprocess: &PreprocessConfig) -> Result<Session> {
        let pre = Preprocessor::from_config(preprocess)?;
        let docs = ingest(&self.docs, preprocess)?;
        let estimation = ingest_with_vocabulary(&self.estimation, docs.vocab(), preprocess)?.counts;
        let ngrams = NgramTable::parse_filtered(&self.ngram_table, "trigrams", &pre, docs.vocab())?;
        let taxonomy = Taxonomy::parse(&self.taxonomy, "taxonomy")?.normalized(&pre);
        Ok(Session {
            preprocessor: pre,
            docs,
            estimation: Some(estimation),
            ngrams: Some(ngrams),
            taxonomy: Some(taxonomy),
            scaling: TfScaling::Relative,
            k: DEFAULT_K,
        })
    }
}

pub fn topical_corpus(params: &TopicalParams) -> TopicalData {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut taken = HashSet::new();
    let topic_names: Vec<String> = (0..params.topics).map(|t| format!("topic{t}")).collect();
    let concepts: Vec<Vec<Vec<String>>> = (0..params.topics)
        .map(|_| {
            (0..params.concepts_per_topic)
                .map(|_| pseudo_words(&mut rng, params.synonyms_per_concept, &mut taken))
                .collect()
        })
        .collect();
    let background = pseudo_words(&mut rng, params.background_size, &mut taken);
    let background_dist = zipf(background.len(), 1.0);
    let concept_dist = zipf(params.concepts_per_topic, 0.5);

    let topical_word = |rng: &mut ChaCha8Rng, topic: usize| -> &str {
        let topic = if rng.gen_bool(params.cross_rate) {
            (topic + rng.gen_range(1..params.topics)) % params.topics
        } else {
            topic
        };
        let concept = &concepts[topic][concept_dist.sample(rng)];
        concept.choose(rng).unwrap()
    };

    let make = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| -> Vec<RawDocument> {
        (0..n)
            .map(|i| {
                let topic = i % params.topics;
                let len = rng.gen_range(params.doc_len.0..=params.doc_len.1);
                let tokens: Vec<&str> = (0..len)
                    .map(|_| {
                        if rng.gen_bool(params.topical_rate) {
                            topical_word(rng, topic)
                        } else {
                            background[background_dist.sample(rng)].as_str()
                        }
                    })
                    .collect();
                RawDocument {
                    id: format!("{prefix}{i:04}"),
                    text: tokens.join(" "),
                    label: Some(topic_names[topic].clone()),
                }
            })
            .collect()
    };
    let docs = make("doc", params.n_docs, &mut rng);
    let estimation = make("est", params.n_estimation, &mut rng);

    // Sentences of a single topic; trigram windows are counted.
    let mut grams: BTreeMap<String, u64> = BTreeMap::new();
    for s in 0..params.ngram_sentences {
        let topic = s % params.topics;
        let len = rng.gen_range(6..=12);
        let words: Vec<&str> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    topical_word(&mut rng, topic)
                } else {
                    background[background_dist.sample(&mut rng)].as_str()
                }
            })
            .collect();
        for w in words.windows(3) {
            *grams.entry(w.join(" ")).or_default() += 1;
        }
    }
    let mut ngram_table = String::new();
    for (gram, count) in &grams {
        writeln!(ngram_table, "{gram}\t{count}").unwrap();
    }

    let mut taxonomy = String::from("# synthetic concept hierarchy\nconcept entity\n");
    for (t, topic) in concepts.iter().enumerate() {
        writeln!(taxonomy, "concept {}", topic_names[t]).unwrap();
        writeln!(taxonomy, "isa {} entity", topic_names[t]).unwrap();
        for (c, synonyms) in topic.iter().enumerate() {
            let name = format!("{}.c{c}", topic_names[t]);
            writeln!(taxonomy, "concept {name}").unwrap();
            writeln!(taxonomy, "isa {name} {}", topic_names[t]).unwrap();
            for w in synonyms {
                writeln!(taxonomy, "member {w} {name}").unwrap();
            }
        }
    }

    let topic_spec = GeometrySpec::Manual(ManualSpec {
        clusters: concepts
            .iter()
            .zip(&topic_names)
            .map(|(topic, name)| ClusterEntry {
                name: name.clone(),
                words: topic.iter().flatten().cloned().collect(),
                rho_self: 1.0,
                importance: 3.0,
            })
            .collect(),
        rho_pairs: Vec::new(),
        tree: None,
        beta: 0.5,
        rest: RestCluster {
            name: "rest".into(),
            rho_self: 1.0,
            importance: 0.2,
        },
    });

    TopicalData {
        docs,
        estimation,
        concepts,
        topic_names,
        background,
        ngram_table,
        taxonomy,
        topic_spec,
    }
}
