#![allow(dead_code)]

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use lingeo::corpus::write_corpus;
use lingeo::synth::{topical_corpus, TopicalData, TopicalParams};

pub fn small_topical() -> TopicalData {
    topical_corpus(&TopicalParams {
        n_docs: 90,
        n_estimation: 90,
        ngram_sentences: 1500,
        ..TopicalParams::default()
    })
}

/// Writes the corpus, auxiliary inputs and a pipeline config with the given
/// geometry and reducer blocks. Returns the config path.
pub fn write_workspace(dir: &Path, geometry: Value, reducer: Value) -> std::path::PathBuf {
    let data = small_topical();
    write_corpus(&dir.join("docs.jsonl"), &data.docs).unwrap();
    write_corpus(&dir.join("estimation.jsonl"), &data.estimation).unwrap();
    data.topic_spec.save(&dir.join("spec.json")).unwrap();
    fs::write(dir.join("trigrams.tsv"), &data.ngram_table).unwrap();
    fs::write(dir.join("taxonomy.txt"), &data.taxonomy).unwrap();
    let config = json!({
        "corpus": "docs.jsonl",
        "estimation_corpus": "estimation.jsonl",
        "ngrams": "trigrams.tsv",
        "taxonomy": "taxonomy.txt",
        "geometry": geometry,
        "reducer": reducer,
        "seed": 5,
    });
    let path = dir.join("pipeline.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}
