//! End-to-end run from a JSON configuration: ingest, geometry, reduction,
//! evaluation and output files.
//!
//! cargo run --release --example pipeline

use std::fs;

use serde_json::json;

use lingeo::corpus::write_corpus;
use lingeo::pipeline::{run_pipeline, PipelineConfig};
use lingeo::synth::{topical_corpus, TopicalParams};

fn main() -> lingeo::Result<()> {
    let dir = std::env::temp_dir().join("lingeo-pipeline-example");
    fs::create_dir_all(&dir).map_err(|e| lingeo::Error::io(&dir, e))?;
    let data = topical_corpus(&TopicalParams::default());
    write_corpus(&dir.join("docs.jsonl"), &data.docs)?;
    write_corpus(&dir.join("estimation.jsonl"), &data.estimation)?;
    data.topic_spec.save(&dir.join("topics.json"))?;
    fs::write(dir.join("trigrams.tsv"), &data.ngram_table).map_err(|e| lingeo::Error::io(&dir, e))?;
    fs::write(dir.join("taxonomy.txt"), &data.taxonomy).map_err(|e| lingeo::Error::io(&dir, e))?;

    let config = json!({
        "corpus": "docs.jsonl",
        "estimation_corpus": "estimation.jsonl",
        "ngrams": "trigrams.tsv",
        "taxonomy": "taxonomy.txt",
        "preprocess": {"stem": true, "vocab_cap": 2000},
        "geometry": {
            "method": "combine",
            "components": [
                {"method": "manual", "spec": "topics.json"},
                {"method": "diffusion", "c": 1.0},
                {"method": "ngram"},
                {"method": "taxonomy", "pseudo_count": 1.0}
            ],
            "grid_step": 0.25
        },
        "reducer": {"reducer": "tsne", "perplexity": 30},
        "seed": 2024,
        "evaluation": {"k": 5},
        "output": {"embedding": "embedding.csv", "report": "report.json", "geometry": "geometry.h"}
    });
    let path = dir.join("pipeline.json");
    fs::write(&path, serde_json::to_string_pretty(&config)?).map_err(|e| lingeo::Error::io(&path, e))?;

    let out = run_pipeline(&PipelineConfig::load(&path)?)?;
    println!("geometry {}", out.geometry.label());
    if let Some(report) = &out.report {
        println!("{}", report.to_json()?);
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
