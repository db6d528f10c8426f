//! Diffusion geometry estimated from a trigram count table instead of the
//! corpus itself.
//!
//! cargo run --example ngram_geometry

use lingeo::corpus::{ingest, PreprocessConfig, Preprocessor, RawDocument};
use lingeo::diffusion::{hellinger_affinity, ngram_contextual_distributions, NgramTable};
use lingeo::pipeline::ngram_geometry;

const TABLE: &str = "\
red apple pie\t40
green apple pie\t25
red cherry pie\t30
fast red car\t12
fast blue car\t20
blue car engine\t18
apple cherry tart\t9
";

fn main() -> lingeo::Result<()> {
    let docs = [
        ("a", "apple pie and cherry pie"),
        ("b", "a fast car with a blue engine"),
    ];
    let docs: Vec<RawDocument> = docs
        .iter()
        .map(|(id, text)| RawDocument {
            id: id.to_string(),
            text: text.to_string(),
            label: None,
        })
        .collect();
    let config = PreprocessConfig {
        stem: false,
        ..Default::default()
    };
    let matrix = ingest(&docs, &config)?;
    let pre = Preprocessor::from_config(&config)?;

    // Tokens outside the corpus vocabulary are dropped from each gram.
    let grams = NgramTable::parse_filtered(TABLE, "table", &pre, matrix.vocab())?;
    println!("{} grams kept over {} terms", grams.grams.len(), grams.n_terms);

    let table = ngram_contextual_distributions(&grams)?;
    let id = |w: &str| matrix.vocab().id(w).expect("word in vocabulary");
    for (a, b) in [("apple", "cherry"), ("apple", "car"), ("car", "engine")] {
        println!(
            "{a:>6} ~ {b:<6} {:.4}",
            hellinger_affinity(table.dist(id(a)), table.dist(id(b)))
        );
    }

    let h = ngram_geometry(&grams, 1.0)?;
    println!("n-gram transform: {} x {}", h.nrows(), h.ncols());
    Ok(())
}
