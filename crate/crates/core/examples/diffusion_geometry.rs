//! Contextual distributions and the diffusion kernel on a small corpus.
//!
//! cargo run --example diffusion_geometry

use lingeo::corpus::{ingest, PreprocessConfig, RawDocument};
use lingeo::diffusion::{contextual_distributions, diffusion_kernel, hellinger_affinity, DiffusionConfig};
use lingeo::pipeline::diffusion_geometry;

fn main() -> lingeo::Result<()> {
    let texts = [
        "the striker scored a goal in the match",
        "the keeper saved the goal in the final match",
        "the senate passed the budget bill",
        "the senate debated the tax bill",
    ];
    let docs: Vec<RawDocument> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| RawDocument {
            id: format!("d{i}"),
            text: t.to_string(),
            label: None,
        })
        .collect();
    let config = PreprocessConfig {
        stem: false,
        ..Default::default()
    };
    let matrix = ingest(&docs, &config)?;
    let vocab = matrix.vocab();
    let table = contextual_distributions(&matrix.counts)?;

    let id = |w: &str| vocab.id(w).expect("word in vocabulary");
    for (a, b) in [("goal", "match"), ("goal", "senate"), ("bill", "senate")] {
        let affinity = hellinger_affinity(table.dist(id(a)), table.dist(id(b)));
        println!("{a:>6} ~ {b:<6} affinity {affinity:.4}");
    }

    for c in [0.5, 1.0, 4.0] {
        let k = diffusion_kernel(&table, DiffusionConfig { c })?;
        println!(
            "c = {c}: K(goal, match) = {:.4}, K(goal, senate) = {:.4}",
            k.matrix()[(id("goal"), id("match"))],
            k.matrix()[(id("goal"), id("senate"))]
        );
    }

    let h = diffusion_geometry(&matrix.counts, 1.0)?;
    println!("diffusion transform: {} x {}", h.nrows(), h.ncols());
    Ok(())
}
