//! Grid search for convex weights over four geometries on a synthetic
//! three-topic corpus.
//!
//! cargo run --release --example convex_search

use lingeo::corpus::PreprocessConfig;
use lingeo::evaluate::{search_convex_combination, Objective, SearchConfig};
use lingeo::pipeline::GeometryConfig;
use lingeo::reduce::Reducer;
use lingeo::synth::{topical_corpus, TopicalParams};

fn main() -> lingeo::Result<()> {
    let data = topical_corpus(&TopicalParams::default());
    let session = data.session(&PreprocessConfig::default())?;
    let mut components = vec![session.spec_geometry(&data.topic_spec)?];
    for config in [
        GeometryConfig::Diffusion { c: 1.0 },
        GeometryConfig::Ngram { c: 1.0 },
        GeometryConfig::Taxonomy {
            pseudo_count: 1.0,
            scores: None,
        },
    ] {
        components.push(session.build_geometry(&config, &Reducer::Pca)?.transform);
    }

    let config = SearchConfig {
        grid_step: 0.1,
        objective: Objective::DaviesBouldin,
        ..SearchConfig::default()
    };
    let result = search_convex_combination(&components, &session.docs, &config)?;
    println!("{} grid points scored", result.candidates.len());
    for (i, h) in components.iter().enumerate() {
        let vertex = result
            .candidates
            .iter()
            .find(|c| c.weights.as_slice()[i] == 1.0)
            .expect("vertices are on the grid");
        let r = vertex.report.as_ref().expect("vertex scored");
        println!(
            "pure {:<10} (ii) {:.4}  (iii) {:.3}",
            h.provenance.to_string(),
            r.measure_ii,
            r.measure_iii.accuracy
        );
    }
    println!(
        "best alpha {:?}: (ii) {:.4}  (iii) {:.3}",
        result.weights.as_slice(),
        result.report.measure_ii,
        result.report.measure_iii.accuracy
    );
    Ok(())
}
