//! Compares every geometry on the two synthetic corpora with both reducers.
//!
//! cargo run --release --example separation_study

use lingeo::corpus::PreprocessConfig;
use lingeo::geometry::spec::GeometrySpec;
use lingeo::pipeline::{BuiltGeometry, GeometryConfig, Session};
use lingeo::reduce::{Reducer, TsneConfig};
use lingeo::synth::{sentiment_corpus, topical_corpus, SentimentParams, TopicalParams};

enum Source<'a> {
    Config(GeometryConfig),
    Spec(&'a GeometrySpec),
}

fn run(session: &Session, name: &str, source: Source) -> lingeo::Result<()> {
    let reducers = [
        Reducer::Pca,
        Reducer::Tsne(TsneConfig {
            seed: 7,
            ..Default::default()
        }),
    ];
    let built = match source {
        Source::Spec(spec) => BuiltGeometry {
            transform: session.spec_geometry(spec)?,
            weights: None,
        },
        Source::Config(config) => session.build_geometry(&config, &reducers[0])?,
    };
    for reducer in &reducers {
        let emb = session.embed(&built, reducer, &|| false)?;
        let r = session.evaluate(&emb)?.expect("labeled");
        println!(
            "{name:<10} {:<5} (i) {:.4}  (ii) {:.4}  (iii) {:.3}  (iv) {}",
            reducer.name(),
            r.measure_i,
            r.measure_ii,
            r.measure_iii.accuracy,
            r.measure_iv.map_or("-".to_string(), |v| format!("{v:.4}"))
        );
    }
    Ok(())
}

fn main() -> lingeo::Result<()> {
    let pre = PreprocessConfig::default();
    let sentiment = sentiment_corpus(&SentimentParams::default());
    let session = sentiment.session(&pre)?;
    println!(
        "sentiment: {} docs, {} terms",
        session.docs.n_docs(),
        session.docs.vocab().len()
    );
    run(&session, "identity", Source::Config(GeometryConfig::Identity))?;
    run(&session, "manual", Source::Spec(&sentiment.lexicon_spec))?;
    run(
        &session,
        "diffusion",
        Source::Config(GeometryConfig::Diffusion { c: 1.0 }),
    )?;

    let topical = topical_corpus(&TopicalParams::default());
    let session = topical.session(&pre)?;
    println!(
        "topical: {} docs, {} terms",
        session.docs.n_docs(),
        session.docs.vocab().len()
    );
    run(&session, "identity", Source::Config(GeometryConfig::Identity))?;
    run(&session, "manual", Source::Spec(&topical.topic_spec))?;
    run(
        &session,
        "diffusion",
        Source::Config(GeometryConfig::Diffusion { c: 1.0 }),
    )?;
    run(&session, "ngram", Source::Config(GeometryConfig::Ngram { c: 1.0 }))?;
    run(
        &session,
        "taxonomy",
        Source::Config(GeometryConfig::Taxonomy {
            pseudo_count: 1.0,
            scores: None,
        }),
    )?;
    Ok(())
}
