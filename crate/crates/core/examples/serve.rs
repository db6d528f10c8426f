//! Drives the HTTP API in-process: edit a geometry spec, embed, read the
//! report and revision history.
//!
//! cargo run --example serve
//!
//! To run a real server instead: `lingeo serve --port 8080 --config pipeline.json`.

use std::fs;
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use serde_json::{json, Value};
use tower::ServiceExt;

use lingeo::corpus::write_corpus;
use lingeo::pipeline::service::{router, ServiceState};
use lingeo::pipeline::PipelineConfig;
use lingeo::synth::{sentiment_corpus, SentimentParams};

async fn call(app: &axum::Router, method: &str, uri: &str, body: Value) -> Value {
    let body = if body.is_null() {
        String::new()
    } else {
        body.to_string()
    };
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .body(Body::from(body))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = axum::body::to_bytes(response.into_body(), usize::MAX).await.unwrap();
    let value: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{method} {uri} -> {status}");
    value
}

#[tokio::main]
async fn main() -> lingeo::Result<()> {
    let dir = std::env::temp_dir().join("lingeo-serve-example");
    fs::create_dir_all(&dir).map_err(|e| lingeo::Error::io(&dir, e))?;
    let data = sentiment_corpus(&SentimentParams {
        n_docs: 120,
        ..SentimentParams::default()
    });
    write_corpus(&dir.join("docs.jsonl"), &data.docs)?;
    write_corpus(&dir.join("estimation.jsonl"), &data.estimation)?;
    data.lexicon_spec.save(&dir.join("spec.json"))?;
    let config: PipelineConfig = serde_json::from_value(json!({
        "corpus": dir.join("docs.jsonl"),
        "estimation_corpus": dir.join("estimation.jsonl"),
        "geometry": {"method": "manual", "spec": dir.join("spec.json")},
        "reducer": {"reducer": "pca"},
        "seed": 1
    }))?;
    let state = tokio::task::spawn_blocking(move || ServiceState::new(config))
        .await
        .unwrap()?;
    let app = router(Arc::new(state));

    let summary = call(&app, "GET", "/corpus/summary", Value::Null).await;
    println!("  {} docs, {} terms", summary["n_docs"], summary["n_terms"]);

    let embedded = call(&app, "POST", "/embed", Value::Null).await;
    println!("  (i) {:.4}", embedded["report"]["measure_i"].as_f64().unwrap());

    // Weaken the lexicon clusters and re-embed.
    let mut spec = call(&app, "GET", "/geometry/spec", Value::Null).await;
    for cluster in spec["clusters"].as_array_mut().unwrap() {
        cluster["importance"] = json!(1.0);
    }
    let ack = call(&app, "PUT", "/geometry/spec", spec).await;
    println!("  revision {}, rebuilt {}", ack["revision"], ack["rebuilt"]);
    let embedded = call(
        &app,
        "POST",
        "/embed",
        json!({"reducer": "tsne", "config": {"perplexity": 20}}),
    )
    .await;
    println!(
        "  (i) {:.4} with t-SNE",
        embedded["report"]["measure_i"].as_f64().unwrap()
    );

    let bad = call(&app, "PUT", "/geometry/spec", json!({"clusters": 3})).await;
    println!(
        "  error from stage {}: {}",
        bad["stage"].as_str().unwrap_or("?"),
        bad["error"]
    );

    let revisions = call(&app, "GET", "/revisions", Value::Null).await;
    for entry in revisions["history"].as_array().unwrap() {
        println!("  r{} {}", entry["revision"], entry["kind"]);
    }
    Ok(())
}
