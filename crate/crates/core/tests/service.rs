mod common;

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use lingeo::evaluate::EvaluationReport;
use lingeo::pipeline::service::{router, ServiceState};
use lingeo::pipeline::PipelineConfig;
use lingeo::reduce::Embedding2D;

fn app(dir: &std::path::Path, geometry: Value, reducer: Value) -> Router {
    let path = common::write_workspace(dir, geometry, reducer);
    let config = PipelineConfig::load(&path).unwrap();
    router(Arc::new(ServiceState::new(config).unwrap()))
}

fn manual_app(dir: &std::path::Path) -> Router {
    app(
        dir,
        json!({"method": "manual", "spec": "spec.json"}),
        json!({"reducer": "pca"}),
    )
}

async fn send(app: &Router, method: &str, uri: &str, body: impl Into<String>) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.into()))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    (
        status,
        axum::body::to_bytes(response.into_body(), usize::MAX)
            .await
            .unwrap()
            .to_vec(),
    )
}

async fn send_json(app: &Router, method: &str, uri: &str, body: impl Into<String>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn spec_with_rho(rho: f64) -> String {
    let data = common::small_topical();
    json!({
        "clusters": [
            {"name": "topic0", "words": data.concepts[0][0], "rho_self": rho, "importance": 2.0},
            {"name": "topic1", "words": data.concepts[1][0], "importance": 1.5}
        ],
        "rest": {"importance": 0.5}
    })
    .to_string()
}

#[tokio::test(flavor = "multi_thread")]
async fn reads_before_any_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let app = manual_app(dir.path());
    let (status, summary) = send_json(&app, "GET", "/corpus/summary", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["n_docs"], 90);
    assert_eq!(summary["labels"].as_object().unwrap().len(), 3);

    let (status, spec) = send_json(&app, "GET", "/geometry/spec", "").await;
    assert_eq!(status, StatusCode::OK);
    assert!(spec["clusters"].is_array());
    let (status, blocks) = send_json(&app, "GET", "/geometry/matrix/summary", "").await;
    assert_eq!(status, StatusCode::OK, "{blocks}");

    for uri in ["/embedding", "/report"] {
        let (status, body) = send_json(&app, "GET", uri, "").await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(body["stage"], "request");
    }
    let (_, revisions) = send_json(&app, "GET", "/revisions", "").await;
    assert_eq!(revisions["current"], 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_requests_get_400_and_compute_failures_422() {
    let dir = tempfile::tempdir().unwrap();
    let app = manual_app(dir.path());

    let (status, body) = send_json(&app, "PUT", "/geometry/spec", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["stage"], "request");
    assert!(body["error"].is_string());

    let (status, _) = send_json(&app, "POST", "/embed", r#"{"reducer": "pca", "bogus": 1}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send_json(&app, "POST", "/embed", r#"{"reducer": "umap"}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send_json(&app, "POST", "/alpha", r#"{"weights": [0.5, 0.6]}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let word = &common::small_topical().concepts[0][0][0];
    let clash = json!({"clusters": [
        {"name": "a", "words": [word]},
        {"name": "b", "words": [word]}
    ]});
    let (status, body) = send_json(&app, "PUT", "/geometry/spec", clash.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["stage"], "geometry");

    let (status, body) = send_json(&app, "POST", "/alpha", r#"{"weights": [1.0]}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");

    // Failed writes leave the published state untouched.
    let (_, revisions) = send_json(&app, "GET", "/revisions", "").await;
    assert_eq!(revisions["current"], 0);
    let (_, spec) = send_json(&app, "GET", "/geometry/spec", "").await;
    assert_ne!(spec["clusters"][0]["name"], "a");
}

#[tokio::test(flavor = "multi_thread")]
async fn embed_publishes_embedding_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let app = manual_app(dir.path());
    let (status, body) = send_json(&app, "POST", "/embed", "").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["points"], 90);
    assert_eq!(body["revision"], 1);

    let (_, embedding) = send_json(&app, "GET", "/embedding", "").await;
    assert_eq!(embedding["coords"].as_array().unwrap().len(), 90);
    assert_eq!(embedding["revision"], 1);
    let (status, csv) = send(&app, "GET", "/embedding?format=csv", "").await;
    assert_eq!(status, StatusCode::OK);
    let (parsed, labels) = Embedding2D::from_csv(&String::from_utf8(csv).unwrap(), "response").unwrap();
    assert_eq!(parsed.len(), 90);
    assert_eq!(labels.unwrap().len(), 90);

    let (_, report) = send_json(&app, "GET", "/report", "").await;
    let report: EvaluationReport = serde_json::from_value(report).unwrap();
    assert_eq!(report, serde_json::from_value(body["report"].clone()).unwrap());
    assert_eq!(report.measure_iii.k, 5);
    assert!(report.measure_iv.is_none(), "three classes have no overlap measure");
}

#[tokio::test(flavor = "multi_thread")]
async fn unchanged_spec_hits_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let app = manual_app(dir.path());

    let (_, first) = send_json(&app, "PUT", "/geometry/spec", spec_with_rho(1.0)).await;
    assert_eq!(first["rebuilt"], true);
    let (_, again) = send_json(&app, "PUT", "/geometry/spec", spec_with_rho(1.0)).await;
    assert_eq!(again["rebuilt"], false);
    assert_eq!(again["hash"], first["hash"]);
    let (_, revisions) = send_json(&app, "GET", "/revisions", "").await;
    assert_eq!(revisions["geometry_builds"], 1);

    let (_, changed) = send_json(&app, "PUT", "/geometry/spec", spec_with_rho(0.7)).await;
    assert_eq!(changed["rebuilt"], true);
    assert_ne!(changed["hash"], first["hash"]);
    let (_, revisions) = send_json(&app, "GET", "/revisions", "").await;
    assert_eq!(revisions["geometry_builds"], 2);

    // Embedding the current spec reuses its cached geometry.
    send_json(&app, "POST", "/embed", "").await;
    let (_, revisions) = send_json(&app, "GET", "/revisions", "").await;
    assert_eq!(revisions["geometry_builds"], 2);
    assert_eq!(revisions["current"], 4);
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_writes_get_distinct_increasing_revisions() {
    let dir = tempfile::tempdir().unwrap();
    let app = manual_app(dir.path());
    let tasks: Vec<_> = (0..8)
        .map(|i| {
            let app = app.clone();
            tokio::spawn(
                async move { send_json(&app, "PUT", "/geometry/spec", spec_with_rho(0.2 + 0.1 * i as f64)).await },
            )
        })
        .collect();
    let mut revisions = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        revisions.push(body["revision"].as_u64().unwrap());
    }
    revisions.sort();
    assert_eq!(revisions, (1..=8).collect::<Vec<_>>());

    let (_, history) = send_json(&app, "GET", "/revisions", "").await;
    let ids: Vec<u64> = history["history"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["revision"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, (1..=8).collect::<Vec<_>>());
    assert_eq!(history["current"], 8);
    assert_eq!(history["geometry_builds"], 8);
}

#[tokio::test(flavor = "multi_thread")]
async fn alpha_at_a_vertex_reproduces_the_pure_geometry() {
    let combined = tempfile::tempdir().unwrap();
    let combo = app(
        combined.path(),
        json!({"method": "combine", "components": [
            {"method": "manual", "spec": "spec.json"},
            {"method": "diffusion"},
            {"method": "taxonomy"}
        ], "weights": [0.4, 0.3, 0.3]}),
        json!({"reducer": "pca"}),
    );
    let pure_dir = tempfile::tempdir().unwrap();
    let pure = app(
        pure_dir.path(),
        json!({"method": "diffusion"}),
        json!({"reducer": "pca"}),
    );

    let (status, at_vertex) = send_json(&combo, "POST", "/alpha", r#"{"weights": [0, 1, 0]}"#).await;
    assert_eq!(status, StatusCode::OK, "{at_vertex}");
    let (status, direct) = send_json(&pure, "POST", "/embed", "").await;
    assert_eq!(status, StatusCode::OK);
    let a: EvaluationReport = serde_json::from_value(at_vertex["report"].clone()).unwrap();
    let b: EvaluationReport = serde_json::from_value(direct["report"].clone()).unwrap();
    assert!((a.measure_i - b.measure_i).abs() < 1e-9);
    assert!((a.measure_ii - b.measure_ii).abs() < 1e-9);
    assert_eq!(a.measure_iii, b.measure_iii);

    let (_, ea) = send_json(&combo, "GET", "/embedding", "").await;
    let (_, eb) = send_json(&pure, "GET", "/embedding", "").await;
    let coords = |v: &Value| -> Vec<f64> {
        v["coords"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|p| p.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()))
            .collect()
    };
    let worst = coords(&ea)
        .iter()
        .zip(coords(&eb))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");

    // The components were built once; moving the weights reuses them.
    let (_, before) = send_json(&combo, "GET", "/revisions", "").await;
    send_json(&combo, "POST", "/alpha", r#"{"weights": [0.2, 0.5, 0.3]}"#).await;
    let (_, after) = send_json(&combo, "GET", "/revisions", "").await;
    assert_eq!(before["geometry_builds"], 3);
    assert_eq!(after["geometry_builds"], 3);
}

#[tokio::test(flavor = "multi_thread")]
async fn newer_request_cancels_a_running_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let app = manual_app(dir.path());
    let slow = {
        let app = app.clone();
        tokio::spawn(async move {
            send_json(
                &app,
                "POST",
                "/embed",
                r#"{"reducer": "tsne", "config": {"perplexity": 10, "iterations": 1000000}}"#,
            )
            .await
        })
    };
    tokio::time::sleep(Duration::from_millis(300)).await;
    let (status, body) = send_json(&app, "POST", "/embed", r#"{"reducer": "pca"}"#).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, cancelled) = tokio::time::timeout(Duration::from_secs(60), slow)
        .await
        .unwrap()
        .unwrap();
    assert_eq!(status, StatusCode::CONFLICT, "{cancelled}");
    assert_eq!(cancelled["stage"], "reduce");

    let (_, report) = send_json(&app, "GET", "/report", "").await;
    assert_eq!(report["reducer"], "pca");
}
