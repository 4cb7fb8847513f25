use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use infmax::service::{router, AppState, ProgressEvent};
use infmax::workbench::Workbench;

struct Api {
    app: Router,
    _dir: tempfile::TempDir,
}

impl Api {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let wb = Workbench::open(dir.path(), 2).unwrap();
        Api {
            app: router(AppState::new(Arc::new(wb))),
            _dir: dir,
        }
    }

    async fn raw(&self, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.into())
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (
            status,
            resp.into_body()
                .collect()
                .await
                .unwrap()
                .to_bytes()
                .to_vec(),
        )
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        let (s, b) = self.raw("GET", uri, Body::empty()).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        let (s, b) = self.raw("POST", uri, body.to_string()).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn upload(&self, edges: &str, directedness: &str) -> String {
        let uri = format!("/api/datasets?name=t&directedness={directedness}");
        let (s, b) = self.raw("POST", &uri, edges.to_string()).await;
        assert_eq!(s, StatusCode::CREATED, "{}", String::from_utf8_lossy(&b));
        let v: Value = serde_json::from_slice(&b).unwrap();
        v["graph_ref"].as_str().unwrap().to_string()
    }

    async fn run(&self, body: Value) -> String {
        let (s, v) = self.post("/api/runs?wait=true", body).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        assert_eq!(v["status"], "done");
        v["run_id"].as_str().unwrap().to_string()
    }
}

const PATH: &str = "0 1\n1 2\n";

fn path_run(graph_ref: &str) -> Value {
    json!({
        "graph_ref": graph_ref,
        "seeds": { "explicit": [0] },
        "model": { "kind": "constant", "p": 0.5 },
        "runs": 1000,
        "master_seed": 1,
        "m": 2,
        "layout": { "iterations": 100, "rng_seed": 0 },
    })
}

fn parse_sse(body: &[u8]) -> Vec<(String, ProgressEvent)> {
    let text = String::from_utf8_lossy(body);
    let mut out = Vec::new();
    let mut name = String::new();
    for line in text.lines() {
        if let Some(n) = line.strip_prefix("event: ") {
            name = n.to_string();
        } else if let Some(d) = line.strip_prefix("data: ") {
            out.push((name.clone(), serde_json::from_str(d).unwrap()));
        }
    }
    out
}

#[tokio::test]
async fn datasets_are_idempotent_and_validated() {
    let api = Api::new();
    let a = api.upload(PATH, "directed").await;
    assert_eq!(api.upload(PATH, "directed").await, a);
    assert_ne!(api.upload(PATH, "undirected").await, a);
    let (s, m) = api.get(&format!("/api/datasets/{a}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(
        (m["node_count"].as_u64(), m["arc_count"].as_u64()),
        (Some(3), Some(2))
    );

    let (s, b) = api.raw("POST", "/api/datasets", "0 1\nx y z\n").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(String::from_utf8_lossy(&b).contains("line 2"));
    assert_eq!(
        api.get("/api/datasets/missing").await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        api.get("/api/algorithms").await.1.as_array().unwrap().len(),
        3
    );
}

#[tokio::test]
async fn run_parameters_are_checked() {
    let api = Api::new();
    let g = api.upload(PATH, "directed").await;
    let zero_k = json!({ "graph_ref": g, "seeds": { "algorithm": { "name": "HIGHDEG", "k": 0 } } });
    assert_eq!(
        api.post("/api/runs", zero_k).await.0,
        StatusCode::BAD_REQUEST
    );
    let bad_seed = json!({ "graph_ref": g, "seeds": { "explicit": [7] } });
    assert_eq!(
        api.post("/api/runs", bad_seed).await.0,
        StatusCode::BAD_REQUEST
    );
    let unknown = json!({ "graph_ref": "nope", "seeds": { "explicit": [0] } });
    assert_eq!(
        api.post("/api/runs", unknown).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(api.get("/api/runs/nope").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn matrices_follow_the_aggregation() {
    let api = Api::new();
    let g = api.upload(PATH, "directed").await;
    let id = api.run(path_run(&g)).await;
    let (_, record) = api.get(&format!("/api/runs/{id}")).await;
    assert_eq!(record["seeds"]["origin"], "manual");

    let (s, step0) = api.get(&format!("/api/runs/{id}/matrices?step=0")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(
        step0["diffusion"],
        json!(step0["seed_counts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_f64().unwrap())
            .collect::<Vec<_>>())
    );

    let final_step = step0["final_step"].as_u64().unwrap();
    let (_, last) = api
        .get(&format!("/api/runs/{id}/matrices?step={final_step}&m=5"))
        .await;
    let density: u64 = last["density"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(density, 3);
    let total: f64 = last["diffusion"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .sum();
    let trend_total = last["trend"]["cumulative_active"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .as_f64()
        .unwrap();
    assert!((total - trend_total).abs() < 1e-9);
    assert!((1.6..1.9).contains(&total));

    let (s, _) = api
        .get(&format!("/api/runs/{id}/matrices?step={}", final_step + 1))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, new) = api
        .get(&format!("/api/runs/{id}/matrices?step=1&mode=newly-active"))
        .await;
    assert_eq!(s, StatusCode::OK, "{new}");
}

#[tokio::test]
async fn detail_covers_the_selection() {
    let api = Api::new();
    let g = api.upload(PATH, "directed").await;
    let id = api.run(path_run(&g)).await;
    let (s, whole) = api
        .get(&format!("/api/runs/{id}/detail?rows=2&cols=2&step=0"))
        .await;
    assert_eq!(s, StatusCode::OK, "{whole}");
    assert_eq!(whole["vertices"].as_array().unwrap().len(), 3);
    let seeds: Vec<_> = whole["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["role"] == "seed")
        .collect();
    assert_eq!(seeds.len(), 1);
}

#[tokio::test]
async fn suggestion_modify_and_compare() {
    let api = Api::new();
    let edges = "0 1\n0 2\n0 3\n0 4\n5 6\n6 7\n7 8\n8 9\n9 5\n";
    let g = api.upload(edges, "undirected").await;
    let id = api
        .run(json!({
            "graph_ref": g,
            "seeds": { "explicit": [1, 2] },
            "runs": 200,
            "m": 1,
            "layout": { "iterations": 100, "rng_seed": 0 },
        }))
        .await;
    assert_eq!(
        api.get(&format!("/api/runs/{id}/suggestion?n=0")).await.0,
        StatusCode::BAD_REQUEST
    );
    let (s, sug) = api.get(&format!("/api/runs/{id}/suggestion?n=2")).await;
    assert_eq!(s, StatusCode::OK, "{sug}");
    let digest = sug["aggregation_digest"].clone();
    let vertices = |key: &str| -> Vec<Value> {
        sug["suggestion"][key]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["vertex"].clone())
            .collect()
    };

    let none = json!({ "aggregation_digest": digest, "n": 2, "m": null, "accepted_removals": [], "accepted_promotions": [] });
    let (s, v) = api.post(&format!("/api/runs/{id}/modify"), none).await;
    assert_eq!((s, v), (StatusCode::OK, Value::Null));

    let stale = json!({ "aggregation_digest": "0000", "n": 2, "m": null, "accepted_removals": vertices("removals"), "accepted_promotions": vertices("promotions") });
    assert_eq!(
        api.post(&format!("/api/runs/{id}/modify"), stale).await.0,
        StatusCode::CONFLICT
    );

    let all = json!({ "aggregation_digest": digest, "n": 2, "m": null, "accepted_removals": vertices("removals"), "accepted_promotions": vertices("promotions") });
    let (s, child) = api
        .post(&format!("/api/runs/{id}/modify?wait=true"), all)
        .await;
    assert_eq!(s, StatusCode::OK, "{child}");
    assert_eq!(child["parent_run_id"], json!(id));
    assert_eq!(child["seeds"]["origin"], "manual");
    let child_id = child["run_id"].as_str().unwrap();

    let (s, report) = api.get(&format!("/api/compare?a={id}&b={child_id}")).await;
    assert_eq!(s, StatusCode::OK, "{report}");
    assert!(report["comparison"]["spread_delta"].is_number());
    let (_, same) = api.get(&format!("/api/compare?a={id}&b={id}")).await;
    assert_eq!(same["comparison"]["spread_delta"], 0.0);

    let other = api.upload(PATH, "directed").await;
    let foreign = api.run(path_run(&other)).await;
    assert_eq!(
        api.get(&format!("/api/compare?a={id}&b={foreign}")).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn progress_streams_every_run_then_terminates() {
    let api = Api::new();
    // large enough that the stream is opened while the run executes
    let mut edges = String::new();
    for v in 1..3000u32 {
        edges.push_str(&format!("{} {v}\n", v / 2));
    }
    let g = api.upload(&edges, "undirected").await;
    let body = json!({ "graph_ref": g, "seeds": { "explicit": [0, 1] }, "runs": 100, "m": 4 });
    let (s, record) = api.post("/api/runs", body).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{record}");
    let id = record["run_id"].as_str().unwrap();

    let (s, stream) = api
        .raw("GET", &format!("/api/runs/{id}/progress"), Body::empty())
        .await;
    assert_eq!(s, StatusCode::OK);
    let events = parse_sse(&stream);
    assert_eq!(events.len(), 100);
    assert!(events
        .windows(2)
        .all(|w| w[0].1.completed < w[1].1.completed));
    let (name, last) = events.last().unwrap();
    assert_eq!(name, "done");
    assert!(last.terminal && last.completed == 100);
    assert_eq!(events.iter().filter(|(_, e)| e.terminal).count(), 1);

    let (_, m) = api.get(&format!("/api/runs/{id}/matrices")).await;
    let spread = m["trend"]["cumulative_active"]
        .as_array()
        .unwrap()
        .last()
        .unwrap()
        .as_f64()
        .unwrap();
    assert!((last.partial_spread_mean - spread).abs() < 1e-9);

    let (_, again) = api
        .raw("GET", &format!("/api/runs/{id}/progress"), Body::empty())
        .await;
    let again = parse_sse(&again);
    assert_eq!(again.len(), 1);
    assert_eq!(again[0].1, *last);
    assert_eq!(
        api.get("/api/runs/nope/progress").await.0,
        StatusCode::NOT_FOUND
    );
}
