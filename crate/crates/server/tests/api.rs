//! Contract tests against a live service on an ephemeral port.

use std::net::SocketAddr;
use std::time::{Duration, Instant};

use molflow_core::platform::ingest_str;
use molflow_core::{FlowConfig, FlowModel};
use molflow_server::AppState;
use serde_json::{json, Value};

async fn start() -> (String, AppState) {
    let model = FlowModel::new(FlowConfig::default()).unwrap().with_random_parameters(3, 0.02);
    let data = ingest_str("CCO\tethanol\nC1=CC=CC=C1\tbenzene\nCC(=O)O\n", 9).entries;
    let state = AppState::new(model, data);
    let (addr, _) = molflow_server::spawn(state.clone(), SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
    (format!("http://{addr}"), state)
}

async fn post(base: &str, path: &str, body: Value) -> (u16, Value) {
    let r = reqwest::Client::new().post(format!("{base}{path}")).json(&body).send().await.unwrap();
    (r.status().as_u16(), r.json().await.unwrap())
}

async fn get(base: &str, path: &str) -> (u16, Value) {
    let r = reqwest::get(format!("{base}{path}")).await.unwrap();
    (r.status().as_u16(), r.json().await.unwrap())
}

#[tokio::test]
async fn health_and_dataset() {
    let (base, state) = start().await;
    let (code, body) = get(&base, "/api/health").await;
    assert_eq!(code, 200);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["model_version"], state.model_version.as_str());
    assert_eq!(body["dim"], 369);
    let (code, body) = get(&base, "/api/dataset").await;
    assert_eq!(code, 200);
    let entries = body["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    assert_eq!(entries[1], json!({"id": 1, "name": "benzene", "smiles": "C1=CC=CC=C1"}));
    assert_eq!(entries[2]["name"], Value::Null);
}

#[tokio::test]
async fn render_contract() {
    let (base, _) = start().await;
    let (code, body) = post(&base, "/api/render", json!({"smiles": "CC(=O)O", "highlight": [2]})).await;
    assert_eq!(code, 200);
    assert_eq!(body["atoms"], json!(["C", "C", "O", "O"]));
    assert_eq!(body["bonds"].as_array().unwrap().len(), 3);
    assert_eq!(body["coords3d"].as_array().unwrap().len(), 4);
    assert!(body["svg"].as_str().unwrap().starts_with("<svg"));
    assert!(body["svg"].as_str().unwrap().contains("class=\"highlight\""));
    assert!(body["xyz"].as_str().unwrap().starts_with("4\nCC(=O)O\nC "));
    assert_eq!(body["properties"]["heavy_atoms"], 4.0);
    assert_eq!(body["properties"]["hbd"], 1.0);

    let (code, body) = post(&base, "/api/render", json!({"smiles": "C1CC"})).await;
    assert_eq!(code, 400);
    assert_eq!(body["error"], "invalid_smiles");
    assert!(body["detail"].as_str().unwrap().contains("ring closure 1"));
    let (code, body) = post(&base, "/api/render", json!({"smiles": "CO", "highlight": [7]})).await;
    assert_eq!((code, body["error"].as_str()), (400, Some("invalid_highlight")));
}

#[tokio::test]
async fn malformed_bodies() {
    let (base, _) = start().await;
    let r = reqwest::Client::new().post(format!("{base}/api/encode")).body("{not json").send().await.unwrap();
    assert_eq!(r.status().as_u16(), 400);
    let body: Value = r.json().await.unwrap();
    assert_eq!(body["error"], "invalid_request");
    assert!(body["detail"].is_string());
    assert!(body.get("error_id").is_none());
    let (code, body) = post(&base, "/api/encode", json!({"smiles": "CCCCCCCCCC"})).await;
    assert_eq!((code, body["error"].as_str()), (400, Some("too_many_atoms")));
}

#[tokio::test]
async fn encode_decode() {
    let (base, _) = start().await;
    let (code, enc) = post(&base, "/api/encode", json!({"smiles": "CC(=O)N"})).await;
    assert_eq!(code, 200);
    assert_eq!(enc["reconstructed_smiles"], "CC(=O)N");
    assert_eq!(enc["similarity"], 1.0);
    let z = enc["z"].clone();
    assert_eq!(z.as_array().unwrap().len(), 369);
    let (code, dec) = post(&base, "/api/decode", json!({ "z": z })).await;
    assert_eq!(code, 200);
    assert_eq!(dec["smiles"], enc["reconstructed_smiles"]);
    assert_eq!((dec["valid"].as_bool(), dec["corrected"].as_bool()), (Some(true), Some(false)));

    let (code, body) = post(&base, "/api/decode", json!({"z": [0.0, 1.0, 2.0]})).await;
    assert_eq!(code, 400);
    assert_eq!(body["error"], "dimension_mismatch");
    assert!(body["detail"].as_str().unwrap().contains("369"), "{body}");
    assert!(body["detail"].as_str().unwrap().contains("got 3"), "{body}");
}

#[tokio::test]
async fn grid_contract() {
    let (base, _) = start().await;
    let (_, enc) = post(&base, "/api/encode", json!({"smiles": "CCO"})).await;
    let (code, body) = post(&base, "/api/grid", json!({"smiles": "CCO", "steps": 3, "delta": 2.0, "seed": 7})).await;
    assert_eq!(code, 200);
    let cells = body["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3);
    assert!(cells.iter().all(|r| r.as_array().unwrap().len() == 3));
    assert_eq!(cells[1][1]["smiles"], enc["reconstructed_smiles"]);
    assert_eq!(cells[1][1]["similarity"], 1.0);
    assert_eq!(cells[1][1]["z"], enc["z"]);
    assert_eq!(cells[0][2]["position"], json!({"row": 0, "col": 2}));

    let (_, flat) = post(&base, "/api/grid", json!({"smiles": "CCO", "steps": 3, "delta": 0.0})).await;
    let all: Vec<&Value> = flat["cells"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).collect();
    assert!(all.iter().all(|c| c["molecule"] == all[0]["molecule"] && c["similarity"] == 1.0));

    let (code, body) = post(&base, "/api/grid", json!({"smiles": "CCO", "steps": 4})).await;
    assert_eq!((code, body["error"].as_str()), (400, Some("invalid_spec")));
}

#[tokio::test]
async fn interpolate_contract() {
    let (base, _) = start().await;
    let (_, a) = post(&base, "/api/encode", json!({"smiles": "CCO"})).await;
    let (_, b) = post(&base, "/api/encode", json!({"smiles": "C1=CC=CC=C1"})).await;
    let (code, body) = post(&base, "/api/interpolate", json!({"from": "CCO", "to": "C1=CC=CC=C1", "steps": 3})).await;
    assert_eq!(code, 200);
    let cells = body["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3);
    assert_eq!(cells[0]["smiles"], a["reconstructed_smiles"]);
    assert_eq!(cells[2]["smiles"], b["reconstructed_smiles"]);
    assert_eq!(cells[0]["similarity"], 1.0);
    let (code, _) = post(&base, "/api/interpolate", json!({"from": "CCO", "to": "CO", "steps": 1})).await;
    assert_eq!(code, 400);
}

#[tokio::test]
async fn responses_are_byte_identical() {
    let (base, _) = start().await;
    let client = reqwest::Client::new();
    for (path, body) in [
        ("/api/grid", json!({"smiles": "CC=O", "steps": 3, "delta": 3.0, "seed": 1})),
        ("/api/interpolate", json!({"from": "CC=O", "to": "CCN", "steps": 4})),
        ("/api/render", json!({"smiles": "C1CCOC1"})),
    ] {
        let mut bodies = Vec::new();
        for _ in 0..2 {
            let r = client.post(format!("{base}{path}")).json(&body).send().await.unwrap();
            bodies.push(r.bytes().await.unwrap());
        }
        assert_eq!(bodies[0], bodies[1], "{path}");
    }
}

#[tokio::test]
async fn optimize_jobs() {
    let (base, _) = start().await;
    let spec = json!({"smiles": "CCO", "property": "heavy_atoms", "maximize": true, "steps": 8,
                      "step_size": 0.5, "sim_min": 0.0, "seed": 5, "proposals_per_step": 4});
    let (code, body) = post(&base, "/api/optimize", spec).await;
    assert_eq!(code, 200);
    let id = body["job_id"].as_str().unwrap().to_string();
    let (code, first) = get(&base, &format!("/api/jobs/{id}")).await;
    assert_eq!(code, 200);
    assert!(matches!(first["state"].as_str(), Some("running" | "done")));
    assert!(!first["trajectory"].as_array().unwrap().is_empty());

    let start = Instant::now();
    let mut snapshots = vec![first];
    while snapshots.last().unwrap()["state"] != "done" {
        assert!(start.elapsed() < Duration::from_secs(120), "job did not finish");
        tokio::time::sleep(Duration::from_millis(10)).await;
        snapshots.push(get(&base, &format!("/api/jobs/{id}")).await.1);
    }
    let last = snapshots.last().unwrap()["trajectory"].as_array().unwrap().clone();
    assert_eq!(last.len(), 9);
    for s in &snapshots {
        let t = s["trajectory"].as_array().unwrap();
        assert_eq!(t[..], last[..t.len()]);
    }

    let (code, body) = get(&base, "/api/jobs/not-a-job").await;
    assert_eq!((code, body["error"].as_str()), (404, Some("not_found")));
    let (code, body) = post(&base, "/api/optimize", json!({"smiles": "CCO", "property": "logp"})).await;
    assert_eq!((code, body["error"].as_str()), (400, Some("invalid_spec")));
}

#[tokio::test]
async fn port_busy_is_an_error() {
    let (base, state) = start().await;
    let addr: SocketAddr = base.trim_start_matches("http://").parse().unwrap();
    assert!(molflow_server::spawn(state, addr).await.is_err());
}
