//! Serve the HTTP API in-process and call a few routes.
//!
//!     cargo run --example http_service

use std::sync::Arc;

use cluecart::capture::{load_script, run_script, write_capture_log_to};
use cluecart::classify::MockClassifier;
use cluecart::service::{router, AppState};
use cluecart::store::ClueStore;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let dir = std::env::temp_dir().join(format!("cluecart-http-{}", std::process::id()));
    let state = AppState::new(ClueStore::open(&dir)?, Arc::new(MockClassifier));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}/api/v1", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, router(state)).await });

    let events = run_script(&load_script(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/hollow_knight.json"))?)?;
    let mut log = Vec::new();
    write_capture_log_to(&mut log, &events)?;

    let http = reqwest::Client::new();
    let report: Value = http.post(format!("{base}/captures")).body(log).send().await?.json().await?;
    println!("POST /captures -> {} created", report["created"].as_array().unwrap().len());

    let found: Value = http
        .get(format!("{base}/search?tags=character:Hornet,location:Greenpath"))
        .send()
        .await?
        .json()
        .await?;
    for r in found["results"].as_array().unwrap() {
        println!("  {} score {}", r["clue_id"], r["score"]);
    }

    let graph: Value = http.post(format!("{base}/graphs")).json(&json!({"game_name": "Hollow Knight"})).send().await?.json().await?;
    let gid = graph["id"].as_str().unwrap();
    let node: Value = http
        .post(format!("{base}/graphs/{gid}/nodes"))
        .json(&json!({"kind": {"type": "clue", "clue_id": "evt-0001"}, "rect": {"x": 0, "y": 0, "width": 160, "height": 90}}))
        .send()
        .await?
        .json()
        .await?;
    println!("POST /graphs/{gid}/nodes -> {}", node["id"]);

    let missing = http.get(format!("{base}/clues/nope")).send().await?;
    println!("GET /clues/nope -> {} {}", missing.status(), missing.text().await?);

    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
