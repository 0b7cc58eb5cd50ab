mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use cluecart::capture::{load_script, run_script, write_capture_log_to, CaptureEvent, TextPayload};
use cluecart::classify::{Classifier, LlmClassifier, MockClassifier, ScriptedBackend};
use cluecart::model::{MediaKind, MediaRef};
use cluecart::service::{router, AppState};
use cluecart::store::ClueStore;
use common::*;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api {
    app: Router,
    schemas: Value,
    _dir: tempfile::TempDir,
}

struct Reply {
    status: StatusCode,
    text: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

impl Api {
    async fn new() -> Api {
        Api::with(Arc::new(MockClassifier)).await
    }

    async fn with(classifier: Arc<dyn Classifier>) -> Api {
        let dir = tempfile::tempdir().unwrap();
        let store = ClueStore::open(dir.path()).unwrap();
        let app = router(AppState::new(store, classifier));
        let mut api = Api {
            app,
            schemas: Value::Null,
            _dir: dir,
        };
        api.schemas = api.call(Method::GET, "/schemas", None).await.json();
        api
    }

    async fn call(&self, method: Method, path: &str, body: Option<String>) -> Reply {
        let req = Request::builder()
            .method(method)
            .uri(format!("/api/v1{path}"))
            .header("content-type", "application/json")
            .body(body.map(Body::from).unwrap_or_else(Body::empty))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        Reply {
            status,
            text: String::from_utf8(bytes.to_vec()).unwrap(),
        }
    }

    /// Calls, checks the status, and validates the body against `schema`.
    async fn expect(&self, method: Method, path: &str, body: Option<Value>, status: StatusCode, schema: &str) -> Value {
        let reply = self.call(method, path, body.map(|b| b.to_string())).await;
        assert_eq!(reply.status, status, "{path}: {}", reply.text);
        let value = reply.json();
        self.check_schema(schema, &value);
        value
    }

    fn check_schema(&self, name: &str, value: &Value) {
        let schema = &self.schemas[name];
        assert!(schema.is_object(), "no schema {name}");
        let validator = jsonschema::validator_for(schema).unwrap();
        let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}\n{value}");
    }
}

fn event(id: &str, t: i64, chars: &[&str], locs: &[&str], text: &str) -> CaptureEvent {
    CaptureEvent {
        id: id.into(),
        timestamp_ms: t,
        media: MediaRef::new(MediaKind::Screenshot, format!("screenshots/{id}.png")).unwrap(),
        detected_characters: chars.iter().map(|s| s.to_string()).collect(),
        detected_locations: locs.iter().map(|s| s.to_string()).collect(),
        achievement: None,
        payload: TextPayload {
            ocr_text: text.into(),
            speaker: None,
            flags: vec![],
        },
    }
}

fn log_text(events: &[CaptureEvent]) -> String {
    let mut buf = Vec::new();
    write_capture_log_to(&mut buf, events).unwrap();
    String::from_utf8(buf).unwrap()
}

/// Three clues: A only, B only, A and B.
fn three() -> String {
    log_text(&[
        event("e1", 10, &["Sly"], &[], "wares for sale"),
        event("e2", 20, &[], &["Dirtmouth"], "a quiet town"),
        event("e3", 30, &["Sly"], &["Dirtmouth"], "Sly in town"),
    ])
}

async fn ingest(api: &Api, log: String) -> Value {
    let r = api.call(Method::POST, "/captures", Some(log)).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    let v = r.json();
    api.check_schema("IngestReport", &v);
    v
}

#[tokio::test]
async fn health_and_unknown_routes() {
    let api = Api::new().await;
    let v = api.expect(Method::GET, "/healthz", None, StatusCode::OK, "Health").await;
    assert_eq!(v["status"], "ok");
    let r = api.call(Method::GET, "/nope", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    api.check_schema("ErrorBody", &r.json());
}

#[tokio::test]
async fn ingest_search_and_idempotence() {
    let api = Api::new().await;
    let v = ingest(&api, String::new()).await;
    assert_eq!(v["created"], json!([]));
    let v = ingest(&api, three()).await;
    assert_eq!(v["created"], json!(["e1", "e2", "e3"]));
    let v = ingest(&api, three()).await;
    assert_eq!(v["created"], json!([]));
    assert_eq!(v["skipped"], json!(["e1", "e2", "e3"]));

    let v = api
        .expect(Method::GET, "/search?tags=character:Sly,location:Dirtmouth", None, StatusCode::OK, "SearchResponse")
        .await;
    let got: Vec<(String, u64)> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["clue_id"].as_str().unwrap().to_string(), r["score"].as_u64().unwrap()))
        .collect();
    let store = ClueStore::open(api._dir.path()).unwrap();
    let clues: Vec<_> = store.library().iter().cloned().collect();
    let query = vec![
        PlainTag { kind: "character", label: "Sly".into() },
        PlainTag { kind: "location", label: "Dirtmouth".into() },
    ];
    assert_eq!(got, oracle_search(&clues, &query));
    assert_eq!(got[0].0, "e3");

    let v = api.expect(Method::GET, "/clues/e1/related", None, StatusCode::OK, "SearchResponse").await;
    assert_eq!(v["results"][0]["clue_id"], "e3");
}

#[tokio::test]
async fn malformed_log_rejected_whole() {
    let api = Api::new().await;
    let mut log = three();
    log.push_str("{not json}\n");
    let r = api.call(Method::POST, "/captures", Some(log)).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let v = r.json();
    api.check_schema("ErrorBody", &v);
    assert_eq!(v["code"], "malformed_log");
    assert_eq!(v["detail"]["line"], 4);
    let v = api.expect(Method::GET, "/healthz", None, StatusCode::OK, "Health").await;
    assert_eq!(v["clues"], 0);
}

#[tokio::test]
async fn clue_edits_and_errors() {
    let api = Api::new().await;
    ingest(&api, three()).await;
    let r = api.call(Method::GET, "/clues/unknown", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    api.check_schema("ErrorBody", &r.json());

    let v = api.expect(Method::GET, "/clues/e1", None, StatusCode::OK, "Clue").await;
    assert_eq!(v["id"], "e1");

    let v = api
        .expect(Method::PATCH, "/clues/e1/keywords", Some(json!({"keywords": ["mask", "shard"]})), StatusCode::OK, "Clue")
        .await;
    assert_eq!(v["keywords"], json!(["mask", "shard"]));
    let r = api
        .call(Method::PATCH, "/clues/e1/keywords", Some(json!({"keywords": ["a", "b", "c", "d"]}).to_string()))
        .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let v = api
        .expect(Method::POST, "/clues/e1/tags", Some(json!({"label": "Lore"})), StatusCode::OK, "Clue")
        .await;
    assert!(v["tags"].as_array().unwrap().contains(&json!({"kind": "custom", "label": "Lore"})));
    let r = api.call(Method::POST, "/clues/e1/tags", Some(json!({"label": "lore"}).to_string())).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = api.call(Method::DELETE, "/clues/e1/tags?label=Sly", None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["code"], "machine_tag_immutable");
    let r = api.call(Method::DELETE, "/clues/e1/tags?label=missing", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    api.expect(Method::DELETE, "/clues/e1/tags?label=LORE", None, StatusCode::OK, "Clue").await;
    let r = api.call(Method::POST, "/clues/e1/tags", Some("{\"label\":".into())).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    api.check_schema("ErrorBody", &r.json());
}

#[tokio::test]
async fn listing_modes() {
    let api = Api::new().await;
    let events = run_script(&load_script(fixture_script()).unwrap()).unwrap();
    ingest(&api, log_text(&events)).await;
    let v = api.expect(Method::GET, "/clues", None, StatusCode::OK, "ListResponse").await;
    assert_eq!(v["groups"].as_array().unwrap().len(), 6);
    let v = api
        .expect(Method::GET, "/clues?sort=relevance&tags=character:Hornet", None, StatusCode::OK, "ListResponse")
        .await;
    let store = ClueStore::open(api._dir.path()).unwrap();
    let clues: Vec<_> = store.library().iter().cloned().collect();
    let q = vec![PlainTag { kind: "character", label: "Hornet".into() }];
    let got: Vec<Vec<String>> = v["groups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["clues"].as_array().unwrap().iter().map(|c| c["clue_id"].as_str().unwrap().to_string()).collect())
        .collect();
    assert_eq!(got, oracle_sort(&clues, Some(&q)));
    let r = api.call(Method::GET, "/clues?sort=relevance", None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = api.call(Method::GET, "/clues?sort=sideways", None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn graph_editing() {
    let api = Api::new().await;
    ingest(&api, three()).await;
    let g = api
        .expect(Method::POST, "/graphs", Some(json!({"game_name": "Hollow Knight"})), StatusCode::CREATED, "InterpretationGraph")
        .await;
    assert_eq!(g["id"], "g1");
    let r = api.call(Method::POST, "/graphs", Some(json!({"game_name": "x", "id": "g1"}).to_string())).await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    let rect = json!({"x": 10.0, "y": 20.0, "width": 120.0, "height": 80.0});
    let a = api
        .expect(Method::POST, "/graphs/g1/nodes", Some(json!({"kind": {"type": "clue", "clue_id": "e3"}, "rect": rect})), StatusCode::CREATED, "Node")
        .await;
    let b = api
        .expect(Method::POST, "/graphs/g1/nodes", Some(json!({"kind": {"type": "text", "text": "Sly knows"}, "rect": rect})), StatusCode::CREATED, "Node")
        .await;
    let r = api
        .call(Method::POST, "/graphs/g1/nodes", Some(json!({"kind": {"type": "clue", "clue_id": "zz"}, "rect": rect}).to_string()))
        .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let e = api
        .expect(Method::POST, "/graphs/g1/edges", Some(json!({"from": a["id"], "to": b["id"], "annotation": "explains"})), StatusCode::CREATED, "Edge")
        .await;
    let r = api.call(Method::POST, "/graphs/g1/edges", Some(json!({"from": a["id"], "to": a["id"]}).to_string())).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let path = format!("/graphs/g1/edges/{}", e["id"].as_str().unwrap());
    let e2 = api.expect(Method::PATCH, &path, Some(json!({"annotation": null})), StatusCode::OK, "Edge").await;
    assert_eq!(e2["annotation"], Value::Null);

    let grp = api
        .expect(Method::POST, "/graphs/g1/groups", Some(json!({"members": [a["id"], b["id"]]})), StatusCode::CREATED, "Node")
        .await;
    let gpath = format!("/graphs/g1/nodes/{}", grp["id"].as_str().unwrap());
    api.expect(Method::PATCH, &gpath, Some(json!({"translate": {"dx": 5.0, "dy": 0.0}})), StatusCode::OK, "Node").await;
    let moved = api
        .expect(Method::PATCH, &format!("/graphs/g1/nodes/{}", a["id"].as_str().unwrap()), Some(json!({})), StatusCode::OK, "Node")
        .await;
    assert_eq!(moved["rect"]["x"], 15.0);
    let r = api
        .call(Method::PATCH, &gpath, Some(json!({"rect": {"x": 0, "y": 0, "width": 0, "height": 1}}).to_string()))
        .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let aid = a["id"].as_str().unwrap();
    let x = api
        .expect(Method::GET, &format!("/graphs/g1/nodes/{aid}/expand"), None, StatusCode::OK, "ExpandResponse")
        .await;
    let kw = x["keywords"][0].as_str().unwrap().to_string();
    let ctx = api
        .expect(Method::POST, &format!("/graphs/g1/nodes/{aid}/lookup"), Some(json!({"keyword": kw})), StatusCode::CREATED, "Node")
        .await;
    assert_eq!(ctx["kind"]["text"], format!("MOCK({kw}|Hollow Knight)"));
    assert_eq!(ctx["rect"]["x"], 15.0 + 120.0 + 24.0);
    let r = api
        .call(Method::POST, &format!("/graphs/g1/nodes/{aid}/lookup"), Some(json!({"keyword": "lantern"}).to_string()))
        .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    api.expect(Method::DELETE, &format!("/graphs/g1/groups/{}", grp["id"].as_str().unwrap()), None, StatusCode::OK, "Node")
        .await;
    api.expect(Method::DELETE, &format!("/graphs/g1/nodes/{}", b["id"].as_str().unwrap()), None, StatusCode::OK, "Node")
        .await;
    let doc = api.call(Method::GET, "/graphs/g1", None).await;
    let v = doc.json();
    api.check_schema("InterpretationGraph", &v);
    assert!(v["edges"].as_object().unwrap().is_empty());
}

#[tokio::test]
async fn put_then_get_is_byte_identical() {
    let api = Api::new().await;
    ingest(&api, three()).await;
    let doc = r#"{"edges":{"e1":{"annotation":"before","from":"n1","id":"e1","to":"n2"}},"game_name":"Hollow Knight","id":"desk","nodes":{"n1":{"id":"n1","kind":{"clue_id":"e1","type":"clue"},"rect":{"height":80.0,"width":120.0,"x":0.5,"y":0.25}},"n2":{"id":"n2","kind":{"text":"theory","type":"text"},"rect":{"height":10.0,"width":10.0,"x":-3.0,"y":7.125}},"n3":{"id":"n3","kind":{"members":["n1","n2"],"type":"group"},"rect":{"height":100.0,"width":200.0,"x":-20.0,"y":-20.0}}},"schema_version":1}"#;
    let r = api.call(Method::PUT, "/graphs/desk", Some(doc.into())).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    let r = api.call(Method::GET, "/graphs/desk", None).await;
    assert_eq!(r.text, doc);

    let r = api.call(Method::PUT, "/graphs/other", Some(doc.into())).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = api
        .call(Method::PUT, "/graphs/desk", Some(doc.replace("\"schema_version\":1", "\"schema_version\":2")))
        .await;
    assert_eq!(r.json()["code"], "schema_mismatch");
    let r = api.call(Method::PUT, "/graphs/desk", Some(doc.replace("\"e1\",\"type\"", "\"nope\",\"type\""))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = api.call(Method::GET, "/graphs/missing", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn llm_failure_maps_to_bad_gateway() {
    let backend = Arc::new(ScriptedBackend::new(Vec::<String>::new()));
    backend.push_failure("connection refused");
    backend.push_failure("connection refused");
    let dir = tempfile::tempdir().unwrap();
    let api = Api::with(Arc::new(LlmClassifier::new(backend, dir.path(), 2))).await;
    // Seed one clue through the mock path so a clue node exists.
    {
        let mut store = ClueStore::open(api._dir.path()).unwrap();
        store
            .ingest(&[event("m1", 1, &["Sly"], &[], "geo shop geo")], &MockClassifier)
            .await
            .unwrap();
    }
    let api = {
        let store = ClueStore::open(api._dir.path()).unwrap();
        let backend = Arc::new(ScriptedBackend::new(Vec::<String>::new()));
        backend.push_failure("connection refused");
        Api {
            app: router(AppState::new(store, Arc::new(LlmClassifier::new(backend, dir.path(), 2)))),
            schemas: api.schemas,
            _dir: api._dir,
        }
    };
    api.call(Method::POST, "/graphs", Some(json!({"game_name": "Hollow Knight"}).to_string())).await;
    let n = api
        .call(
            Method::POST,
            "/graphs/g1/nodes",
            Some(json!({"kind": {"type": "clue", "clue_id": "m1"}, "rect": {"x": 0, "y": 0, "width": 1, "height": 1}}).to_string()),
        )
        .await
        .json();
    let r = api
        .call(Method::POST, &format!("/graphs/g1/nodes/{}/lookup", n["id"].as_str().unwrap()), Some(json!({"keyword": "geo"}).to_string()))
        .await;
    assert_eq!(r.status, StatusCode::BAD_GATEWAY);
    assert_eq!(r.json()["code"], "llm_unavailable");

    // A capture whose media file is missing is reported, not fatal.
    let v = ingest(&api, log_text(&[event("x1", 1, &[], &[], "")])).await;
    assert_eq!(v["failures"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn concurrent_writes_all_land() {
    let api = Api::new().await;
    let events: Vec<CaptureEvent> = (0..20).map(|i| event(&format!("c{i:02}"), i, &["Sly"], &[], "geo")).collect();
    ingest(&api, log_text(&events)).await;
    let calls = (0..20).map(|i| {
        let api = &api;
        async move {
            let body = json!({"label": format!("t{i}")}).to_string();
            api.call(Method::POST, &format!("/clues/c{i:02}/tags"), Some(body)).await.status
        }
    });
    let statuses = futures::future::join_all(calls).await;
    assert!(statuses.iter().all(|s| *s == StatusCode::OK));
    let lines = std::fs::read_to_string(api._dir.path().join("clues.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 40);
}
