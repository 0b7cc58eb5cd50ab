//! Durable store: simulate, ingest, edit, reopen.
//!
//!     cargo run --example ingest_pipeline [data-dir]

use cluecart::capture::{load_script, run_script};
use cluecart::classify::MockClassifier;
use cluecart::model::ClueId;
use cluecart::store::ClueStore;

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = std::env::temp_dir().join(format!("cluecart-example-{}", std::process::id()));
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or(tmp);
    let events = run_script(&load_script(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/hollow_knight.json"))?)?;

    let mut store = ClueStore::open(&dir)?;
    let report = store.ingest(&events, &MockClassifier).await?;
    println!("created {} clues, skipped {}, failed {}", report.created.len(), report.skipped.len(), report.failures.len());

    // Same log again: nothing new.
    let again = store.ingest(&events, &MockClassifier).await?;
    println!("second ingest: created {}, skipped {}", again.created.len(), again.skipped.len());

    let id = ClueId::new("evt-0001");
    store.add_custom_tag(&id, "Prologue")?;
    store.edit_keywords(&id, vec!["well".into(), "kingdom".into()])?;
    let graph = store.create_graph(None, "Hollow Knight")?.id.clone();
    drop(store);

    // Reopen replays the log; the last line per clue wins.
    let store = ClueStore::open(&dir)?;
    let clue = store.library().get(&id).unwrap();
    println!("after reopen: {} clues, {id} keywords {:?}, tags {:?}", store.library().len(), clue.keywords,
        clue.tags.iter().map(|t| t.qualified()).collect::<Vec<_>>());
    println!("graph {graph} reloaded: {}", store.graph(&graph).is_ok());
    println!("data in {}", dir.display());
    Ok(())
}
