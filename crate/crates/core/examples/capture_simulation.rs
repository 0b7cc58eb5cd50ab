//! Replay a scene script and print the capture events it produces.
//!
//!     cargo run --example capture_simulation [script.json]

use cluecart::capture::{event_to_line, load_script, run_script};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/hollow_knight.json").to_string());
    let script = load_script(&path)?;
    let events = run_script(&script)?;
    println!("{}: {} objects, {} steps -> {} events", script.game_name, script.objects.len(), script.steps.len(), events.len());

    for e in &events {
        let what = match &e.achievement {
            Some(a) => format!("achievement `{a}`"),
            None => format!("{:?}", e.media.kind).to_lowercase(),
        };
        println!(
            "{:>7}ms {}  {:<22} chars={:?} locs={:?}",
            e.timestamp_ms, e.id, what, e.detected_characters, e.detected_locations
        );
    }

    // The JSONL wire form, as written by `cluecart simulate`.
    if let Some(first) = events.first() {
        println!("\n{}", event_to_line(first));
    }
    Ok(())
}
