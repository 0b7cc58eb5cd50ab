//! Mock classification: element type, description and keywords per capture.
//!
//!     cargo run --example classify_events

use cluecart::capture::{load_script, run_script};
use cluecart::classify::{classify_event, extract_keywords, MockClassifier};

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = load_script(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/hollow_knight.json"))?;
    let events = run_script(&script)?;

    for event in events.iter().take(8) {
        let clue = classify_event(&MockClassifier, event).await?;
        let tags: Vec<String> = clue.tags.iter().map(|t| t.qualified()).collect();
        println!("{} [{}]", clue.id, clue.element.label());
        println!("    description: {}", clue.description);
        println!("    keywords:    {:?}", clue.keywords);
        println!("    tags:        {}", tags.join(", "));
    }

    println!("\nkeywords of a raw line: {:?}", extract_keywords("The lantern, the lantern! Light the lantern in the Crossroads."));
    Ok(())
}
