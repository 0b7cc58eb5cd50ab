//! The LLM classification path against a scripted backend: prompt
//! rendering, reply parsing, retry, and caps on the reply.
//!
//!     cargo run --example llm_classification

use std::sync::Arc;

use cluecart::capture::{CaptureEvent, TextPayload};
use cluecart::classify::{
    classify_event, parse_reply, render_lookup_prompt, Classifier, LlmClassifier, ScriptedBackend,
};
use cluecart::model::{MediaKind, MediaRef};

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("cluecart-llm-{}", std::process::id()));
    std::fs::create_dir_all(dir.join("screenshots"))?;
    std::fs::write(dir.join("screenshots/evt-0001.png"), b"\x89PNG\r\n\x1a\n")?;

    let backend = Arc::new(ScriptedBackend::new([
        "I think this is a sign.",
        "**Element:** Text-only\n**Description:** A weathered signpost points travellers down the well toward the forgotten kingdom beneath the sleepy town, its letters nearly worn away by countless years of rain and wind that sweep across the ancient rooftops each night.\n**Keywords:** signpost, well, kingdom, rain",
        "A currency used throughout Hallownest.",
    ]));
    let llm = LlmClassifier::new(backend.clone(), &dir, 2);

    let event = CaptureEvent {
        id: "evt-0001".into(),
        timestamp_ms: 1200,
        media: MediaRef::new(MediaKind::Screenshot, "screenshots/evt-0001.png")?,
        detected_characters: vec!["The Knight".into()],
        detected_locations: vec!["Dirtmouth".into()],
        achievement: None,
        payload: TextPayload::default(),
    };

    // First reply is unparseable; the classifier retries once.
    let clue = classify_event(&llm, &event).await?;
    println!("{} [{}] {:?}", clue.id, clue.element.label(), clue.keywords);
    println!("description ({} words): {}", clue.description.split_whitespace().count(), clue.description);

    println!("\nlookup prompt: {}", render_lookup_prompt("Geo", "Hollow Knight")?);
    println!("lookup reply:  {}", llm.lookup("Geo", "Hollow Knight").await?);

    let requests = backend.requests();
    println!("\n{} requests sent; first carried a {} image", requests.len(), requests[0].image.as_ref().unwrap().mime);
    println!("parse_reply on junk: {:?}", parse_reply("hello").unwrap_err());

    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
