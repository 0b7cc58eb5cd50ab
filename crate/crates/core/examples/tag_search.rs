//! Priority-weighted tag search, related clues and element grouping.
//!
//!     cargo run --example tag_search

use cluecart::capture::{load_script, run_script};
use cluecart::classify::classify_event;
use cluecart::classify::MockClassifier;
use cluecart::retrieval::{ClueLibrary, SortMode, TagQuery};

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = load_script(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/hollow_knight.json"))?;
    let mut library = ClueLibrary::new();
    for event in run_script(&script)? {
        library.insert(classify_event(&MockClassifier, &event).await?)?;
    }

    // First tag outranks the second: a clue matching only the first scores 2,
    // only the second 1, both 3.
    for order in [["location:City of Tears", "character:Quirrel"], ["character:Quirrel", "location:City of Tears"]] {
        let query = TagQuery::parse(order)?;
        println!("search {order:?}");
        for r in library.search(&query).iter().take(5) {
            println!("  {:>2}  {}  {}", r.score, r.clue_id, library.get(&r.clue_id).unwrap().description);
        }
    }

    let source = library.iter().next().unwrap().id.clone();
    println!("\nrelated to {source}:");
    for r in library.recommend_related(&source)?.iter().take(5) {
        println!("  {:>2}  {}", r.score, r.clue_id);
    }

    library.add_custom_tag(&source, "Prologue")?;
    let query = TagQuery::parse(["custom:prologue"])?;
    println!("\ncustom tag hits: {:?}", library.search(&query).iter().map(|r| r.clue_id.to_string()).collect::<Vec<_>>());

    println!("\nby element, most relevant to character:Hornet first:");
    let query = TagQuery::parse(["character:Hornet"])?;
    for group in library.sort_elements(SortMode::TagRelevance, Some(&query))? {
        let ids: Vec<String> = group.clues.iter().map(|r| format!("{}({})", r.clue_id, r.score)).collect();
        println!("  {:<18} {}", group.element.label(), ids.join(" "));
    }
    Ok(())
}
