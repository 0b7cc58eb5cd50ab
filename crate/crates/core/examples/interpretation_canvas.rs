//! Build an interpretation graph: clue and note nodes, annotated links,
//! nested groups, a keyword lookup, and a save/load round trip.
//!
//!     cargo run --example interpretation_canvas

use cluecart::capture::{load_script, run_script};
use cluecart::classify::{classify_event, MockClassifier};
use cluecart::graph::{load_graph, save_graph, GraphId, InterpretationGraph, NodeKind, Rect};
use cluecart::retrieval::ClueLibrary;

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = load_script(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/hollow_knight.json"))?;
    let mut library = ClueLibrary::new();
    for event in run_script(&script)? {
        library.insert(classify_event(&MockClassifier, &event).await?)?;
    }
    let clues: Vec<_> = library.iter().map(|c| c.id.clone()).collect();

    let mut g = InterpretationGraph::new(GraphId::new("desk"), &script.game_name);
    let card = |x: f64, y: f64| Rect::new(x, y, 180.0, 100.0);
    let a = g.add_node(NodeKind::Clue { clue_id: clues[0].clone() }, card(0.0, 0.0), &library)?;
    let b = g.add_node(NodeKind::Clue { clue_id: clues[1].clone() }, card(0.0, 140.0), &library)?;
    let note = g.add_node(NodeKind::Text { text: "Why did everyone leave?".into() }, card(260.0, 60.0), &library)?;
    g.link(&a, &note, Some("raises".into()))?;
    let e = g.link(&b, &note, None)?;
    g.annotate_edge(&e, Some("answers, partly".into()))?;

    let town = g.group(&[a.clone(), b.clone()])?;
    let chapter = g.group(&[town.clone(), note.clone()])?;
    println!("group {town} bounds {:?}", g.node(&town)?.rect);
    println!("group {chapter} bounds {:?}", g.node(&chapter)?.rect);

    // Moving the outer group drags everything inside it.
    g.translate(&chapter, 50.0, 0.0)?;
    println!("after translate, {a} at x={}", g.node(&a)?.rect.x);

    let (keywords, tags) = g.expand_node(&a, &library)?;
    println!("{a}: keywords {keywords:?}, tags {:?}", tags.iter().map(|t| t.qualified()).collect::<Vec<_>>());
    if let Some(kw) = keywords.first() {
        let ctx = g.lookup_keyword(&a, kw, &MockClassifier, &library).await?;
        println!("context node {ctx}: {:?} at {:?}", g.node(&ctx)?.kind, g.node(&ctx)?.rect);
    }

    println!("cycle refused: {}", g.add_to_group(&town, std::slice::from_ref(&chapter)).unwrap_err());
    println!("audit issues: {}", g.audit(Some(&library)).len());

    let doc = save_graph(&g);
    assert_eq!(load_graph(&doc)?, g);
    println!("\n{} bytes, round trip ok\n{}", doc.len(), &doc[..doc.len().min(240)]);
    Ok(())
}
