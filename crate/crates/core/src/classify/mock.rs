//! Deterministic rule-based classifier used offline and in tests.

use std::collections::HashMap;
use std::sync::OnceLock;

use async_trait::async_trait;

use super::{ClassifyError, Classifier, ElementClassification};
use crate::capture::CaptureEvent;
use crate::model::{ElementType, MediaKind, MAX_DESCRIPTION_WORDS, MAX_KEYWORDS, MAX_LABEL_CHARS};

const STOPWORDS_FIXTURE: &str = include_str!("../../fixtures/stopwords.txt");
const ENVIRONMENT_CUES: [&str; 3] = ["ENTER", "CHALLENGE", "LISTEN"];

pub fn stopwords() -> &'static [&'static str] {
    static WORDS: OnceLock<Vec<&'static str>> = OnceLock::new();
    WORDS.get_or_init(|| {
        STOPWORDS_FIXTURE
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .collect()
    })
}

/// Picks the element type by the first matching rule.
pub fn mock_element(event: &CaptureEvent) -> ElementType {
    let p = &event.payload;
    if event.media.kind == MediaKind::Recording {
        return ElementType::CutScene;
    }
    if p.speaker.is_some() {
        return ElementType::Dialogue;
    }
    let inventory = p.flags.iter().any(|f| f.eq_ignore_ascii_case("inventory"))
        || p.ocr_text.to_lowercase().contains("inventory");
    if inventory {
        return ElementType::Artifact;
    }
    if ENVIRONMENT_CUES.iter().any(|c| p.ocr_text.contains(c)) {
        return ElementType::Environment;
    }
    if !p.ocr_text.is_empty() {
        return ElementType::Text;
    }
    // Textless frame: a visible character makes it a character clue.
    if !event.detected_characters.is_empty() {
        return ElementType::RelatedCharacter;
    }
    ElementType::Environment
}

/// Up to three most frequent non-stopword tokens, ties by first occurrence.
pub fn extract_keywords(text: &str) -> Vec<String> {
    let stop = stopwords();
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for raw in text.split_whitespace() {
        let token = raw
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if token.is_empty() || stop.contains(&token.as_str()) {
            continue;
        }
        let token: String = token.chars().take(MAX_LABEL_CHARS).collect();
        let n = counts.entry(token.clone()).or_insert(0);
        if *n == 0 {
            order.push(token);
        }
        *n += 1;
    }
    let mut ranked: Vec<(usize, usize, String)> = order
        .into_iter()
        .enumerate()
        .map(|(first, tok)| (counts[&tok], first, tok))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked
        .into_iter()
        .take(MAX_KEYWORDS)
        .map(|(_, _, tok)| tok)
        .collect()
}

/// `"<element label>: "` followed by the OCR tokens, cut at 30 words total.
/// Without text it is just the label.
pub fn mock_description(element: ElementType, text: &str) -> String {
    if text.trim().is_empty() {
        return element.label().to_string();
    }
    let head = format!("{}:", element.label());
    head.split_whitespace()
        .chain(text.split_whitespace())
        .take(MAX_DESCRIPTION_WORDS)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn mock_classify(event: &CaptureEvent) -> ElementClassification {
    let element = mock_element(event);
    ElementClassification {
        element,
        description: mock_description(element, &event.payload.ocr_text),
        keywords: extract_keywords(&event.payload.ocr_text),
    }
}

pub fn mock_lookup(keyword: &str, game: &str) -> String {
    format!("MOCK({keyword}|{game})")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockClassifier;

#[async_trait]
impl Classifier for MockClassifier {
    async fn classify(&self, event: &CaptureEvent) -> Result<ElementClassification, ClassifyError> {
        Ok(mock_classify(event))
    }

    async fn lookup(&self, keyword: &str, game: &str) -> Result<String, ClassifyError> {
        super::render_lookup_prompt(keyword, game)?;
        Ok(mock_lookup(keyword, game))
    }
}
