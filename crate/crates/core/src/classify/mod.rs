//! Element classification: capture event in, validated [`Clue`] out.
//!
//! A [`Classifier`] assigns the element type, a short description and up to
//! three keywords. Two implementations ship: [`MockClassifier`], a pure rule
//! set driven by the event's text payload, and [`LlmClassifier`], which sends
//! the classification prompt plus the captured image to a chat-completions
//! endpoint. Whatever a classifier returns is passed through
//! [`ElementClassification::enforce`] before [`build_clue`] turns it into a
//! clue, so stored clues always satisfy the description and keyword caps.

mod llm;
mod mock;
mod prompts;

pub use llm::{
    llm_classify, parse_reply, ChatBackend, ChatRequest, HttpChatBackend, ImageAttachment,
    LlmClassifier, ScriptedBackend, DEFAULT_MAX_INFLIGHT,
};
pub use mock::{
    extract_keywords, mock_classify, mock_description, mock_element, mock_lookup, stopwords,
    MockClassifier,
};
pub use prompts::{
    render_classification_prompt, render_lookup_prompt, CLASSIFY_PROMPT, LOOKUP_TEMPLATE,
};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::CaptureEvent;
use crate::model::{
    normalize_tag, validate_clue, word_count, Clue, ClueId, ElementType, Tag, TagKind,
    ValidationReport, Violation, MAX_DESCRIPTION_WORDS, MAX_KEYWORDS, MAX_LABEL_CHARS,
};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("empty {0}")]
    EmptyArgument(&'static str),
    #[error("LLM unavailable: {0}")]
    LlmUnavailable(String),
    #[error("unparseable LLM reply: {0}")]
    UnparseableReply(String),
    #[error("cannot read media `{path}`: {source}")]
    MediaUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("clue failed validation: {0}")]
    ValidationFailed(ValidationReport),
}

/// Element, description and keywords for one capture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementClassification {
    pub element: ElementType,
    pub description: String,
    pub keywords: Vec<String>,
}

impl ElementClassification {
    /// Truncates the description to 30 words and the keyword list to its
    /// first three distinct non-empty entries. Returns what was changed.
    pub fn enforce(self) -> (Self, Vec<String>) {
        let mut warnings = Vec::new();
        let words = word_count(&self.description);
        let description = if words > MAX_DESCRIPTION_WORDS {
            warnings.push(format!(
                "description truncated from {words} to {MAX_DESCRIPTION_WORDS} words"
            ));
            self.description
                .split_whitespace()
                .take(MAX_DESCRIPTION_WORDS)
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            self.description
        };

        let mut keywords: Vec<String> = Vec::new();
        let total = self.keywords.len();
        for raw in self.keywords {
            let mut kw = raw.split_whitespace().collect::<Vec<_>>().join(" ");
            if kw.is_empty() {
                continue;
            }
            if kw.chars().count() > MAX_LABEL_CHARS {
                kw = kw.chars().take(MAX_LABEL_CHARS).collect::<String>().trim_end().to_string();
                warnings.push(format!("keyword truncated to {MAX_LABEL_CHARS} characters"));
            }
            let folded = kw.to_lowercase();
            if keywords.iter().any(|k| k.to_lowercase() == folded) {
                continue;
            }
            if keywords.len() == MAX_KEYWORDS {
                warnings.push(format!("keyword list cut from {total} entries to {MAX_KEYWORDS}"));
                break;
            }
            keywords.push(kw);
        }

        (
            ElementClassification {
                element: self.element,
                description,
                keywords,
            },
            warnings,
        )
    }
}

/// Anything that can classify a capture and look up a keyword.
#[async_trait]
pub trait Classifier: Send + Sync {
    async fn classify(&self, event: &CaptureEvent) -> Result<ElementClassification, ClassifyError>;

    /// Real-world meaning of `keyword` in the context of `game`.
    async fn lookup(&self, keyword: &str, game: &str) -> Result<String, ClassifyError>;
}

/// Builds a clue whose machine tags mirror the event's detections.
///
/// Tag order: characters, then locations, then the achievement. Duplicate
/// detections collapse to one tag.
pub fn build_clue(event: &CaptureEvent, cls: ElementClassification) -> Result<Clue, ClassifyError> {
    let mut tags: Vec<Tag> = Vec::new();
    let mut bad = Vec::new();
    let detections = event
        .detected_characters
        .iter()
        .map(|n| (TagKind::Character, n))
        .chain(event.detected_locations.iter().map(|n| (TagKind::Location, n)))
        .chain(event.achievement.iter().map(|n| (TagKind::Achievement, n)));
    for (kind, name) in detections {
        match normalize_tag(kind, name) {
            Ok(tag) if !tags.contains(&tag) => tags.push(tag),
            Ok(_) => {}
            Err(e) => bad.push(Violation::InvalidTag(format!("{kind} tag `{name}`: {e}"))),
        }
    }

    let clue = Clue {
        id: ClueId::new(event.id.clone()),
        media: event.media.clone(),
        timestamp_ms: event.timestamp_ms,
        tags,
        element: cls.element,
        description: cls.description,
        keywords: cls.keywords,
    };
    let mut report = validate_clue(&clue);
    report.violations.extend(bad);
    if report.is_pass() {
        Ok(clue)
    } else {
        Err(ClassifyError::ValidationFailed(report))
    }
}

/// Classifies, enforces the output caps, and builds the clue.
pub async fn classify_event(
    classifier: &dyn Classifier,
    event: &CaptureEvent,
) -> Result<Clue, ClassifyError> {
    let raw = classifier.classify(event).await?;
    let (cls, warnings) = raw.enforce();
    for w in warnings {
        tracing::warn!(event = %event.id, "{w}");
    }
    build_clue(event, cls)
}
