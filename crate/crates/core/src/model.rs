//! Domain types shared across the crate: tags, element types, media
//! references and clues, plus the constraint checks applied to them.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum tag label and keyword length, in characters.
pub const MAX_LABEL_CHARS: usize = 64;
/// Maximum description length, in whitespace-delimited words.
pub const MAX_DESCRIPTION_WORDS: usize = 30;
/// Maximum number of keywords per clue.
pub const MAX_KEYWORDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("tag label is empty")]
    EmptyLabel,
    #[error("tag label exceeds {MAX_LABEL_CHARS} characters ({0})")]
    LabelTooLong(usize),
    #[error("unknown tag kind `{0}`")]
    UnknownKind(String),
    #[error("tag `{0}` is not of the form kind:label")]
    MissingKind(String),
}

/// First taxonomy level, plus user-created custom tags.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum TagKind {
    Character,
    Location,
    Achievement,
    Custom,
}

impl TagKind {
    pub const ALL: [TagKind; 4] = [
        TagKind::Character,
        TagKind::Location,
        TagKind::Achievement,
        TagKind::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TagKind::Character => "character",
            TagKind::Location => "location",
            TagKind::Achievement => "achievement",
            TagKind::Custom => "custom",
        }
    }

    /// Machine tags are assigned by the capture pipeline and cannot be
    /// edited by users.
    pub fn is_machine(self) -> bool {
        !matches!(self, TagKind::Custom)
    }
}

impl fmt::Display for TagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TagKind {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "character" => Ok(TagKind::Character),
            "location" => Ok(TagKind::Location),
            "achievement" => Ok(TagKind::Achievement),
            "custom" => Ok(TagKind::Custom),
            other => Err(TagError::UnknownKind(other.to_string())),
        }
    }
}

/// A typed label. Equality, ordering and hashing use the kind and the
/// lowercased label, so `Character:Sly` and `Character:SLY` are the same tag.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(try_from = "RawTag")]
pub struct Tag {
    kind: TagKind,
    label: String,
}

#[derive(Deserialize, JsonSchema)]
struct RawTag {
    kind: TagKind,
    label: String,
}

impl TryFrom<RawTag> for Tag {
    type Error = TagError;

    fn try_from(raw: RawTag) -> Result<Self, Self::Error> {
        Tag::new(raw.kind, &raw.label)
    }
}

/// Trims, collapses internal whitespace and enforces the length cap.
pub fn normalize_tag(kind: TagKind, raw_label: &str) -> Result<Tag, TagError> {
    let label = raw_label.split_whitespace().collect::<Vec<_>>().join(" ");
    if label.is_empty() {
        return Err(TagError::EmptyLabel);
    }
    let chars = label.chars().count();
    if chars > MAX_LABEL_CHARS {
        return Err(TagError::LabelTooLong(chars));
    }
    Ok(Tag { kind, label })
}

impl Tag {
    pub fn new(kind: TagKind, raw_label: &str) -> Result<Self, TagError> {
        normalize_tag(kind, raw_label)
    }

    pub fn kind(&self) -> TagKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Case-folded comparison key.
    pub fn key(&self) -> TagKey {
        TagKey {
            kind: self.kind,
            folded: self.label.to_lowercase(),
        }
    }

    /// Parses `kind:label`; everything after the first colon is the label.
    pub fn parse_qualified(s: &str) -> Result<Self, TagError> {
        let (kind, label) = s
            .split_once(':')
            .ok_or_else(|| TagError::MissingKind(s.to_string()))?;
        Tag::new(kind.parse()?, label)
    }

    pub fn qualified(&self) -> String {
        format!("{}:{}", self.kind, self.label)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.label)
    }
}

impl FromStr for Tag {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tag::parse_qualified(s)
    }
}

/// Index key for a tag: kind plus lowercased label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TagKey {
    pub kind: TagKind,
    pub folded: String,
}

impl PartialEq for Tag {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.label.to_lowercase() == other.label.to_lowercase()
    }
}

impl Eq for Tag {}

impl Hash for Tag {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for Tag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tag {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Second taxonomy level. A clue carries exactly one.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum ElementType {
    CutScene,
    RelatedCharacter,
    Environment,
    Artifact,
    Text,
    Dialogue,
}

impl ElementType {
    /// Listing order of the element groups in the library view.
    pub const DISPLAY_ORDER: [ElementType; 6] = [
        ElementType::CutScene,
        ElementType::RelatedCharacter,
        ElementType::Environment,
        ElementType::Artifact,
        ElementType::Dialogue,
        ElementType::Text,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ElementType::CutScene => "Cut-scene",
            ElementType::RelatedCharacter => "Related Character",
            ElementType::Environment => "Environment",
            ElementType::Artifact => "Artifact",
            ElementType::Text => "Text",
            ElementType::Dialogue => "Dialogue",
        }
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, JsonSchema)]
#[serde(transparent)]
pub struct ClueId(pub String);

impl ClueId {
    pub fn new(id: impl Into<String>) -> Self {
        ClueId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Screenshot,
    Recording,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MediaPathError {
    #[error("media path is empty")]
    Empty,
    #[error("media path `{0}` is absolute")]
    Absolute(String),
    #[error("media path `{0}` escapes the data directory")]
    Traversal(String),
}

/// Reference to a captured media file, relative to the data directory.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema)]
pub struct MediaRef {
    pub kind: MediaKind,
    pub path: String,
}

impl MediaRef {
    pub fn new(kind: MediaKind, path: impl Into<String>) -> Result<Self, MediaPathError> {
        let media = MediaRef {
            kind,
            path: path.into(),
        };
        media.check_path()?;
        Ok(media)
    }

    pub fn check_path(&self) -> Result<(), MediaPathError> {
        let p = self.path.as_str();
        if p.is_empty() {
            return Err(MediaPathError::Empty);
        }
        if p.starts_with('/') || p.starts_with('\\') || p.get(1..2) == Some(":") {
            return Err(MediaPathError::Absolute(p.to_string()));
        }
        if p.split(['/', '\\']).any(|seg| seg == "..") {
            return Err(MediaPathError::Traversal(p.to_string()));
        }
        Ok(())
    }
}

/// One captured narrative fragment after classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Clue {
    pub id: ClueId,
    pub media: MediaRef,
    pub timestamp_ms: i64,
    pub tags: Vec<Tag>,
    pub element: ElementType,
    pub description: String,
    pub keywords: Vec<String>,
}

impl Clue {
    pub fn has_tag(&self, tag: &Tag) -> bool {
        self.tags.contains(tag)
    }
}

/// Whitespace-delimited word count; punctuation stays attached to tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A single violated clue constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    DescriptionTooLong { words: usize },
    TooManyKeywords { count: usize },
    EmptyKeyword { index: usize },
    KeywordTooLong { index: usize },
    DuplicateKeyword { keyword: String },
    DuplicateTag { tag: String },
    NegativeTimestamp,
    EmptyId,
    BadMediaPath(String),
    InvalidTag(String),
}

impl Violation {
    /// Short stable code, e.g. `description>30w`.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::DescriptionTooLong { .. } => "description>30w",
            Violation::TooManyKeywords { .. } => "keywords>3",
            Violation::EmptyKeyword { .. } => "keyword-empty",
            Violation::KeywordTooLong { .. } => "keyword>64c",
            Violation::DuplicateKeyword { .. } => "keyword-duplicate",
            Violation::DuplicateTag { .. } => "tag-duplicate",
            Violation::NegativeTimestamp => "timestamp<0",
            Violation::EmptyId => "id-empty",
            Violation::BadMediaPath(_) => "media-path",
            Violation::InvalidTag(_) => "tag-invalid",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DescriptionTooLong { words } => {
                write!(f, "description has {words} words (max {MAX_DESCRIPTION_WORDS})")
            }
            Violation::TooManyKeywords { count } => {
                write!(f, "{count} keywords (max {MAX_KEYWORDS})")
            }
            Violation::EmptyKeyword { index } => write!(f, "keyword #{index} is empty"),
            Violation::KeywordTooLong { index } => {
                write!(f, "keyword #{index} exceeds {MAX_LABEL_CHARS} characters")
            }
            Violation::DuplicateKeyword { keyword } => write!(f, "duplicate keyword `{keyword}`"),
            Violation::DuplicateTag { tag } => write!(f, "duplicate tag `{tag}`"),
            Violation::NegativeTimestamp => f.write_str("timestamp is negative"),
            Violation::EmptyId => f.write_str("clue id is empty"),
            Violation::BadMediaPath(msg) | Violation::InvalidTag(msg) => f.write_str(msg),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.violations.iter().map(Violation::code).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return f.write_str("pass");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Reports every violated clue invariant. Never mutates.
pub fn validate_clue(clue: &Clue) -> ValidationReport {
    let mut violations = Vec::new();

    if clue.id.0.trim().is_empty() {
        violations.push(Violation::EmptyId);
    }
    if clue.timestamp_ms < 0 {
        violations.push(Violation::NegativeTimestamp);
    }
    if let Err(e) = clue.media.check_path() {
        violations.push(Violation::BadMediaPath(e.to_string()));
    }

    let words = word_count(&clue.description);
    if words > MAX_DESCRIPTION_WORDS {
        violations.push(Violation::DescriptionTooLong { words });
    }

    if clue.keywords.len() > MAX_KEYWORDS {
        violations.push(Violation::TooManyKeywords {
            count: clue.keywords.len(),
        });
    }
    let mut seen = Vec::new();
    for (index, kw) in clue.keywords.iter().enumerate() {
        if kw.trim().is_empty() {
            violations.push(Violation::EmptyKeyword { index });
            continue;
        }
        if kw.chars().count() > MAX_LABEL_CHARS {
            violations.push(Violation::KeywordTooLong { index });
        }
        let folded = kw.to_lowercase();
        if seen.contains(&folded) {
            violations.push(Violation::DuplicateKeyword {
                keyword: kw.clone(),
            });
        } else {
            seen.push(folded);
        }
    }

    for (i, tag) in clue.tags.iter().enumerate() {
        if clue.tags[..i].contains(tag) {
            violations.push(Violation::DuplicateTag { tag: tag.qualified() });
        }
    }

    ValidationReport { violations }
}
