//! Tag index over the clue library and priority-weighted ranking.
//!
//! A [`TagQuery`] is an ordered tag list: position 0 has the highest
//! priority. In a query of `n` tags the tag at position `r` weighs `n - r`,
//! and a clue scores the sum of the weights of the query tags it carries.
//! Every ordering breaks ties by timestamp (oldest first) and then by id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    normalize_tag, validate_clue, Clue, ClueId, ElementType, Tag, TagError, TagKey, TagKind,
    ValidationReport, MAX_KEYWORDS, MAX_LABEL_CHARS,
};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("unknown clue `{0}`")]
    UnknownClue(ClueId),
    #[error("clue `{0}` already exists")]
    DuplicateClue(ClueId),
    #[error("clue `{id}` is invalid: {report}")]
    InvalidClue { id: ClueId, report: ValidationReport },
    #[error("tag `{0}` is already present")]
    DuplicateTag(String),
    #[error("tag `{0}` is machine-assigned and cannot be changed")]
    MachineTagImmutable(String),
    #[error("custom tag `{0}` not found on clue")]
    TagNotFound(String),
    #[error(transparent)]
    InvalidTag(#[from] TagError),
    #[error("{0} keywords given, at most {MAX_KEYWORDS} allowed")]
    TooManyKeywords(usize),
    #[error("invalid keyword: {0}")]
    InvalidKeyword(String),
    #[error("tag-relevance sorting needs a query")]
    MissingQuery,
}

/// Ordered, duplicate-free tag list; index 0 is the highest priority.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct TagQuery {
    tags: Vec<Tag>,
}

impl TagQuery {
    pub fn new(tags: Vec<Tag>) -> Result<Self, RetrievalError> {
        for (i, t) in tags.iter().enumerate() {
            if tags[..i].contains(t) {
                return Err(RetrievalError::DuplicateTag(t.qualified()));
            }
        }
        Ok(TagQuery { tags })
    }

    /// Parses `kind:label` items in priority order.
    pub fn parse<'a>(items: impl IntoIterator<Item = &'a str>) -> Result<Self, RetrievalError> {
        let tags = items
            .into_iter()
            .map(Tag::parse_qualified)
            .collect::<Result<Vec<_>, _>>()?;
        TagQuery::new(tags)
    }

    /// Query made of all of a clue's tags, in stored order.
    pub fn from_clue(clue: &Clue) -> Self {
        let mut tags: Vec<Tag> = Vec::with_capacity(clue.tags.len());
        for t in &clue.tags {
            if !tags.contains(t) {
                tags.push(t.clone());
            }
        }
        TagQuery { tags }
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Weight of the tag at priority `rank`.
    pub fn weight(&self, rank: usize) -> u64 {
        (self.tags.len() - rank) as u64
    }
}

/// One search hit. `matched` lists the clue's tags that matched, in query
/// priority order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct RankedResult {
    pub clue_id: ClueId,
    pub score: u64,
    pub matched: Vec<Tag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SortMode {
    Temporal,
    #[serde(alias = "relevance")]
    TagRelevance,
}

impl std::str::FromStr for SortMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "temporal" => Ok(SortMode::Temporal),
            "relevance" | "tag_relevance" => Ok(SortMode::TagRelevance),
            other => Err(format!("unknown sort mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct ElementGroup {
    pub element: ElementType,
    pub clues: Vec<RankedResult>,
}

/// Score arithmetic shared by the integer ranking and the scaled-weight
/// variant used to check that only the weight ordering matters.
trait Score: Copy + Default + std::ops::Add<Output = Self> {
    fn is_positive(self) -> bool;
    /// Descending comparison (higher scores first).
    fn cmp_desc(self, other: Self) -> Ordering;
}

impl Score for u64 {
    fn is_positive(self) -> bool {
        self > 0
    }

    fn cmp_desc(self, other: Self) -> Ordering {
        other.cmp(&self)
    }
}

impl Score for f64 {
    fn is_positive(self) -> bool {
        self > 0.0
    }

    fn cmp_desc(self, other: Self) -> Ordering {
        let scale = self.abs().max(other.abs());
        if (self - other).abs() <= scale * 1e-9 {
            Ordering::Equal
        } else {
            other.partial_cmp(&self).unwrap_or(Ordering::Equal)
        }
    }
}

struct Scored<'a, S> {
    clue: &'a Clue,
    score: S,
    matched: Vec<Tag>,
}

fn cmp_ranked<S: Score>(a: &Scored<'_, S>, b: &Scored<'_, S>) -> Ordering {
    a.score
        .cmp_desc(b.score)
        .then(a.clue.timestamp_ms.cmp(&b.clue.timestamp_ms))
        .then_with(|| a.clue.id.cmp(&b.clue.id))
}

fn cmp_temporal(a: &Clue, b: &Clue) -> Ordering {
    a.timestamp_ms
        .cmp(&b.timestamp_ms)
        .then_with(|| a.id.cmp(&b.id))
}

/// In-memory clue collection with an inverted tag index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClueLibrary {
    clues: BTreeMap<ClueId, Clue>,
    index: BTreeMap<TagKey, BTreeSet<ClueId>>,
}

type Groups<'a, S> = Vec<(ElementType, Vec<Scored<'a, S>>)>;

impl ClueLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.clues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clues.is_empty()
    }

    pub fn get(&self, id: &ClueId) -> Option<&Clue> {
        self.clues.get(id)
    }

    pub fn contains(&self, id: &ClueId) -> bool {
        self.clues.contains_key(id)
    }

    /// Clues in id order.
    pub fn iter(&self) -> impl Iterator<Item = &Clue> {
        self.clues.values()
    }

    /// Tag key to the ids of every clue carrying it.
    pub fn tag_index(&self) -> &BTreeMap<TagKey, BTreeSet<ClueId>> {
        &self.index
    }

    /// Adds a new clue after validating it.
    pub fn insert(&mut self, clue: Clue) -> Result<(), RetrievalError> {
        if self.clues.contains_key(&clue.id) {
            return Err(RetrievalError::DuplicateClue(clue.id));
        }
        self.put(clue)
    }

    /// Inserts or replaces a clue, keeping the index in sync.
    pub(crate) fn put(&mut self, clue: Clue) -> Result<(), RetrievalError> {
        let report = validate_clue(&clue);
        if !report.is_pass() {
            return Err(RetrievalError::InvalidClue {
                id: clue.id,
                report,
            });
        }
        if let Some(old) = self.clues.remove(&clue.id) {
            self.unindex(&old);
        }
        for tag in &clue.tags {
            self.index
                .entry(tag.key())
                .or_default()
                .insert(clue.id.clone());
        }
        self.clues.insert(clue.id.clone(), clue);
        Ok(())
    }

    fn unindex(&mut self, clue: &Clue) {
        for tag in &clue.tags {
            let key = tag.key();
            if let Some(ids) = self.index.get_mut(&key) {
                ids.remove(&clue.id);
                if ids.is_empty() {
                    self.index.remove(&key);
                }
            }
        }
    }

    fn score_all<S: Score>(&self, query: &TagQuery, weight: impl Fn(usize) -> S) -> HashMap<&ClueId, (S, Vec<Tag>)> {
        let mut acc: HashMap<&ClueId, (S, Vec<Tag>)> = HashMap::new();
        for (rank, tag) in query.tags.iter().enumerate() {
            let w = weight(rank);
            if let Some(ids) = self.index.get(&tag.key()) {
                for id in ids {
                    // The clue's own spelling of the matched tag.
                    let own = self.clues[id].tags.iter().find(|t| *t == tag).unwrap_or(tag);
                    let e = acc.entry(id).or_default();
                    e.0 = e.0 + w;
                    e.1.push(own.clone());
                }
            }
        }
        acc
    }

    fn ranked<S: Score>(&self, query: &TagQuery, weight: impl Fn(usize) -> S) -> Vec<Scored<'_, S>> {
        let mut hits: Vec<Scored<'_, S>> = self
            .score_all(query, weight)
            .into_iter()
            .filter(|(_, (s, _))| s.is_positive())
            .map(|(id, (score, matched))| Scored {
                clue: &self.clues[id],
                score,
                matched,
            })
            .collect();
        hits.sort_by(cmp_ranked);
        hits
    }

    /// Priority score of one clue under `query`.
    pub fn relevance_score(clue: &Clue, query: &TagQuery) -> u64 {
        query
            .tags
            .iter()
            .enumerate()
            .filter(|(_, t)| clue.has_tag(t))
            .map(|(r, _)| query.weight(r))
            .sum()
    }

    /// Clues sharing at least one query tag, best first.
    pub fn search(&self, query: &TagQuery) -> Vec<RankedResult> {
        self.ranked(query, |r| query.weight(r))
            .into_iter()
            .map(|s| RankedResult {
                clue_id: s.clue.id.clone(),
                score: s.score,
                matched: s.matched,
            })
            .collect()
    }

    /// [`search`](Self::search) ordering with every weight multiplied by
    /// `scale`.
    pub fn search_scaled(&self, query: &TagQuery, scale: f64) -> Vec<(ClueId, f64)> {
        self.ranked(query, |r| scale * query.weight(r) as f64)
            .into_iter()
            .map(|s| (s.clue.id.clone(), s.score))
            .collect()
    }

    fn source_query(&self, id: &ClueId) -> Result<TagQuery, RetrievalError> {
        self.clues
            .get(id)
            .map(TagQuery::from_clue)
            .ok_or_else(|| RetrievalError::UnknownClue(id.clone()))
    }

    /// Search over all of the clue's tags, without the clue itself.
    pub fn recommend_related(&self, id: &ClueId) -> Result<Vec<RankedResult>, RetrievalError> {
        let query = self.source_query(id)?;
        let mut results = self.search(&query);
        results.retain(|r| &r.clue_id != id);
        Ok(results)
    }

    pub fn recommend_related_scaled(&self, id: &ClueId, scale: f64) -> Result<Vec<(ClueId, f64)>, RetrievalError> {
        let query = self.source_query(id)?;
        let mut results = self.search_scaled(&query, scale);
        results.retain(|(rid, _)| rid != id);
        Ok(results)
    }

    fn grouped<S: Score>(
        &self,
        mode: SortMode,
        query: Option<&TagQuery>,
        weight: impl Fn(usize) -> S,
    ) -> Result<Groups<'_, S>, RetrievalError> {
        if mode == SortMode::TagRelevance && query.is_none() {
            return Err(RetrievalError::MissingQuery);
        }
        let mut scores = match query {
            Some(q) => self.score_all(q, weight),
            None => HashMap::new(),
        };
        let mut groups: Groups<'_, S> = ElementType::DISPLAY_ORDER
            .iter()
            .map(|&e| (e, Vec::new()))
            .collect();
        for clue in self.clues.values() {
            let (score, matched) = scores.remove(&clue.id).unwrap_or_default();
            let slot = ElementType::DISPLAY_ORDER
                .iter()
                .position(|&e| e == clue.element)
                .expect("every element has a group");
            groups[slot].1.push(Scored {
                clue,
                score,
                matched,
            });
        }
        for (_, members) in &mut groups {
            match mode {
                SortMode::Temporal => members.sort_by(|a, b| cmp_temporal(a.clue, b.clue)),
                SortMode::TagRelevance => members.sort_by(cmp_ranked),
            }
        }
        Ok(groups)
    }

    /// Whole library grouped by element type in display order. Zero-score
    /// clues are kept at the tail of each group.
    pub fn sort_elements(
        &self,
        mode: SortMode,
        query: Option<&TagQuery>,
    ) -> Result<Vec<ElementGroup>, RetrievalError> {
        let groups = self.grouped(mode, query, |r| query.map_or(0, |q| q.weight(r)))?;
        Ok(groups
            .into_iter()
            .map(|(element, members)| ElementGroup {
                element,
                clues: members
                    .into_iter()
                    .map(|s| RankedResult {
                        clue_id: s.clue.id.clone(),
                        score: s.score,
                        matched: s.matched,
                    })
                    .collect(),
            })
            .collect())
    }

    pub fn sort_elements_scaled(
        &self,
        mode: SortMode,
        query: Option<&TagQuery>,
        scale: f64,
    ) -> Result<Vec<(ElementType, Vec<ClueId>)>, RetrievalError> {
        let groups = self.grouped(mode, query, |r| {
            scale * query.map_or(0, |q| q.weight(r)) as f64
        })?;
        Ok(groups
            .into_iter()
            .map(|(e, members)| (e, members.into_iter().map(|s| s.clue.id.clone()).collect()))
            .collect())
    }

    fn updated(&self, id: &ClueId, edit: impl FnOnce(&mut Clue) -> Result<(), RetrievalError>) -> Result<Clue, RetrievalError> {
        let mut clue = self
            .clues
            .get(id)
            .cloned()
            .ok_or_else(|| RetrievalError::UnknownClue(id.clone()))?;
        edit(&mut clue)?;
        Ok(clue)
    }

    /// The clue as it would be after appending a custom tag. Does not
    /// modify the library; see [`apply`](Self::apply).
    pub fn with_custom_tag(&self, id: &ClueId, label: &str) -> Result<Clue, RetrievalError> {
        let tag = normalize_tag(TagKind::Custom, label)?;
        self.updated(id, |clue| {
            if clue.tags.contains(&tag) {
                return Err(RetrievalError::DuplicateTag(tag.qualified()));
            }
            clue.tags.push(tag);
            Ok(())
        })
    }

    pub fn without_custom_tag(&self, id: &ClueId, label: &str) -> Result<Clue, RetrievalError> {
        let custom = normalize_tag(TagKind::Custom, label)?;
        self.updated(id, |clue| {
            if let Some(pos) = clue.tags.iter().position(|t| t == &custom) {
                clue.tags.remove(pos);
                return Ok(());
            }
            let folded = custom.label().to_lowercase();
            match clue
                .tags
                .iter()
                .find(|t| t.kind().is_machine() && t.label().to_lowercase() == folded)
            {
                Some(machine) => Err(RetrievalError::MachineTagImmutable(machine.qualified())),
                None => Err(RetrievalError::TagNotFound(custom.qualified())),
            }
        })
    }

    pub fn with_keywords(&self, id: &ClueId, keywords: Vec<String>) -> Result<Clue, RetrievalError> {
        if keywords.len() > MAX_KEYWORDS {
            return Err(RetrievalError::TooManyKeywords(keywords.len()));
        }
        let mut cleaned: Vec<String> = Vec::with_capacity(keywords.len());
        for kw in keywords {
            let kw = kw.split_whitespace().collect::<Vec<_>>().join(" ");
            if kw.is_empty() {
                return Err(RetrievalError::InvalidKeyword("empty keyword".into()));
            }
            if kw.chars().count() > MAX_LABEL_CHARS {
                return Err(RetrievalError::InvalidKeyword(format!(
                    "`{kw}` exceeds {MAX_LABEL_CHARS} characters"
                )));
            }
            if cleaned.iter().any(|k| k.to_lowercase() == kw.to_lowercase()) {
                return Err(RetrievalError::InvalidKeyword(format!("duplicate keyword `{kw}`")));
            }
            cleaned.push(kw);
        }
        self.updated(id, |clue| {
            clue.keywords = cleaned;
            Ok(())
        })
    }

    /// Replaces an existing clue with an edited version.
    pub fn apply(&mut self, clue: Clue) -> Result<(), RetrievalError> {
        if !self.clues.contains_key(&clue.id) {
            return Err(RetrievalError::UnknownClue(clue.id));
        }
        self.put(clue)
    }

    pub fn add_custom_tag(&mut self, id: &ClueId, label: &str) -> Result<Clue, RetrievalError> {
        let clue = self.with_custom_tag(id, label)?;
        self.apply(clue.clone())?;
        Ok(clue)
    }

    pub fn remove_custom_tag(&mut self, id: &ClueId, label: &str) -> Result<Clue, RetrievalError> {
        let clue = self.without_custom_tag(id, label)?;
        self.apply(clue.clone())?;
        Ok(clue)
    }

    pub fn edit_keywords(&mut self, id: &ClueId, keywords: Vec<String>) -> Result<Clue, RetrievalError> {
        let clue = self.with_keywords(id, keywords)?;
        self.apply(clue.clone())?;
        Ok(clue)
    }
}
