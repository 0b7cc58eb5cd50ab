//! Interpretation canvas document.
//!
//! A graph holds clue, text, group and context nodes with canvas geometry,
//! plus directed, optionally annotated edges. Groups list their members by
//! id; a group may contain other groups but membership never forms a cycle.
//! Documents serialize to canonical JSON (sorted keys) at schema version 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::classify::{ClassifyError, Classifier};
use crate::model::{word_count, Clue, ClueId, Tag};
use crate::retrieval::ClueLibrary;

pub const SCHEMA_VERSION: u32 = 1;
/// Gap between a clue node and a context node placed to its right.
pub const CONTEXT_GAP: f64 = 24.0;
/// Padding around member rects when a group is created.
pub const GROUP_MARGIN: f64 = 16.0;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("unknown edge `{0}`")]
    UnknownEdge(EdgeId),
    #[error("unknown clue `{0}`")]
    UnknownClue(ClueId),
    #[error("rect must have positive finite width and height")]
    ZeroSizeRect,
    #[error("an edge cannot connect node `{0}` to itself")]
    SelfLoop(NodeId),
    #[error("node `{0}` is not a clue node")]
    NotAClueNode(NodeId),
    #[error("node `{0}` is not a group")]
    NotAGroup(NodeId),
    #[error("keyword `{keyword}` is not on the clue of node `{node}`")]
    KeywordNotOnClue { node: NodeId, keyword: String },
    #[error("grouping would make `{0}` contain itself")]
    CycleDetected(NodeId),
    #[error("a group needs at least one member")]
    EmptyGroup,
    #[error("unsupported schema version {0}")]
    SchemaMismatch(u64),
    #[error("corrupt graph document: {0}")]
    CorruptDocument(String),
    #[error(transparent)]
    Classifier(#[from] ClassifyError),
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(
            Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, JsonSchema,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_id!(GraphId);
string_id!(NodeId);
string_id!(EdgeId);

/// Something that can resolve clue ids.
pub trait ClueCatalog {
    fn clue(&self, id: &ClueId) -> Option<&Clue>;
}

impl ClueCatalog for ClueLibrary {
    fn clue(&self, id: &ClueId) -> Option<&Clue> {
        self.get(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Rect {
            x,
            y,
            width,
            height,
        }
    }

    fn check(&self) -> Result<(), GraphError> {
        let finite = self.x.is_finite() && self.y.is_finite();
        let sized = self.width > 0.0
            && self.height > 0.0
            && self.width.is_finite()
            && self.height.is_finite();
        if finite && sized {
            Ok(())
        } else {
            Err(GraphError::ZeroSizeRect)
        }
    }

    fn right(&self) -> f64 {
        self.x + self.width
    }

    fn bottom(&self) -> f64 {
        self.y + self.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Clue { clue_id: ClueId },
    Text { text: String },
    Group { members: Vec<NodeId> },
    Context { keyword: String, text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub annotation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct InterpretationGraph {
    pub id: GraphId,
    pub game_name: String,
    pub schema_version: u32,
    pub nodes: BTreeMap<NodeId, Node>,
    pub edges: BTreeMap<EdgeId, Edge>,
}

/// One referential-integrity problem found by [`InterpretationGraph::audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditIssue(pub String);

impl fmt::Display for AuditIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn next_id<'a>(prefix: char, ids: impl Iterator<Item = &'a str>) -> String {
    let max = ids
        .filter_map(|id| id.strip_prefix(prefix)?.parse::<u64>().ok())
        .max()
        .unwrap_or(0);
    format!("{prefix}{}", max + 1)
}

/// Recursively rebuilds objects with sorted keys.
fn canonical(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> =
                map.into_iter().map(|(k, v)| (k, canonical(v))).collect();
            Value::Object(sorted.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        other => other,
    }
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("value serializes");
    serde_json::to_string(&canonical(value)).expect("values always serialize")
}

impl InterpretationGraph {
    pub fn new(id: GraphId, game_name: impl Into<String>) -> Self {
        InterpretationGraph {
            id,
            game_name: game_name.into(),
            schema_version: SCHEMA_VERSION,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn node(&self, id: &NodeId) -> Result<&Node, GraphError> {
        self.nodes
            .get(id)
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))
    }

    pub fn edge(&self, id: &EdgeId) -> Result<&Edge, GraphError> {
        self.edges
            .get(id)
            .ok_or_else(|| GraphError::UnknownEdge(id.clone()))
    }

    fn next_node_id(&self) -> NodeId {
        NodeId(next_id('n', self.nodes.keys().map(NodeId::as_str)))
    }

    fn next_edge_id(&self) -> EdgeId {
        EdgeId(next_id('e', self.edges.keys().map(EdgeId::as_str)))
    }

    fn check_members(&self, members: &[NodeId]) -> Result<Vec<NodeId>, GraphError> {
        if members.is_empty() {
            return Err(GraphError::EmptyGroup);
        }
        let mut unique: Vec<NodeId> = Vec::with_capacity(members.len());
        for m in members {
            self.node(m)?;
            if !unique.contains(m) {
                unique.push(m.clone());
            }
        }
        Ok(unique)
    }

    /// Adds a node. Clue nodes must reference a clue known to `catalog`.
    pub fn add_node(
        &mut self,
        kind: NodeKind,
        rect: Rect,
        catalog: &dyn ClueCatalog,
    ) -> Result<NodeId, GraphError> {
        rect.check()?;
        let kind = match kind {
            NodeKind::Clue { clue_id } => {
                if catalog.clue(&clue_id).is_none() {
                    return Err(GraphError::UnknownClue(clue_id));
                }
                NodeKind::Clue { clue_id }
            }
            NodeKind::Group { members } => NodeKind::Group {
                members: self.check_members(&members)?,
            },
            other => other,
        };
        let id = self.next_node_id();
        self.nodes.insert(
            id.clone(),
            Node {
                id: id.clone(),
                kind,
                rect,
            },
        );
        Ok(id)
    }

    /// Removes a node, its incident edges and its group memberships.
    pub fn remove_node(&mut self, id: &NodeId) -> Result<Node, GraphError> {
        let node = self
            .nodes
            .remove(id)
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
        self.edges.retain(|_, e| &e.from != id && &e.to != id);
        for other in self.nodes.values_mut() {
            if let NodeKind::Group { members } = &mut other.kind {
                members.retain(|m| m != id);
            }
        }
        Ok(node)
    }

    pub fn move_resize(&mut self, id: &NodeId, rect: Rect) -> Result<(), GraphError> {
        rect.check()?;
        let node = self
            .nodes
            .get_mut(id)
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
        node.rect = rect;
        Ok(())
    }

    /// The node plus, for groups, every transitive member (each once).
    pub fn descendants(&self, id: &NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.node(id)?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut stack = vec![id.clone()];
        while let Some(cur) = stack.pop() {
            if !seen.insert(cur.clone()) {
                continue;
            }
            if let Some(Node {
                kind: NodeKind::Group { members },
                ..
            }) = self.nodes.get(&cur)
            {
                stack.extend(members.iter().rev().cloned());
            }
            out.push(cur);
        }
        Ok(out)
    }

    /// Moves a node; moving a group moves all of its members with it.
    pub fn translate(&mut self, id: &NodeId, dx: f64, dy: f64) -> Result<(), GraphError> {
        if !(dx.is_finite() && dy.is_finite()) {
            return Err(GraphError::ZeroSizeRect);
        }
        for nid in self.descendants(id)? {
            let node = self.nodes.get_mut(&nid).expect("descendants exist");
            node.rect.x += dx;
            node.rect.y += dy;
        }
        Ok(())
    }

    /// Adds a directed edge. Parallel edges are allowed.
    pub fn link(
        &mut self,
        from: &NodeId,
        to: &NodeId,
        annotation: Option<String>,
    ) -> Result<EdgeId, GraphError> {
        self.node(from)?;
        self.node(to)?;
        if from == to {
            return Err(GraphError::SelfLoop(from.clone()));
        }
        let id = self.next_edge_id();
        self.edges.insert(
            id.clone(),
            Edge {
                id: id.clone(),
                from: from.clone(),
                to: to.clone(),
                annotation,
            },
        );
        Ok(id)
    }

    pub fn annotate_edge(&mut self, id: &EdgeId, text: Option<String>) -> Result<(), GraphError> {
        let edge = self
            .edges
            .get_mut(id)
            .ok_or_else(|| GraphError::UnknownEdge(id.clone()))?;
        edge.annotation = text;
        Ok(())
    }

    pub fn remove_edge(&mut self, id: &EdgeId) -> Result<Edge, GraphError> {
        self.edges
            .remove(id)
            .ok_or_else(|| GraphError::UnknownEdge(id.clone()))
    }

    fn clue_of<'c>(&self, id: &NodeId, catalog: &'c dyn ClueCatalog) -> Result<&'c Clue, GraphError> {
        match &self.node(id)?.kind {
            NodeKind::Clue { clue_id } => catalog
                .clue(clue_id)
                .ok_or_else(|| GraphError::UnknownClue(clue_id.clone())),
            _ => Err(GraphError::NotAClueNode(id.clone())),
        }
    }

    /// Keywords and tags of a clue node. Read-only.
    pub fn expand_node(
        &self,
        id: &NodeId,
        catalog: &dyn ClueCatalog,
    ) -> Result<(Vec<String>, Vec<Tag>), GraphError> {
        let clue = self.clue_of(id, catalog)?;
        Ok((clue.keywords.clone(), clue.tags.clone()))
    }

    /// Checks that `id` is a clue node carrying `keyword`; returns the
    /// node's rect.
    pub fn check_keyword(
        &self,
        id: &NodeId,
        keyword: &str,
        catalog: &dyn ClueCatalog,
    ) -> Result<Rect, GraphError> {
        let clue = self.clue_of(id, catalog)?;
        let folded = keyword.trim().to_lowercase();
        if !clue.keywords.iter().any(|k| k.to_lowercase() == folded) {
            return Err(GraphError::KeywordNotOnClue {
                node: id.clone(),
                keyword: keyword.to_string(),
            });
        }
        Ok(self.nodes[id].rect)
    }

    /// Places a context node to the right of `source`, same size.
    pub fn insert_context_node(
        &mut self,
        source: &NodeId,
        keyword: &str,
        text: String,
        catalog: &dyn ClueCatalog,
    ) -> Result<NodeId, GraphError> {
        let src = self.check_keyword(source, keyword, catalog)?;
        let rect = Rect::new(src.right() + CONTEXT_GAP, src.y, src.width, src.height);
        self.add_node(
            NodeKind::Context {
                keyword: keyword.trim().to_string(),
                text,
            },
            rect,
            catalog,
        )
    }

    /// Asks the classifier for the keyword's real-world meaning and stores
    /// the reply verbatim in a new context node.
    pub async fn lookup_keyword(
        &mut self,
        source: &NodeId,
        keyword: &str,
        classifier: &dyn Classifier,
        catalog: &dyn ClueCatalog,
    ) -> Result<NodeId, GraphError> {
        self.check_keyword(source, keyword, catalog)?;
        let text = classifier.lookup(keyword.trim(), &self.game_name).await?;
        let words = word_count(&text);
        if words > 20 {
            tracing::info!(keyword, words, "context text longer than 20 words");
        }
        self.insert_context_node(source, keyword, text, catalog)
    }

    fn reaches(&self, from: &NodeId, target: &NodeId) -> bool {
        self.descendants(from)
            .map(|d| d.contains(target))
            .unwrap_or(false)
    }

    /// New group node around `members`, padded by [`GROUP_MARGIN`].
    pub fn group(&mut self, members: &[NodeId]) -> Result<NodeId, GraphError> {
        let members = self.check_members(members)?;
        let rects: Vec<Rect> = members.iter().map(|m| self.nodes[m].rect).collect();
        let min_x = rects.iter().map(|r| r.x).fold(f64::INFINITY, f64::min);
        let min_y = rects.iter().map(|r| r.y).fold(f64::INFINITY, f64::min);
        let max_x = rects.iter().map(Rect::right).fold(f64::NEG_INFINITY, f64::max);
        let max_y = rects.iter().map(Rect::bottom).fold(f64::NEG_INFINITY, f64::max);
        let rect = Rect::new(
            min_x - GROUP_MARGIN,
            min_y - GROUP_MARGIN,
            max_x - min_x + 2.0 * GROUP_MARGIN,
            max_y - min_y + 2.0 * GROUP_MARGIN,
        );
        rect.check()?;
        let id = self.next_node_id();
        self.nodes.insert(
            id.clone(),
            Node {
                id: id.clone(),
                kind: NodeKind::Group { members },
                rect,
            },
        );
        Ok(id)
    }

    /// Adds members to an existing group, refusing cycles.
    pub fn add_to_group(&mut self, group: &NodeId, members: &[NodeId]) -> Result<(), GraphError> {
        if !matches!(self.node(group)?.kind, NodeKind::Group { .. }) {
            return Err(GraphError::NotAGroup(group.clone()));
        }
        let members = self.check_members(members)?;
        for m in &members {
            if m == group || self.reaches(m, group) {
                return Err(GraphError::CycleDetected(group.clone()));
            }
        }
        if let Some(Node {
            kind: NodeKind::Group { members: existing },
            ..
        }) = self.nodes.get_mut(group)
        {
            for m in members {
                if !existing.contains(&m) {
                    existing.push(m);
                }
            }
        }
        Ok(())
    }

    /// Deletes the group node only; members are untouched.
    pub fn ungroup(&mut self, group: &NodeId) -> Result<Node, GraphError> {
        if !matches!(self.node(group)?.kind, NodeKind::Group { .. }) {
            return Err(GraphError::NotAGroup(group.clone()));
        }
        self.remove_node(group)
    }

    /// Lists every integrity violation. With a catalog, clue references are
    /// checked too.
    pub fn audit(&self, catalog: Option<&dyn ClueCatalog>) -> Vec<AuditIssue> {
        let mut issues = Vec::new();
        let mut issue = |s: String| issues.push(AuditIssue(s));
        if self.schema_version != SCHEMA_VERSION {
            issue(format!("schema_version {}", self.schema_version));
        }
        for (key, node) in &self.nodes {
            if key != &node.id {
                issue(format!("node keyed `{key}` has id `{}`", node.id));
            }
            if node.rect.check().is_err() {
                issue(format!("node `{key}` has an invalid rect"));
            }
            match &node.kind {
                NodeKind::Clue { clue_id } => {
                    if let Some(cat) = catalog {
                        if cat.clue(clue_id).is_none() {
                            issue(format!("node `{key}` references unknown clue `{clue_id}`"));
                        }
                    }
                }
                NodeKind::Group { members } => {
                    let mut seen = BTreeSet::new();
                    for m in members {
                        if !self.nodes.contains_key(m) {
                            issue(format!("group `{key}` lists unknown member `{m}`"));
                        }
                        if !seen.insert(m) {
                            issue(format!("group `{key}` lists `{m}` twice"));
                        }
                    }
                }
                _ => {}
            }
        }
        if let Some(node) = self.find_cycle() {
            issue(format!("group membership cycle through `{node}`"));
        }
        for (key, edge) in &self.edges {
            if key != &edge.id {
                issue(format!("edge keyed `{key}` has id `{}`", edge.id));
            }
            for end in [&edge.from, &edge.to] {
                if !self.nodes.contains_key(end) {
                    issue(format!("edge `{key}` references unknown node `{end}`"));
                }
            }
            if edge.from == edge.to {
                issue(format!("edge `{key}` is a self-loop"));
            }
        }
        issues
    }

    fn find_cycle(&self) -> Option<NodeId> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut marks: BTreeMap<&NodeId, Mark> = BTreeMap::new();
        for root in self.nodes.keys() {
            if marks.contains_key(root) {
                continue;
            }
            // Iterative DFS: (node, next member index).
            let mut stack: Vec<(&NodeId, usize)> = vec![(root, 0)];
            marks.insert(root, Mark::Open);
            while let Some((cur, idx)) = stack.pop() {
                let members: &[NodeId] = match self.nodes.get(cur).map(|n| &n.kind) {
                    Some(NodeKind::Group { members }) => members,
                    _ => &[],
                };
                if idx < members.len() {
                    stack.push((cur, idx + 1));
                    let next = &members[idx];
                    if !self.nodes.contains_key(next) {
                        continue;
                    }
                    match marks.get(next) {
                        Some(Mark::Open) => return Some(next.clone()),
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(next, Mark::Open);
                            stack.push((next, 0));
                        }
                    }
                } else {
                    marks.insert(cur, Mark::Done);
                }
            }
        }
        None
    }

    /// Canonical JSON document (sorted keys, compact).
    pub fn to_document(&self) -> String {
        canonical_json(self)
    }

    /// Parses and audits a document. Clue references are not checked here.
    pub fn from_document(doc: &str) -> Result<Self, GraphError> {
        let value: Value =
            serde_json::from_str(doc).map_err(|e| GraphError::CorruptDocument(e.to_string()))?;
        let version = value
            .get("schema_version")
            .ok_or_else(|| GraphError::CorruptDocument("missing schema_version".into()))?;
        match version.as_u64() {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(GraphError::SchemaMismatch(v)),
            None => return Err(GraphError::CorruptDocument("schema_version is not an integer".into())),
        }
        let graph: InterpretationGraph =
            serde_json::from_value(value).map_err(|e| GraphError::CorruptDocument(e.to_string()))?;
        let issues = graph.audit(None);
        if let Some(first) = issues.first() {
            return Err(GraphError::CorruptDocument(first.to_string()));
        }
        Ok(graph)
    }
}

pub fn save_graph(graph: &InterpretationGraph) -> String {
    graph.to_document()
}

pub fn load_graph(doc: &str) -> Result<InterpretationGraph, GraphError> {
    InterpretationGraph::from_document(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::MockClassifier;
    use crate::model::{ElementType, MediaKind, MediaRef, TagKind};

    fn catalog() -> ClueLibrary {
        let mut lib = ClueLibrary::new();
        lib.insert(Clue {
            id: ClueId::new("c1"),
            media: MediaRef::new(MediaKind::Screenshot, "s/c1.png").unwrap(),
            timestamp_ms: 0,
            tags: vec![
                Tag::new(TagKind::Character, "Sly").unwrap(),
                Tag::new(TagKind::Location, "Dirtmouth").unwrap(),
            ],
            element: ElementType::Dialogue,
            description: "Sly sells wares.".into(),
            keywords: vec!["Sly".into(), "shop".into(), "geo".into()],
        })
        .unwrap();
        lib.insert(Clue {
            id: ClueId::new("c2"),
            media: MediaRef::new(MediaKind::Screenshot, "s/c2.png").unwrap(),
            timestamp_ms: 1,
            tags: vec![],
            element: ElementType::Environment,
            description: String::new(),
            keywords: vec![],
        })
        .unwrap();
        lib
    }

    fn graph() -> InterpretationGraph {
        InterpretationGraph::new(GraphId::new("g1"), "Hollow Knight")
    }

    fn text(g: &mut InterpretationGraph, cat: &ClueLibrary, x: f64) -> NodeId {
        g.add_node(
            NodeKind::Text { text: "note".into() },
            Rect::new(x, 0.0, 100.0, 50.0),
            cat,
        )
        .unwrap()
    }

    fn clue_node(g: &mut InterpretationGraph, cat: &ClueLibrary, id: &str) -> NodeId {
        g.add_node(
            NodeKind::Clue { clue_id: ClueId::new(id) },
            Rect::new(10.0, 20.0, 120.0, 80.0),
            cat,
        )
        .unwrap()
    }

    #[test]
    fn add_remove_restores_graph() {
        let cat = catalog();
        let mut g = graph();
        text(&mut g, &cat, 0.0);
        let before = g.clone();
        let n = text(&mut g, &cat, 5.0);
        g.remove_node(&n).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn remove_cascades_edges_and_membership() {
        let cat = catalog();
        let mut g = graph();
        let a = text(&mut g, &cat, 0.0);
        let b = text(&mut g, &cat, 200.0);
        let c = text(&mut g, &cat, 400.0);
        g.link(&a, &b, None).unwrap();
        g.link(&c, &a, Some("precedes".into())).unwrap();
        g.link(&b, &c, None).unwrap();
        let grp = g.group(&[a.clone(), b.clone()]).unwrap();
        g.remove_node(&a).unwrap();
        assert_eq!(g.edges.len(), 1);
        match &g.nodes[&grp].kind {
            NodeKind::Group { members } => assert_eq!(members, &vec![b.clone()]),
            _ => unreachable!(),
        }
        assert!(g.audit(Some(&cat)).is_empty());
    }

    #[test]
    fn zero_size_rejected() {
        let cat = catalog();
        let mut g = graph();
        let a = text(&mut g, &cat, 0.0);
        assert!(matches!(
            g.move_resize(&a, Rect::new(0.0, 0.0, 0.0, 10.0)),
            Err(GraphError::ZeroSizeRect)
        ));
        assert!(matches!(
            g.move_resize(&NodeId::new("zz"), Rect::new(0.0, 0.0, 1.0, 1.0)),
            Err(GraphError::UnknownNode(_))
        ));
        g.move_resize(&a, Rect::new(3.0, 4.0, 5.0, 6.0)).unwrap();
        assert_eq!(g.nodes[&a].rect, Rect::new(3.0, 4.0, 5.0, 6.0));
    }

    #[test]
    fn links_and_annotations() {
        let cat = catalog();
        let mut g = graph();
        let a = text(&mut g, &cat, 0.0);
        let b = text(&mut g, &cat, 1.0);
        let e = g.link(&a, &b, None).unwrap();
        g.annotate_edge(&e, Some("causes".into())).unwrap();
        assert_eq!(g.edges[&e].annotation.as_deref(), Some("causes"));
        assert!(matches!(g.link(&a, &a, None), Err(GraphError::SelfLoop(_))));
        let e2 = g.link(&a, &b, Some("mirrors".into())).unwrap();
        assert_ne!(e, e2);
        assert_eq!(g.edges.len(), 2);
        assert!(matches!(
            g.annotate_edge(&EdgeId::new("e9"), None),
            Err(GraphError::UnknownEdge(_))
        ));
    }

    #[test]
    fn unknown_clue_node_rejected() {
        let cat = catalog();
        let mut g = graph();
        assert!(matches!(
            g.add_node(
                NodeKind::Clue { clue_id: ClueId::new("missing") },
                Rect::new(0.0, 0.0, 1.0, 1.0),
                &cat
            ),
            Err(GraphError::UnknownClue(_))
        ));
    }

    #[test]
    fn expand_projects_clue() {
        let cat = catalog();
        let mut g = graph();
        let n = clue_node(&mut g, &cat, "c1");
        let before = g.to_document();
        let (kws, tags) = g.expand_node(&n, &cat).unwrap();
        assert_eq!(kws, vec!["Sly", "shop", "geo"]);
        assert_eq!(tags.len(), 2);
        assert_eq!(g.to_document(), before);
        let empty = clue_node(&mut g, &cat, "c2");
        assert!(g.expand_node(&empty, &cat).unwrap().0.is_empty());
        let t = text(&mut g, &cat, 0.0);
        assert!(matches!(g.expand_node(&t, &cat), Err(GraphError::NotAClueNode(_))));
    }

    #[tokio::test]
    async fn mock_lookup_places_context_node() {
        let cat = catalog();
        let mut g = graph();
        let n = clue_node(&mut g, &cat, "c1");
        let ctx = g.lookup_keyword(&n, "Sly", &MockClassifier, &cat).await.unwrap();
        let node = &g.nodes[&ctx];
        assert_eq!(
            node.kind,
            NodeKind::Context {
                keyword: "Sly".into(),
                text: "MOCK(Sly|Hollow Knight)".into()
            }
        );
        assert_eq!(node.rect, Rect::new(10.0 + 120.0 + 24.0, 20.0, 120.0, 80.0));
        assert!(matches!(
            g.lookup_keyword(&n, "lantern", &MockClassifier, &cat).await,
            Err(GraphError::KeywordNotOnClue { .. })
        ));
    }

    #[test]
    fn group_bbox_and_ungroup() {
        let cat = catalog();
        let mut g = graph();
        let a = text(&mut g, &cat, 0.0);
        let b = g
            .add_node(NodeKind::Text { text: "b".into() }, Rect::new(200.0, 100.0, 50.0, 50.0), &cat)
            .unwrap();
        let before: Vec<Rect> = [&a, &b].iter().map(|n| g.nodes[*n].rect).collect();
        let grp = g.group(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(g.nodes[&grp].rect, Rect::new(-16.0, -16.0, 282.0, 182.0));
        g.ungroup(&grp).unwrap();
        let after: Vec<Rect> = [&a, &b].iter().map(|n| g.nodes[*n].rect).collect();
        assert_eq!(before, after);
        assert!(!g.nodes.contains_key(&grp));
        let single = g.group(std::slice::from_ref(&a)).unwrap();
        assert!(matches!(g.nodes[&single].kind, NodeKind::Group { .. }));
        assert!(matches!(g.group(&[]), Err(GraphError::EmptyGroup)));
        assert!(matches!(g.ungroup(&a), Err(GraphError::NotAGroup(_))));
    }

    #[test]
    fn cycles_refused() {
        let cat = catalog();
        let mut g = graph();
        let a = text(&mut g, &cat, 0.0);
        let inner = g.group(std::slice::from_ref(&a)).unwrap();
        let outer = g.group(std::slice::from_ref(&inner)).unwrap();
        assert!(matches!(
            g.add_to_group(&inner, std::slice::from_ref(&outer)),
            Err(GraphError::CycleDetected(_))
        ));
        assert!(matches!(
            g.add_to_group(&inner, std::slice::from_ref(&inner)),
            Err(GraphError::CycleDetected(_))
        ));
        g.add_to_group(&outer, std::slice::from_ref(&a)).unwrap();
        assert!(g.audit(None).is_empty());
    }

    #[test]
    fn translate_moves_members_once() {
        let cat = catalog();
        let mut g = graph();
        let a = text(&mut g, &cat, 0.0);
        let inner = g.group(std::slice::from_ref(&a)).unwrap();
        let outer = g.group(&[inner.clone(), a.clone()]).unwrap();
        g.translate(&outer, 10.0, -5.0).unwrap();
        assert_eq!(g.nodes[&a].rect, Rect::new(10.0, -5.0, 100.0, 50.0));
        assert_eq!(g.nodes[&inner].rect.x, -6.0);
    }

    #[test]
    fn document_round_trip_and_versions() {
        let cat = catalog();
        let mut g = graph();
        assert_eq!(load_graph(&save_graph(&g)).unwrap(), g);
        let a = text(&mut g, &cat, 0.1);
        let b = clue_node(&mut g, &cat, "c1");
        g.link(&a, &b, Some("hints at".into())).unwrap();
        g.group(&[a, b]).unwrap();
        let doc = save_graph(&g);
        assert_eq!(load_graph(&doc).unwrap(), g);
        assert_eq!(save_graph(&load_graph(&doc).unwrap()), doc);

        let bumped = doc.replace("\"schema_version\":1", "\"schema_version\":2");
        assert!(matches!(load_graph(&bumped), Err(GraphError::SchemaMismatch(2))));
        assert!(matches!(load_graph("{]"), Err(GraphError::CorruptDocument(_))));
        let dangling = doc.replace("\"to\":\"n2\"", "\"to\":\"n99\"");
        assert!(matches!(load_graph(&dangling), Err(GraphError::CorruptDocument(_))));
    }

    #[test]
    fn canonical_keys_sorted() {
        let g = graph();
        assert_eq!(
            save_graph(&g),
            r#"{"edges":{},"game_name":"Hollow Knight","id":"g1","nodes":{},"schema_version":1}"#
        );
    }

    #[test]
    fn cyclic_document_rejected() {
        let doc = r#"{"edges":{},"game_name":"G","id":"g","nodes":{
            "n1":{"id":"n1","kind":{"type":"group","members":["n2"]},"rect":{"x":0,"y":0,"width":1,"height":1}},
            "n2":{"id":"n2","kind":{"type":"group","members":["n1"]},"rect":{"x":0,"y":0,"width":1,"height":1}}
        },"schema_version":1}"#;
        match load_graph(doc) {
            Err(GraphError::CorruptDocument(msg)) => assert!(msg.contains("cycle")),
            other => panic!("{other:?}"),
        }
    }
}
