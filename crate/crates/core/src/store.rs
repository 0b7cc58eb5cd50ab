//! On-disk clue store and graph documents.
//!
//! Layout of a data directory:
//!
//! ```text
//! clues.jsonl        append-only log, one full clue snapshot per line
//! tag_index.json     derived tag index, rewritten after every commit
//! graphs/{id}.json   one canonical graph document per graph
//! ```
//!
//! Replaying `clues.jsonl` (last snapshot per id wins) reproduces the
//! library. A write is committed once its line, including the trailing
//! newline, has been fsynced; a torn final line left by a crash is dropped
//! on open. The sidecar is never read back.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use futures::future::join_all;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::CaptureEvent;
use crate::classify::{classify_event, ClassifyError, Classifier};
use crate::graph::{ClueCatalog, GraphError, GraphId, InterpretationGraph};
use crate::model::{validate_clue, Clue, ClueId};
use crate::retrieval::{ClueLibrary, RetrievalError};

pub const CLUE_LOG: &str = "clues.jsonl";
pub const TAG_INDEX: &str = "tag_index.json";
pub const GRAPH_DIR: &str = "graphs";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path} line {line}: {message}")]
    CorruptStore {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown graph `{0}`")]
    UnknownGraph(GraphId),
    #[error("graph `{0}` already exists")]
    DuplicateGraph(GraphId),
    #[error("invalid graph id `{0}`: use 1-64 letters, digits, `-` or `_`")]
    InvalidGraphId(String),
    #[error("graph `{graph}` fails audit: {issue}")]
    GraphAudit { graph: GraphId, issue: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` via a fsynced temp file and rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))?;
    if let Some(dir) = path.parent() {
        // Directory fsync makes the rename durable; not supported everywhere.
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}

pub fn check_graph_id(id: &str) -> Result<GraphId, StoreError> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(GraphId::new(id))
    } else {
        Err(StoreError::InvalidGraphId(id.to_string()))
    }
}

/// Outcome of one event that was not turned into a clue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct IngestFailure {
    pub event_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct IngestReport {
    /// Ids of clues appended, in log order.
    pub created: Vec<ClueId>,
    /// Event ids already present in the store (or repeated in the log).
    pub skipped: Vec<String>,
    /// Events the classifier could not handle.
    pub failures: Vec<IngestFailure>,
}

/// Classifies events concurrently. Concurrency limits belong to the
/// classifier (see `LlmClassifier`). Results keep input order.
pub async fn classify_all(
    classifier: &dyn Classifier,
    events: &[CaptureEvent],
) -> Vec<(String, Result<Clue, ClassifyError>)> {
    let results = join_all(events.iter().map(|e| classify_event(classifier, e))).await;
    events.iter().map(|e| e.id.clone()).zip(results).collect()
}

pub struct ClueStore {
    dir: PathBuf,
    library: ClueLibrary,
    log: File,
    graphs: BTreeMap<GraphId, InterpretationGraph>,
}

impl std::fmt::Debug for ClueStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClueStore")
            .field("dir", &self.dir)
            .field("clues", &self.library.len())
            .field("graphs", &self.graphs.len())
            .finish()
    }
}

/// Parses a clue log. Returns the clues in line order and the byte length
/// of the committed prefix (everything up to the last newline).
pub fn parse_clue_log(path: &Path, bytes: &[u8]) -> Result<(Vec<Clue>, usize), StoreError> {
    let committed = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let mut clues = Vec::new();
    for (i, line) in bytes[..committed].split(|&b| b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let clue: Clue = serde_json::from_slice(line).map_err(|e| StoreError::CorruptStore {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        clues.push(clue);
    }
    Ok((clues, committed))
}

impl ClueStore {
    /// Opens (creating if needed) a data directory and replays its log.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        let graph_dir = dir.join(GRAPH_DIR);
        fs::create_dir_all(&graph_dir).map_err(io_err(&graph_dir))?;

        let log_path = dir.join(CLUE_LOG);
        let bytes = match fs::read(&log_path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(&log_path)(e)),
        };
        let (clues, committed) = parse_clue_log(&log_path, &bytes)?;
        let mut library = ClueLibrary::new();
        for (i, clue) in clues.into_iter().enumerate() {
            library.put(clue).map_err(|e| StoreError::CorruptStore {
                path: log_path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }

        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(io_err(&log_path))?;
        if committed < bytes.len() {
            tracing::warn!(
                bytes = bytes.len() - committed,
                "dropping torn final line of {}",
                log_path.display()
            );
            log.set_len(committed as u64).map_err(io_err(&log_path))?;
            log.sync_all().map_err(io_err(&log_path))?;
        }

        let mut graphs = BTreeMap::new();
        let entries = fs::read_dir(&graph_dir).map_err(io_err(&graph_dir))?;
        let mut paths: Vec<PathBuf> = Vec::new();
        for entry in entries {
            paths.push(entry.map_err(io_err(&graph_dir))?.path());
        }
        paths.sort();
        for path in paths {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.ends_with(".tmp") {
                // Unfinished atomic write; the previous version is still in place.
                let _ = fs::remove_file(&path);
                continue;
            }
            let Some(stem) = name.strip_suffix(".json") else {
                continue;
            };
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let graph = InterpretationGraph::from_document(&text)?;
            if graph.id.as_str() != stem {
                return Err(StoreError::GraphAudit {
                    graph: graph.id,
                    issue: format!("stored under `{name}`"),
                });
            }
            graphs.insert(graph.id.clone(), graph);
        }

        let store = ClueStore {
            dir,
            library,
            log,
            graphs,
        };
        store.write_sidecar()?;
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn library(&self) -> &ClueLibrary {
        &self.library
    }

    pub fn graphs(&self) -> &BTreeMap<GraphId, InterpretationGraph> {
        &self.graphs
    }

    pub fn graph(&self, id: &GraphId) -> Result<&InterpretationGraph, StoreError> {
        self.graphs
            .get(id)
            .ok_or_else(|| StoreError::UnknownGraph(id.clone()))
    }

    /// The tag index as `kind:folded-label` to clue ids.
    pub fn sidecar(&self) -> BTreeMap<String, BTreeSet<ClueId>> {
        self.library
            .tag_index()
            .iter()
            .map(|(k, ids)| (format!("{}:{}", k.kind, k.folded), ids.clone()))
            .collect()
    }

    fn write_sidecar(&self) -> Result<(), StoreError> {
        let json = serde_json::to_vec(&self.sidecar()).expect("index serializes");
        write_atomic(&self.dir.join(TAG_INDEX), &json)
    }

    fn append(&mut self, clue: &Clue) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(clue).expect("clues serialize");
        line.push(b'\n');
        let path = self.dir.join(CLUE_LOG);
        self.log.write_all(&line).map_err(io_err(&path))?;
        self.log.sync_data().map_err(io_err(&path))?;
        Ok(())
    }

    /// Writes a new or edited clue: log first, then memory.
    fn commit(&mut self, clue: Clue, new: bool) -> Result<Clue, StoreError> {
        // Everything `put` could reject is checked before touching the log.
        match (new, self.library.contains(&clue.id)) {
            (true, true) => return Err(RetrievalError::DuplicateClue(clue.id).into()),
            (false, false) => return Err(RetrievalError::UnknownClue(clue.id).into()),
            _ => {}
        }
        let report = validate_clue(&clue);
        if !report.is_pass() {
            return Err(RetrievalError::InvalidClue { id: clue.id, report }.into());
        }
        self.append(&clue)?;
        self.library.put(clue.clone()).expect("validated above");
        self.write_sidecar()?;
        Ok(clue)
    }

    pub fn insert_clue(&mut self, clue: Clue) -> Result<Clue, StoreError> {
        self.commit(clue, true)
    }

    /// Events whose ids are not yet stored, first occurrence only; the rest
    /// are returned as skipped ids.
    pub fn partition_new(&self, events: &[CaptureEvent]) -> (Vec<CaptureEvent>, Vec<String>) {
        let mut seen = BTreeSet::new();
        let mut fresh = Vec::new();
        let mut skipped = Vec::new();
        for e in events {
            if self.library.contains(&ClueId::new(e.id.clone())) || !seen.insert(e.id.clone()) {
                skipped.push(e.id.clone());
            } else {
                fresh.push(e.clone());
            }
        }
        (fresh, skipped)
    }

    /// Appends classified results in order. Failed events are reported and
    /// skipped; so are clues whose id appeared meanwhile.
    pub fn commit_classified(
        &mut self,
        results: Vec<(String, Result<Clue, ClassifyError>)>,
        mut report: IngestReport,
    ) -> Result<IngestReport, StoreError> {
        for (event_id, result) in results {
            match result {
                Ok(clue) if self.library.contains(&clue.id) => report.skipped.push(event_id),
                Ok(clue) => {
                    let id = clue.id.clone();
                    match self.commit(clue, true) {
                        Ok(_) => report.created.push(id),
                        Err(StoreError::Retrieval(e)) => report.failures.push(IngestFailure {
                            event_id,
                            message: e.to_string(),
                        }),
                        Err(e) => return Err(e),
                    }
                }
                Err(e) => {
                    tracing::warn!(event = %event_id, "classification failed: {e}");
                    report.failures.push(IngestFailure {
                        event_id,
                        message: e.to_string(),
                    });
                }
            }
        }
        Ok(report)
    }

    /// Classifies and stores every new event. Idempotent on event ids.
    pub async fn ingest(
        &mut self,
        events: &[CaptureEvent],
        classifier: &dyn Classifier,
    ) -> Result<IngestReport, StoreError> {
        let (fresh, skipped) = self.partition_new(events);
        let results = classify_all(classifier, &fresh).await;
        self.commit_classified(
            results,
            IngestReport {
                skipped,
                ..IngestReport::default()
            },
        )
    }

    pub fn add_custom_tag(&mut self, id: &ClueId, label: &str) -> Result<Clue, StoreError> {
        let clue = self.library.with_custom_tag(id, label)?;
        self.commit(clue, false)
    }

    pub fn remove_custom_tag(&mut self, id: &ClueId, label: &str) -> Result<Clue, StoreError> {
        let clue = self.library.without_custom_tag(id, label)?;
        self.commit(clue, false)
    }

    pub fn edit_keywords(&mut self, id: &ClueId, keywords: Vec<String>) -> Result<Clue, StoreError> {
        let clue = self.library.with_keywords(id, keywords)?;
        self.commit(clue, false)
    }

    fn graph_path(&self, id: &GraphId) -> PathBuf {
        self.dir.join(GRAPH_DIR).join(format!("{}.json", id.as_str()))
    }

    fn save(&mut self, graph: InterpretationGraph) -> Result<&InterpretationGraph, StoreError> {
        let catalog: &dyn ClueCatalog = &self.library;
        if let Some(issue) = graph.audit(Some(catalog)).into_iter().next() {
            return Err(StoreError::GraphAudit {
                graph: graph.id.clone(),
                issue: issue.to_string(),
            });
        }
        write_atomic(&self.graph_path(&graph.id), graph.to_document().as_bytes())?;
        let id = graph.id.clone();
        self.graphs.insert(id.clone(), graph);
        Ok(&self.graphs[&id])
    }

    /// Next free id of the form `g{n}`.
    pub fn next_graph_id(&self) -> GraphId {
        let max = self
            .graphs
            .keys()
            .filter_map(|g| g.as_str().strip_prefix('g')?.parse::<u64>().ok())
            .max()
            .unwrap_or(0);
        GraphId(format!("g{}", max + 1))
    }

    pub fn create_graph(
        &mut self,
        id: Option<&str>,
        game_name: &str,
    ) -> Result<&InterpretationGraph, StoreError> {
        let id = match id {
            Some(raw) => check_graph_id(raw)?,
            None => self.next_graph_id(),
        };
        if self.graphs.contains_key(&id) {
            return Err(StoreError::DuplicateGraph(id));
        }
        self.save(InterpretationGraph::new(id, game_name))
    }

    /// Stores a whole document, replacing any graph with the same id.
    pub fn put_graph(&mut self, graph: InterpretationGraph) -> Result<&InterpretationGraph, StoreError> {
        check_graph_id(graph.id.as_str())?;
        self.save(graph)
    }

    /// Runs an edit on a copy of the graph and persists it only on success.
    pub fn update_graph<T>(
        &mut self,
        id: &GraphId,
        edit: impl FnOnce(&mut InterpretationGraph, &ClueLibrary) -> Result<T, GraphError>,
    ) -> Result<T, StoreError> {
        let mut graph = self.graph(id)?.clone();
        let out = edit(&mut graph, &self.library)?;
        self.save(graph)?;
        Ok(out)
    }
}
