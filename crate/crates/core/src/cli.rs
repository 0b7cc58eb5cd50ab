//! `cluecart` command line.
//!
//! Exit codes: 0 ok, 1 usage or configuration, 2 validation, 3 I/O,
//! 4 classifier failure.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::capture::{load_script, read_capture_log, run_script, write_capture_log, CaptureLogError, ScriptError};
use crate::config::{ClassifierMode, ConfigError, ServiceConfig};
use crate::graph::{canonical_json, GraphId, InterpretationGraph};
use crate::model::{validate_clue, Tag};
use crate::retrieval::{ClueLibrary, RetrievalError, SortMode, TagQuery};
use crate::service::{ListResponse, SearchResponse};
use crate::store::{parse_clue_log, ClueStore, StoreError, CLUE_LOG, GRAPH_DIR};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_CLASSIFIER: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "cluecart", version, about = "Clue capture, retrieval and interpretation graphs")]
pub struct Cli {
    /// TOML config file (same keys as the service).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Data directory; overrides the config and CLUECART_DATA_DIR.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a capture log and add its events to the store.
    Ingest {
        log: PathBuf,
        #[arg(long, conflicts_with = "llm")]
        mock: bool,
        #[arg(long)]
        llm: bool,
    },
    /// Rank clues by tags; flag order is priority order.
    Search {
        #[arg(long = "tag", value_name = "KIND:LABEL", required = true)]
        tags: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// List clues grouped by element type.
    List {
        #[arg(long, default_value = "temporal")]
        sort: String,
        #[arg(long = "tag", value_name = "KIND:LABEL")]
        tags: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Export or import interpretation graphs.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Run a scene script and write its capture log.
    Simulate(SimulateArgs),
    /// Capture simulator commands.
    CaptureSim {
        #[command(subcommand)]
        command: CaptureSimCommand,
    },
    /// Check a store (data directory or clues.jsonl) without modifying it.
    Validate { store: PathBuf },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    Export {
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
    Import { file: PathBuf },
    List,
}

#[derive(Debug, Subcommand)]
pub enum CaptureSimCommand {
    Run(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub script: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl std::fmt::Display) -> Self {
        CliError {
            code,
            message: message.to_string(),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        CliError::new(code, e)
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        CliError::new(EXIT_VALIDATION, e)
    }
}

impl From<CaptureLogError> for CliError {
    fn from(e: CaptureLogError) -> Self {
        let code = match e {
            CaptureLogError::Io(_) => EXIT_IO,
            CaptureLogError::MalformedLog { .. } => EXIT_VALIDATION,
        };
        CliError::new(code, e)
    }
}

impl From<ScriptError> for CliError {
    fn from(e: ScriptError) -> Self {
        let code = match e {
            ScriptError::Io(_) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        CliError::new(code, e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Io { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        CliError::new(code, e)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(EXIT_IO, format!("{}: {e}", path.display()))
}

fn tag_query(raw: &[String]) -> Result<TagQuery, CliError> {
    TagQuery::parse(raw.iter().map(String::as_str)).map_err(|e| CliError::new(EXIT_USAGE, e))
}

type Out<'a> = &'a mut dyn Write;

fn say(out: Out, text: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(|e| CliError::new(EXIT_IO, e))
}

impl Cli {
    fn config(&self) -> Result<ServiceConfig, CliError> {
        let mut cfg = ServiceConfig::load(self.config.as_deref())?;
        if let Some(d) = &self.data_dir {
            cfg.data_dir = d.clone();
        }
        Ok(cfg)
    }

    fn open_store(&self) -> Result<ClueStore, CliError> {
        Ok(ClueStore::open(self.config()?.data_dir)?)
    }

    pub fn run(&self, out: Out) -> Result<(), CliError> {
        match &self.command {
            Command::Ingest { log, mock, llm } => {
                let mut cfg = self.config()?;
                if *mock {
                    cfg.classifier_mode = ClassifierMode::Mock;
                } else if *llm {
                    cfg.classifier_mode = ClassifierMode::Llm;
                }
                let classifier = cfg.classifier()?;
                let events = read_capture_log(log)?;
                let mut store = ClueStore::open(&cfg.data_dir)?;
                let rt = tokio::runtime::Builder::new_current_thread()
                    .enable_all()
                    .build()
                    .map_err(|e| CliError::new(EXIT_IO, e))?;
                let report = rt.block_on(store.ingest(&events, classifier.as_ref()))?;
                say(out, format!("{} clues", report.created.len()))?;
                if !report.skipped.is_empty() {
                    eprintln!("skipped {} already-stored events", report.skipped.len());
                }
                for f in &report.failures {
                    eprintln!("{}: {}", f.event_id, f.message);
                }
                if !report.failures.is_empty() {
                    return Err(CliError::new(
                        EXIT_CLASSIFIER,
                        format!("{} events failed classification", report.failures.len()),
                    ));
                }
                Ok(())
            }
            Command::Search { tags, json } => {
                let query = tag_query(tags)?;
                let store = self.open_store()?;
                let response = SearchResponse {
                    query: query.tags().iter().map(Tag::qualified).collect(),
                    results: store.library().search(&query),
                };
                if *json {
                    return say(out, canonical_json(&response));
                }
                for r in &response.results {
                    let matched: Vec<String> = r.matched.iter().map(Tag::qualified).collect();
                    say(out, format!("{:>4}  {}  {}", r.score, r.clue_id, matched.join(", ")))?;
                }
                Ok(())
            }
            Command::List { sort, tags, json } => {
                let sort: SortMode = sort
                    .parse()
                    .map_err(|_| CliError::new(EXIT_USAGE, format!("unknown sort `{sort}`")))?;
                let query = if tags.is_empty() { None } else { Some(tag_query(tags)?) };
                let store = self.open_store()?;
                let groups = store
                    .library()
                    .sort_elements(sort, query.as_ref())
                    .map_err(|e| CliError::new(EXIT_USAGE, e))?;
                if *json {
                    return say(out, canonical_json(&ListResponse { sort, groups }));
                }
                for g in &groups {
                    say(out, format!("{} ({})", g.element.label(), g.clues.len()))?;
                    for r in &g.clues {
                        let c = store.library().get(&r.clue_id).expect("listed clues exist");
                        say(out, format!("  {}  {:>8}ms  {}", c.id, c.timestamp_ms, c.description))?;
                    }
                }
                Ok(())
            }
            Command::Graph { command } => self.graph(command, out),
            Command::Simulate(args) | Command::CaptureSim { command: CaptureSimCommand::Run(args) } => {
                let script = load_script(&args.script)?;
                let events = run_script(&script)?;
                write_capture_log(&args.out, &events)?;
                say(out, format!("{} events", events.len()))
            }
            Command::Validate { store } => validate_store(store, out),
            Command::Serve { listen } => {
                let mut cfg = self.config()?;
                if let Some(addr) = listen {
                    cfg.listen_addr = addr.clone();
                }
                let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new(EXIT_IO, e))?;
                rt.block_on(crate::service::serve(&cfg, |addr| {
                    println!("listening on http://{addr}");
                    let _ = std::io::stdout().flush();
                }))
                .map_err(|e| CliError::new(EXIT_IO, e))
            }
        }
    }

    fn graph(&self, command: &GraphCommand, out: Out) -> Result<(), CliError> {
        match command {
            GraphCommand::Export { id, out: file } => {
                let store = self.open_store()?;
                let graph = store.graph(&GraphId::new(id.clone()))?;
                std::fs::write(file, graph.to_document()).map_err(|e| io_error(file, e))?;
                say(out, format!("exported graph {id}"))
            }
            GraphCommand::Import { file } => {
                let text = std::fs::read_to_string(file).map_err(|e| io_error(file, e))?;
                let graph = InterpretationGraph::from_document(&text).map_err(StoreError::from)?;
                let mut store = self.open_store()?;
                let id = store.put_graph(graph)?.id.clone();
                say(out, format!("imported graph {id}"))
            }
            GraphCommand::List => {
                let store = self.open_store()?;
                for (id, g) in store.graphs() {
                    say(out, format!("{id}  {} nodes  {} edges  {}", g.nodes.len(), g.edges.len(), g.game_name))?;
                }
                Ok(())
            }
        }
    }
}

/// Read-only store check: every snapshot valid, graphs audit clean.
fn validate_store(path: &Path, out: Out) -> Result<(), CliError> {
    let (dir, log_path) = if path.is_dir() {
        (Some(path.to_path_buf()), path.join(CLUE_LOG))
    } else {
        (None, path.to_path_buf())
    };
    let bytes = match std::fs::read(&log_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && dir.is_some() => Vec::new(),
        Err(e) => return Err(io_error(&log_path, e)),
    };
    let (clues, committed) = parse_clue_log(&log_path, &bytes)?;
    let mut problems = Vec::new();
    if committed < bytes.len() {
        eprintln!("warning: torn final line ({} bytes) would be dropped", bytes.len() - committed);
    }
    let mut library = ClueLibrary::new();
    for clue in clues {
        let report = validate_clue(&clue);
        if !report.is_pass() {
            problems.push(format!("clue {}: {report}", clue.id));
            continue;
        }
        library.put(clue).expect("validated");
    }
    let mut graphs = 0;
    if let Some(dir) = dir {
        let gdir = dir.join(GRAPH_DIR);
        let mut files: Vec<PathBuf> = match std::fs::read_dir(&gdir) {
            Ok(entries) => entries.filter_map(|e| e.ok().map(|e| e.path())).collect(),
            Err(_) => Vec::new(),
        };
        files.sort();
        for file in files.iter().filter(|f| f.extension().is_some_and(|x| x == "json")) {
            let text = std::fs::read_to_string(file).map_err(|e| io_error(file, e))?;
            match InterpretationGraph::from_document(&text) {
                Ok(g) => {
                    graphs += 1;
                    for issue in g.audit(Some(&library)) {
                        problems.push(format!("graph {}: {issue}", g.id));
                    }
                }
                Err(e) => problems.push(format!("{}: {e}", file.display())),
            }
        }
    }
    if problems.is_empty() {
        say(out, format!("ok: {} clues, {graphs} graphs", library.len()))
    } else {
        for p in &problems {
            say(out, p)?;
        }
        Err(CliError::new(EXIT_VALIDATION, format!("{} problems", problems.len())))
    }
}

/// Parses `args` and runs the command, writing results to stdout.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match cli.run(&mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Entry point of the `cluecart` binary.
pub fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();
    run_from(std::env::args_os())
}
