//! The `skg` command line.

use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::annotator::{self, emit_cypher, CompileError, MergePlan};
use crate::graph::{EdgeKey, Graph, GraphError, NodeKey, StoreError};
use crate::metrics::{compare_extractions, AliasTable, Extraction, MetricsError};
use crate::ontology::{builtin_registry, SchemaRegistry};
use crate::queries::{self, CascadeDirection, OutputFormat, QueryError};
use crate::seo::{parse_seo, validate_seo};

pub const ALIAS_ENV: &str = "SKG_ALIAS_FILE";

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    ValidationIssues = 1,
    Usage = 2,
    Io = 3,
    Internal = 4,
}

#[derive(Debug, Parser)]
#[command(name = "skg", version, about = "Typed knowledge graph for laboratory workflow twins")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate an elicitation document and print its issues.
    Validate {
        file: PathBuf,
        #[arg(long, value_parser = parse_format, default_value = "tsv")]
        format: OutputFormat,
    },
    /// Compile a document into a merge plan (written to stdout or --output).
    Compile {
        file: PathBuf,
        #[arg(long)]
        subgraph: String,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long = "emit-cypher")]
        emit_cypher: Option<PathBuf>,
    },
    /// Apply a plan or a document to a store; prints the new graph hash.
    Apply {
        input: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Subgraph for documents without a protocol layer.
        #[arg(long)]
        subgraph: Option<String>,
    },
    /// Approve pending cross-subgraph edges.
    Converge {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, conflicts_with = "edge")]
        all: bool,
        /// Edge selector: TYPE SRC DST, keys as SUBGRAPH:Label:ID.
        #[arg(long, num_args = 3, value_names = ["TYPE", "SRC", "DST"], action = clap::ArgAction::Append)]
        edge: Vec<String>,
    },
    /// Run one of the fixed query classes.
    Query(QueryArgs),
    /// Confidence statistics for one subgraph.
    Stats {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        subgraph: String,
        #[arg(long, value_parser = parse_format, default_value = "tsv")]
        format: OutputFormat,
    },
    /// Failure-mode F1 of a candidate extraction against a reference.
    F1 {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        alias: Option<PathBuf>,
        #[arg(long, value_parser = parse_format, default_value = "tsv")]
        format: OutputFormat,
    },
    /// Pairwise agreement across repeated runs.
    Consistency {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        alias: Option<PathBuf>,
        #[arg(long, value_parser = parse_format, default_value = "tsv")]
        format: OutputFormat,
    },
    /// Print the schema registry.
    Schema,
    /// Print the canonical hash of a store.
    Hash {
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QueryName {
    Q1,
    Q2,
    Q3,
    Q4a,
    Q4b,
    Q5,
    Q6,
    Q7,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(value_enum)]
    name: QueryName,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    subgraph: Option<String>,
    #[arg(long)]
    step: Option<String>,
    #[arg(long)]
    root: Option<String>,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, value_parser = parse_direction, default_value = "downstream")]
    direction: CascadeDirection,
    #[arg(long, default_value_t = 0.60)]
    threshold: f64,
    #[arg(long, value_parser = parse_format, default_value = "tsv")]
    format: OutputFormat,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}

fn parse_direction(s: &str) -> Result<CascadeDirection, String> {
    s.parse()
}

/// A failed command: exit status plus a message for the error stream.
struct Failure {
    code: ExitCode,
    message: String,
    /// Printed on stdout before exiting (validation reports).
    stdout: String,
}

impl Failure {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
            stdout: String::new(),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::new(ExitCode::Io, e.to_string())
    }
}

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Self {
        Failure::new(ExitCode::Usage, e.to_string())
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        let code = match e {
            MetricsError::ArityError { .. } => ExitCode::Usage,
            _ => ExitCode::Io,
        };
        Failure::new(code, e.to_string())
    }
}

fn graph_failure(e: GraphError) -> Failure {
    let code = match e {
        GraphError::KeyError(_) => ExitCode::Usage,
        GraphError::Format { .. } | GraphError::RegistryMismatch { .. } => ExitCode::Io,
        _ => ExitCode::ValidationIssues,
    };
    Failure::new(code, e.to_string())
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(ExitCode::Io, format!("{}: {e}", path.display()))
}

type Outcome = Result<String, Failure>;

/// Runs the CLI with explicit arguments and streams; returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                ExitCode::Usage
            } else {
                let _ = write!(stdout, "{}", e.render());
                ExitCode::Success
            };
            return code as i32;
        }
    };
    let registry = builtin_registry();
    match execute(cli.command, &registry) {
        Ok(out) => {
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::Success as i32
        }
        Err(f) => {
            let _ = stdout.write_all(f.stdout.as_bytes());
            if !f.message.is_empty() {
                let _ = writeln!(stderr, "skg: {}", f.message);
            }
            f.code as i32
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| io_failure(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    Ok(Graph::load(path)?)
}

fn load_or_new(path: &Path, registry: &SchemaRegistry) -> Result<Graph, Failure> {
    if path.exists() {
        load_graph(path)
    } else {
        Ok(Graph::new(registry.version.clone()))
    }
}

/// Advisory single-writer lock, removed on drop.
struct StoreLock {
    path: PathBuf,
    _file: File,
}

impl StoreLock {
    fn acquire(store: &Path) -> Result<StoreLock, Failure> {
        let mut name = store.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                Failure::new(
                    ExitCode::Io,
                    format!("cannot lock {} ({e}); another writer may be active", store.display()),
                )
            })?;
        Ok(StoreLock { path, _file: file })
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn parse_document(path: &Path) -> Result<crate::seo::SeoDocument, Failure> {
    let bytes = read(path)?;
    parse_seo(&bytes).map_err(|e| Failure::new(ExitCode::ValidationIssues, format!("{}: {e}", path.display())))
}

fn compile_failure(e: CompileError) -> Failure {
    match e {
        CompileError::Rejected(report) => Failure {
            code: ExitCode::ValidationIssues,
            message: format!("document rejected with {} issue(s)", report.len()),
            stdout: report.to_string(),
        },
        CompileError::SubgraphMismatch { .. } => Failure::new(ExitCode::Usage, e.to_string()),
    }
}

fn is_plan(bytes: &[u8]) -> bool {
    serde_json::from_slice::<serde_json::Value>(bytes)
        .ok()
        .and_then(|v| v.get("format").and_then(|f| f.as_str()).map(|f| f == "skg-plan"))
        .unwrap_or(false)
}

fn load_plan(input: &Path, subgraph: Option<&str>, registry: &SchemaRegistry) -> Result<MergePlan, Failure> {
    let bytes = read(input)?;
    if is_plan(&bytes) {
        let text = String::from_utf8_lossy(&bytes);
        return MergePlan::from_json(&text)
            .map_err(|e| Failure::new(ExitCode::Io, format!("{}: {e}", input.display())));
    }
    let doc = parse_seo(&bytes)
        .map_err(|e| Failure::new(ExitCode::ValidationIssues, format!("{}: {e}", input.display())))?;
    let sg = match (subgraph, &doc.protocol) {
        (Some(s), _) => s.to_string(),
        (None, Some(p)) => p.subgraph.clone(),
        (None, None) => {
            return Err(Failure::new(
                ExitCode::Usage,
                "--subgraph is required for documents without a protocol layer",
            ))
        }
    };
    annotator::compile(&doc, &sg, registry).map_err(compile_failure)
}

fn parse_key(s: &str) -> Result<NodeKey, Failure> {
    s.parse().map_err(|e: GraphError| Failure::new(ExitCode::Usage, e.to_string()))
}

fn load_extraction(path: &Path) -> Result<Extraction, Failure> {
    let name = path.to_string_lossy();
    if name.ends_with(".skg.jsonl") {
        Ok(Extraction::Graph(load_graph(path)?))
    } else {
        Ok(Extraction::Document(parse_document(path)?))
    }
}

fn alias_table(flag: Option<PathBuf>) -> Result<AliasTable, Failure> {
    let path = flag.or_else(|| std::env::var_os(ALIAS_ENV).map(PathBuf::from));
    match path {
        Some(p) => Ok(AliasTable::builtin().merged_with(&AliasTable::load(&p)?)),
        None => Ok(AliasTable::builtin().clone()),
    }
}

fn report_text(report: &crate::metrics::ConsistencyReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Tsv => report.summary(),
        OutputFormat::Json => format!("{}\n", report.to_json()),
    }
}

fn execute(command: Command, registry: &SchemaRegistry) -> Outcome {
    match command {
        Command::Validate { file, format } => {
            let doc = parse_document(&file)?;
            let report = validate_seo(&doc);
            let text = match format {
                OutputFormat::Tsv => report.to_string(),
                OutputFormat::Json => queries::to_json(&report),
            };
            if report.is_empty() {
                Ok(text)
            } else {
                Err(Failure {
                    code: ExitCode::ValidationIssues,
                    message: format!("{} issue(s)", report.len()),
                    stdout: text,
                })
            }
        }
        Command::Compile {
            file,
            subgraph,
            output,
            emit_cypher: cypher_out,
        } => {
            let doc = parse_document(&file)?;
            let plan = annotator::compile(&doc, &subgraph, registry).map_err(compile_failure)?;
            if let Some(path) = cypher_out {
                write_file(&path, &emit_cypher(&plan))?;
            }
            let json = format!("{}\n", plan.to_json());
            match output {
                Some(path) => {
                    write_file(&path, &json)?;
                    Ok(String::new())
                }
                None => Ok(json),
            }
        }
        Command::Apply {
            input,
            graph,
            subgraph,
        } => {
            let plan = load_plan(&input, subgraph.as_deref(), registry)?;
            let _lock = StoreLock::acquire(&graph)?;
            let current = load_or_new(&graph, registry)?;
            let next = annotator::apply(&plan, &current, registry).map_err(graph_failure)?;
            next.save(&graph)?;
            Ok(format!("{}\n", next.graph_hash()))
        }
        Command::Converge { graph, all, edge } => {
            if !all && edge.is_empty() {
                return Err(Failure::new(ExitCode::Usage, "converge needs --all or --edge TYPE SRC DST"));
            }
            let _lock = StoreLock::acquire(&graph)?;
            let current = load_graph(&graph)?;
            let selectors: Vec<EdgeKey> = if all {
                current.pending_edges().map(|e| e.key()).collect()
            } else {
                edge.chunks(3)
                    .map(|c| {
                        Ok(EdgeKey {
                            edge_type: c[0].clone(),
                            src: parse_key(&c[1])?,
                            dst: parse_key(&c[2])?,
                        })
                    })
                    .collect::<Result<_, Failure>>()?
            };
            let next = annotator::approve_pending(&current, &selectors).map_err(graph_failure)?;
            next.save(&graph)?;
            Ok(format!("approved\t{}\nhash\t{}\n", selectors.len(), next.graph_hash()))
        }
        Command::Query(args) => run_query(args),
        Command::Stats {
            graph,
            subgraph,
            format,
        } => {
            let g = load_graph(&graph)?;
            let stats = queries::subgraph_stats(&g, &subgraph)?;
            Ok(match format {
                OutputFormat::Tsv => stats.to_tsv(),
                OutputFormat::Json => queries::to_json(&stats),
            })
        }
        Command::F1 {
            reference,
            candidate,
            alias,
            format,
        } => {
            let aliases = alias_table(alias)?;
            let r = load_extraction(&reference)?;
            let c = load_extraction(&candidate)?;
            let report = compare_extractions(&[c], Some(&r), &aliases)?;
            Ok(report_text(&report, format))
        }
        Command::Consistency {
            runs,
            reference,
            alias,
            format,
        } => {
            let aliases = alias_table(alias)?;
            let runs: Vec<Extraction> = runs.iter().map(|p| load_extraction(p)).collect::<Result<_, _>>()?;
            let reference = reference.map(|p| load_extraction(&p)).transpose()?;
            let report = compare_extractions(&runs, reference.as_ref(), &aliases)?;
            Ok(report_text(&report, format))
        }
        Command::Schema => Ok(registry.listing()),
        Command::Hash { graph } => Ok(format!("{}\n", load_graph(&graph)?.graph_hash())),
    }
}

fn required<'a>(value: &'a Option<String>, flag: &str, query: &str) -> Result<&'a str, Failure> {
    value
        .as_deref()
        .ok_or_else(|| Failure::new(ExitCode::Usage, format!("{query} requires --{flag}")))
}

fn run_query(args: QueryArgs) -> Outcome {
    let g = load_graph(&args.graph)?;
    let fmt = args.format;
    let sg = |default: &'static str| args.subgraph.clone().unwrap_or_else(|| default.to_string());
    Ok(match args.name {
        QueryName::Q1 => queries::render(&queries::q_ranked_failures(&g, &sg(queries::ELISA_SUBGRAPH))?, fmt),
        QueryName::Q5 => queries::render(&queries::q_ranked_failures(&g, &sg(queries::LCMS_SUBGRAPH))?, fmt),
        QueryName::Q2 => {
            let step = parse_key(required(&args.step, "step", "q2")?)?;
            queries::render(&queries::q2_decision_logic(&g, &step)?, fmt)
        }
        QueryName::Q3 => {
            let root = parse_key(required(&args.root, "root", "q3")?)?;
            queries::render(&queries::q3_cascade(&g, &root, args.depth, args.direction)?, fmt)
        }
        QueryName::Q4a => queries::render(&queries::q4a_coverage_gaps(&g, &sg(queries::ELISA_SUBGRAPH)), fmt),
        QueryName::Q4b => queries::render(
            &queries::q4b_confidence_floor(&g, &sg(queries::LCMS_SUBGRAPH), args.threshold)?,
            fmt,
        ),
        QueryName::Q6 => queries::render(&queries::q6_masking_audit(&g), fmt),
        QueryName::Q7 => queries::render(&queries::q7_shared_assets(&g), fmt),
    })
}

/// Entry point used by the `skg` binary.
/// A panic is reported as an internal invariant breach.
pub fn main_with_env() -> i32 {
    std::panic::catch_unwind(|| {
        let stdout = std::io::stdout();
        let stderr = std::io::stderr();
        run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
    })
    .unwrap_or(ExitCode::Internal as i32)
}
