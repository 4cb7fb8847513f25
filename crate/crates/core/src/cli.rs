//! Command-line driver. Exit codes: 0 success, 1 runtime failure, 2 usage
//! error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::advisor::DEFAULT_SUGGESTION_SIZE;
use crate::config::ServiceConfig;
use crate::diffusion::DEFAULT_RUNS;
use crate::graph::{Directedness, GraphError};
use crate::grid::{MatrixMode, DEFAULT_CELLS_PER_SIDE};
use crate::layout::DEFAULT_ITERATIONS;
use crate::prob::ProbabilityModel;
use crate::seeds::{AlgorithmName, AlgorithmSpec};
use crate::store::LayoutRef;
use crate::workbench::{RunRequest, SeedSource, Workbench, WorkbenchError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "infmax", version, about = "Influence-maximization workbench")]
pub struct Cli {
    /// Print every default setting and exit.
    #[arg(long)]
    pub show_config: bool,
    /// Service configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate Independent Cascade diffusion from a seed set.
    Simulate(SimulateArgs),
    /// Compare two completed runs.
    Compare(CompareArgs),
    /// Suggest seed removals and promotions, optionally applying them.
    Suggest(SuggestArgs),
    /// Export density and diffusion matrices.
    Export(ExportArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectednessArg {
    Directed,
    Undirected,
}

impl From<DirectednessArg> for Directedness {
    fn from(d: DirectednessArg) -> Self {
        match d {
            DirectednessArg::Directed => Directedness::Directed,
            DirectednessArg::Undirected => Directedness::UndirectedAsBidirectional,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Edge-list file, one `source target` pair per line.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "directed")]
    pub directedness: DirectednessArg,
    /// Seed-selection algorithm: HIGHDEG, SDISC or RANDOM.
    #[arg(long, conflicts_with = "seeds", requires = "k")]
    pub algorithm: Option<AlgorithmName>,
    /// Seed budget for `--algorithm`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Explicit comma-separated seed vertices (dense ids).
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u32>,
    /// Randomness for the RANDOM algorithm.
    #[arg(long, default_value_t = 0)]
    pub selection_seed: u64,
    /// `wc`, `constant:<p>` or `trivalency[:<seed>]`.
    #[arg(long, default_value = "wc", value_parser = parse_model)]
    pub model: ProbabilityModel,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub master_seed: u64,
    /// Grid cells per side.
    #[arg(long, default_value_t = DEFAULT_CELLS_PER_SIDE)]
    pub m: usize,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub layout_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub layout_seed: u64,
    /// Run-store directory; defaults to the configured data directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ProbabilityModel, String> {
    ProbabilityModel::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub run_a: PathBuf,
    pub run_b: PathBuf,
    /// Grid size for per-cell deltas; defaults to the runs' own.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct SuggestArgs {
    pub run: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SUGGESTION_SIZE)]
    pub n: usize,
    #[arg(long)]
    pub m: Option<usize>,
    /// Accept the whole suggestion, rerun, and compare.
    #[arg(long)]
    pub apply: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub run: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub step: usize,
    #[arg(long)]
    pub m: Option<usize>,
    /// `cumulative` or `new`.
    #[arg(long, default_value = "cumulative")]
    pub mode: MatrixMode,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ExportFormat,
    /// Directory receiving the matrix files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<WorkbenchError> for CliError {
    fn from(e: WorkbenchError) -> Self {
        let code = match &e {
            WorkbenchError::Graph(GraphError::Io { .. }) => EXIT_USAGE,
            WorkbenchError::Graph(_) | WorkbenchError::Store(_) => EXIT_FAILURE,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` and executes the command, writing reports to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult {
    let config =
        ServiceConfig::load(cli.config.as_deref()).map_err(|e| CliError::usage(e.to_string()))?;
    if cli.show_config {
        return show_config(&config, out);
    }
    match cli.command {
        None => Err(CliError::usage("no command given; try `infmax --help`")),
        Some(Command::Simulate(a)) => simulate(&config, a, out),
        Some(Command::Compare(a)) => compare(&config, a, out),
        Some(Command::Suggest(a)) => suggest_cmd(&config, a, out),
        Some(Command::Export(a)) => export(&config, a, out),
        Some(Command::Serve(a)) => serve(config, a),
    }
}

fn show_config(config: &ServiceConfig, out: &mut dyn Write) -> CliResult {
    writeln!(out, "# service (file via --config, overridable by INFMAX_PORT, INFMAX_DATA_DIR, INFMAX_WORKERS)")?;
    write!(out, "{}", config.to_toml())?;
    writeln!(out, "\n# simulate")?;
    writeln!(out, "directedness = \"directed\"")?;
    writeln!(out, "model = \"wc\"")?;
    writeln!(out, "runs = {DEFAULT_RUNS}")?;
    writeln!(out, "master_seed = 0")?;
    writeln!(out, "selection_seed = 0")?;
    writeln!(out, "m = {DEFAULT_CELLS_PER_SIDE}")?;
    writeln!(out, "layout_iterations = {DEFAULT_ITERATIONS}")?;
    writeln!(out, "layout_seed = 0")?;
    writeln!(out, "\n# suggest")?;
    writeln!(out, "n = {DEFAULT_SUGGESTION_SIZE}")?;
    writeln!(out, "\n# export")?;
    writeln!(out, "step = 0")?;
    writeln!(out, "mode = \"cumulative\"")?;
    writeln!(out, "format = \"csv\"")?;
    Ok(())
}

fn simulate(config: &ServiceConfig, a: SimulateArgs, out: &mut dyn Write) -> CliResult {
    if !a.graph.is_file() {
        return Err(CliError::usage(format!(
            "cannot read graph file {}",
            a.graph.display()
        )));
    }
    let seeds = match (a.algorithm, a.seeds.is_empty()) {
        (Some(name), true) => SeedSource::Algorithm(AlgorithmSpec {
            name,
            k: a.k.unwrap_or(0),
            rng_seed: a.selection_seed,
        }),
        (None, false) => SeedSource::Explicit(a.seeds),
        _ => {
            return Err(CliError::usage(
                "give either --algorithm with --k, or --seeds",
            ))
        }
    };
    let root = a.out.unwrap_or_else(|| config.data_dir.clone());
    let wb = Workbench::open(&root, config.workers)?;
    let manifest = wb.ingest_file(&a.graph, a.directedness.into())?;
    let req = RunRequest {
        graph_ref: manifest.graph_ref.clone(),
        seeds,
        model: a.model,
        runs: a.runs,
        master_seed: a.master_seed,
        m: a.m,
        layout: LayoutRef {
            iterations: a.layout_iterations,
            rng_seed: a.layout_seed,
        },
    };
    let run = wb.create_run(&req)?;
    let agg = wb.aggregation(&run.run_id)?;
    writeln!(
        out,
        "graph {} ({} vertices, {} arcs)",
        manifest.graph_ref, manifest.node_count, manifest.arc_count
    )?;
    writeln!(out, "run {}", run.run_id)?;
    writeln!(out, "run dir {}", wb.store().run_dir(&run.run_id).display())?;
    writeln!(out, "seeds {} ({})", run.seeds.len(), run.seeds.origin())?;
    writeln!(
        out,
        "spread {:.4} ± {:.4} over {} runs, {} steps",
        agg.spread_mean,
        agg.spread_std,
        agg.runs,
        agg.step_count()
    )?;
    Ok(())
}

/// Splits `<root>/runs/<id>` into a workbench over `<root>` and the id.
fn open_run_dir(config: &ServiceConfig, dir: &Path) -> Result<(Workbench, String), CliError> {
    let missing = || CliError::usage(format!("not a run directory: {}", dir.display()));
    if !dir.join("run.json").is_file() {
        return Err(missing());
    }
    let id = dir
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(missing)?
        .to_string();
    let root = dir.parent().and_then(Path::parent).ok_or_else(missing)?;
    Ok((Workbench::open(root, config.workers)?, id))
}

fn compare(config: &ServiceConfig, a: CompareArgs, out: &mut dyn Write) -> CliResult {
    let (wb, id_a) = open_run_dir(config, &a.run_a)?;
    let (wb_b, id_b) = open_run_dir(config, &a.run_b)?;
    if wb_b.store().root() != wb.store().root() {
        return Err(CliError::usage("both runs must live in the same run store"));
    }
    let report = wb.compare(&id_a, &id_b, a.m)?;
    match a.format {
        ReportFormat::Text => write!(out, "{}", report.to_text())?,
        ReportFormat::Json => writeln!(out, "{}", to_json(&report))?,
    }
    Ok(())
}

fn suggest_cmd(config: &ServiceConfig, a: SuggestArgs, out: &mut dyn Write) -> CliResult {
    let (wb, id) = open_run_dir(config, &a.run)?;
    let payload = wb.suggestion(&id, a.n, a.m)?;
    writeln!(out, "{}", to_json(&payload))?;
    if a.apply {
        match wb.accept_all(&id, a.n)? {
            None => writeln!(out, "nothing to apply")?,
            Some(child) => {
                writeln!(out, "modified run {}", child.run_id)?;
                writeln!(
                    out,
                    "run dir {}",
                    wb.store().run_dir(&child.run_id).display()
                )?;
                write!(out, "{}", wb.compare(&id, &child.run_id, a.m)?.to_text())?;
            }
        }
    }
    Ok(())
}

fn export(config: &ServiceConfig, a: ExportArgs, out: &mut dyn Write) -> CliResult {
    let (wb, id) = open_run_dir(config, &a.run)?;
    let p = wb.matrices(&id, a.step, a.m, a.mode)?;
    std::fs::create_dir_all(&a.out)?;
    let mode = match a.mode {
        MatrixMode::CumulativeActive => "cumulative",
        MatrixMode::NewlyActive => "new",
    };
    let mut written = Vec::new();
    match a.format {
        ExportFormat::Csv => {
            let density = a.out.join(format!("density-m{}.csv", p.m));
            std::fs::write(&density, matrix_csv(p.m, &p.density))?;
            let diffusion = a
                .out
                .join(format!("diffusion-{mode}-s{}-m{}.csv", p.step, p.m));
            std::fs::write(&diffusion, matrix_csv(p.m, &p.diffusion))?;
            written.extend([density, diffusion]);
        }
        ExportFormat::Json => {
            let path = a
                .out
                .join(format!("matrices-{mode}-s{}-m{}.json", p.step, p.m));
            std::fs::write(&path, to_json(&*p) + "\n")?;
            written.push(path);
        }
    }
    for path in written {
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}

/// Header row `c0,…,c{m-1}` followed by `m` rows of values.
pub fn matrix_csv<T: ToString>(m: usize, values: &[T]) -> String {
    let mut s = (0..m)
        .map(|c| format!("c{c}"))
        .collect::<Vec<_>>()
        .join(",");
    s.push('\n');
    for row in values.chunks(m) {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn serve(mut config: ServiceConfig, a: ServeArgs) -> CliResult {
    if let Some(h) = a.host {
        config.host = h;
    }
    if let Some(p) = a.port {
        config.port = p;
    }
    if let Some(d) = a.data_dir {
        config.data_dir = d;
    }
    if let Some(w) = a.workers {
        config.workers = w.max(1);
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::service::serve(config))?;
    Ok(())
}
