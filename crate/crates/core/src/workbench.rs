//! The end-to-end workflow shared by the command line and the HTTP service:
//! ingest a dataset, create and execute runs, derive matrices and detail
//! views, and produce suggestions, modified runs and comparisons.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::advisor::{
    apply_modification, compare_runs, suggest, AdvisorError, Comparison, SuggestInput, Suggestion,
};
use crate::diffusion::{
    simulate_runs, AggregatedDiffusion, DiffusionError, Progress, SeedSet, DEFAULT_RUNS,
};
use crate::graph::{Directedness, Graph, GraphError, VertexId};
use crate::grid::{
    cell_rates, classify_rate, density_matrix, diffusion_matrix, subgraph_of_cells, trend_series,
    CellRect, DetailBundle, Grid, GridError, MatrixMode, RateClass, RoleContext, TrendSeries,
    DEFAULT_CELLS_PER_SIDE,
};
use crate::layout::{compute_layout, Layout};
use crate::prob::{ProbabilityError, ProbabilityModel, WeightedGraph};
use crate::seeds::{AlgorithmSpec, Registry};
use crate::store::{
    short_hash, LayoutRef, Manifest, RunConfig, RunRecord, RunStatus, RunStore, StoreError,
    SCHEMA_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum WorkbenchError {
    #[error("unknown dataset {0}")]
    UnknownDataset(String),
    #[error("unknown run {0}")]
    UnknownRun(String),
    #[error("run {0} is not done")]
    NotDone(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("suggestion is stale: run {run} now has aggregation {current}")]
    Stale { run: String, current: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Advisor(#[from] AdvisorError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl WorkbenchError {
    /// True for errors caused by the request rather than the system.
    pub fn is_client_error(&self) -> bool {
        !matches!(self, WorkbenchError::Store(_))
    }
}

pub type Result<T, E = WorkbenchError> = std::result::Result<T, E>;

/// How a run's seeds are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Algorithm(AlgorithmSpec),
    /// Dense vertex ids.
    Explicit(Vec<VertexId>),
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}

fn default_m() -> usize {
    DEFAULT_CELLS_PER_SIDE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub graph_ref: String,
    pub seeds: SeedSource,
    #[serde(default)]
    pub model: ProbabilityModel,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub layout: LayoutRef,
}

impl RunRequest {
    pub fn new(graph_ref: impl Into<String>, seeds: SeedSource) -> Self {
        RunRequest {
            graph_ref: graph_ref.into(),
            seeds,
            model: ProbabilityModel::default(),
            runs: DEFAULT_RUNS,
            master_seed: 0,
            m: DEFAULT_CELLS_PER_SIDE,
            layout: LayoutRef::default(),
        }
    }
}

/// Everything the coordinated matrix views need for one `(step, m, mode)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatricesPayload {
    pub schema_version: u32,
    pub run_id: String,
    pub m: usize,
    pub step: usize,
    pub mode: MatrixMode,
    pub final_step: usize,
    pub node_count: usize,
    /// Row-major `m × m` arrays.
    pub density: Vec<u32>,
    pub diffusion: Vec<f64>,
    /// Cumulative influence rate at `step`; null for empty cells.
    pub rates: Vec<Option<f64>>,
    pub classes: Vec<Option<RateClass>>,
    pub seed_counts: Vec<u32>,
    pub trend: TrendSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionPayload {
    pub schema_version: u32,
    pub run_id: String,
    pub aggregation_digest: String,
    pub m: usize,
    pub suggestion: Suggestion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub aggregation_digest: String,
    pub n: usize,
    pub m: Option<usize>,
    pub accepted_removals: Vec<VertexId>,
    pub accepted_promotions: Vec<VertexId>,
    #[serde(default)]
    pub allow_resize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub run_a: String,
    pub run_b: String,
    pub m: usize,
    pub comparison: Comparison,
}

impl ComparisonReport {
    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let c = &self.comparison;
        let mut out = format!(
            "run A {}: spread {:.3} ± {:.3} over {} runs, {} steps\n\
             run B {}: spread {:.3} ± {:.3} over {} runs, {} steps\n\
             delta {:+.3} ({:+.2}%), stderr {:.3}, z {:+.2}\n",
            self.run_a,
            c.a.mean,
            c.a.std,
            c.a.runs,
            c.a.steps,
            self.run_b,
            c.b.mean,
            c.b.std,
            c.b.runs,
            c.b.steps,
            c.spread_delta,
            c.relative_change * 100.0,
            c.delta_stderr,
            c.z_score,
        );
        out.push_str("step  cum_a  cum_b  delta\n");
        for s in &c.steps {
            out.push_str(&format!(
                "{:>4}  {:.3}  {:.3}  {:+.3}\n",
                s.step, s.cumulative_a, s.cumulative_b, s.cumulative_delta
            ));
        }
        out
    }
}

type MatrixKey = (String, usize, usize, MatrixMode);

/// Shared workflow over a [`RunStore`].
pub struct Workbench {
    store: RunStore,
    registry: Registry,
    pool: rayon::ThreadPool,
    graphs: Mutex<HashMap<String, Arc<Graph>>>,
    layouts: Mutex<HashMap<(String, LayoutRef), Arc<Layout>>>,
    matrices: Mutex<HashMap<MatrixKey, Arc<MatricesPayload>>>,
    // serializes run execution per run id
    executing: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Workbench {
    pub fn open(root: impl AsRef<Path>, workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .expect("thread pool");
        Ok(Workbench {
            store: RunStore::open(root.as_ref())?,
            registry: Registry::default(),
            pool,
            graphs: Mutex::default(),
            layouts: Mutex::default(),
            matrices: Mutex::default(),
            executing: Mutex::default(),
        })
    }

    pub fn store(&self) -> &RunStore {
        &self.store
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Validates and stores an edge list; identical content maps to the same
    /// reference.
    pub fn ingest_dataset(
        &self,
        name: &str,
        payload: &[u8],
        directedness: Directedness,
    ) -> Result<Manifest> {
        let tag = match directedness {
            Directedness::Directed => b"directed\n".as_slice(),
            Directedness::UndirectedAsBidirectional => b"undirected\n".as_slice(),
        };
        let graph_ref = short_hash(&[tag, payload].concat());
        if self.store.has_dataset(&graph_ref) {
            return Ok(self.store.read_manifest(&graph_ref)?);
        }
        let graph = Graph::parse_edge_list(payload, directedness)?;
        let manifest = Manifest::new(
            graph_ref.clone(),
            name.to_string(),
            directedness,
            graph.node_count(),
            graph.arc_count(),
            graph.build_report(),
        );
        let labels = graph.labels().map(<[u64]>::to_vec).unwrap_or_default();
        self.store.write_dataset(&manifest, payload, &labels)?;
        self.graphs
            .lock()
            .unwrap()
            .insert(graph_ref, Arc::new(graph));
        Ok(manifest)
    }

    pub fn ingest_file(&self, path: &Path, directedness: Directedness) -> Result<Manifest> {
        let payload = std::fs::read(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset")
            .to_string();
        self.ingest_dataset(&name, &payload, directedness)
    }

    pub fn manifest(&self, graph_ref: &str) -> Result<Manifest> {
        if !self.store.has_dataset(graph_ref) {
            return Err(WorkbenchError::UnknownDataset(graph_ref.into()));
        }
        Ok(self.store.read_manifest(graph_ref)?)
    }

    pub fn graph(&self, graph_ref: &str) -> Result<Arc<Graph>> {
        if let Some(g) = self.graphs.lock().unwrap().get(graph_ref) {
            return Ok(Arc::clone(g));
        }
        let manifest = self.manifest(graph_ref)?;
        let graph = Arc::new(Graph::load(
            self.store.source_path(&manifest),
            manifest.directedness,
        )?);
        self.graphs
            .lock()
            .unwrap()
            .insert(graph_ref.to_string(), Arc::clone(&graph));
        Ok(graph)
    }

    /// Cached layout, computed and stored on first use.
    pub fn layout(&self, graph_ref: &str, key: &LayoutRef) -> Result<Arc<Layout>> {
        let cache_key = (graph_ref.to_string(), key.clone());
        if let Some(l) = self.layouts.lock().unwrap().get(&cache_key) {
            return Ok(Arc::clone(l));
        }
        let layout = match self.store.read_layout(graph_ref, key)? {
            Some(l) => l,
            None => {
                let graph = self.graph(graph_ref)?;
                let l = self
                    .pool
                    .install(|| compute_layout(&graph, key.iterations, key.rng_seed));
                self.store.write_layout(graph_ref, key, &l)?;
                l
            }
        };
        let layout = Arc::new(layout);
        self.layouts
            .lock()
            .unwrap()
            .insert(cache_key, Arc::clone(&layout));
        Ok(layout)
    }

    pub fn grid(&self, config: &RunConfig, m: usize) -> Result<Grid> {
        let layout = self.layout(&config.graph_ref, &config.layout)?;
        Ok(Grid::build(&layout, m)?)
    }

    /// Validates a request, resolves its seed set, and records the run as
    /// pending. Returns the existing record when the same run was created
    /// before.
    pub fn prepare_run(&self, req: &RunRequest) -> Result<RunConfig> {
        self.prepare_with_parent(req, None, None)
    }

    fn prepare_with_parent(
        &self,
        req: &RunRequest,
        seeds: Option<SeedSet>,
        parent: Option<String>,
    ) -> Result<RunConfig> {
        if req.runs == 0 {
            return Err(WorkbenchError::BadRequest("runs must be at least 1".into()));
        }
        if !(1..=crate::grid::MAX_CELLS_PER_SIDE).contains(&req.m) {
            return Err(GridError::BadSize(req.m).into());
        }
        req.model.validate()?;
        let graph = self.graph(&req.graph_ref)?;
        let (algorithm, seeds) = match (seeds, &req.seeds) {
            (Some(s), _) => (None, s),
            (None, SeedSource::Algorithm(spec)) => {
                (Some(spec.clone()), self.registry.run(&graph, spec)?)
            }
            (None, SeedSource::Explicit(ids)) => {
                if ids.is_empty() {
                    return Err(DiffusionError::InvalidK {
                        k: 0,
                        node_count: graph.node_count(),
                    }
                    .into());
                }
                (
                    None,
                    SeedSet::exact(ids.clone(), "manual", graph.node_count())?,
                )
            }
        };
        let mut config = RunConfig {
            schema_version: SCHEMA_VERSION,
            run_id: String::new(),
            graph_ref: req.graph_ref.clone(),
            model: req.model.clone(),
            algorithm,
            seeds,
            runs: req.runs,
            master_seed: req.master_seed,
            m: req.m,
            layout: req.layout.clone(),
            parent_run_id: parent,
        };
        config.run_id = config.derive_id();
        self.store.create_run(&config)?;
        Ok(config)
    }

    /// Executes a prepared run unless it is already done.
    pub fn execute_run(
        &self,
        run_id: &str,
        on_progress: &(dyn Fn(Progress) + Sync),
    ) -> Result<AggregatedDiffusion> {
        let guard = {
            let mut map = self.executing.lock().unwrap();
            Arc::clone(map.entry(run_id.to_string()).or_default())
        };
        let _lock = guard.lock().unwrap();
        let record = self.record(run_id)?;
        if record.status == RunStatus::Done {
            return Ok(self.store.read_aggregation(run_id)?);
        }
        self.store.set_status(run_id, RunStatus::Running, None)?;
        match self.simulate(&record.config, on_progress) {
            Ok(agg) => {
                self.store.set_status(run_id, RunStatus::Done, None)?;
                Ok(agg)
            }
            Err(e) => {
                self.store
                    .set_status(run_id, RunStatus::Failed, Some(e.to_string()))?;
                Err(e)
            }
        }
    }

    fn simulate(
        &self,
        config: &RunConfig,
        on_progress: &(dyn Fn(Progress) + Sync),
    ) -> Result<AggregatedDiffusion> {
        let graph = self.graph(&config.graph_ref)?;
        let wg = WeightedGraph::assign(graph, config.model.clone())?;
        let traces = self.pool.install(|| {
            simulate_runs(
                &wg,
                &config.seeds,
                config.runs,
                config.master_seed,
                on_progress,
            )
        })?;
        let agg = AggregatedDiffusion::from_runs(wg.graph().node_count(), &traces)?;
        // the layout is part of the run's artifacts
        self.layout(&config.graph_ref, &config.layout)?;
        self.store.write_results(&config.run_id, &agg, &traces)?;
        Ok(agg)
    }

    /// Prepares and executes a run in the foreground.
    pub fn create_run(&self, req: &RunRequest) -> Result<RunConfig> {
        let config = self.prepare_run(req)?;
        self.execute_run(&config.run_id, &|_| {})?;
        Ok(config)
    }

    pub fn record(&self, run_id: &str) -> Result<RunRecord> {
        if !self.store.has_run(run_id) {
            return Err(WorkbenchError::UnknownRun(run_id.into()));
        }
        Ok(self.store.read_record(run_id)?)
    }

    /// The run's configuration, provided it completed.
    pub fn done_config(&self, run_id: &str) -> Result<RunConfig> {
        let record = self.record(run_id)?;
        if record.status != RunStatus::Done {
            return Err(WorkbenchError::NotDone(run_id.into()));
        }
        Ok(record.config)
    }

    pub fn aggregation(&self, run_id: &str) -> Result<AggregatedDiffusion> {
        self.done_config(run_id)?;
        Ok(self.store.read_aggregation(run_id)?)
    }

    pub fn matrices(
        &self,
        run_id: &str,
        step: usize,
        m: Option<usize>,
        mode: MatrixMode,
    ) -> Result<Arc<MatricesPayload>> {
        let config = self.done_config(run_id)?;
        let m = m.unwrap_or(config.m);
        let key = (run_id.to_string(), m, step, mode);
        if let Some(p) = self.matrices.lock().unwrap().get(&key) {
            return Ok(Arc::clone(p));
        }
        let agg = self.store.read_aggregation(run_id)?;
        let payload = Arc::new(self.compute_matrices(&config, &agg, step, m, mode)?);
        self.matrices
            .lock()
            .unwrap()
            .insert(key, Arc::clone(&payload));
        Ok(payload)
    }

    /// Uncached matrix computation from stored primitives.
    pub fn compute_matrices(
        &self,
        config: &RunConfig,
        agg: &AggregatedDiffusion,
        step: usize,
        m: usize,
        mode: MatrixMode,
    ) -> Result<MatricesPayload> {
        let grid = self.grid(config, m)?;
        let density = density_matrix(&grid);
        let diffusion = diffusion_matrix(&grid, agg, step, mode)?;
        let cumulative = match mode {
            MatrixMode::CumulativeActive => diffusion.clone(),
            MatrixMode::NewlyActive => {
                diffusion_matrix(&grid, agg, step, MatrixMode::CumulativeActive)?
            }
        };
        let rates = cell_rates(&grid, &cumulative)?;
        let classes = rates.iter().map(|r| r.map(classify_rate)).collect();
        let mut seed_counts = vec![0u32; m * m];
        for &s in config.seeds.seeds() {
            seed_counts[grid.index(grid.cell_of(s))] += 1;
        }
        Ok(MatricesPayload {
            schema_version: SCHEMA_VERSION,
            run_id: config.run_id.clone(),
            m,
            step,
            mode,
            final_step: agg.final_step(),
            node_count: agg.node_count,
            density: density.counts,
            diffusion: diffusion.values,
            rates,
            classes,
            seed_counts,
            trend: trend_series(agg).at(step),
        })
    }

    /// Node-link detail for a rectangle of cells, with roles taken from the
    /// first recorded trace.
    pub fn detail(
        &self,
        run_id: &str,
        selection: CellRect,
        step: usize,
        m: Option<usize>,
    ) -> Result<DetailBundle> {
        let config = self.done_config(run_id)?;
        let agg = self.store.read_aggregation(run_id)?;
        if step >= agg.step_count() {
            return Err(GridError::StepOutOfRange {
                step,
                last: agg.final_step(),
            }
            .into());
        }
        let grid = self.grid(&config, m.unwrap_or(config.m))?;
        let layout = self.layout(&config.graph_ref, &config.layout)?;
        let graph = self.graph(&config.graph_ref)?;
        let trace = self.store.read_trace(run_id, 0)?;
        let roles = RoleContext {
            seeds: &config.seeds,
            run: trace.as_ref(),
            agg: Some(&agg),
            step,
        };
        Ok(subgraph_of_cells(&grid, &graph, &layout, selection, roles)?)
    }

    pub fn suggestion(
        &self,
        run_id: &str,
        n: usize,
        m: Option<usize>,
    ) -> Result<SuggestionPayload> {
        let config = self.done_config(run_id)?;
        let m = m.unwrap_or(config.m);
        let agg = self.store.read_aggregation(run_id)?;
        let graph = self.graph(&config.graph_ref)?;
        let grid = self.grid(&config, m)?;
        let suggestion = suggest(
            SuggestInput {
                graph: &graph,
                grid: &grid,
                agg: &agg,
                seeds: &config.seeds,
            },
            n,
        )?;
        Ok(SuggestionPayload {
            schema_version: SCHEMA_VERSION,
            run_id: run_id.to_string(),
            aggregation_digest: self.store.aggregation_digest(run_id)?,
            m,
            suggestion,
        })
    }

    /// Applies an acceptance to a run's seeds and records the child run as
    /// pending. Returns `None` when nothing was accepted.
    pub fn prepare_modified_run(
        &self,
        run_id: &str,
        acceptance: &Acceptance,
    ) -> Result<Option<RunConfig>> {
        let config = self.done_config(run_id)?;
        let current = self.store.aggregation_digest(run_id)?;
        if current != acceptance.aggregation_digest {
            return Err(WorkbenchError::Stale {
                run: run_id.into(),
                current,
            });
        }
        if acceptance.accepted_removals.is_empty() && acceptance.accepted_promotions.is_empty() {
            return Ok(None);
        }
        let payload = self.suggestion(run_id, acceptance.n, acceptance.m)?;
        let graph = self.graph(&config.graph_ref)?;
        let seeds = apply_modification(
            &config.seeds,
            &payload.suggestion,
            &acceptance.accepted_removals,
            &acceptance.accepted_promotions,
            acceptance.allow_resize,
            graph.node_count(),
        )?;
        let req = RunRequest {
            graph_ref: config.graph_ref.clone(),
            seeds: SeedSource::Explicit(seeds.seeds().to_vec()),
            model: config.model.clone(),
            runs: config.runs,
            master_seed: config.master_seed,
            m: config.m,
            layout: config.layout.clone(),
        };
        self.prepare_with_parent(&req, Some(seeds), Some(run_id.to_string()))
            .map(Some)
    }

    /// Accepts the whole suggestion of size `n` and runs the child in the
    /// foreground.
    pub fn accept_all(&self, run_id: &str, n: usize) -> Result<Option<RunConfig>> {
        let payload = self.suggestion(run_id, n, None)?;
        let acceptance = Acceptance {
            aggregation_digest: payload.aggregation_digest,
            n,
            m: Some(payload.m),
            accepted_removals: payload
                .suggestion
                .removals
                .iter()
                .map(|c| c.vertex)
                .collect(),
            accepted_promotions: payload
                .suggestion
                .promotions
                .iter()
                .map(|c| c.vertex)
                .collect(),
            allow_resize: false,
        };
        let child = self.prepare_modified_run(run_id, &acceptance)?;
        if let Some(c) = &child {
            self.execute_run(&c.run_id, &|_| {})?;
        }
        Ok(child)
    }

    pub fn compare(&self, run_a: &str, run_b: &str, m: Option<usize>) -> Result<ComparisonReport> {
        let a = self.done_config(run_a)?;
        let b = self.done_config(run_b)?;
        if a.graph_ref != b.graph_ref {
            return Err(AdvisorError::GraphMismatch.into());
        }
        let m = match m {
            Some(m) => m,
            None if a.m == b.m => a.m,
            None => return Err(AdvisorError::GridMismatch.into()),
        };
        if a.layout != b.layout {
            return Err(AdvisorError::GridMismatch.into());
        }
        let grid = self.grid(&a, m)?;
        let comparison = compare_runs(
            &self.store.read_aggregation(run_a)?,
            &self.store.read_aggregation(run_b)?,
            &grid,
        )?;
        Ok(ComparisonReport {
            schema_version: SCHEMA_VERSION,
            run_a: run_a.into(),
            run_b: run_b.into(),
            m,
            comparison,
        })
    }
}
