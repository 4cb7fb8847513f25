//! On-disk run store.
//!
//! ```text
//! <root>/
//!   datasets/<graph_ref>/
//!     manifest.json            dataset name, counts, file names
//!     source.txt               the edge list exactly as ingested
//!     id_map.json              external label of every dense id
//!     layouts/fd-<iterations>-<seed>.json
//!   runs/<run_id>/
//!     run.json                 configuration, including the seed set
//!     aggregation.json         merged statistics
//!     traces.jsonl             one diffusion trace per line, by run index
//!     status.json              status and timestamps
//! ```
//!
//! Every file except `status.json` is a pure function of the inputs, so two
//! stores fed the same inputs hold byte-identical copies of them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion::{AggregatedDiffusion, DiffusionRun, SeedSet};
use crate::graph::{BuildReport, Directedness};
use crate::layout::Layout;
use crate::prob::ProbabilityModel;
use crate::seeds::AlgorithmSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: schema version {found} is not supported (expected {SCHEMA_VERSION})", path.display())]
    Schema { path: PathBuf, found: u32 },
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn short_hash(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub graph_ref: String,
    pub name: String,
    pub directedness: Directedness,
    pub node_count: usize,
    pub arc_count: usize,
    pub collapsed_duplicates: usize,
    pub dropped_self_loops: usize,
    pub edge_list: String,
    pub id_map: String,
}

impl Manifest {
    pub fn new(
        graph_ref: String,
        name: String,
        directedness: Directedness,
        node_count: usize,
        arc_count: usize,
        report: BuildReport,
    ) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            graph_ref,
            name,
            directedness,
            node_count,
            arc_count,
            collapsed_duplicates: report.collapsed_duplicates,
            dropped_self_loops: report.dropped_self_loops,
            edge_list: "source.txt".into(),
            id_map: "id_map.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayoutRef {
    pub iterations: usize,
    pub rng_seed: u64,
}

impl LayoutRef {
    pub fn file_name(&self) -> String {
        format!("fd-{}-{}.json", self.iterations, self.rng_seed)
    }
}

impl Default for LayoutRef {
    fn default() -> Self {
        LayoutRef {
            iterations: crate::layout::DEFAULT_ITERATIONS,
            rng_seed: 0,
        }
    }
}

/// Everything that determines a run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub run_id: String,
    pub graph_ref: String,
    pub model: ProbabilityModel,
    pub algorithm: Option<AlgorithmSpec>,
    pub seeds: SeedSet,
    pub runs: usize,
    pub master_seed: u64,
    pub m: usize,
    pub layout: LayoutRef,
    pub parent_run_id: Option<String>,
}

impl RunConfig {
    /// Content-derived id: hash of the configuration with an empty id.
    pub fn derive_id(&self) -> String {
        let mut blank = self.clone();
        blank.run_id = String::new();
        short_hash(&serde_json::to_vec(&blank).expect("config serializes"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusFile {
    pub status: RunStatus,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub error: Option<String>,
}

/// A run's configuration together with its current status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub config: RunConfig,
    pub status: RunStatus,
    pub created_at: DateTime<Utc>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for sub in ["datasets", "runs"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir, source })?;
        }
        Ok(RunStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset_dir(&self, graph_ref: &str) -> PathBuf {
        self.root.join("datasets").join(graph_ref)
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join("runs").join(run_id)
    }

    pub fn has_dataset(&self, graph_ref: &str) -> bool {
        self.dataset_dir(graph_ref).join("manifest.json").is_file()
    }

    pub fn has_run(&self, run_id: &str) -> bool {
        self.run_dir(run_id).join("run.json").is_file()
    }

    pub fn write_dataset(
        &self,
        manifest: &Manifest,
        source: &[u8],
        labels: &[u64],
    ) -> Result<(), StoreError> {
        let dir = self.dataset_dir(&manifest.graph_ref);
        mkdir(&dir)?;
        write_atomic(&dir.join(&manifest.edge_list), source)?;
        write_json(&dir.join(&manifest.id_map), &labels)?;
        write_json(&dir.join("manifest.json"), manifest)
    }

    pub fn read_manifest(&self, graph_ref: &str) -> Result<Manifest, StoreError> {
        let path = self.dataset_dir(graph_ref).join("manifest.json");
        let m: Manifest = read_json(&path)?;
        check_schema(&path, m.schema_version)?;
        Ok(m)
    }

    pub fn source_path(&self, manifest: &Manifest) -> PathBuf {
        self.dataset_dir(&manifest.graph_ref)
            .join(&manifest.edge_list)
    }

    pub fn layout_path(&self, graph_ref: &str, layout: &LayoutRef) -> PathBuf {
        self.dataset_dir(graph_ref)
            .join("layouts")
            .join(layout.file_name())
    }

    pub fn read_layout(
        &self,
        graph_ref: &str,
        layout: &LayoutRef,
    ) -> Result<Option<Layout>, StoreError> {
        let path = self.layout_path(graph_ref, layout);
        if !path.is_file() {
            return Ok(None);
        }
        let v: Versioned<Layout> = read_json(&path)?;
        check_schema(&path, v.schema_version)?;
        Ok(Some(v.body))
    }

    pub fn write_layout(
        &self,
        graph_ref: &str,
        key: &LayoutRef,
        layout: &Layout,
    ) -> Result<(), StoreError> {
        let path = self.layout_path(graph_ref, key);
        mkdir(path.parent().expect("layout path has a parent"))?;
        write_json(
            &path,
            &Versioned {
                schema_version: SCHEMA_VERSION,
                body: layout,
            },
        )
    }

    /// Creates the run directory with `run.json` and a pending status, unless
    /// it already exists.
    pub fn create_run(&self, config: &RunConfig) -> Result<bool, StoreError> {
        if self.has_run(&config.run_id) {
            return Ok(false);
        }
        let dir = self.run_dir(&config.run_id);
        mkdir(&dir)?;
        let now = Utc::now();
        write_json(
            &dir.join("status.json"),
            &StatusFile {
                status: RunStatus::Pending,
                created_at: now,
                updated_at: now,
                error: None,
            },
        )?;
        write_json(&dir.join("run.json"), config)?;
        Ok(true)
    }

    pub fn read_config(&self, run_id: &str) -> Result<RunConfig, StoreError> {
        let path = self.run_dir(run_id).join("run.json");
        let c: RunConfig = read_json(&path)?;
        check_schema(&path, c.schema_version)?;
        Ok(c)
    }

    pub fn read_status(&self, run_id: &str) -> Result<StatusFile, StoreError> {
        read_json(&self.run_dir(run_id).join("status.json"))
    }

    pub fn set_status(
        &self,
        run_id: &str,
        status: RunStatus,
        error: Option<String>,
    ) -> Result<(), StoreError> {
        let path = self.run_dir(run_id).join("status.json");
        let mut s = self.read_status(run_id)?;
        s.status = status;
        s.updated_at = Utc::now();
        s.error = error;
        write_json(&path, &s)
    }

    pub fn read_record(&self, run_id: &str) -> Result<RunRecord, StoreError> {
        let config = self.read_config(run_id)?;
        let status = self.read_status(run_id)?;
        Ok(RunRecord {
            config,
            status: status.status,
            created_at: status.created_at,
            error: status.error,
        })
    }

    pub fn write_results(
        &self,
        run_id: &str,
        agg: &AggregatedDiffusion,
        traces: &[DiffusionRun],
    ) -> Result<(), StoreError> {
        let dir = self.run_dir(run_id);
        let mut lines = Vec::new();
        for t in traces {
            serde_json::to_writer(&mut lines, t).map_err(|source| StoreError::Json {
                path: dir.join("traces.jsonl"),
                source,
            })?;
            lines.push(b'\n');
        }
        write_atomic(&dir.join("traces.jsonl"), &lines)?;
        write_json(
            &dir.join("aggregation.json"),
            &Versioned {
                schema_version: SCHEMA_VERSION,
                body: agg,
            },
        )
    }

    pub fn read_aggregation(&self, run_id: &str) -> Result<AggregatedDiffusion, StoreError> {
        let path = self.run_dir(run_id).join("aggregation.json");
        let v: Versioned<AggregatedDiffusion> = read_json(&path)?;
        check_schema(&path, v.schema_version)?;
        Ok(v.body)
    }

    /// Digest of the stored aggregation bytes.
    pub fn aggregation_digest(&self, run_id: &str) -> Result<String, StoreError> {
        let path = self.run_dir(run_id).join("aggregation.json");
        let bytes = fs::read(&path).map_err(|source| StoreError::Io { path, source })?;
        Ok(short_hash(&bytes))
    }

    /// Trace of run `index`, read from the traces file.
    pub fn read_trace(
        &self,
        run_id: &str,
        index: usize,
    ) -> Result<Option<DiffusionRun>, StoreError> {
        let path = self.run_dir(run_id).join("traces.jsonl");
        let text = fs::read_to_string(&path).map_err(|source| StoreError::Io {
            path: path.clone(),
            source,
        })?;
        text.lines()
            .nth(index)
            .map(|line| {
                serde_json::from_str(line).map_err(|source| StoreError::Json {
                    path: path.clone(),
                    source,
                })
            })
            .transpose()
    }

    pub fn list_runs(&self) -> Result<Vec<String>, StoreError> {
        let dir = self.root.join("runs");
        let mut ids: Vec<String> = fs::read_dir(&dir)
            .map_err(|source| StoreError::Io { path: dir, source })?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join("run.json").is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        ids.sort();
        Ok(ids)
    }
}

fn check_schema(path: &Path, found: u32) -> Result<(), StoreError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(StoreError::Schema {
            path: path.to_path_buf(),
            found,
        })
    }
}

fn mkdir(dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(|source| StoreError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension(format!(
        "tmp-{}-{:?}",
        std::process::id(),
        std::thread::current().id()
    ));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let bytes = fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })
}
