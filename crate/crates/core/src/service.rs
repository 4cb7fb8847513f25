//! HTTP API over a [`Workbench`].
//!
//! | Method | Route | Body / query | Response |
//! |---|---|---|---|
//! | POST | `/api/datasets` | raw edge list; `?name=&directedness=` | manifest |
//! | GET | `/api/datasets/{ref}` | | manifest |
//! | GET | `/api/algorithms` | | registered seed algorithms |
//! | GET | `/api/runs` | | run records |
//! | POST | `/api/runs` | run request JSON; `?wait=true` | run record |
//! | GET | `/api/runs/{id}` | | run record |
//! | GET | `/api/runs/{id}/matrices` | `?step=&m=&mode=` | matrices payload |
//! | GET | `/api/runs/{id}/detail` | `?row=&col=&rows=&cols=&step=&m=` | detail bundle |
//! | GET | `/api/runs/{id}/suggestion` | `?n=&m=` | suggestion payload |
//! | POST | `/api/runs/{id}/modify` | acceptance JSON; `?wait=true` | child run record or `null` |
//! | GET | `/api/compare` | `?a=&b=&m=` | comparison report |
//! | GET | `/api/runs/{id}/progress` | | `text/event-stream` of progress events |

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

use crate::advisor::DEFAULT_SUGGESTION_SIZE;
use crate::config::ServiceConfig;
use crate::graph::Directedness;
use crate::grid::{CellRect, MatrixMode};
use crate::store::{RunRecord, RunStatus};
use crate::workbench::{Acceptance, RunRequest, Workbench, WorkbenchError};

/// One entry of a run's progress stream. The last event of a stream is
/// terminal: it carries the aggregated spread mean, or the failure message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressEvent {
    pub completed: usize,
    pub total: usize,
    pub partial_spread_mean: f64,
    pub terminal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Channel {
    events: Mutex<Vec<ProgressEvent>>,
    tx: watch::Sender<usize>,
}

impl Channel {
    fn publish(&self, event: ProgressEvent) {
        let mut events = self.events.lock().unwrap();
        events.push(event);
        self.tx.send_replace(events.len());
    }

    fn finished(&self) -> bool {
        self.events
            .lock()
            .unwrap()
            .last()
            .is_some_and(|e| e.terminal)
    }
}

/// Multi-subscriber progress channels for executing runs.
#[derive(Default)]
pub struct ProgressHub {
    channels: Mutex<HashMap<String, Arc<Channel>>>,
}

impl ProgressHub {
    /// Opens a channel for `run_id`; `None` when the run is already executing.
    fn start(&self, run_id: &str) -> Option<Arc<Channel>> {
        let mut map = self.channels.lock().unwrap();
        if map.get(run_id).is_some_and(|c| !c.finished()) {
            return None;
        }
        let channel = Arc::new(Channel {
            events: Mutex::default(),
            tx: watch::channel(0).0,
        });
        map.insert(run_id.to_string(), Arc::clone(&channel));
        Some(channel)
    }

    fn get(&self, run_id: &str) -> Option<Arc<Channel>> {
        self.channels.lock().unwrap().get(run_id).cloned()
    }
}

#[derive(Clone)]
pub struct AppState {
    pub workbench: Arc<Workbench>,
    pub hub: Arc<ProgressHub>,
}

impl AppState {
    pub fn new(workbench: Arc<Workbench>) -> Self {
        AppState {
            workbench,
            hub: Arc::default(),
        }
    }
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<WorkbenchError> for ApiError {
    fn from(e: WorkbenchError) -> Self {
        let status = match &e {
            WorkbenchError::UnknownDataset(_) | WorkbenchError::UnknownRun(_) => {
                StatusCode::NOT_FOUND
            }
            WorkbenchError::NotDone(_) | WorkbenchError::Stale { .. } => StatusCode::CONFLICT,
            e if e.is_client_error() => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, WorkbenchError> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: e.to_string(),
        }),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/datasets", post(post_dataset))
        .route("/api/datasets/{graph_ref}", get(get_dataset))
        .route("/api/algorithms", get(get_algorithms))
        .route("/api/runs", get(list_runs).post(post_run))
        .route("/api/runs/{id}", get(get_run))
        .route("/api/runs/{id}/matrices", get(get_matrices))
        .route("/api/runs/{id}/detail", get(get_detail))
        .route("/api/runs/{id}/suggestion", get(get_suggestion))
        .route("/api/runs/{id}/modify", post(post_modify))
        .route("/api/runs/{id}/progress", get(get_progress))
        .route("/api/compare", get(get_compare))
        .with_state(state)
}

/// Binds and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let workbench = Workbench::open(&config.data_dir, config.workers)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let app = router(AppState::new(Arc::new(workbench)));
    let listener = tokio::net::TcpListener::bind((config.host.as_str(), config.port)).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %config.data_dir.display(), "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Deserialize)]
struct DatasetQuery {
    name: Option<String>,
    directedness: Option<String>,
}

async fn post_dataset(
    State(state): State<AppState>,
    Query(q): Query<DatasetQuery>,
    body: Bytes,
) -> Result<(StatusCode, Json<crate::store::Manifest>), ApiError> {
    let directedness: Directedness = q
        .directedness
        .as_deref()
        .unwrap_or("directed")
        .parse()
        .map_err(ApiError::bad_request)?;
    let name = q.name.unwrap_or_else(|| "dataset".into());
    let wb = state.workbench;
    let manifest = blocking(move || wb.ingest_dataset(&name, &body, directedness)).await?;
    Ok((StatusCode::CREATED, Json(manifest)))
}

async fn get_dataset(
    State(state): State<AppState>,
    Path(graph_ref): Path<String>,
) -> ApiResult<crate::store::Manifest> {
    let wb = state.workbench;
    blocking(move || wb.manifest(&graph_ref)).await.map(Json)
}

#[derive(Serialize)]
struct AlgorithmInfo {
    name: String,
    description: String,
}

async fn get_algorithms(State(state): State<AppState>) -> Json<Vec<AlgorithmInfo>> {
    let list = state
        .workbench
        .registry()
        .list()
        .into_iter()
        .map(|(name, description)| AlgorithmInfo {
            name: name.into(),
            description: description.into(),
        })
        .collect();
    Json(list)
}

async fn list_runs(State(state): State<AppState>) -> ApiResult<Vec<RunRecord>> {
    let wb = state.workbench;
    blocking(move || {
        wb.store()
            .list_runs()?
            .iter()
            .map(|id| wb.record(id))
            .collect()
    })
    .await
    .map(Json)
}

#[derive(Deserialize, Default)]
struct WaitQuery {
    #[serde(default)]
    wait: bool,
}

/// Starts execution of a prepared run in the background unless it is
/// already done or executing.
fn launch(state: &AppState, run_id: &str) -> Option<tokio::task::JoinHandle<()>> {
    let channel = state.hub.start(run_id)?;
    let wb = Arc::clone(&state.workbench);
    let id = run_id.to_string();
    Some(tokio::task::spawn_blocking(move || {
        let runs = wb.record(&id).map(|r| r.config.runs).unwrap_or(0);
        let result = wb.execute_run(&id, &|p| {
            // the last event waits for the aggregation
            if p.completed < p.total {
                channel.publish(ProgressEvent {
                    completed: p.completed,
                    total: p.total,
                    partial_spread_mean: p.partial_spread_mean,
                    terminal: false,
                    error: None,
                });
            }
        });
        let terminal = match result {
            Ok(agg) => ProgressEvent {
                completed: runs,
                total: runs,
                partial_spread_mean: agg.spread_mean,
                terminal: true,
                error: None,
            },
            Err(e) => {
                tracing::warn!(run = %id, error = %e, "run failed");
                ProgressEvent {
                    completed: channel.events.lock().unwrap().len(),
                    total: runs,
                    partial_spread_mean: f64::NAN,
                    terminal: true,
                    error: Some(e.to_string()),
                }
            }
        };
        channel.publish(terminal);
    }))
}

async fn start_and_report(
    state: &AppState,
    run_id: String,
    wait: bool,
) -> Result<(StatusCode, Json<RunRecord>), ApiError> {
    let wb = Arc::clone(&state.workbench);
    let id = run_id.clone();
    let record = blocking(move || wb.record(&id)).await?;
    if record.status != RunStatus::Done {
        if let Some(handle) = launch(state, &run_id) {
            if wait {
                let _ = handle.await;
            }
        }
    }
    let wb = Arc::clone(&state.workbench);
    let record = blocking(move || wb.record(&run_id)).await?;
    let code = if record.status == RunStatus::Done {
        StatusCode::OK
    } else {
        StatusCode::ACCEPTED
    };
    Ok((code, Json(record)))
}

async fn post_run(
    State(state): State<AppState>,
    Query(q): Query<WaitQuery>,
    Json(req): Json<RunRequest>,
) -> Result<(StatusCode, Json<RunRecord>), ApiError> {
    let wb = Arc::clone(&state.workbench);
    let config = blocking(move || wb.prepare_run(&req)).await?;
    start_and_report(&state, config.run_id, q.wait).await
}

async fn get_run(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<RunRecord> {
    let wb = state.workbench;
    blocking(move || wb.record(&id)).await.map(Json)
}

#[derive(Deserialize)]
struct MatricesQuery {
    #[serde(default)]
    step: usize,
    m: Option<usize>,
    #[serde(default)]
    mode: MatrixMode,
}

async fn get_matrices(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<MatricesQuery>,
) -> Result<Response, ApiError> {
    let wb = state.workbench;
    let payload = blocking(move || wb.matrices(&id, q.step, q.m, q.mode)).await?;
    Ok(Json(&*payload).into_response())
}

#[derive(Deserialize)]
struct DetailQuery {
    #[serde(default)]
    row: usize,
    #[serde(default)]
    col: usize,
    rows: Option<usize>,
    cols: Option<usize>,
    #[serde(default)]
    step: usize,
    m: Option<usize>,
}

async fn get_detail(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<DetailQuery>,
) -> ApiResult<crate::grid::DetailBundle> {
    let wb = state.workbench;
    let rect = CellRect {
        row: q.row,
        col: q.col,
        rows: q.rows.unwrap_or(1),
        cols: q.cols.unwrap_or(1),
    };
    blocking(move || wb.detail(&id, rect, q.step, q.m))
        .await
        .map(Json)
}

#[derive(Deserialize)]
struct SuggestionQuery {
    n: Option<usize>,
    m: Option<usize>,
}

async fn get_suggestion(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SuggestionQuery>,
) -> ApiResult<crate::workbench::SuggestionPayload> {
    let wb = state.workbench;
    let n = q.n.unwrap_or(DEFAULT_SUGGESTION_SIZE);
    blocking(move || wb.suggestion(&id, n, q.m)).await.map(Json)
}

async fn post_modify(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<WaitQuery>,
    Json(acceptance): Json<Acceptance>,
) -> Result<Response, ApiError> {
    let wb = Arc::clone(&state.workbench);
    let child = blocking(move || wb.prepare_modified_run(&id, &acceptance)).await?;
    match child {
        None => Ok((StatusCode::OK, Json(serde_json::Value::Null)).into_response()),
        Some(config) => Ok(start_and_report(&state, config.run_id, q.wait)
            .await?
            .into_response()),
    }
}

#[derive(Deserialize)]
struct CompareQuery {
    a: String,
    b: String,
    m: Option<usize>,
}

async fn get_compare(
    State(state): State<AppState>,
    Query(q): Query<CompareQuery>,
) -> ApiResult<crate::workbench::ComparisonReport> {
    let wb = state.workbench;
    blocking(move || wb.compare(&q.a, &q.b, q.m))
        .await
        .map(Json)
}

async fn get_progress(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let wb = Arc::clone(&state.workbench);
    let run_id = id.clone();
    let record = blocking(move || wb.record(&run_id)).await?;
    let source = match (record.status, state.hub.get(&id)) {
        (RunStatus::Done, _) => {
            let wb = Arc::clone(&state.workbench);
            let agg = blocking(move || wb.aggregation(&id)).await?;
            Source::Single(ProgressEvent {
                completed: record.config.runs,
                total: record.config.runs,
                partial_spread_mean: agg.spread_mean,
                terminal: true,
                error: None,
            })
        }
        (_, Some(channel)) => Source::Live(channel),
        (status, None) => Source::Single(ProgressEvent {
            completed: 0,
            total: record.config.runs,
            partial_spread_mean: f64::NAN,
            terminal: true,
            error: Some(match status {
                RunStatus::Failed => record.error.unwrap_or_else(|| "run failed".into()),
                _ => "run is not executing".into(),
            }),
        }),
    };
    Ok(Sse::new(event_stream(source)).keep_alive(KeepAlive::default()))
}

enum Source {
    Single(ProgressEvent),
    Live(Arc<Channel>),
}

fn to_sse(event: &ProgressEvent) -> Result<Event, Infallible> {
    let name = if event.terminal { "done" } else { "progress" };
    Ok(Event::default()
        .event(name)
        .json_data(event)
        .expect("progress event serializes"))
}

fn event_stream(source: Source) -> impl Stream<Item = Result<Event, Infallible>> {
    let channel = match source {
        Source::Single(event) => {
            let c = Channel {
                events: Mutex::new(vec![event]),
                tx: watch::channel(1).0,
            };
            Arc::new(c)
        }
        Source::Live(c) => c,
    };
    let rx = channel.tx.subscribe();
    futures::stream::unfold(
        (channel, rx, 0usize),
        |(channel, mut rx, next)| async move {
            loop {
                {
                    let events = channel.events.lock().unwrap();
                    if let Some(e) = events.get(next) {
                        let out = to_sse(e);
                        drop(events);
                        return Some((out, (channel, rx, next + 1)));
                    }
                    if events.last().is_some_and(|e| e.terminal) {
                        return None;
                    }
                }
                if rx.changed().await.is_err() {
                    return None;
                }
            }
        },
    )
}
