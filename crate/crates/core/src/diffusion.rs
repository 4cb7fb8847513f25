//! Independent Cascade simulation and Monte-Carlo spread estimation.
//!
//! A single diffusion is recorded as a [`DiffusionRun`]: the vertices that
//! became active at each step plus the arcs whose activation attempt
//! succeeded into a vertex activated at that step. Repeating the diffusion
//! with independent random streams and merging the traces yields an
//! [`AggregatedDiffusion`], whose `spread_mean` estimates the expected number
//! of vertices active when the process stops.
//!
//! Every run owns a ChaCha8 stream seeded from `(master_seed, run_index)`,
//! so the aggregate does not depend on how runs are scheduled across threads.

use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, VertexId};
use crate::prob::WeightedGraph;

pub const DEFAULT_RUNS: usize = 100;
/// Largest arc count accepted by [`exact_spread_small`].
pub const MAX_EXACT_ARCS: usize = 20;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DiffusionError {
    #[error("seed {0} is not a vertex of a graph with {1} vertices")]
    InvalidSeed(VertexId, usize),
    #[error("seed {0} listed twice")]
    DuplicateSeed(VertexId),
    #[error("seed set of size {size} exceeds k = {k}")]
    TooManySeeds { size: usize, k: usize },
    #[error("k = {k} must satisfy 0 < k <= {node_count}")]
    InvalidK { k: usize, node_count: usize },
    #[error("at least one run is required")]
    NoRuns,
    #[error("exact enumeration supports at most {MAX_EXACT_ARCS} arcs, graph has {0}")]
    TooLargeForEnumeration(usize),
}

/// Vertices active at step 0, with the size budget and where they came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    seeds: Vec<VertexId>,
    k: usize,
    origin: String,
}

impl SeedSet {
    /// Validates and sorts `seeds`. Duplicates are an error.
    pub fn new(
        mut seeds: Vec<VertexId>,
        k: usize,
        origin: impl Into<String>,
        node_count: usize,
    ) -> Result<Self, DiffusionError> {
        if k == 0 || k > node_count {
            return Err(DiffusionError::InvalidK { k, node_count });
        }
        if seeds.len() > k {
            return Err(DiffusionError::TooManySeeds {
                size: seeds.len(),
                k,
            });
        }
        seeds.sort_unstable();
        if let Some(&s) = seeds.iter().find(|&&s| s as usize >= node_count) {
            return Err(DiffusionError::InvalidSeed(s, node_count));
        }
        if let Some(w) = seeds.windows(2).find(|w| w[0] == w[1]) {
            return Err(DiffusionError::DuplicateSeed(w[0]));
        }
        Ok(SeedSet {
            seeds,
            k,
            origin: origin.into(),
        })
    }

    /// Seed set whose budget equals its size.
    pub fn exact(
        seeds: Vec<VertexId>,
        origin: impl Into<String>,
        node_count: usize,
    ) -> Result<Self, DiffusionError> {
        let k = seeds.len();
        Self::new(seeds, k, origin, node_count)
    }

    pub fn seeds(&self) -> &[VertexId] {
        &self.seeds
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.seeds.binary_search(&v).is_ok()
    }

    /// Checks the set against a (possibly different) graph.
    pub fn validate_for(&self, node_count: usize) -> Result<(), DiffusionError> {
        Self::new(self.seeds.clone(), self.k, self.origin.clone(), node_count).map(|_| ())
    }
}

/// What happened during one step of a diffusion.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Step {
    pub newly_active: Vec<VertexId>,
    pub activated_arcs: Vec<(VertexId, VertexId)>,
}

/// Trace of a single stochastic diffusion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffusionRun {
    pub run_index: u64,
    pub rng_seed: u64,
    pub steps: Vec<Step>,
}

impl DiffusionRun {
    /// Number of vertices ever activated.
    pub fn spread(&self) -> usize {
        self.steps.iter().map(|s| s.newly_active.len()).sum()
    }

    /// Step at which each vertex became active.
    pub fn activation_steps(&self, node_count: usize) -> Vec<Option<u32>> {
        let mut at = vec![None; node_count];
        for (j, step) in self.steps.iter().enumerate() {
            for &v in &step.newly_active {
                at[v as usize] = Some(j as u32);
            }
        }
        at
    }
}

/// A stochastic diffusion process driven step by step.
///
/// `initialize` returns the state with the seeds active (step 0);
/// `step` advances one step and reports what changed; the engine stops once
/// `halted` is true.
pub trait DiffusionModel: Sync {
    type State: Send;

    fn initialize(&self, seeds: &SeedSet) -> Self::State;
    fn step(&self, state: &mut Self::State, rng: &mut ChaCha8Rng) -> Step;
    fn halted(&self, state: &Self::State) -> bool;
}

/// The Independent Cascade model.
#[derive(Debug, Clone, Copy)]
pub struct IndependentCascade<'a> {
    wg: &'a WeightedGraph,
}

impl<'a> IndependentCascade<'a> {
    pub fn new(wg: &'a WeightedGraph) -> Self {
        IndependentCascade { wg }
    }
}

pub struct CascadeState {
    activated_at: Vec<u32>,
    frontier: Vec<VertexId>,
    step: u32,
}

const INACTIVE: u32 = u32::MAX;

impl DiffusionModel for IndependentCascade<'_> {
    type State = CascadeState;

    fn initialize(&self, seeds: &SeedSet) -> CascadeState {
        let mut activated_at = vec![INACTIVE; self.wg.graph().node_count()];
        for &s in seeds.seeds() {
            activated_at[s as usize] = 0;
        }
        CascadeState {
            activated_at,
            frontier: seeds.seeds().to_vec(),
            step: 0,
        }
    }

    fn step(&self, state: &mut CascadeState, rng: &mut ChaCha8Rng) -> Step {
        let current = state.step + 1;
        let mut out = Step::default();
        // frontier is sorted and out-arcs are ordered by target, so attempts
        // happen in ascending (source, target) order
        for &u in &state.frontier {
            for (_, v, p) in self.wg.out_arcs(u) {
                let at = state.activated_at[v as usize];
                // a vertex activated earlier in this same step is still a
                // valid target for the other same-step attempts
                if at != INACTIVE && at != current {
                    continue;
                }
                if rng.random::<f64>() < p {
                    if at == INACTIVE {
                        state.activated_at[v as usize] = current;
                        out.newly_active.push(v);
                    }
                    out.activated_arcs.push((u, v));
                }
            }
        }
        out.newly_active.sort_unstable();
        state.frontier.clone_from(&out.newly_active);
        state.step = current;
        out
    }

    fn halted(&self, state: &CascadeState) -> bool {
        state.frontier.is_empty()
    }
}

/// Seed of the random stream used by run `run_index` (SplitMix64 finalizer
/// over both inputs).
pub fn run_seed(master_seed: u64, run_index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(master_seed) ^ run_index)
}

/// Runs `model` from `seeds` until it halts.
pub fn simulate<M: DiffusionModel>(
    model: &M,
    seeds: &SeedSet,
    rng_seed: u64,
    run_index: u64,
) -> DiffusionRun {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut state = model.initialize(seeds);
    let mut steps = vec![Step {
        newly_active: seeds.seeds().to_vec(),
        activated_arcs: Vec::new(),
    }];
    while !model.halted(&state) {
        let step = model.step(&mut state, &mut rng);
        if step.newly_active.is_empty() {
            break;
        }
        steps.push(step);
    }
    DiffusionRun {
        run_index,
        rng_seed,
        steps,
    }
}

/// One Independent Cascade diffusion.
pub fn simulate_ic(wg: &WeightedGraph, seeds: &SeedSet, rng_seed: u64) -> DiffusionRun {
    simulate(&IndependentCascade::new(wg), seeds, rng_seed, 0)
}

/// Per-vertex activation statistics merged over many runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedDiffusion {
    pub runs: usize,
    pub node_count: usize,
    /// Runs in which each vertex was ever activated.
    pub activation_counts: Vec<u32>,
    /// For each step, `(vertex, runs in which it activated at exactly that step)`,
    /// sorted by vertex.
    pub step_counts: Vec<Vec<(VertexId, u32)>>,
    pub mean_new_per_step: Vec<f64>,
    pub mean_cumulative_per_step: Vec<f64>,
    pub spread_mean: f64,
    pub spread_std: f64,
}

impl AggregatedDiffusion {
    /// Merges traces in slice order.
    pub fn from_runs(node_count: usize, runs: &[DiffusionRun]) -> Result<Self, DiffusionError> {
        if runs.is_empty() {
            return Err(DiffusionError::NoRuns);
        }
        let r = runs.len();
        let max_steps = runs.iter().map(|run| run.steps.len()).max().unwrap_or(0);
        let mut activation_counts = vec![0u32; node_count];
        let mut dense_steps: Vec<Vec<u32>> = Vec::with_capacity(max_steps);
        let mut new_totals = vec![0u64; max_steps];
        for run in runs {
            for (j, step) in run.steps.iter().enumerate() {
                if dense_steps.len() <= j {
                    dense_steps.push(vec![0; node_count]);
                }
                new_totals[j] += step.newly_active.len() as u64;
                for &v in &step.newly_active {
                    activation_counts[v as usize] += 1;
                    dense_steps[j][v as usize] += 1;
                }
            }
        }
        let step_counts = dense_steps
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .enumerate()
                    .filter(|&(_, c)| c > 0)
                    .map(|(v, c)| (v as VertexId, c))
                    .collect()
            })
            .collect();

        let rf = r as f64;
        let mean_new_per_step: Vec<f64> = new_totals.iter().map(|&t| t as f64 / rf).collect();
        let mut mean_cumulative_per_step = Vec::with_capacity(max_steps);
        let mut running = 0u64;
        for &t in &new_totals {
            running += t;
            mean_cumulative_per_step.push(running as f64 / rf);
        }
        let spread_mean = activation_counts.iter().map(|&c| c as f64 / rf).sum();
        let spreads: Vec<f64> = runs.iter().map(|run| run.spread() as f64).collect();
        let spread_std = sample_std(&spreads);

        Ok(AggregatedDiffusion {
            runs: r,
            node_count,
            activation_counts,
            step_counts,
            mean_new_per_step,
            mean_cumulative_per_step,
            spread_mean,
            spread_std,
        })
    }

    /// Number of recorded steps (step 0 included).
    pub fn step_count(&self) -> usize {
        self.mean_new_per_step.len()
    }

    pub fn final_step(&self) -> usize {
        self.step_count().saturating_sub(1)
    }

    pub fn activation_freq(&self, v: VertexId) -> f64 {
        self.activation_counts[v as usize] as f64 / self.runs as f64
    }

    /// Fraction of runs in which `v` activated at exactly `step`.
    pub fn step_freq(&self, v: VertexId, step: usize) -> f64 {
        self.step_counts
            .get(step)
            .and_then(|row| {
                row.binary_search_by_key(&v, |&(u, _)| u)
                    .ok()
                    .map(|i| row[i].1)
            })
            .map_or(0.0, |c| c as f64 / self.runs as f64)
    }

    /// Standard error of `spread_mean`.
    pub fn spread_stderr(&self) -> f64 {
        self.spread_std / (self.runs as f64).sqrt()
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

/// Snapshot handed to progress observers while runs complete.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub completed: usize,
    pub total: usize,
    pub partial_spread_mean: f64,
}

/// Executes `runs` Independent Cascade diffusions and returns the traces in
/// run-index order.
pub fn simulate_runs(
    wg: &WeightedGraph,
    seeds: &SeedSet,
    runs: usize,
    master_seed: u64,
    on_progress: &(dyn Fn(Progress) + Sync),
) -> Result<Vec<DiffusionRun>, DiffusionError> {
    if runs == 0 {
        return Err(DiffusionError::NoRuns);
    }
    seeds.validate_for(wg.graph().node_count())?;
    let model = IndependentCascade::new(wg);
    let tally = Mutex::new((0usize, 0u64));
    let traces = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let run = simulate(&model, seeds, run_seed(master_seed, i), i);
            let mut t = tally.lock().unwrap();
            t.0 += 1;
            t.1 += run.spread() as u64;
            on_progress(Progress {
                completed: t.0,
                total: runs,
                partial_spread_mean: t.1 as f64 / t.0 as f64,
            });
            run
        })
        .collect();
    Ok(traces)
}

/// Monte-Carlo estimate of the spread of `seeds` from `runs` independent runs.
pub fn estimate_spread(
    wg: &WeightedGraph,
    seeds: &SeedSet,
    runs: usize,
    master_seed: u64,
) -> Result<AggregatedDiffusion, DiffusionError> {
    let traces = simulate_runs(wg, seeds, runs, master_seed, &|_| {})?;
    AggregatedDiffusion::from_runs(wg.graph().node_count(), &traces)
}

/// Exact expected spread by enumerating every live/blocked outcome of the
/// arcs. Each outcome contributes its probability times the number of
/// vertices reachable from the seeds over live arcs.
pub fn exact_spread_small(wg: &WeightedGraph, seeds: &SeedSet) -> Result<f64, DiffusionError> {
    let graph = wg.graph();
    let m = graph.arc_count();
    if m > MAX_EXACT_ARCS {
        return Err(DiffusionError::TooLargeForEnumeration(m));
    }
    seeds.validate_for(graph.node_count())?;
    let prob = wg.probabilities();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << m) {
        let mut weight = 1.0;
        for (a, &p) in prob.iter().enumerate() {
            weight *= if mask >> a & 1 == 1 { p } else { 1.0 - p };
        }
        if weight == 0.0 {
            continue;
        }
        total += weight * reachable_count(graph, seeds.seeds(), |a| mask >> a & 1 == 1) as f64;
    }
    Ok(total)
}

fn reachable_count(graph: &Graph, seeds: &[VertexId], live: impl Fn(usize) -> bool) -> usize {
    let mut seen = vec![false; graph.node_count()];
    let mut stack: Vec<VertexId> = seeds.to_vec();
    for &s in seeds {
        seen[s as usize] = true;
    }
    let mut count = seeds.len();
    while let Some(u) = stack.pop() {
        for a in graph.out_range(u) {
            let v = graph.arcs()[a].1;
            if live(a) && !seen[v as usize] {
                seen[v as usize] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::prob::ProbabilityModel;

    fn constant(n: usize, arcs: &[(u32, u32)], p: f64) -> WeightedGraph {
        let g = Arc::new(Graph::from_arcs(n, arcs.iter().copied()).unwrap());
        WeightedGraph::assign(g, ProbabilityModel::Constant { p }).unwrap()
    }

    fn seeds(v: &[u32], n: usize) -> SeedSet {
        SeedSet::exact(v.to_vec(), "test", n).unwrap()
    }

    #[test]
    fn seed_set_validation() {
        assert!(SeedSet::new(vec![0, 1], 1, "x", 3).is_err());
        assert!(SeedSet::new(vec![0], 0, "x", 3).is_err());
        assert!(SeedSet::new(vec![0], 4, "x", 3).is_err());
        assert_eq!(
            SeedSet::new(vec![1, 1], 2, "x", 3),
            Err(DiffusionError::DuplicateSeed(1))
        );
        assert_eq!(
            SeedSet::new(vec![5], 1, "x", 3),
            Err(DiffusionError::InvalidSeed(5, 3))
        );
        assert_eq!(
            SeedSet::new(vec![2, 0], 2, "x", 3).unwrap().seeds(),
            &[0, 2]
        );
    }

    #[test]
    fn deterministic_path_cascade() {
        let wg = constant(3, &[(0, 1), (1, 2)], 1.0);
        let run = simulate_ic(&wg, &seeds(&[0], 3), 7);
        let expected = vec![
            Step {
                newly_active: vec![0],
                activated_arcs: vec![],
            },
            Step {
                newly_active: vec![1],
                activated_arcs: vec![(0, 1)],
            },
            Step {
                newly_active: vec![2],
                activated_arcs: vec![(1, 2)],
            },
        ];
        assert_eq!(run.steps, expected);
    }

    #[test]
    fn zero_probability_stops_after_seeds() {
        let wg = constant(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], 0.0);
        let run = simulate_ic(&wg, &seeds(&[1, 3], 4), 1);
        assert_eq!(run.steps.len(), 1);
        assert_eq!(run.steps[0].newly_active, vec![1, 3]);
    }

    #[test]
    fn same_step_successes_are_all_recorded() {
        // 0 and 1 both reach 2 in step 1
        let wg = constant(3, &[(0, 2), (1, 2)], 1.0);
        let run = simulate_ic(&wg, &seeds(&[0, 1], 3), 3);
        assert_eq!(run.steps[1].newly_active, vec![2]);
        assert_eq!(run.steps[1].activated_arcs, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn bernoulli_single_arc() {
        // P(activate) = 0.5; 3 standard errors at R = 10,000 is 0.015
        let wg = constant(2, &[(0, 1)], 0.5);
        let agg = estimate_spread(&wg, &seeds(&[0], 2), 10_000, 11).unwrap();
        assert!(
            (agg.activation_freq(1) - 0.5).abs() <= 0.015,
            "{}",
            agg.activation_freq(1)
        );
    }

    #[test]
    fn all_seeded_spread_is_node_count() {
        let wg = constant(4, &[(0, 1), (1, 2)], 0.3);
        let agg = estimate_spread(&wg, &seeds(&[0, 1, 2, 3], 4), 17, 5).unwrap();
        assert_eq!(agg.spread_mean, 4.0);
        assert_eq!(agg.spread_std, 0.0);
    }

    #[test]
    fn zero_runs_is_an_error() {
        let wg = constant(2, &[(0, 1)], 0.5);
        assert_eq!(
            estimate_spread(&wg, &seeds(&[0], 2), 0, 0),
            Err(DiffusionError::NoRuns)
        );
    }

    #[test]
    fn exact_spread_hand_values() {
        // outcomes of the two arcs: 1 + 0.5 + 0.25
        let path = constant(3, &[(0, 1), (1, 2)], 0.5);
        assert_eq!(exact_spread_small(&path, &seeds(&[0], 3)).unwrap(), 1.75);
        let single = constant(2, &[(0, 1)], 0.3);
        assert!((exact_spread_small(&single, &seeds(&[0], 2)).unwrap() - 1.3).abs() < 1e-12);
        let sure = constant(4, &[(0, 1), (1, 2), (3, 0)], 1.0);
        assert_eq!(exact_spread_small(&sure, &seeds(&[0], 4)).unwrap(), 3.0);
    }

    #[test]
    fn exact_spread_rejects_large_graphs() {
        let arcs: Vec<_> = (0..21).map(|i| (i, i + 1)).collect();
        let wg = constant(22, &arcs, 0.5);
        assert_eq!(
            exact_spread_small(&wg, &seeds(&[0], 22)),
            Err(DiffusionError::TooLargeForEnumeration(21))
        );
    }

    #[test]
    fn step_freq_sums_to_activation_freq() {
        let wg = constant(5, &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)], 0.6);
        let agg = estimate_spread(&wg, &seeds(&[0], 5), 500, 2).unwrap();
        for v in 0..5 {
            let total: f64 = (0..agg.step_count()).map(|j| agg.step_freq(v, j)).sum();
            assert!((total - agg.activation_freq(v)).abs() < 1e-9);
        }
        let last = *agg.mean_cumulative_per_step.last().unwrap();
        assert!((last - agg.spread_mean).abs() < 1e-9);
    }

    #[test]
    fn run_seeds_differ_per_index() {
        let a: Vec<_> = (0..100).map(|i| run_seed(42, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(run_seed(1, 0), run_seed(2, 0));
    }

    #[test]
    fn progress_reports_every_run() {
        let wg = constant(3, &[(0, 1), (1, 2)], 0.5);
        let seen = Mutex::new(Vec::new());
        simulate_runs(&wg, &seeds(&[0], 3), 25, 9, &|p| {
            seen.lock().unwrap().push(p.completed)
        })
        .unwrap();
        assert_eq!(seen.into_inner().unwrap(), (1..=25).collect::<Vec<_>>());
    }
}
