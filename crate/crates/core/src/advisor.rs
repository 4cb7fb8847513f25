//! Seed-set modification suggestions and run comparison.
//!
//! Suggestions move seeds from the region where the diffusion already
//! saturates to the region it reaches least: low-degree seeds in the cells
//! with the highest influence rate are proposed for removal, high-degree
//! non-seeds in the cells with the lowest rate for promotion.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::diffusion::{AggregatedDiffusion, DiffusionError, SeedSet};
use crate::graph::{Graph, VertexId};
use crate::grid::{cell_rates, diffusion_matrix, Cell, Grid, GridError, MatrixMode};

pub const DEFAULT_SUGGESTION_SIZE: usize = 20;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AdvisorError {
    #[error("suggestion size must be at least 1")]
    ZeroCount,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Seeds(#[from] DiffusionError),
    #[error("vertex {0} was not proposed for removal")]
    NotSuggestedRemoval(VertexId),
    #[error("vertex {0} was not proposed for promotion")]
    NotSuggestedPromotion(VertexId),
    #[error("vertex {0} accepted twice")]
    DuplicateAcceptance(VertexId),
    #[error("{removals} removals and {promotions} promotions would change the seed count")]
    Unbalanced { removals: usize, promotions: usize },
    #[error("runs were computed on different graphs")]
    GraphMismatch,
    #[error("runs were binned on different grids")]
    GridMismatch,
    #[error("grid covers {grid} vertices but the run has {run}")]
    SizeMismatch { grid: usize, run: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub vertex: VertexId,
    pub degree: u32,
    pub cell: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRate {
    pub cell: Cell,
    pub rate: f64,
    pub vertices: usize,
}

/// Proposed removals and promotions of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub requested: usize,
    pub removals: Vec<Candidate>,
    pub promotions: Vec<Candidate>,
    /// Cells visited on each side, in the order they were used.
    pub removal_cells: Vec<CellRate>,
    pub promotion_cells: Vec<CellRate>,
    /// Fewer than `requested` candidates were available.
    pub truncated: bool,
}

/// Everything `suggest` reads from a completed run.
#[derive(Debug, Clone, Copy)]
pub struct SuggestInput<'a> {
    pub graph: &'a Graph,
    pub grid: &'a Grid,
    pub agg: &'a AggregatedDiffusion,
    pub seeds: &'a SeedSet,
}

/// Nonempty cells ordered from highest to lowest final influence rate.
/// Equal rates put the more populated cell first, then the lower index.
pub fn ranked_cells(grid: &Grid, agg: &AggregatedDiffusion) -> Result<Vec<CellRate>, GridError> {
    let dm = diffusion_matrix(grid, agg, agg.final_step(), MatrixMode::CumulativeActive)?;
    let rates = cell_rates(grid, &dm)?;
    let mut cells: Vec<CellRate> = grid
        .cells()
        .zip(rates)
        .filter_map(|(cell, rate)| {
            rate.map(|rate| CellRate {
                cell,
                rate,
                vertices: grid.members(cell).len(),
            })
        })
        .collect();
    cells.sort_by(|a, b| {
        b.rate
            .total_cmp(&a.rate)
            .then(b.vertices.cmp(&a.vertices))
            .then(a.cell.cmp(&b.cell))
    });
    Ok(cells)
}

pub fn suggest(input: SuggestInput<'_>, n: usize) -> Result<Suggestion, AdvisorError> {
    if n == 0 {
        return Err(AdvisorError::ZeroCount);
    }
    let SuggestInput {
        graph,
        grid,
        agg,
        seeds,
    } = input;
    if grid.node_count() != agg.node_count || graph.node_count() != agg.node_count {
        return Err(AdvisorError::SizeMismatch {
            grid: grid.node_count(),
            run: agg.node_count,
        });
    }
    let ranked = ranked_cells(grid, agg)?;
    let degree = |v: VertexId| graph.total_degree(v) as u32;

    let removal_pool = |c: &CellRate| {
        let mut v: Vec<VertexId> = grid
            .members(c.cell)
            .iter()
            .copied()
            .filter(|&v| seeds.contains(v))
            .collect();
        v.sort_by_key(|&v| (degree(v), v));
        v
    };
    let promotion_pool = |c: &CellRate| {
        let mut v: Vec<VertexId> = grid
            .members(c.cell)
            .iter()
            .copied()
            .filter(|&v| !seeds.contains(v))
            .collect();
        v.sort_by_key(|&v| (std::cmp::Reverse(degree(v)), v));
        v
    };

    // Removals walk down from the top of the ranking, promotions up from the
    // bottom. Every removal cell must rank at or above every promotion cell.
    let mut removals = Vec::new();
    let mut promotions = Vec::new();
    let mut removal_cells = Vec::new();
    let mut promotion_cells = Vec::new();
    let (mut next_top, mut next_bottom) = (0usize, ranked.len());
    let (mut lowest_removal, mut highest_promotion) = (None::<usize>, None::<usize>);
    loop {
        let mut advanced = false;
        if removals.len() < n
            && next_top < ranked.len()
            && highest_promotion.is_none_or(|p| next_top <= p)
        {
            let c = ranked[next_top];
            let pool = removal_pool(&c);
            if !pool.is_empty() {
                let take = n - removals.len();
                removals.extend(pool.into_iter().take(take).map(|v| Candidate {
                    vertex: v,
                    degree: degree(v),
                    cell: c.cell,
                }));
                removal_cells.push(c);
                lowest_removal = Some(next_top);
            }
            next_top += 1;
            advanced = true;
        }
        if promotions.len() < n && next_bottom > 0 && lowest_removal.is_none_or(|r| next_bottom > r)
        {
            let idx = next_bottom - 1;
            let c = ranked[idx];
            let pool = promotion_pool(&c);
            if !pool.is_empty() {
                let take = n - promotions.len();
                promotions.extend(pool.into_iter().take(take).map(|v| Candidate {
                    vertex: v,
                    degree: degree(v),
                    cell: c.cell,
                }));
                promotion_cells.push(c);
                highest_promotion = Some(idx);
            }
            next_bottom -= 1;
            advanced = true;
        }
        if !advanced {
            break;
        }
    }
    let len = removals.len().min(promotions.len());
    let truncated = len < n;
    removals.truncate(len);
    promotions.truncate(len);
    removal_cells.retain(|c| removals.iter().any(|r| r.cell == c.cell));
    promotion_cells.retain(|c| promotions.iter().any(|p| p.cell == c.cell));
    Ok(Suggestion {
        requested: n,
        removals,
        promotions,
        removal_cells,
        promotion_cells,
        truncated,
    })
}

/// Applies the accepted part of a suggestion, producing a new seed set with
/// origin `manual`. Accepting nothing returns the input unchanged.
pub fn apply_modification(
    seeds: &SeedSet,
    suggestion: &Suggestion,
    accepted_removals: &[VertexId],
    accepted_promotions: &[VertexId],
    allow_resize: bool,
    node_count: usize,
) -> Result<SeedSet, AdvisorError> {
    let removals = unique(accepted_removals)?;
    let promotions = unique(accepted_promotions)?;
    if let Some(&v) = removals
        .iter()
        .find(|&&v| !suggestion.removals.iter().any(|c| c.vertex == v))
    {
        return Err(AdvisorError::NotSuggestedRemoval(v));
    }
    if let Some(&v) = promotions
        .iter()
        .find(|&&v| !suggestion.promotions.iter().any(|c| c.vertex == v))
    {
        return Err(AdvisorError::NotSuggestedPromotion(v));
    }
    if !allow_resize && removals.len() != promotions.len() {
        return Err(AdvisorError::Unbalanced {
            removals: removals.len(),
            promotions: promotions.len(),
        });
    }
    if removals.is_empty() && promotions.is_empty() {
        return Ok(seeds.clone());
    }
    if let Some(&v) = removals.iter().find(|&&v| !seeds.contains(v)) {
        return Err(AdvisorError::NotSuggestedRemoval(v));
    }
    if let Some(&v) = promotions.iter().find(|&&v| seeds.contains(v)) {
        return Err(AdvisorError::DuplicateAcceptance(v));
    }
    let mut next: Vec<VertexId> = seeds
        .seeds()
        .iter()
        .copied()
        .filter(|v| !removals.contains(v))
        .collect();
    next.extend(promotions.iter().copied());
    let k = if allow_resize {
        seeds.k().max(next.len()).max(1)
    } else {
        seeds.k()
    };
    Ok(SeedSet::new(next, k, "manual", node_count)?)
}

fn unique(list: &[VertexId]) -> Result<BTreeSet<VertexId>, AdvisorError> {
    let mut set = BTreeSet::new();
    for &v in list {
        if !set.insert(v) {
            return Err(AdvisorError::DuplicateAcceptance(v));
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadSummary {
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub steps: usize,
}

impl From<&AggregatedDiffusion> for SpreadSummary {
    fn from(agg: &AggregatedDiffusion) -> Self {
        SpreadSummary {
            mean: agg.spread_mean,
            std: agg.spread_std,
            runs: agg.runs,
            steps: agg.step_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDelta {
    pub step: usize,
    pub new_a: f64,
    pub new_b: f64,
    pub cumulative_a: f64,
    pub cumulative_b: f64,
    pub cumulative_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellDelta {
    pub cell: Cell,
    pub rate_a: f64,
    pub rate_b: f64,
    pub delta: f64,
}

/// Side-by-side statistics of two runs over the same graph and grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: SpreadSummary,
    pub b: SpreadSummary,
    /// `b.mean - a.mean`.
    pub spread_delta: f64,
    /// `spread_delta / a.mean`.
    pub relative_change: f64,
    /// Standard error of `spread_delta` for independent runs.
    pub delta_stderr: f64,
    /// `spread_delta / delta_stderr`, 0 when both runs are deterministic.
    pub z_score: f64,
    /// Shorter trend is padded with its final cumulative value.
    pub steps: Vec<StepDelta>,
    pub cells: Vec<CellDelta>,
}

pub fn compare_runs(
    a: &AggregatedDiffusion,
    b: &AggregatedDiffusion,
    grid: &Grid,
) -> Result<Comparison, AdvisorError> {
    if a.node_count != b.node_count {
        return Err(AdvisorError::GraphMismatch);
    }
    if grid.node_count() != a.node_count {
        return Err(AdvisorError::SizeMismatch {
            grid: grid.node_count(),
            run: a.node_count,
        });
    }
    let spread_delta = b.spread_mean - a.spread_mean;
    let delta_stderr = (a.spread_stderr().powi(2) + b.spread_stderr().powi(2)).sqrt();
    let z_score = if delta_stderr > 0.0 {
        spread_delta / delta_stderr
    } else {
        0.0
    };
    let relative_change = if a.spread_mean > 0.0 {
        spread_delta / a.spread_mean
    } else {
        0.0
    };

    let len = a.step_count().max(b.step_count());
    let pad = |xs: &[f64], j: usize, hold: bool| match xs.get(j) {
        Some(&x) => x,
        None if hold => xs.last().copied().unwrap_or(0.0),
        None => 0.0,
    };
    let steps = (0..len)
        .map(|j| {
            let ca = pad(&a.mean_cumulative_per_step, j, true);
            let cb = pad(&b.mean_cumulative_per_step, j, true);
            StepDelta {
                step: j,
                new_a: pad(&a.mean_new_per_step, j, false),
                new_b: pad(&b.mean_new_per_step, j, false),
                cumulative_a: ca,
                cumulative_b: cb,
                cumulative_delta: cb - ca,
            }
        })
        .collect();

    let final_rates = |agg: &AggregatedDiffusion| -> Result<Vec<Option<f64>>, GridError> {
        let dm = diffusion_matrix(grid, agg, agg.final_step(), MatrixMode::CumulativeActive)?;
        cell_rates(grid, &dm)
    };
    let (ra, rb) = (final_rates(a)?, final_rates(b)?);
    let cells = grid
        .cells()
        .zip(ra.into_iter().zip(rb))
        .filter_map(|(cell, pair)| match pair {
            (Some(x), Some(y)) => Some(CellDelta {
                cell,
                rate_a: x,
                rate_b: y,
                delta: y - x,
            }),
            _ => None,
        })
        .collect();

    Ok(Comparison {
        a: a.into(),
        b: b.into(),
        spread_delta,
        relative_change,
        delta_stderr,
        z_score,
        steps,
        cells,
    })
}
