//! Grid partition of a layout and the matrices derived from it.
//!
//! A [`Grid`] slices the layout's bounding box into `m × m` equal cells.
//! Matrices built from a grid carry its fingerprint, and every function that
//! reads a matrix alongside a grid checks that the two belong together, so
//! density and diffusion matrices always share the same set of cells.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion::{AggregatedDiffusion, DiffusionRun, SeedSet};
use crate::graph::{Graph, VertexId};
use crate::layout::{Layout, Point};

pub const MAX_CELLS_PER_SIDE: usize = 256;
pub const DEFAULT_CELLS_PER_SIDE: usize = 10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("grid size {0} is outside 1..=256")]
    BadSize(usize),
    #[error("layout has no vertices")]
    EmptyLayout,
    #[error("layout has {layout} positions but the graph has {graph} vertices")]
    SizeMismatch { layout: usize, graph: usize },
    #[error("step {step} is out of range (last step is {last})")]
    StepOutOfRange { step: usize, last: usize },
    #[error("cell ({0}, {1}) is outside the grid")]
    CellOutOfRange(usize, usize),
    #[error("cell ({0}, {1}) holds no vertices")]
    EmptyCell(usize, usize),
    #[error("matrix was built from a different grid")]
    ForeignMatrix,
    #[error("influence rate needs a cumulative matrix")]
    NotCumulative,
    #[error("cell selection is empty")]
    EmptySelection,
}

/// Row/column address of a cell. Row indexes the y axis, column the x axis,
/// both starting from the minimum coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

/// `m × m` partition of the plane with per-cell membership.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    m: usize,
    bbox: [f64; 4],
    cell_of: Vec<Cell>,
    members: Vec<Vec<VertexId>>,
    fingerprint: [u8; 16],
}

fn axis_index(value: f64, min: f64, max: f64, m: usize) -> usize {
    let extent = max - min;
    if extent <= 0.0 {
        return 0;
    }
    // floor sends interior boundaries to the higher cell; max lands in m-1
    (((value - min) / extent * m as f64).floor() as usize).min(m - 1)
}

impl Grid {
    /// Tiles the layout's bounding box into `m × m` equal cells.
    pub fn build(layout: &Layout, m: usize) -> Result<Self, GridError> {
        if !(1..=MAX_CELLS_PER_SIDE).contains(&m) {
            return Err(GridError::BadSize(m));
        }
        if layout.positions.is_empty() {
            return Err(GridError::EmptyLayout);
        }
        let bbox = layout.bounding_box();
        let cell_of: Vec<Cell> = layout
            .positions
            .iter()
            .map(|p| Cell {
                row: axis_index(p[1], bbox[1], bbox[3], m),
                col: axis_index(p[0], bbox[0], bbox[2], m),
            })
            .collect();
        let mut members = vec![Vec::new(); m * m];
        for (v, c) in cell_of.iter().enumerate() {
            members[c.row * m + c.col].push(v as VertexId);
        }
        let mut hasher = Sha256::new();
        hasher.update((m as u64).to_le_bytes());
        for c in &cell_of {
            hasher.update((c.row as u32).to_le_bytes());
            hasher.update((c.col as u32).to_le_bytes());
        }
        let mut fingerprint = [0u8; 16];
        fingerprint.copy_from_slice(&hasher.finalize()[..16]);
        Ok(Grid {
            m,
            bbox,
            cell_of,
            members,
            fingerprint,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn node_count(&self) -> usize {
        self.cell_of.len()
    }

    pub fn cell_of(&self, v: VertexId) -> Cell {
        self.cell_of[v as usize]
    }

    pub fn members(&self, cell: Cell) -> &[VertexId] {
        &self.members[self.index(cell)]
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.m * self.m).map(move |i| Cell {
            row: i / self.m,
            col: i % self.m,
        })
    }

    /// Row-major index of `cell`.
    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.m + cell.col
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.m && cell.col < self.m
    }

    pub fn fingerprint(&self) -> [u8; 16] {
        self.fingerprint
    }

    fn check(&self, fingerprint: &[u8; 16]) -> Result<(), GridError> {
        if &self.fingerprint == fingerprint {
            Ok(())
        } else {
            Err(GridError::ForeignMatrix)
        }
    }

    fn check_cell(&self, cell: Cell) -> Result<(), GridError> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(GridError::CellOutOfRange(cell.row, cell.col))
        }
    }
}

/// Per-cell vertex counts, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub m: usize,
    pub counts: Vec<u32>,
    #[serde(skip)]
    grid: [u8; 16],
}

impl DensityMatrix {
    pub fn get(&self, cell: Cell) -> u32 {
        self.counts[cell.row * self.m + cell.col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Rows of the matrix, for display.
    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks(self.m)
    }
}

pub fn density_matrix(grid: &Grid) -> DensityMatrix {
    DensityMatrix {
        m: grid.m,
        counts: grid.members.iter().map(|c| c.len() as u32).collect(),
        grid: grid.fingerprint,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixMode {
    /// Expected vertices active at or before the step.
    #[default]
    CumulativeActive,
    /// Expected vertices activated at exactly the step.
    NewlyActive,
}

impl std::str::FromStr for MatrixMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cumulative" | "cumulative-active" => Ok(MatrixMode::CumulativeActive),
            "new" | "newly-active" => Ok(MatrixMode::NewlyActive),
            other => Err(format!("unknown matrix mode {other:?}")),
        }
    }
}

/// Expected number of active vertices per cell at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionMatrix {
    pub m: usize,
    pub step: usize,
    pub mode: MatrixMode,
    pub values: Vec<f64>,
    #[serde(skip)]
    grid: [u8; 16],
}

impl DiffusionMatrix {
    pub fn get(&self, cell: Cell) -> f64 {
        self.values[cell.row * self.m + cell.col]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn diffusion_matrix(
    grid: &Grid,
    agg: &AggregatedDiffusion,
    step: usize,
    mode: MatrixMode,
) -> Result<DiffusionMatrix, GridError> {
    if step >= agg.step_count() {
        return Err(GridError::StepOutOfRange {
            step,
            last: agg.final_step(),
        });
    }
    let first = match mode {
        MatrixMode::CumulativeActive => 0,
        MatrixMode::NewlyActive => step,
    };
    let mut counts = vec![0u64; grid.m * grid.m];
    for row in &agg.step_counts[first..=step] {
        for &(v, c) in row {
            counts[grid.index(grid.cell_of(v))] += c as u64;
        }
    }
    let runs = agg.runs as f64;
    Ok(DiffusionMatrix {
        m: grid.m,
        step,
        mode,
        values: counts.into_iter().map(|c| c as f64 / runs).collect(),
        grid: grid.fingerprint,
    })
}

/// Expected active fraction of the vertices in `cell`.
pub fn influence_rate(grid: &Grid, dm: &DiffusionMatrix, cell: Cell) -> Result<f64, GridError> {
    grid.check(&dm.grid)?;
    grid.check_cell(cell)?;
    if dm.mode != MatrixMode::CumulativeActive {
        return Err(GridError::NotCumulative);
    }
    let resident = grid.members(cell).len();
    if resident == 0 {
        return Err(GridError::EmptyCell(cell.row, cell.col));
    }
    Ok(dm.get(cell) / resident as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateClass {
    Low,
    Medium,
    High,
}

/// Low below 30%, high above 60%, medium in between (both ends inclusive).
pub fn classify_rate(rate: f64) -> RateClass {
    if rate < 0.30 {
        RateClass::Low
    } else if rate <= 0.60 {
        RateClass::Medium
    } else {
        RateClass::High
    }
}

/// Rates and classes for every cell; `None` for empty cells.
pub fn cell_rates(grid: &Grid, dm: &DiffusionMatrix) -> Result<Vec<Option<f64>>, GridError> {
    grid.check(&dm.grid)?;
    grid.cells()
        .map(|cell| match influence_rate(grid, dm, cell) {
            Ok(r) => Ok(Some(r)),
            Err(GridError::EmptyCell(..)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Per-step mean newly-active and cumulative counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub new_active: Vec<f64>,
    pub cumulative_active: Vec<f64>,
    pub current_step: usize,
}

pub fn trend_series(agg: &AggregatedDiffusion) -> TrendSeries {
    TrendSeries {
        new_active: agg.mean_new_per_step.clone(),
        cumulative_active: agg.mean_cumulative_per_step.clone(),
        current_step: agg.final_step(),
    }
}

impl TrendSeries {
    pub fn at(mut self, step: usize) -> Self {
        self.current_step = step.min(self.new_active.len().saturating_sub(1));
        self
    }
}

/// Contiguous rectangle of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl CellRect {
    pub fn whole(grid: &Grid) -> Self {
        CellRect {
            row: 0,
            col: 0,
            rows: grid.m,
            cols: grid.m,
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        (self.row..self.row + self.rows).contains(&cell.row)
            && (self.col..self.col + self.cols).contains(&cell.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexRole {
    Seed,
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailVertex {
    pub id: VertexId,
    pub position: Point,
    pub cell: Cell,
    pub role: VertexRole,
    /// Fraction of runs in which the vertex was active by the step.
    pub activation_prob: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcPlacement {
    Internal,
    /// Source inside, target outside.
    Outgoing,
    /// Source outside, target inside.
    Incoming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetailArc {
    pub source: VertexId,
    pub target: VertexId,
    pub placement: ArcPlacement,
    /// Used by the diffusion at or before the step.
    pub active: bool,
}

/// Node-link data for a brushed rectangle of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailBundle {
    pub selection: CellRect,
    pub step: usize,
    pub vertices: Vec<DetailVertex>,
    pub arcs: Vec<DetailArc>,
}

impl DetailBundle {
    pub fn internal_arcs(&self) -> impl Iterator<Item = &DetailArc> {
        self.arcs
            .iter()
            .filter(|a| a.placement == ArcPlacement::Internal)
    }

    pub fn boundary_arcs(&self) -> impl Iterator<Item = &DetailArc> {
        self.arcs
            .iter()
            .filter(|a| a.placement != ArcPlacement::Internal)
    }
}

/// Where roles come from: the seed set plus an optional trace and aggregate.
#[derive(Debug, Clone, Copy)]
pub struct RoleContext<'a> {
    pub seeds: &'a SeedSet,
    pub run: Option<&'a DiffusionRun>,
    pub agg: Option<&'a AggregatedDiffusion>,
    pub step: usize,
}

/// Vertices of the selected cells, the arcs among them, and the arcs that
/// cross the selection boundary.
pub fn subgraph_of_cells(
    grid: &Grid,
    graph: &Graph,
    layout: &Layout,
    selection: CellRect,
    roles: RoleContext<'_>,
) -> Result<DetailBundle, GridError> {
    if selection.rows == 0 || selection.cols == 0 {
        return Err(GridError::EmptySelection);
    }
    let last = Cell {
        row: selection.row + selection.rows - 1,
        col: selection.col + selection.cols - 1,
    };
    grid.check_cell(last)?;
    if layout.positions.len() != graph.node_count() || grid.node_count() != graph.node_count() {
        return Err(GridError::SizeMismatch {
            layout: layout.positions.len(),
            graph: graph.node_count(),
        });
    }
    let activated_at = roles.run.map(|r| r.activation_steps(graph.node_count()));
    let active_by = |v: VertexId| {
        activated_at
            .as_ref()
            .and_then(|at| at[v as usize])
            .is_some_and(|j| j as usize <= roles.step)
    };

    let mut inside: Vec<VertexId> = Vec::new();
    for r in selection.row..selection.row + selection.rows {
        for c in selection.col..selection.col + selection.cols {
            inside.extend_from_slice(grid.members(Cell { row: r, col: c }));
        }
    }
    inside.sort_unstable();
    let is_inside = |v: VertexId| selection.contains(grid.cell_of(v));

    let vertices = inside
        .iter()
        .map(|&v| DetailVertex {
            id: v,
            position: layout.positions[v as usize],
            cell: grid.cell_of(v),
            role: if roles.seeds.contains(v) {
                VertexRole::Seed
            } else if active_by(v) {
                VertexRole::Active
            } else {
                VertexRole::Inactive
            },
            activation_prob: roles.agg.map(|agg| {
                let upto = roles.step.min(agg.final_step());
                (0..=upto).map(|j| agg.step_freq(v, j)).sum()
            }),
        })
        .collect();

    let used: std::collections::HashSet<(VertexId, VertexId)> = roles
        .run
        .map(|run| {
            run.steps
                .iter()
                .take(roles.step + 1)
                .flat_map(|s| s.activated_arcs.iter().copied())
                .collect()
        })
        .unwrap_or_default();
    let mut arcs = Vec::new();
    for &v in &inside {
        for w in graph.out_neighbors(v) {
            let placement = if is_inside(w) {
                ArcPlacement::Internal
            } else {
                ArcPlacement::Outgoing
            };
            arcs.push(DetailArc {
                source: v,
                target: w,
                placement,
                active: used.contains(&(v, w)),
            });
        }
        for u in graph.in_neighbors(v).filter(|&u| !is_inside(u)) {
            arcs.push(DetailArc {
                source: u,
                target: v,
                placement: ArcPlacement::Incoming,
                active: used.contains(&(u, v)),
            });
        }
    }
    arcs.sort_by_key(|a| (a.source, a.target));

    Ok(DetailBundle {
        selection,
        step: roles.step,
        vertices,
        arcs,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::diffusion::estimate_spread;
    use crate::prob::{ProbabilityModel, WeightedGraph};

    fn layout(points: &[Point]) -> Layout {
        Layout::from_positions(points.to_vec())
    }

    #[test]
    fn size_bounds() {
        let l = layout(&[[0.0, 0.0]]);
        assert_eq!(Grid::build(&l, 0), Err(GridError::BadSize(0)));
        assert_eq!(Grid::build(&l, 257), Err(GridError::BadSize(257)));
        assert!(Grid::build(&l, 256).is_ok());
    }

    #[test]
    fn single_cell_holds_everything() {
        let g = Grid::build(&layout(&[[0.0, 0.0], [5.0, 1.0], [2.0, 9.0]]), 1).unwrap();
        assert_eq!(g.members(Cell { row: 0, col: 0 }), &[0, 1, 2]);
    }

    #[test]
    fn square_corners_fill_each_cell() {
        let g = Grid::build(
            &layout(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
            2,
        )
        .unwrap();
        assert_eq!(density_matrix(&g).counts, vec![1, 1, 1, 1]);
        assert_eq!(g.cell_of(3), Cell { row: 1, col: 1 });
        assert_eq!(g.cell_of(1), Cell { row: 0, col: 1 });
    }

    #[test]
    fn interior_boundary_goes_to_higher_cell() {
        let g = Grid::build(&layout(&[[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]]), 2).unwrap();
        assert_eq!(g.cell_of(1).col, 1);
        assert_eq!(g.cell_of(2).col, 1);
    }

    #[test]
    fn degenerate_extent_uses_first_cell() {
        let g = Grid::build(&layout(&[[3.0, 3.0], [3.0, 3.0]]), 4).unwrap();
        assert_eq!(g.cell_of(0), Cell { row: 0, col: 0 });
    }

    #[test]
    fn density_rows() {
        // members sizes [[3, 0], [1, 2]]
        let pts = [
            [0.0, 0.0],
            [0.1, 0.2],
            [0.2, 0.1],
            [0.0, 1.0],
            [1.0, 1.0],
            [0.9, 0.8],
        ];
        let d = density_matrix(&Grid::build(&layout(&pts), 2).unwrap());
        assert_eq!(d.rows().collect::<Vec<_>>(), vec![&[3, 0][..], &[1, 2][..]]);
        assert_eq!(d.get(Cell { row: 0, col: 1 }), 0);
        assert_eq!(d.total(), 6);
    }

    #[test]
    fn classify_boundaries() {
        assert_eq!(classify_rate(0.29), RateClass::Low);
        assert_eq!(classify_rate(0.30), RateClass::Medium);
        assert_eq!(classify_rate(0.60), RateClass::Medium);
        assert_eq!(classify_rate(0.61), RateClass::High);
        assert_eq!(classify_rate(0.0), RateClass::Low);
        assert_eq!(classify_rate(1.0), RateClass::High);
    }

    fn path_fixture(p: f64) -> (Graph, WeightedGraph, Grid, Layout) {
        let graph = Arc::new(Graph::from_arcs(3, [(0, 1), (1, 2)]).unwrap());
        let wg = WeightedGraph::assign(graph.clone(), ProbabilityModel::Constant { p }).unwrap();
        let l = layout(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let grid = Grid::build(&l, 3).unwrap();
        ((*graph).clone(), wg, grid, l)
    }

    #[test]
    fn path_cascade_matrices() {
        let (_, wg, grid, _) = path_fixture(1.0);
        let seeds = SeedSet::exact(vec![0], "t", 3).unwrap();
        let agg = estimate_spread(&wg, &seeds, 4, 0).unwrap();
        let dm = diffusion_matrix(&grid, &agg, 1, MatrixMode::CumulativeActive).unwrap();
        let cells: Vec<f64> = (0..3).map(|v| dm.get(grid.cell_of(v))).collect();
        assert_eq!(cells, [1.0, 1.0, 0.0]);
        let new = diffusion_matrix(&grid, &agg, 2, MatrixMode::NewlyActive).unwrap();
        assert_eq!(new.get(grid.cell_of(2)), 1.0);
        assert_eq!(new.total(), 1.0);
        assert_eq!(
            diffusion_matrix(&grid, &agg, 3, MatrixMode::CumulativeActive),
            Err(GridError::StepOutOfRange { step: 3, last: 2 })
        );
        let t = trend_series(&agg);
        assert_eq!(t.new_active, [1.0, 1.0, 1.0]);
        assert_eq!(t.cumulative_active, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_probability_trend() {
        let (_, wg, _, _) = path_fixture(0.0);
        let seeds = SeedSet::exact(vec![0, 2], "t", 3).unwrap();
        let t = trend_series(&estimate_spread(&wg, &seeds, 3, 0).unwrap());
        assert_eq!(t.new_active, [2.0]);
        assert_eq!(t.cumulative_active, [2.0]);
    }

    #[test]
    fn rate_requires_matching_grid_and_nonempty_cell() {
        let (_, wg, grid, _) = path_fixture(1.0);
        let seeds = SeedSet::exact(vec![0], "t", 3).unwrap();
        let agg = estimate_spread(&wg, &seeds, 2, 0).unwrap();
        let dm = diffusion_matrix(&grid, &agg, 0, MatrixMode::CumulativeActive).unwrap();
        assert_eq!(influence_rate(&grid, &dm, grid.cell_of(0)), Ok(1.0));
        assert_eq!(influence_rate(&grid, &dm, grid.cell_of(1)), Ok(0.0));
        assert_eq!(
            influence_rate(&grid, &dm, Cell { row: 2, col: 0 }),
            Err(GridError::EmptyCell(2, 0))
        );
        let other = Grid::build(&layout(&[[0.0, 0.0], [0.0, 1.0], [0.0, 2.0]]), 3).unwrap();
        assert_eq!(
            influence_rate(&other, &dm, Cell { row: 0, col: 0 }),
            Err(GridError::ForeignMatrix)
        );
        let new = diffusion_matrix(&grid, &agg, 0, MatrixMode::NewlyActive).unwrap();
        assert_eq!(
            influence_rate(&grid, &new, grid.cell_of(0)),
            Err(GridError::NotCumulative)
        );
    }

    #[test]
    fn rate_arithmetic() {
        let l = layout(&(0..10).map(|i| [i as f64 * 0.01, 0.0]).collect::<Vec<_>>());
        let grid = Grid::build(&l, 1).unwrap();
        let dm = DiffusionMatrix {
            m: 1,
            step: 0,
            mode: MatrixMode::CumulativeActive,
            values: vec![5.0],
            grid: grid.fingerprint(),
        };
        assert_eq!(influence_rate(&grid, &dm, Cell { row: 0, col: 0 }), Ok(0.5));
    }

    #[test]
    fn detail_for_partial_path() {
        let (graph, wg, grid, l) = path_fixture(1.0);
        let seeds = SeedSet::exact(vec![0], "t", 3).unwrap();
        let run = crate::diffusion::simulate_ic(&wg, &seeds, 0);
        // cells (0,0) and (0,1) hold vertices 0 and 1; vertex 2 sits in (0,2)
        let sel = CellRect {
            row: 0,
            col: 0,
            rows: 1,
            cols: 2,
        };
        let ctx = RoleContext {
            seeds: &seeds,
            run: Some(&run),
            agg: None,
            step: 1,
        };
        let d = subgraph_of_cells(&grid, &graph, &l, sel, ctx).unwrap();
        assert_eq!(d.vertices.iter().map(|v| v.id).collect::<Vec<_>>(), [0, 1]);
        assert_eq!(d.vertices[0].role, VertexRole::Seed);
        assert_eq!(d.vertices[1].role, VertexRole::Active);
        let internal: Vec<_> = d.internal_arcs().map(|a| (a.source, a.target)).collect();
        let boundary: Vec<_> = d
            .boundary_arcs()
            .map(|a| (a.source, a.target, a.placement))
            .collect();
        assert_eq!(internal, [(0, 1)]);
        assert_eq!(boundary, [(1, 2, ArcPlacement::Outgoing)]);
        assert!(d.arcs[0].active);
        assert!(!d.arcs[1].active, "arc (1,2) fires at step 2");
    }

    #[test]
    fn detail_whole_and_empty_selections() {
        let (graph, _, grid, l) = path_fixture(1.0);
        let seeds = SeedSet::exact(vec![0], "t", 3).unwrap();
        let ctx = RoleContext {
            seeds: &seeds,
            run: None,
            agg: None,
            step: 0,
        };
        let whole = subgraph_of_cells(&grid, &graph, &l, CellRect::whole(&grid), ctx).unwrap();
        assert_eq!(whole.vertices.len(), 3);
        assert_eq!(whole.internal_arcs().count(), 2);
        assert_eq!(whole.boundary_arcs().count(), 0);
        let empty_cell = CellRect {
            row: 2,
            col: 2,
            rows: 1,
            cols: 1,
        };
        let e = subgraph_of_cells(&grid, &graph, &l, empty_cell, ctx).unwrap();
        assert!(e.vertices.is_empty() && e.arcs.is_empty());
        let zero = CellRect {
            row: 0,
            col: 0,
            rows: 0,
            cols: 1,
        };
        assert_eq!(
            subgraph_of_cells(&grid, &graph, &l, zero, ctx),
            Err(GridError::EmptySelection)
        );
    }
}
