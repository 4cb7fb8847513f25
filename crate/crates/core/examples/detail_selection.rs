//! Brushing a rectangle of grid cells and extracting its node-link detail:
//! vertex roles at a chosen step plus internal and boundary arcs.
//!
//! ```text
//! cargo run --example detail_selection
//! ```

use std::sync::Arc;

use infmax::diffusion::{simulate_runs, AggregatedDiffusion, SeedSet};
use infmax::graph::Graph;
use infmax::grid::{subgraph_of_cells, CellRect, Grid, RoleContext};
use infmax::layout::compute_layout;
use infmax::prob::{ProbabilityModel, WeightedGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a 6 × 6 lattice with arcs pointing right and down
    let side = 6u32;
    let mut arcs = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let v = r * side + c;
            if c + 1 < side {
                arcs.push((v, v + 1));
            }
            if r + 1 < side {
                arcs.push((v, v + side));
            }
        }
    }
    let n = (side * side) as usize;
    let graph = Arc::new(Graph::from_arcs(n, arcs)?);
    let wg = WeightedGraph::assign(Arc::clone(&graph), ProbabilityModel::Constant { p: 0.6 })?;
    let seeds = SeedSet::exact(vec![0], "manual", n)?;
    let traces = simulate_runs(&wg, &seeds, 200, 5, &|_| {})?;
    let agg = AggregatedDiffusion::from_runs(n, &traces)?;

    let layout = compute_layout(&graph, 400, 2);
    let grid = Grid::build(&layout, 3)?;
    // brush the seed's cell and its lower-right neighbours
    let home = grid.cell_of(0);
    let selection = CellRect {
        row: home.row.min(1),
        col: home.col.min(1),
        rows: 2,
        cols: 2,
    };
    let step = 3.min(agg.final_step());
    let roles = RoleContext {
        seeds: &seeds,
        run: Some(&traces[0]),
        agg: Some(&agg),
        step,
    };
    let detail = subgraph_of_cells(&grid, &graph, &layout, selection, roles)?;

    println!(
        "{} vertices in cells {:?} at step {step}",
        detail.vertices.len(),
        selection
    );
    for v in &detail.vertices {
        println!(
            "  v{:<3} {:?} role {:?}, active in {:.0}% of runs",
            v.id,
            v.cell,
            v.role,
            v.activation_prob.unwrap_or(0.0) * 100.0
        );
    }
    let used = detail.arcs.iter().filter(|a| a.active).count();
    println!(
        "{} internal arcs, {} boundary arcs, {used} used by the first run",
        detail.internal_arcs().count(),
        detail.boundary_arcs().count()
    );
    Ok(())
}
