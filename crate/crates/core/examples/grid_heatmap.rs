//! Lays out a graph, bins it into an `m × m` grid, and prints the density,
//! expected-active and influence-rate matrices as text heatmaps.
//!
//! ```text
//! cargo run --example grid_heatmap -- 6
//! ```

use std::sync::Arc;

use infmax::diffusion::estimate_spread;
use infmax::graph::Graph;
use infmax::grid::{
    cell_rates, classify_rate, density_matrix, diffusion_matrix, trend_series, Grid, MatrixMode,
    RateClass,
};
use infmax::layout::compute_layout;
use infmax::prob::{ProbabilityModel, WeightedGraph};
use infmax::seeds::sdisc;

/// A ring of small cliques joined by single bridges.
fn ring_of_cliques(cliques: u32, size: u32) -> Graph {
    let mut arcs = Vec::new();
    for c in 0..cliques {
        let base = c * size;
        for i in 0..size {
            for j in 0..size {
                if i != j {
                    arcs.push((base + i, base + j));
                }
            }
        }
        let next = ((c + 1) % cliques) * size;
        arcs.extend([(base, next + 1), (next + 1, base)]);
    }
    Graph::from_arcs((cliques * size) as usize, arcs).expect("valid fixture")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m: usize = std::env::args().nth(1).map_or(Ok(6), |s| s.parse())?;
    let graph = Arc::new(ring_of_cliques(12, 8));
    let seeds = sdisc(&graph, 3)?;
    let wg = WeightedGraph::assign(Arc::clone(&graph), ProbabilityModel::WeightedCascade)?;
    let agg = estimate_spread(&wg, &seeds, 500, 3)?;
    let layout = compute_layout(&graph, 300, 1);
    let grid = Grid::build(&layout, m)?;

    let density = density_matrix(&grid);
    let last = diffusion_matrix(&grid, &agg, agg.final_step(), MatrixMode::CumulativeActive)?;
    let rates = cell_rates(&grid, &last)?;

    println!("density (vertices per cell), total {}", density.total());
    for row in density.rows() {
        println!(
            "  {}",
            row.iter().map(|c| format!("{c:>3}")).collect::<String>()
        );
    }
    println!(
        "expected active at final step {}, total {:.2}",
        agg.final_step(),
        last.total()
    );
    for row in last.values.chunks(m) {
        println!(
            "  {}",
            row.iter().map(|v| format!("{v:>6.2}")).collect::<String>()
        );
    }
    println!("influence rate class (. empty, L low, M medium, H high)");
    for row in rates.chunks(m) {
        let marks: String = row
            .iter()
            .map(|r| match r.map(classify_rate) {
                None => " .",
                Some(RateClass::Low) => " L",
                Some(RateClass::Medium) => " M",
                Some(RateClass::High) => " H",
            })
            .collect();
        println!("  {marks}");
    }
    let trend = trend_series(&agg);
    println!("trend (new per step): {:.2?}", trend.new_active);
    Ok(())
}
