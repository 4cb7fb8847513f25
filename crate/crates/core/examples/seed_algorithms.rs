//! Every registered seed-selection algorithm on one graph, plus a custom one
//! added to the registry.
//!
//! ```text
//! cargo run --example seed_algorithms
//! ```

use std::sync::Arc;

use infmax::diffusion::{estimate_spread, DiffusionError, SeedSet};
use infmax::graph::{Graph, VertexId};
use infmax::prob::{ProbabilityModel, WeightedGraph};
use infmax::seeds::{Registry, SeedAlgorithm};

/// Largest out-degree first, ignoring in-arcs.
struct TopOut;

impl SeedAlgorithm for TopOut {
    fn name(&self) -> &str {
        "TOPOUT"
    }

    fn description(&self) -> &str {
        "k vertices of largest out-degree"
    }

    fn select(&self, graph: &Graph, k: usize, _rng_seed: u64) -> Result<SeedSet, DiffusionError> {
        let mut order: Vec<VertexId> = graph.vertices().collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(graph.out_degree(v)), v));
        order.truncate(k);
        SeedSet::new(order, k, self.name(), graph.node_count())
    }
}

/// Hubs 0 and 1 are adjacent and share most leaves; hub 2 stands apart
/// with the same degree as hub 1.
fn overlapping_hubs() -> Graph {
    let mut edges = vec![(0, 1)];
    for leaf in 3..30 {
        edges.push((0, leaf));
        if leaf < 25 {
            edges.push((1, leaf));
        }
    }
    for leaf in 30..53 {
        edges.push((2, leaf));
    }
    let arcs = edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]);
    Graph::from_arcs(53, arcs).expect("valid fixture")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = Arc::new(overlapping_hubs());
    let wg = WeightedGraph::assign(Arc::clone(&graph), ProbabilityModel::Constant { p: 0.2 })?;
    let mut registry = Registry::default();
    registry.register(Box::new(TopOut));

    for (name, description) in registry.list() {
        let seeds = registry.get(name).unwrap().select(&graph, 2, 7)?;
        let agg = estimate_spread(&wg, &seeds, 2_000, 1)?;
        println!(
            "{name:<8} {:<36} seeds {:?} -> spread {:.2}",
            description,
            seeds.seeds(),
            agg.spread_mean
        );
    }
    Ok(())
}
