//! Monte-Carlo spread of a seed set, checked against exact enumeration.
//!
//! ```text
//! cargo run --example spread_estimate
//! cargo run --example spread_estimate -- edges.txt 0.1 0 5 9
//! ```
//! The optional arguments are an edge list, a constant arc probability and
//! the seed vertices (dense ids).

use std::sync::Arc;

use infmax::diffusion::{estimate_spread, exact_spread_small, SeedSet, MAX_EXACT_ARCS};
use infmax::graph::{Directedness, Graph};
use infmax::prob::{ProbabilityModel, WeightedGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (graph, p, seeds) = match args.as_slice() {
        [] => (Graph::from_arcs(3, [(0, 1), (1, 2)])?, 0.5, vec![0]),
        [path, p, seeds @ ..] => (
            Graph::load(path, Directedness::Directed)?,
            p.parse()?,
            seeds.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        ),
        _ => return Err("usage: spread_estimate [EDGES P SEED...]".into()),
    };
    let n = graph.node_count();
    let wg = WeightedGraph::assign(Arc::new(graph), ProbabilityModel::Constant { p })?;
    let seeds = SeedSet::exact(seeds, "manual", n)?;

    for runs in [100, 1_000, 10_000] {
        let agg = estimate_spread(&wg, &seeds, runs, 42)?;
        println!(
            "R={runs:>6}: spread {:.4} ± {:.4} (stderr {:.4}), {} steps",
            agg.spread_mean,
            agg.spread_std,
            agg.spread_stderr(),
            agg.step_count()
        );
    }
    if wg.graph().arc_count() <= MAX_EXACT_ARCS {
        println!("exact:      {:.4}", exact_spread_small(&wg, &seeds)?);
    }
    Ok(())
}
