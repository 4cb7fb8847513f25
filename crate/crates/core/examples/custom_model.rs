//! Plugging a different diffusion process into the engine: an Independent
//! Cascade that is cut off after a fixed number of steps.
//!
//! ```text
//! cargo run --example custom_model
//! ```

use std::sync::Arc;

use infmax::diffusion::{
    run_seed, simulate, CascadeState, DiffusionModel, IndependentCascade, SeedSet, Step,
};
use infmax::graph::Graph;
use infmax::prob::{ProbabilityModel, WeightedGraph};
use rand_chacha::ChaCha8Rng;

struct Deadline<'a> {
    inner: IndependentCascade<'a>,
    max_steps: usize,
}

impl DiffusionModel for Deadline<'_> {
    type State = (CascadeState, usize);

    fn initialize(&self, seeds: &SeedSet) -> Self::State {
        (self.inner.initialize(seeds), 0)
    }

    fn step(&self, (state, taken): &mut Self::State, rng: &mut ChaCha8Rng) -> Step {
        *taken += 1;
        self.inner.step(state, rng)
    }

    fn halted(&self, (state, taken): &Self::State) -> bool {
        *taken >= self.max_steps || self.inner.halted(state)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 40;
    let graph = Graph::from_arcs(n, (0..n as u32 - 1).map(|v| (v, v + 1)))?;
    let wg = WeightedGraph::assign(Arc::new(graph), ProbabilityModel::Constant { p: 0.9 })?;
    let seeds = SeedSet::exact(vec![0], "manual", n)?;
    let runs = 5_000u64;

    for max_steps in [1, 3, 10, usize::MAX] {
        let model = Deadline {
            inner: IndependentCascade::new(&wg),
            max_steps,
        };
        let total: usize = (0..runs)
            .map(|i| simulate(&model, &seeds, run_seed(9, i), i).spread())
            .sum();
        let label = if max_steps == usize::MAX {
            "none".to_string()
        } else {
            max_steps.to_string()
        };
        println!(
            "deadline {label:>4}: mean spread {:.3}",
            total as f64 / runs as f64
        );
    }
    Ok(())
}
