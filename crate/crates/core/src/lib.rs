//! Influence-maximization workbench: graph loading, Independent Cascade
//! simulation, seed selection, force-directed layout, grid summaries and a
//! seed-modification advisor, exposed as a library, a command line tool and
//! an HTTP service.

pub mod advisor;
pub mod cli;
pub mod config;
pub mod diffusion;
pub mod graph;
pub mod grid;
pub mod layout;
pub mod prob;
pub mod seeds;
pub mod service;
pub mod store;
pub mod workbench;

pub use diffusion::{
    estimate_spread, exact_spread_small, simulate_ic, AggregatedDiffusion, SeedSet,
};
pub use graph::{Directedness, Graph, VertexId};
pub use grid::{Grid, MatrixMode};
pub use layout::{compute_layout, Layout};
pub use prob::{ProbabilityModel, WeightedGraph};
pub use seeds::{AlgorithmName, AlgorithmSpec, Registry};
pub use workbench::{RunRequest, SeedSource, Workbench};
