//! Seed-selection algorithms and the registry that names them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{DiffusionError, SeedSet};
use crate::graph::{Graph, VertexId};

/// Built-in algorithm names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AlgorithmName {
    Highdeg,
    Sdisc,
    Random,
}

impl AlgorithmName {
    pub const ALL: [AlgorithmName; 3] = [Self::Highdeg, Self::Sdisc, Self::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmName::Highdeg => "HIGHDEG",
            AlgorithmName::Sdisc => "SDISC",
            AlgorithmName::Random => "RANDOM",
        }
    }
}

impl fmt::Display for AlgorithmName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected HIGHDEG, SDISC or RANDOM)"))
    }
}

/// Which algorithm to run and with what budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: AlgorithmName,
    pub k: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

fn check_k(graph: &Graph, k: usize) -> Result<(), DiffusionError> {
    if k == 0 || k > graph.node_count() {
        Err(DiffusionError::InvalidK {
            k,
            node_count: graph.node_count(),
        })
    } else {
        Ok(())
    }
}

/// The `k` vertices of largest total degree; ties go to the smaller id.
pub fn highdeg(graph: &Graph, k: usize) -> Result<SeedSet, DiffusionError> {
    check_k(graph, k)?;
    let mut order: Vec<VertexId> = graph.vertices().collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(graph.total_degree(v)), v));
    order.truncate(k);
    SeedSet::new(
        order,
        k,
        AlgorithmName::Highdeg.as_str(),
        graph.node_count(),
    )
}

/// Single-discount heuristic.
///
/// Starts from total degree. After each pick, every remaining neighbor loses
/// one unit per arc (in either direction) joining it to the new seed.
pub fn sdisc(graph: &Graph, k: usize) -> Result<SeedSet, DiffusionError> {
    check_k(graph, k)?;
    let n = graph.node_count();
    let mut discounted: Vec<i64> = graph
        .vertices()
        .map(|v| graph.total_degree(v) as i64)
        .collect();
    let mut chosen = vec![false; n];
    // max-heap keyed on (degree, smaller id first); stale entries skipped lazily
    let mut heap: std::collections::BinaryHeap<(i64, std::cmp::Reverse<VertexId>)> = graph
        .vertices()
        .map(|v| (discounted[v as usize], std::cmp::Reverse(v)))
        .collect();
    let mut picked = Vec::with_capacity(k);
    while picked.len() < k {
        let (d, std::cmp::Reverse(v)) = heap.pop().expect("k <= node_count");
        if chosen[v as usize] || d != discounted[v as usize] {
            continue;
        }
        chosen[v as usize] = true;
        picked.push(v);
        for w in graph.out_neighbors(v).chain(graph.in_neighbors(v)) {
            if !chosen[w as usize] {
                discounted[w as usize] -= 1;
                heap.push((discounted[w as usize], std::cmp::Reverse(w)));
            }
        }
    }
    SeedSet::new(picked, k, AlgorithmName::Sdisc.as_str(), n)
}

/// `k` distinct vertices drawn uniformly, reproducible from `rng_seed`.
pub fn random_seeds(graph: &Graph, k: usize, rng_seed: u64) -> Result<SeedSet, DiffusionError> {
    check_k(graph, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let picked = rand::seq::index::sample(&mut rng, graph.node_count(), k)
        .into_iter()
        .map(|i| i as VertexId)
        .collect();
    SeedSet::new(
        picked,
        k,
        AlgorithmName::Random.as_str(),
        graph.node_count(),
    )
}

/// A seed-selection algorithm usable through the registry.
pub trait SeedAlgorithm: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn select(&self, graph: &Graph, k: usize, rng_seed: u64) -> Result<SeedSet, DiffusionError>;
}

struct FnAlgorithm {
    name: &'static str,
    description: &'static str,
    run: fn(&Graph, usize, u64) -> Result<SeedSet, DiffusionError>,
}

impl SeedAlgorithm for FnAlgorithm {
    fn name(&self) -> &str {
        self.name
    }

    fn description(&self) -> &str {
        self.description
    }

    fn select(&self, graph: &Graph, k: usize, rng_seed: u64) -> Result<SeedSet, DiffusionError> {
        (self.run)(graph, k, rng_seed)
    }
}

/// Algorithms keyed by upper-case name.
pub struct Registry {
    algorithms: BTreeMap<String, Box<dyn SeedAlgorithm>>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry {
            algorithms: BTreeMap::new(),
        };
        r.register(Box::new(FnAlgorithm {
            name: "HIGHDEG",
            description: "k vertices of largest total degree",
            run: |g, k, _| highdeg(g, k),
        }));
        r.register(Box::new(FnAlgorithm {
            name: "SDISC",
            description: "single-discount degree heuristic",
            run: |g, k, _| sdisc(g, k),
        }));
        r.register(Box::new(FnAlgorithm {
            name: "RANDOM",
            description: "k uniformly random vertices",
            run: random_seeds,
        }));
        r
    }
}

impl Registry {
    pub fn register(&mut self, algorithm: Box<dyn SeedAlgorithm>) {
        self.algorithms
            .insert(algorithm.name().to_ascii_uppercase(), algorithm);
    }

    pub fn get(&self, name: &str) -> Option<&dyn SeedAlgorithm> {
        self.algorithms
            .get(&name.to_ascii_uppercase())
            .map(|b| b.as_ref())
    }

    /// `(name, description)` pairs in name order.
    pub fn list(&self) -> Vec<(&str, &str)> {
        self.algorithms
            .values()
            .map(|a| (a.name(), a.description()))
            .collect()
    }

    pub fn run(&self, graph: &Graph, spec: &AlgorithmSpec) -> Result<SeedSet, DiffusionError> {
        let algorithm = self
            .get(spec.name.as_str())
            .expect("built-in algorithms are always registered");
        algorithm.select(graph, spec.k, spec.rng_seed)
    }
}
