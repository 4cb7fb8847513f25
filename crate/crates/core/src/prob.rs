//! Activation probabilities attached to arcs.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{ArcId, Graph, VertexId};

pub const DEFAULT_TRIVALENCY: [f64; 3] = [0.1, 0.01, 0.001];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProbabilityError {
    #[error("constant probability {0} is outside [0, 1]")]
    ConstantOutOfRange(f64),
    #[error("trivalency choice {0} is outside [0, 1]")]
    ChoiceOutOfRange(f64),
    #[error("trivalency needs at least one choice")]
    NoChoices,
    #[error("expected {expected} probabilities, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Rule for assigning `p(u, v)` to every arc.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProbabilityModel {
    Constant {
        p: f64,
    },
    /// `p(u, v) = 1 / in_degree(v)`.
    #[default]
    WeightedCascade,
    /// Each arc draws uniformly from `choices`.
    Trivalency {
        choices: Vec<f64>,
        rng_seed: u64,
    },
}

impl ProbabilityModel {
    pub fn trivalency(rng_seed: u64) -> Self {
        ProbabilityModel::Trivalency {
            choices: DEFAULT_TRIVALENCY.to_vec(),
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ProbabilityError> {
        match self {
            ProbabilityModel::Constant { p } if !(0.0..=1.0).contains(p) => {
                Err(ProbabilityError::ConstantOutOfRange(*p))
            }
            ProbabilityModel::Trivalency { choices, .. } => {
                if choices.is_empty() {
                    return Err(ProbabilityError::NoChoices);
                }
                match choices.iter().find(|c| !(0.0..=1.0).contains(*c)) {
                    Some(&c) => Err(ProbabilityError::ChoiceOutOfRange(c)),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Parses `wc`, `weighted-cascade`, `constant:0.01`, `trivalency` or
    /// `trivalency:<seed>`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let model = match (head, arg) {
            ("wc" | "weighted-cascade", None) => ProbabilityModel::WeightedCascade,
            ("constant", Some(p)) => ProbabilityModel::Constant {
                p: p.parse().map_err(|_| format!("bad probability {p:?}"))?,
            },
            ("trivalency", seed) => ProbabilityModel::trivalency(match seed {
                Some(s) => s.parse().map_err(|_| format!("bad seed {s:?}"))?,
                None => 0,
            }),
            _ => return Err(format!("unknown probability model {s:?}")),
        };
        model.validate().map_err(|e| e.to_string())?;
        Ok(model)
    }
}

/// A graph together with one activation probability per arc.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    graph: Arc<Graph>,
    prob: Vec<f64>,
    // None when probabilities were supplied directly
    model: Option<ProbabilityModel>,
}

impl WeightedGraph {
    /// Assigns probabilities to every arc of `graph` according to `model`.
    pub fn assign(graph: Arc<Graph>, model: ProbabilityModel) -> Result<Self, ProbabilityError> {
        model.validate()?;
        let prob = match &model {
            ProbabilityModel::Constant { p } => vec![*p; graph.arc_count()],
            ProbabilityModel::WeightedCascade => graph
                .arcs()
                .iter()
                .map(|&(_, v)| 1.0 / graph.in_degree(v) as f64)
                .collect(),
            ProbabilityModel::Trivalency { choices, rng_seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*rng_seed);
                (0..graph.arc_count())
                    .map(|_| *choices.choose(&mut rng).expect("validated nonempty"))
                    .collect()
            }
        };
        Ok(WeightedGraph {
            graph,
            prob,
            model: Some(model),
        })
    }

    /// Uses caller-supplied probabilities, aligned with `graph.arcs()`.
    pub fn with_probabilities(graph: Arc<Graph>, prob: Vec<f64>) -> Result<Self, ProbabilityError> {
        if prob.len() != graph.arc_count() {
            return Err(ProbabilityError::LengthMismatch {
                expected: graph.arc_count(),
                got: prob.len(),
            });
        }
        if let Some(&p) = prob.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ProbabilityError::ConstantOutOfRange(p));
        }
        Ok(WeightedGraph {
            graph,
            prob,
            model: None,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn probability(&self, arc: ArcId) -> f64 {
        self.prob[arc]
    }

    pub fn model(&self) -> Option<&ProbabilityModel> {
        self.model.as_ref()
    }

    /// `(target, p)` for every arc leaving `u`, in target order.
    pub fn out_arcs(&self, u: VertexId) -> impl Iterator<Item = (ArcId, VertexId, f64)> + '_ {
        self.graph
            .out_range(u)
            .map(move |a| (a, self.graph.arcs()[a].1, self.prob[a]))
    }
}
