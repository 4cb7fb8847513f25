use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use infmax::advisor::{suggest, SuggestInput};
use infmax::diffusion::{estimate_spread, SeedSet};
use infmax::graph::{Directedness, Graph, VertexId};
use infmax::grid::{density_matrix, Grid};
use infmax::layout::Layout;
use infmax::prob::{ProbabilityModel, WeightedGraph};
use infmax::seeds::{highdeg, random_seeds, sdisc};

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let v = 0..n as VertexId;
        prop::collection::vec((v.clone(), v), 1..(4 * n))
            .prop_filter_map("needs a non-loop arc", move |arcs| {
                Graph::from_arcs(n, arcs).ok().filter(|g| g.arc_count() > 0)
            })
    })
}

fn arb_points(n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec(
        (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| [x, y]),
        n,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip(g in arb_graph(30)) {
        let parsed = Graph::parse_edge_list(g.to_edge_list().as_bytes(), Directedness::Directed).unwrap();
        let relabeled: Vec<(VertexId, VertexId)> = parsed
            .arcs()
            .iter()
            .map(|&(u, v)| (parsed.label_of(u) as VertexId, parsed.label_of(v) as VertexId))
            .collect();
        prop_assert_eq!(relabeled, g.arcs().to_vec());
    }

    #[test]
    fn weighted_cascade_in_probabilities_sum_to_one(g in arb_graph(30)) {
        let wg = WeightedGraph::assign(Arc::new(g), ProbabilityModel::WeightedCascade).unwrap();
        for v in wg.graph().vertices() {
            let arcs = wg.graph().in_arcs(v);
            if !arcs.is_empty() {
                let total: f64 = arcs.iter().map(|&(_, a)| wg.probability(a)).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn estimates_are_reproducible(g in arb_graph(25), master in any::<u64>()) {
        let n = g.node_count();
        let wg = WeightedGraph::assign(Arc::new(g), ProbabilityModel::Constant { p: 0.3 }).unwrap();
        let seeds = SeedSet::exact(vec![0], "test", n).unwrap();
        let a = estimate_spread(&wg, &seeds, 40, master).unwrap();
        let b = estimate_spread(&wg, &seeds, 40, master).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spread_lies_between_seed_count_and_node_count(g in arb_graph(25), k in 1usize..4) {
        let n = g.node_count();
        let k = k.min(n);
        let seeds = highdeg(&g, k).unwrap();
        let wg = WeightedGraph::assign(Arc::new(g), ProbabilityModel::Constant { p: 0.5 }).unwrap();
        let agg = estimate_spread(&wg, &seeds, 30, 1).unwrap();
        prop_assert!(agg.spread_mean >= k as f64 - 1e-9);
        prop_assert!(agg.spread_mean <= n as f64 + 1e-9);
    }

    #[test]
    fn greedy_selections_are_nested(g in arb_graph(30), k in 1usize..6) {
        let k = k.min(g.node_count() - 1);
        let small: BTreeSet<_> = sdisc(&g, k).unwrap().seeds().iter().copied().collect();
        let large: BTreeSet<_> = sdisc(&g, k + 1).unwrap().seeds().iter().copied().collect();
        prop_assert!(small.is_subset(&large));
        let small: BTreeSet<_> = highdeg(&g, k).unwrap().seeds().iter().copied().collect();
        let large: BTreeSet<_> = highdeg(&g, k + 1).unwrap().seeds().iter().copied().collect();
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn first_sdisc_pick_is_the_top_degree_vertex(g in arb_graph(30)) {
        prop_assert_eq!(sdisc(&g, 1).unwrap().seeds().to_vec(), highdeg(&g, 1).unwrap().seeds().to_vec());
    }

    #[test]
    fn grid_partitions_every_vertex(points in arb_points(60), m in 1usize..40) {
        let layout = Layout::from_positions(points);
        let grid = Grid::build(&layout, m).unwrap();
        let mut seen = vec![0u32; layout.positions.len()];
        for cell in grid.cells() {
            for &v in grid.members(cell) {
                seen[v as usize] += 1;
                prop_assert_eq!(grid.cell_of(v), cell);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(density_matrix(&grid).total(), 60);
    }

    #[test]
    fn suggestions_are_balanced_and_well_formed(
        g in arb_graph(40),
        points in arb_points(40),
        m in 1usize..6,
        n in 1usize..8,
    ) {
        let nodes = g.node_count();
        let layout = Layout::from_positions(points[..nodes].to_vec());
        let grid = Grid::build(&layout, m).unwrap();
        let k = (nodes / 3).max(1);
        let seeds = sdisc(&g, k).unwrap();
        let wg = WeightedGraph::assign(Arc::new(g), ProbabilityModel::WeightedCascade).unwrap();
        let agg = estimate_spread(&wg, &seeds, 20, 3).unwrap();
        let s = suggest(SuggestInput { graph: wg.graph(), grid: &grid, agg: &agg, seeds: &seeds }, n).unwrap();
        prop_assert_eq!(s.removals.len(), s.promotions.len());
        prop_assert!(s.removals.len() <= n);
        prop_assert_eq!(s.truncated, s.removals.len() < n);
        for c in &s.removals {
            prop_assert!(seeds.contains(c.vertex));
        }
        for c in &s.promotions {
            prop_assert!(!seeds.contains(c.vertex));
        }
        let unique: BTreeSet<_> = s.removals.iter().chain(&s.promotions).map(|c| c.vertex).collect();
        prop_assert_eq!(unique.len(), 2 * s.removals.len());
    }
}

/// Pearson chi-square over single-seed draws: RANDOM should hit every vertex
/// equally often.
#[test]
fn random_selection_is_uniform() {
    let g = Graph::from_arcs(20, (0..19).map(|v| (v, v + 1))).unwrap();
    let draws = 10_000;
    let mut counts = [0u32; 20];
    for seed in 0..draws {
        counts[random_seeds(&g, 1, seed).unwrap().seeds()[0] as usize] += 1;
    }
    let expected = draws as f64 / 20.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 19 degrees of freedom, 0.1% critical value
    assert!(chi2 < 43.82, "chi-square {chi2:.2}, counts {counts:?}");
}
