//! Spring-electrical force-directed layout.
//!
//! Attraction between adjacent vertices is `d² / K` and repulsion between
//! every pair is `C·K² / d`, with `K` the natural spring length. Large
//! components approximate the repulsion with a Barnes–Hut quadtree. Each
//! weakly connected component is laid out on its own and the components
//! are shelf-packed so their bounding boxes never overlap.
//!
//! Forces are evaluated from the previous iteration's positions (Jacobi
//! style), which keeps the per-vertex work independent and the result
//! identical for a given seed whether or not it runs in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::run_seed;
use crate::graph::{Graph, VertexId};

pub const DEFAULT_ITERATIONS: usize = 500;
pub const SPRING_LENGTH: f64 = 1.0;
const REPULSION: f64 = 0.2;
const COOLING: f64 = 0.9;
const TOLERANCE: f64 = 1e-4;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutOptions {
    pub iterations: usize,
    pub rng_seed: u64,
    /// Components with more vertices than this use the quadtree.
    pub tree_threshold: usize,
    /// Barnes–Hut opening angle.
    pub theta: f64,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        LayoutOptions {
            iterations: DEFAULT_ITERATIONS,
            rng_seed: 0,
            tree_threshold: 2_000,
            theta: 0.9,
        }
    }
}

/// Vertex positions in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub positions: Vec<Point>,
    pub algorithm: String,
    pub iterations: usize,
    pub rng_seed: u64,
}

impl Layout {
    pub fn from_positions(positions: Vec<Point>) -> Self {
        Layout {
            positions,
            algorithm: "explicit".into(),
            iterations: 0,
            rng_seed: 0,
        }
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bounding_box(&self) -> [f64; 4] {
        bbox(self.positions.iter())
    }
}

fn bbox<'a>(points: impl Iterator<Item = &'a Point>) -> [f64; 4] {
    points.fold(
        [
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ],
        |b, p| {
            [
                b[0].min(p[0]),
                b[1].min(p[1]),
                b[2].max(p[0]),
                b[3].max(p[1]),
            ]
        },
    )
}

/// Lays out `graph` with the default options and the given budget and seed.
pub fn compute_layout(graph: &Graph, iterations: usize, rng_seed: u64) -> Layout {
    compute_layout_with(
        graph,
        &LayoutOptions {
            iterations,
            rng_seed,
            ..LayoutOptions::default()
        },
    )
}

pub fn compute_layout_with(graph: &Graph, opts: &LayoutOptions) -> Layout {
    let components = graph.weak_components();
    let mut placed: Vec<(Vec<VertexId>, Vec<Point>)> = components
        .into_iter()
        .enumerate()
        .map(|(i, members)| {
            let local = Component::new(graph, &members);
            let pos = local.layout(opts, run_seed(opts.rng_seed, i as u64));
            (members, pos)
        })
        .collect();
    let mut positions = vec![[0.0, 0.0]; graph.node_count()];
    pack(&mut placed);
    for (members, pos) in placed {
        for (v, p) in members.into_iter().zip(pos) {
            positions[v as usize] = p;
        }
    }
    Layout {
        positions,
        algorithm: "spring-electrical".into(),
        iterations: opts.iterations,
        rng_seed: opts.rng_seed,
    }
}

/// Undirected simple adjacency over the vertices of one component.
struct Component {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Component {
    fn new(graph: &Graph, members: &[VertexId]) -> Self {
        let local = |v: VertexId| members.binary_search(&v).expect("member of component");
        let mut offsets = Vec::with_capacity(members.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for &v in members {
            let mut adj: Vec<usize> = graph
                .out_neighbors(v)
                .chain(graph.in_neighbors(v))
                .map(local)
                .collect();
            adj.sort_unstable();
            adj.dedup();
            neighbors.extend(adj);
            offsets.push(neighbors.len());
        }
        Component { offsets, neighbors }
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    fn layout(&self, opts: &LayoutOptions, seed: u64) -> Vec<Point> {
        let n = self.len();
        if n == 1 {
            return vec![[0.0, 0.0]];
        }
        let k = SPRING_LENGTH;
        let side = (n as f64).sqrt() * k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos: Vec<Point> = (0..n)
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
            .collect();
        let use_tree = n > opts.tree_threshold;
        let mut step = side * 0.1;
        let mut energy = f64::INFINITY;
        let mut progress = 0;
        for _ in 0..opts.iterations {
            let tree = use_tree.then(|| QuadTree::build(&pos));
            let forces: Vec<Point> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut f = self.attraction(i, &pos);
                    let r = match &tree {
                        Some(t) => t.repulsion(i, pos[i], opts.theta),
                        None => exact_repulsion(i, &pos),
                    };
                    f[0] += r[0];
                    f[1] += r[1];
                    f
                })
                .collect();
            let previous = energy;
            energy = 0.0;
            let mut moved = 0.0;
            for (p, f) in pos.iter_mut().zip(&forces) {
                let norm = f[0].hypot(f[1]);
                energy += norm * norm;
                if norm > 0.0 {
                    p[0] += step * f[0] / norm;
                    p[1] += step * f[1] / norm;
                    moved += step;
                }
            }
            // adaptive cooling
            if energy < previous {
                progress += 1;
                if progress >= 5 {
                    progress = 0;
                    step /= COOLING;
                }
            } else {
                progress = 0;
                step *= COOLING;
            }
            if moved / (n as f64) < TOLERANCE * k {
                break;
            }
        }
        pos
    }

    fn attraction(&self, i: usize, pos: &[Point]) -> Point {
        let mut f = [0.0, 0.0];
        for &j in self.neighbors(i) {
            let dx = pos[j][0] - pos[i][0];
            let dy = pos[j][1] - pos[i][1];
            let d = dx.hypot(dy);
            // d²/K along the unit vector
            f[0] += dx * d / SPRING_LENGTH;
            f[1] += dy * d / SPRING_LENGTH;
        }
        f
    }
}

fn repel(from: Point, to: Point, weight: f64, salt: usize) -> Point {
    let mut dx = from[0] - to[0];
    let mut dy = from[1] - to[1];
    let mut d2 = dx * dx + dy * dy;
    if d2 < 1e-18 {
        // coincident points: push apart along a fixed direction
        let angle = salt as f64 * 2.399_963_229_728_653;
        dx = angle.cos() * 1e-6;
        dy = angle.sin() * 1e-6;
        d2 = 1e-12;
    }
    // C·K²/d along the unit vector = C·K²·(dx, dy)/d²
    let s = weight * REPULSION * SPRING_LENGTH * SPRING_LENGTH / d2;
    [dx * s, dy * s]
}

fn exact_repulsion(i: usize, pos: &[Point]) -> Point {
    let mut f = [0.0, 0.0];
    for (j, &q) in pos.iter().enumerate() {
        if j != i {
            let r = repel(pos[i], q, 1.0, i.wrapping_mul(31) ^ j);
            f[0] += r[0];
            f[1] += r[1];
        }
    }
    f
}

const LEAF_CAPACITY: usize = 4;
const MAX_DEPTH: usize = 40;

struct Node {
    center: Point,
    half: f64,
    mass: f64,
    com: Point,
    children: Option<[usize; 4]>,
    points: Vec<usize>,
}

/// Barnes–Hut quadtree over one snapshot of positions.
struct QuadTree<'a> {
    nodes: Vec<Node>,
    pos: &'a [Point],
}

impl<'a> QuadTree<'a> {
    fn build(pos: &'a [Point]) -> Self {
        let b = bbox(pos.iter());
        let half = ((b[2] - b[0]).max(b[3] - b[1]) / 2.0).max(1e-9) * 1.0001;
        let root = Node {
            center: [(b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0],
            half,
            mass: 0.0,
            com: [0.0, 0.0],
            children: None,
            points: Vec::new(),
        };
        let mut tree = QuadTree {
            nodes: vec![root],
            pos,
        };
        for i in 0..pos.len() {
            tree.insert(0, i, 0);
        }
        tree.finish(0);
        tree
    }

    fn quadrant(&self, node: usize, p: Point) -> usize {
        let c = self.nodes[node].center;
        usize::from(p[0] >= c[0]) | (usize::from(p[1] >= c[1]) << 1)
    }

    fn insert(&mut self, node: usize, i: usize, depth: usize) {
        if let Some(children) = self.nodes[node].children {
            let q = self.quadrant(node, self.pos[i]);
            self.insert(children[q], i, depth + 1);
            return;
        }
        self.nodes[node].points.push(i);
        if self.nodes[node].points.len() > LEAF_CAPACITY && depth < MAX_DEPTH {
            let (center, half) = (self.nodes[node].center, self.nodes[node].half / 2.0);
            let mut children = [0; 4];
            for (q, child) in children.iter_mut().enumerate() {
                let sx = if q & 1 == 1 { half } else { -half };
                let sy = if q & 2 == 2 { half } else { -half };
                *child = self.nodes.len();
                self.nodes.push(Node {
                    center: [center[0] + sx, center[1] + sy],
                    half,
                    mass: 0.0,
                    com: [0.0, 0.0],
                    children: None,
                    points: Vec::new(),
                });
            }
            self.nodes[node].children = Some(children);
            for p in std::mem::take(&mut self.nodes[node].points) {
                let q = self.quadrant(node, self.pos[p]);
                self.insert(children[q], p, depth + 1);
            }
        }
    }

    fn finish(&mut self, node: usize) {
        let (mass, sx, sy) = match self.nodes[node].children {
            Some(children) => children.iter().fold((0.0, 0.0, 0.0), |acc, &c| {
                self.finish(c);
                let n = &self.nodes[c];
                (
                    acc.0 + n.mass,
                    acc.1 + n.com[0] * n.mass,
                    acc.2 + n.com[1] * n.mass,
                )
            }),
            None => self.nodes[node]
                .points
                .iter()
                .fold((0.0, 0.0, 0.0), |acc, &p| {
                    (acc.0 + 1.0, acc.1 + self.pos[p][0], acc.2 + self.pos[p][1])
                }),
        };
        let n = &mut self.nodes[node];
        n.mass = mass;
        if mass > 0.0 {
            n.com = [sx / mass, sy / mass];
        }
    }

    fn repulsion(&self, i: usize, p: Point, theta: f64) -> Point {
        let mut f = [0.0, 0.0];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.mass == 0.0 {
                continue;
            }
            match node.children {
                None => {
                    for &j in &node.points {
                        if j != i {
                            let r = repel(p, self.pos[j], 1.0, i.wrapping_mul(31) ^ j);
                            f[0] += r[0];
                            f[1] += r[1];
                        }
                    }
                }
                Some(children) => {
                    let d = (node.com[0] - p[0]).hypot(node.com[1] - p[1]);
                    if d > 0.0 && 2.0 * node.half / d < theta {
                        let r = repel(p, node.com, node.mass, id);
                        f[0] += r[0];
                        f[1] += r[1];
                    } else {
                        stack.extend(children.iter().rev());
                    }
                }
            }
        }
        f
    }
}

/// Shelf-packs component layouts left to right, wrapping rows.
fn pack(components: &mut [(Vec<VertexId>, Vec<Point>)]) {
    let gap = SPRING_LENGTH;
    let mut boxes: Vec<(usize, f64, f64)> = Vec::with_capacity(components.len());
    for (idx, (_, pos)) in components.iter_mut().enumerate() {
        let b = bbox(pos.iter());
        for p in pos.iter_mut() {
            p[0] -= b[0];
            p[1] -= b[1];
        }
        boxes.push((idx, b[2] - b[0], b[3] - b[1]));
    }
    // tallest first; ties keep component order (smallest member first)
    boxes.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    let area: f64 = boxes.iter().map(|&(_, w, h)| (w + gap) * (h + gap)).sum();
    let widest = boxes.iter().map(|&(_, w, _)| w).fold(0.0, f64::max);
    let row_width = (area.sqrt() * 1.2).max(widest);
    let (mut x, mut y, mut row_height) = (0.0f64, 0.0f64, 0.0f64);
    for (idx, w, h) in boxes {
        if x > 0.0 && x + w > row_width {
            x = 0.0;
            y += row_height + gap;
            row_height = 0.0;
        }
        for p in components[idx].1.iter_mut() {
            p[0] += x;
            p[1] += y;
        }
        x += w + gap;
        row_height = row_height.max(h);
    }
}
