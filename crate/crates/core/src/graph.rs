//! Directed graphs with dense vertex ids and CSR adjacency.
//!
//! Arcs are kept sorted by `(source, target)`, so the position of an arc in
//! [`Graph::arcs`] doubles as its index into per-arc arrays such as the
//! activation probabilities of a [`WeightedGraph`](crate::prob::WeightedGraph).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub type VertexId = u32;
pub type ArcId = usize;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected two integer vertex labels, found {content:?}")]
    Malformed { line: usize, content: String },
    #[error("edge list contains no arcs")]
    Empty,
    #[error("arc ({0}, {1}) references a vertex outside 0..{2}")]
    VertexOutOfRange(u64, u64, usize),
}

/// How to interpret the lines of an edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Directedness {
    Directed,
    /// Every line `u v` becomes the two arcs `u -> v` and `v -> u`.
    UndirectedAsBidirectional,
}

impl std::str::FromStr for Directedness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "directed" => Ok(Directedness::Directed),
            "undirected" | "undirected-as-bidirectional" => {
                Ok(Directedness::UndirectedAsBidirectional)
            }
            other => Err(format!(
                "unknown directedness {other:?} (expected directed or undirected)"
            )),
        }
    }
}

/// Per-vertex degree counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegreeStats {
    pub in_degree: u32,
    pub out_degree: u32,
    pub total_degree: u32,
}

/// Counters describing what was dropped while building a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BuildReport {
    pub collapsed_duplicates: usize,
    pub dropped_self_loops: usize,
}

/// Immutable simple directed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    arcs: Vec<(VertexId, VertexId)>,
    out_offsets: Vec<usize>,
    in_offsets: Vec<usize>,
    // (source, arc id) per incoming arc, grouped by target
    in_arcs: Vec<(VertexId, ArcId)>,
    labels: Option<Vec<u64>>,
    report: BuildReport,
}

impl Graph {
    /// Builds a graph over vertices `0..node_count`. Self-loops are dropped and
    /// duplicate arcs collapsed; both are counted in [`Graph::build_report`].
    pub fn from_arcs<I>(node_count: usize, arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut report = BuildReport::default();
        let mut list = Vec::new();
        for (u, v) in arcs {
            if u as usize >= node_count || v as usize >= node_count {
                return Err(GraphError::VertexOutOfRange(u as u64, v as u64, node_count));
            }
            if u == v {
                report.dropped_self_loops += 1;
                continue;
            }
            list.push((u, v));
        }
        list.sort_unstable();
        let before = list.len();
        list.dedup();
        report.collapsed_duplicates = before - list.len();

        let mut out_offsets = vec![0usize; node_count + 1];
        let mut in_offsets = vec![0usize; node_count + 1];
        for &(u, v) in &list {
            out_offsets[u as usize + 1] += 1;
            in_offsets[v as usize + 1] += 1;
        }
        for i in 0..node_count {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut in_arcs = vec![(0, 0); list.len()];
        let mut cursor = in_offsets.clone();
        // arcs are sorted by source, so each in-list ends up sorted by source
        for (id, &(u, v)) in list.iter().enumerate() {
            in_arcs[cursor[v as usize]] = (u, id);
            cursor[v as usize] += 1;
        }
        Ok(Graph {
            node_count,
            arcs: list,
            out_offsets,
            in_offsets,
            in_arcs,
            labels: None,
            report,
        })
    }

    /// Parses a whitespace-separated edge list. Lines starting with `#` or `%`
    /// are comments. External labels are remapped to dense ids in ascending
    /// label order.
    pub fn parse_edge_list<R: Read>(
        reader: R,
        directedness: Directedness,
    ) -> Result<Self, GraphError> {
        let mut pairs = Vec::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| GraphError::Io {
                path: PathBuf::from("<input>"),
                source,
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let parse = |f: Option<&str>| f.and_then(|s| s.parse::<u64>().ok());
            match (parse(fields.next()), parse(fields.next())) {
                (Some(u), Some(v)) => pairs.push((u, v)),
                _ => {
                    return Err(GraphError::Malformed {
                        line: line_no,
                        content: line.clone(),
                    })
                }
            }
        }
        if pairs.is_empty() {
            return Err(GraphError::Empty);
        }

        let labels: Vec<u64> = pairs
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let id_of = |label: u64| labels.binary_search(&label).unwrap() as VertexId;
        let mut arcs = Vec::with_capacity(pairs.len() * 2);
        for &(u, v) in &pairs {
            arcs.push((id_of(u), id_of(v)));
            if directedness == Directedness::UndirectedAsBidirectional {
                arcs.push((id_of(v), id_of(u)));
            }
        }
        let mut graph = Graph::from_arcs(labels.len(), arcs)?;
        if graph.arcs.is_empty() {
            return Err(GraphError::Empty);
        }
        graph.labels = Some(labels);
        Ok(graph)
    }

    /// Reads an edge list from disk.
    pub fn load(path: impl AsRef<Path>, directedness: Directedness) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Graph::parse_edge_list(file, directedness).map_err(|e| match e {
            GraphError::Io { source, .. } => GraphError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    /// Serializes the arc set as a directed edge list over internal ids.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.arcs.len() * 12);
        let _ = writeln!(
            out,
            "# nodes: {} arcs: {}",
            self.node_count,
            self.arcs.len()
        );
        for &(u, v) in &self.arcs {
            let _ = writeln!(out, "{u}\t{v}");
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// All arcs, sorted by `(source, target)`.
    pub fn arcs(&self) -> &[(VertexId, VertexId)] {
        &self.arcs
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.node_count as VertexId
    }

    /// Out-neighbors of `v` in ascending order.
    pub fn out_neighbors(&self, v: VertexId) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        self.arcs[self.out_range(v)].iter().map(|&(_, t)| t)
    }

    /// Arc ids leaving `v`, ordered by target.
    pub fn out_range(&self, v: VertexId) -> std::ops::Range<ArcId> {
        self.out_offsets[v as usize]..self.out_offsets[v as usize + 1]
    }

    /// `(source, arc id)` for every arc entering `v`, ordered by source.
    pub fn in_arcs(&self, v: VertexId) -> &[(VertexId, ArcId)] {
        &self.in_arcs[self.in_offsets[v as usize]..self.in_offsets[v as usize + 1]]
    }

    pub fn in_neighbors(&self, v: VertexId) -> impl ExactSizeIterator<Item = VertexId> + '_ {
        self.in_arcs(v).iter().map(|&(s, _)| s)
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_offsets[v as usize + 1] - self.out_offsets[v as usize]
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        self.in_offsets[v as usize + 1] - self.in_offsets[v as usize]
    }

    pub fn total_degree(&self, v: VertexId) -> usize {
        self.in_degree(v) + self.out_degree(v)
    }

    pub fn degree_stats(&self) -> Vec<DegreeStats> {
        self.vertices()
            .map(|v| DegreeStats {
                in_degree: self.in_degree(v) as u32,
                out_degree: self.out_degree(v) as u32,
                total_degree: self.total_degree(v) as u32,
            })
            .collect()
    }

    /// Arc id of `(u, v)`, if present.
    pub fn find_arc(&self, u: VertexId, v: VertexId) -> Option<ArcId> {
        let range = self.out_range(u);
        let start = range.start;
        self.arcs[range]
            .binary_search_by_key(&v, |&(_, t)| t)
            .ok()
            .map(|i| start + i)
    }

    /// External label of each dense id, when the graph was parsed from a file.
    pub fn labels(&self) -> Option<&[u64]> {
        self.labels.as_deref()
    }

    pub fn label_of(&self, v: VertexId) -> u64 {
        self.labels
            .as_ref()
            .map_or(v as u64, |labels| labels[v as usize])
    }

    pub fn build_report(&self) -> BuildReport {
        self.report
    }

    /// Weakly connected components, each sorted, ordered by smallest member.
    pub fn weak_components(&self) -> Vec<Vec<VertexId>> {
        let n = self.node_count;
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start as VertexId];
            comp[start] = id;
            stack.push(start as VertexId);
            while let Some(u) = stack.pop() {
                for w in self.out_neighbors(u).chain(self.in_neighbors(u)) {
                    if comp[w as usize] == usize::MAX {
                        comp[w as usize] = id;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, d: Directedness) -> Result<Graph, GraphError> {
        Graph::parse_edge_list(text.as_bytes(), d)
    }

    #[test]
    fn triangle_directed() {
        let g = parse("0 1\n1 2\n2 0\n", Directedness::Directed).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.arc_count(), 3);
    }

    #[test]
    fn undirected_doubles_arcs_and_collapses_duplicates() {
        let g = parse(
            "# header\n0 1\n1 0\n1 2\n",
            Directedness::UndirectedAsBidirectional,
        )
        .unwrap();
        assert_eq!(g.arc_count(), 4);
        assert_eq!(g.build_report().collapsed_duplicates, 2);
    }

    #[test]
    fn labels_are_remapped_in_ascending_order() {
        let g = parse("100 7\n7 42\n", Directedness::Directed).unwrap();
        assert_eq!(g.labels().unwrap(), &[7, 42, 100]);
        assert_eq!(g.arcs(), &[(0, 1), (2, 0)]);
        assert_eq!(g.label_of(2), 100);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("0 1\n# ok\n1 x\n", Directedness::Directed).unwrap_err();
        assert!(
            matches!(err, GraphError::Malformed { line: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn single_token_line_is_malformed() {
        assert!(matches!(
            parse("5\n", Directedness::Directed),
            Err(GraphError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn empty_and_self_loop_only_inputs_are_rejected() {
        assert!(matches!(
            parse("# nothing\n\n", Directedness::Directed),
            Err(GraphError::Empty)
        ));
        assert!(matches!(
            parse("3 3\n", Directedness::Directed),
            Err(GraphError::Empty)
        ));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = Graph::load("/definitely/not/here.txt", Directedness::Directed).unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.txt"));
    }

    #[test]
    fn star_degrees() {
        let arcs = (1..=5).flat_map(|l| [(0, l), (l, 0)]);
        let g = Graph::from_arcs(6, arcs).unwrap();
        let d = g.degree_stats();
        assert_eq!(d[0].total_degree, 10);
        assert!(d[1..].iter().all(|s| s.total_degree == 2));
    }

    #[test]
    fn isolated_vertex_has_zero_degrees() {
        let g = Graph::from_arcs(3, [(0, 1)]).unwrap();
        assert_eq!(g.degree_stats()[2], DegreeStats::default());
    }

    #[test]
    fn path_in_and_out_degrees() {
        let g = Graph::from_arcs(3, [(0, 1), (1, 2)]).unwrap();
        let d = g.degree_stats();
        let outs: Vec<_> = d.iter().map(|s| s.out_degree).collect();
        let ins: Vec<_> = d.iter().map(|s| s.in_degree).collect();
        assert_eq!(outs, [1, 1, 0]);
        assert_eq!(ins, [0, 1, 1]);
    }

    #[test]
    fn out_of_range_endpoint_is_rejected() {
        assert!(Graph::from_arcs(2, [(0, 2)]).is_err());
    }

    #[test]
    fn find_arc_and_in_arcs_agree() {
        let g = Graph::from_arcs(4, [(2, 3), (0, 3), (1, 3), (0, 1)]).unwrap();
        for &(s, id) in g.in_arcs(3) {
            assert_eq!(g.find_arc(s, 3), Some(id));
            assert_eq!(g.arcs()[id], (s, 3));
        }
        assert_eq!(g.in_neighbors(3).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(g.find_arc(3, 0), None);
    }

    #[test]
    fn components_are_weak() {
        let g = Graph::from_arcs(5, [(0, 1), (2, 1), (3, 4)]).unwrap();
        assert_eq!(g.weak_components(), vec![vec![0, 1, 2], vec![3, 4]]);
    }
}
