//! Architecture graphs, canonical edge ordering and all-pairs distances.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ArchError;

/// Undirected, connected coupling graph of a device.
///
/// Edges are stored canonically (min index first) and sorted
/// lexicographically; that order is the coordinate system used by
/// recommendation distributions and policy models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchGraph {
    name: String,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    /// edge index by (u, v) with u < v, dense lookup
    edge_lookup: Vec<Option<usize>>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    name: String,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl ArchGraph {
    pub fn new(name: impl Into<String>, num_nodes: usize, raw_edges: &[(usize, usize)]) -> Result<Self, ArchError> {
        let name = name.into();
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(raw_edges.len());
        for &(u, v) in raw_edges {
            if u == v {
                return Err(ArchError::SelfLoop { node: u });
            }
            if u >= num_nodes || v >= num_nodes {
                return Err(ArchError::NodeOutOfRange { u, v, num_nodes });
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(ArchError::DuplicateEdge { u: w[0].0, v: w[0].1 });
        }

        let mut edge_lookup = vec![None; num_nodes * num_nodes];
        let mut adjacency = vec![Vec::new(); num_nodes];
        for (i, &(u, v)) in edges.iter().enumerate() {
            edge_lookup[u * num_nodes + v] = Some(i);
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }

        let g = ArchGraph { name, num_nodes, edges, edge_lookup, adjacency };
        if num_nodes > 1 && !g.is_connected() {
            return Err(ArchError::Disconnected { name: g.name });
        }
        Ok(g)
    }

    /// Grid with column-major numbering: node `rows * c + r` sits in column
    /// `c`, row `r`; edges connect orthogonal neighbors.
    pub fn grid(rows: usize, cols: usize) -> Result<Self, ArchError> {
        if rows == 0 || cols == 0 {
            return Err(ArchError::ZeroDimension { rows, cols });
        }
        let node = |r: usize, c: usize| rows * c + r;
        let mut edges = Vec::new();
        for c in 0..cols {
            for r in 0..rows {
                if r + 1 < rows {
                    edges.push((node(r, c), node(r + 1, c)));
                }
                if c + 1 < cols {
                    edges.push((node(r, c), node(r, c + 1)));
                }
            }
        }
        Self::new(format!("grid_{rows}x{cols}"), rows * cols, &edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ArchError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ArchError> {
        let file: TopologyFile = serde_json::from_str(text)?;
        Self::new(file.name, file.num_nodes, &file.edges)
    }

    pub fn to_json(&self) -> String {
        let file = TopologyFile {
            name: self.name.clone(),
            num_nodes: self.num_nodes,
            edges: self.edges.clone(),
        };
        serde_json::to_string_pretty(&file).expect("topology serialization")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_index(u, v).is_ok()
    }

    /// Position of the unordered edge (u, v) in canonical order.
    pub fn edge_index(&self, u: usize, v: usize) -> Result<usize, ArchError> {
        let (a, b) = (u.min(v), u.max(v));
        if a >= self.num_nodes || b >= self.num_nodes {
            return Err(ArchError::NonEdge { u, v });
        }
        self.edge_lookup[a * self.num_nodes + b].ok_or(ArchError::NonEdge { u, v })
    }

    /// FNV-1a over the canonical edge list; binds models to one graph.
    pub fn edge_list_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        mix(self.num_nodes as u64);
        for &(u, v) in &self.edges {
            mix(u as u64);
            mix(v as u64);
        }
        h
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_nodes];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.num_nodes
    }
}

/// All-pairs hop counts, computed by BFS from every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    pub fn new(g: &ArchGraph) -> Self {
        let n = g.num_nodes();
        let mut dist = vec![u32::MAX; n * n];
        for start in 0..n {
            let row = &mut dist[start * n..(start + 1) * n];
            row[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in g.neighbors(v) {
                    if row[w] == u32::MAX {
                        row[w] = row[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        DistanceMatrix { n, dist }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.dist[u * self.n + v]
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }
}

/// Bundled device topologies, embedded so routing works without data paths.
pub mod devices {
    use super::ArchGraph;

    pub const TOKYO_JSON: &str = include_str!("../data/tokyo.json");
    pub const GUADALUPE_JSON: &str = include_str!("../data/guadalupe.json");
    pub const SYCAMORE_JSON: &str = include_str!("../data/sycamore.json");

    /// IBM Q Tokyo, 20 qubits.
    pub fn tokyo() -> ArchGraph {
        ArchGraph::from_json(TOKYO_JSON).expect("bundled tokyo topology")
    }

    /// IBM Q Guadalupe, 16 qubits, heavy-hex.
    pub fn guadalupe() -> ArchGraph {
        ArchGraph::from_json(GUADALUPE_JSON).expect("bundled guadalupe topology")
    }

    /// Google Sycamore, 53 qubits.
    pub fn sycamore() -> ArchGraph {
        ArchGraph::from_json(SYCAMORE_JSON).expect("bundled sycamore topology")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_2x3_shape() {
        let g = ArchGraph::grid(2, 3).unwrap();
        assert_eq!(g.num_nodes(), 6);
        assert_eq!(g.num_edges(), 7);
        assert!(g.has_edge(1, 3));
        assert!(g.has_edge(3, 5));
        let d = DistanceMatrix::new(&g);
        assert_eq!(d.get(1, 5), 2);
        assert_eq!(d.get(0, 5), 3);
    }

    #[test]
    fn grid_4x4_shape() {
        let g = ArchGraph::grid(4, 4).unwrap();
        assert_eq!(g.num_nodes(), 16);
        assert_eq!(g.num_edges(), 24);
    }

    #[test]
    fn degenerate_grids() {
        let g = ArchGraph::grid(1, 1).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.num_edges(), 0);
        assert!(ArchGraph::grid(0, 3).is_err());
    }

    #[test]
    fn edge_index_is_canonical() {
        let g = ArchGraph::grid(2, 3).unwrap();
        assert_eq!(g.edge_index(0, 1).unwrap(), 0);
        assert_eq!(g.edge_index(5, 3).unwrap(), g.edge_index(3, 5).unwrap());
        assert!(g.edge_index(0, 5).is_err());
        // bijection over [0, |E|)
        let mut seen = vec![false; g.num_edges()];
        for &(u, v) in g.edges() {
            let i = g.edge_index(u, v).unwrap();
            assert!(!seen[i]);
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(matches!(
            ArchGraph::new("g", 2, &[(0, 0)]),
            Err(ArchError::SelfLoop { node: 0 })
        ));
        assert!(matches!(
            ArchGraph::new("g", 3, &[(0, 1), (1, 0), (1, 2)]),
            Err(ArchError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            ArchGraph::new("g", 4, &[(0, 1), (2, 3)]),
            Err(ArchError::Disconnected { .. })
        ));
    }

    #[test]
    fn self_loop_in_file() {
        let text = r#"{"name":"bad","num_nodes":2,"edges":[[0,0]]}"#;
        assert!(matches!(ArchGraph::from_json(text), Err(ArchError::SelfLoop { node: 0 })));
    }

    #[test]
    fn bundled_devices() {
        let tokyo = devices::tokyo();
        assert_eq!(tokyo.num_nodes(), 20);
        assert_eq!(tokyo.num_edges(), 43);
        let guadalupe = devices::guadalupe();
        assert_eq!(guadalupe.num_nodes(), 16);
        assert_eq!(guadalupe.num_edges(), 16);
        let sycamore = devices::sycamore();
        assert_eq!(sycamore.num_nodes(), 53);
        assert_eq!(sycamore.num_edges(), 86);
    }

    #[test]
    fn device_degree_histograms() {
        let degrees = |g: &ArchGraph| {
            let mut h = std::collections::BTreeMap::new();
            for v in 0..g.num_nodes() {
                *h.entry(g.neighbors(v).len()).or_insert(0usize) += 1;
            }
            h
        };
        let tokyo = degrees(&devices::tokyo());
        assert_eq!(tokyo.values().sum::<usize>(), 20);
        assert_eq!(tokyo.iter().map(|(d, n)| d * n).sum::<usize>(), 2 * 43);
        let guadalupe = degrees(&devices::guadalupe());
        assert_eq!(guadalupe.get(&1), Some(&4));
        assert_eq!(guadalupe.get(&2), Some(&8));
        assert_eq!(guadalupe.get(&3), Some(&4));
        let sycamore = degrees(&devices::sycamore());
        assert_eq!(sycamore.iter().map(|(d, n)| d * n).sum::<usize>(), 2 * 86);
    }

    #[test]
    fn distance_matrix_properties() {
        for g in [ArchGraph::grid(3, 4).unwrap(), devices::tokyo(), devices::guadalupe()] {
            let d = DistanceMatrix::new(&g);
            let n = g.num_nodes();
            for u in 0..n {
                assert_eq!(d.get(u, u), 0);
                for v in 0..n {
                    assert_eq!(d.get(u, v), d.get(v, u));
                    assert_eq!(d.get(u, v) == 1, g.has_edge(u, v));
                }
            }
        }
    }
}
