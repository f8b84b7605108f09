//! Simple undirected networks.
//!
//! A [`Graph`] is built once (from an edge-list file or an explicit edge set)
//! and is immutable afterwards. Nodes are dense `0..n` indices; the textual
//! labels of the source file are kept for display.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Simple undirected graph: no self-loops, no parallel edges.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    labels: Vec<String>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("num_nodes", &self.num_nodes())
            .field("num_edges", &self.num_edges())
            .finish()
    }
}

impl Graph {
    /// Builds a graph on `n` nodes labelled `0..n` from index pairs.
    ///
    /// Duplicate edges (in either orientation) are collapsed; self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::from_labelled_edges(labels, edges.iter().copied())
    }

    fn from_labelled_edges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "graph needs at least one node".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::NodeOutOfRange { index: v, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop {
                    line: 0,
                    label: labels[a].clone(),
                });
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &set {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Graph {
            neighbors,
            edges: set.into_iter().collect(),
            labels,
        })
    }

    /// Graph with `n` isolated nodes.
    pub fn empty(n: usize) -> Result<Self> {
        Self::from_edges(n, &[])
    }

    /// Complete graph K_n.
    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_edges(n, &edges)
    }

    /// Path 0 - 1 - ... - (n-1).
    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(a, b)` with `a < b`, in increasing lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of node `i`. Panics if `i` is out of range.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check_node(i)?;
        Ok(self.neighbors[i].len())
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Adjacency entry a_ij.
    #[inline]
    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Index of the node carrying `label`, if any.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn check_node(&self, i: usize) -> Result<()> {
        if i < self.num_nodes() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index: i,
                n: self.num_nodes(),
            })
        }
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidParameter(
                "not a permutation of the node set".into(),
            ));
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(a, b)| (perm[a], perm[b]))
            .collect();
        Self::from_edges(n, &edges)
    }
}

/// Zachary's karate club network as a bundled edge list (1-based labels).
pub const KARATE_EDGE_LIST: &str = include_str!("../data/karate.txt");

/// The karate club network: 34 nodes, 78 edges.
pub fn karate_club() -> Graph {
    parse_edge_list(KARATE_EDGE_LIST).expect("bundled edge list is valid")
}

/// Parses a whitespace-delimited edge list.
///
/// Each non-blank line that does not start with `#` must hold exactly two
/// node labels. Labels are assigned indices in order of first appearance.
pub fn parse_edge_list<'a>(text: &'a str) -> Result<Graph> {
    let mut index: HashMap<&'a str, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected two node labels, found '{line}'"),
                })
            }
        };
        if a == b {
            return Err(Error::SelfLoop {
                line: lineno + 1,
                label: a.to_string(),
            });
        }
        let mut intern = |label: &'a str| -> usize {
            let next = labels.len();
            *index.entry(label).or_insert_with(|| {
                labels.push(label.to_string());
                next
            })
        };
        let ia = intern(a);
        let ib = intern(b);
        edges.push((ia, ib));
    }

    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    Graph::from_labelled_edges(labels, edges)
}
