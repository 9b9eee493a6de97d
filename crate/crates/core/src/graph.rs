//! Immutable simple undirected graphs on vertices `0..n`.
//!
//! Every graph in the pipeline (the host, the core, the reservoir, the
//! residual, and all intermediate graphs) is a [`Graph`]. Graphs are values:
//! set algebra returns new graphs and never mutates.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Vertex index.
pub type Vertex = usize;

/// Unordered edge, always stored with the smaller endpoint first.
pub type Edge = (Vertex, Vertex);

/// Normalize a vertex pair into an [`Edge`].
#[inline]
pub fn edge(u: Vertex, v: Vertex) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Ceiling of a real threshold such as `ν·n`, tolerant to floating-point
/// noise (`0.3 * 10.0` must give 3, not 4). Negative values clamp to 0.
pub fn ceil_count(x: f64) -> usize {
    let c = (x - 1e-9).ceil();
    if c <= 0.0 {
        0
    } else {
        c as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    OutOfRange { vertex: Vertex, n: usize },
    #[error("loop edge at vertex {0}")]
    Loop(Vertex),
    #[error("duplicate edge ({}, {})", .0.0, .0.1)]
    DuplicateEdge(Edge),
    #[error("edge ({}, {}) is not in the graph", .0.0, .0.1)]
    MissingEdge(Edge),
    #[error("vertex {0} listed twice in vertex set")]
    RepeatedVertex(Vertex),
    #[error("edge list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Immutable simple undirected graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<Vertex>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("m", &self.edges.len())
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    /// Build a graph, deduplicating repeated edges. Rejects loops and
    /// out-of-range endpoints.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            check_vertex(u, n)?;
            check_vertex(v, n)?;
            if u == v {
                return Err(GraphError::Loop(u));
            }
            set.insert(edge(u, v));
        }
        Ok(Self::from_sorted(n, set.into_iter().collect()))
    }

    /// Build from an edge set already known to be valid.
    pub(crate) fn from_edge_set(n: usize, edges: &BTreeSet<Edge>) -> Self {
        Self::from_sorted(n, edges.iter().copied().collect())
    }

    pub(crate) fn from_sorted(n: usize, edges: Vec<Edge>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::from_sorted(n, edges)
    }

    /// The cycle `0-1-…-(n-1)-0`. Requires `n >= 3`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        let mut edges: Vec<Edge> = (0..n).map(|i| edge(i, (i + 1) % n)).collect();
        edges.sort_unstable();
        Self::from_sorted(n, edges)
    }

    /// Vertex-disjoint union; the vertices of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let off = self.n;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(u, v)| (u + off, v + off)));
        Self::from_sorted(self.n + other.n, edges)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical (sorted) order.
    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted neighbor list of `v`.
    #[inline]
    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    #[inline]
    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n && v < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// `Some(r)` when every vertex has degree `r`.
    pub fn regular_degree(&self) -> Option<usize> {
        let r = self.adj.first().map_or(0, Vec::len);
        self.adj.iter().all(|a| a.len() == r).then_some(r)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    pub fn edge_set(&self) -> BTreeSet<Edge> {
        self.edges.iter().copied().collect()
    }

    /// True when every edge of `self` is an edge of `other` on the same vertex set.
    pub fn is_spanning_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.edges.iter().all(|&(u, v)| other.has_edge(u, v))
    }

    /// Remove the edges `h`, all of which must be present.
    pub fn subtract(&self, h: &[Edge]) -> Result<Graph, GraphError> {
        let mut set = self.edge_set();
        for &(u, v) in h {
            check_vertex(u, self.n)?;
            check_vertex(v, self.n)?;
            if !set.remove(&edge(u, v)) {
                return Err(GraphError::MissingEdge(edge(u, v)));
            }
        }
        Ok(Self::from_edge_set(self.n, &set))
    }

    /// Add the edges `h`, none of which may already be present.
    pub fn union(&self, h: &[Edge]) -> Result<Graph, GraphError> {
        let mut set = self.edge_set();
        for &(u, v) in h {
            check_vertex(u, self.n)?;
            check_vertex(v, self.n)?;
            if u == v {
                return Err(GraphError::Loop(u));
            }
            if !set.insert(edge(u, v)) {
                return Err(GraphError::DuplicateEdge(edge(u, v)));
            }
        }
        Ok(Self::from_edge_set(self.n, &set))
    }

    /// Parse the `n m` / `u v` edge-list format. Duplicates, loops, unsorted
    /// pairs and a wrong edge count are rejected.
    pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header `n m`".into(),
        })?;
        let (n, m) = parse_pair(hline, header)?;
        let mut set = BTreeSet::new();
        for (line, text) in lines {
            let (u, v) = parse_pair(line, text)?;
            if u == v {
                return Err(GraphError::Loop(u));
            }
            if u > v {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected u < v, got {u} {v}"),
                });
            }
            check_vertex(v, n)?;
            if !set.insert((u, v)) {
                return Err(GraphError::DuplicateEdge((u, v)));
            }
        }
        if set.len() != m {
            return Err(GraphError::Parse {
                line: hline,
                msg: format!("header declares {m} edges, found {}", set.len()),
            });
        }
        Ok(Self::from_edge_set(n, &set))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

fn parse_pair(line: usize, text: &str) -> Result<(usize, usize), GraphError> {
    let mut it = text.split_ascii_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = it.next().ok_or_else(|| GraphError::Parse {
            line,
            msg: "expected two integers".into(),
        })?;
        tok.parse().map_err(|_| GraphError::Parse {
            line,
            msg: format!("not a non-negative integer: {tok:?}"),
        })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(GraphError::Parse {
            line,
            msg: "trailing tokens".into(),
        });
    }
    Ok((a, b))
}

#[inline]
pub(crate) fn check_vertex(v: Vertex, n: usize) -> Result<(), GraphError> {
    if v < n {
        Ok(())
    } else {
        Err(GraphError::OutOfRange { vertex: v, n })
    }
}

/// A set of distinct vertices, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct VertexSet {
    members: Vec<Vertex>,
}

impl VertexSet {
    /// Rejects repeated vertices and vertices `>= n`.
    pub fn new<I: IntoIterator<Item = Vertex>>(n: usize, members: I) -> Result<Self, GraphError> {
        let mut members: Vec<Vertex> = members.into_iter().collect();
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::RepeatedVertex(w[0]));
            }
        }
        if let Some(&last) = members.last() {
            check_vertex(last, n)?;
        }
        Ok(VertexSet { members })
    }

    pub fn empty() -> Self {
        VertexSet::default()
    }

    pub(crate) fn from_sorted(members: Vec<Vertex>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        VertexSet { members }
    }

    pub(crate) fn from_mask(mask: u64) -> Self {
        let members = (0..64).filter(|&i| mask >> i & 1 == 1).collect();
        VertexSet { members }
    }

    pub fn all(n: usize) -> Self {
        VertexSet {
            members: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.members
    }

    pub fn is_subset_of(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub(crate) fn check_range(&self, n: usize) -> Result<(), GraphError> {
        match self.members.last() {
            Some(&v) => check_vertex(v, n),
            None => Ok(()),
        }
    }

    pub(crate) fn indicator(&self, n: usize) -> Vec<bool> {
        let mut ind = vec![false; n];
        for v in self.iter() {
            ind[v] = true;
        }
        ind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_degrees() {
        let g = Graph::new(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn loop_rejected() {
        assert_eq!(Graph::new(2, [(0, 0)]), Err(GraphError::Loop(0)));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            Graph::new(2, [(0, 2)]),
            Err(GraphError::OutOfRange { vertex: 2, n: 2 })
        ));
    }

    #[test]
    fn k5_is_four_regular() {
        let pairs: Vec<_> = (0..5).flat_map(|u| (u + 1..5).map(move |v| (u, v))).collect();
        let g = Graph::new(5, pairs).unwrap();
        assert_eq!(g.regular_degree(), Some(4));
        assert_eq!(g, Graph::complete(5));
    }

    #[test]
    fn build_deduplicates() {
        let g = Graph::new(3, [(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn subtract_hamilton_cycle_from_k5() {
        let k5 = Graph::complete(5);
        let h: Vec<Edge> = (0..5).map(|i| edge(i, (i + 1) % 5)).collect();
        let rest = k5.subtract(&h).unwrap();
        assert_eq!(rest.regular_degree(), Some(2));
        assert_eq!(rest.n(), 5);
    }

    #[test]
    fn union_duplicate_rejected() {
        let t = Graph::cycle(3);
        assert_eq!(t.union(&[(1, 0)]), Err(GraphError::DuplicateEdge((0, 1))));
    }

    #[test]
    fn subtract_all_edges() {
        let c5 = Graph::cycle(5);
        let e = c5.edges().to_vec();
        assert_eq!(c5.subtract(&e).unwrap(), Graph::empty(5));
        assert_eq!(
            Graph::empty(5).subtract(&[(0, 1)]),
            Err(GraphError::MissingEdge((0, 1)))
        );
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::complete(4);
        let text = g.to_edge_list();
        assert!(text.starts_with("4 6\n0 1\n"));
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn edge_list_rejects_bad_input() {
        assert!(matches!(
            Graph::parse_edge_list("3 2\n0 1\n0 1\n"),
            Err(GraphError::DuplicateEdge((0, 1)))
        ));
        assert!(matches!(
            Graph::parse_edge_list("3 1\n1 1\n"),
            Err(GraphError::Loop(1))
        ));
        assert!(matches!(
            Graph::parse_edge_list("3 1\n2 1\n"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Graph::parse_edge_list("3 2\n0 1\n"),
            Err(GraphError::Parse { .. })
        ));
        assert!(matches!(
            Graph::parse_edge_list("3 1\n0 3\n"),
            Err(GraphError::OutOfRange { vertex: 3, n: 3 })
        ));
        assert!(Graph::parse_edge_list("").is_err());
    }

    #[test]
    fn ceil_count_tolerates_float_noise() {
        assert_eq!(ceil_count(0.3 * 10.0), 3);
        assert_eq!(ceil_count(0.8), 1);
        assert_eq!(ceil_count(2.5), 3);
        assert_eq!(ceil_count(0.0), 0);
        assert_eq!(ceil_count(-1.0), 0);
    }

    #[test]
    fn vertex_set_validation() {
        assert!(VertexSet::new(3, [0, 0]).is_err());
        assert!(VertexSet::new(3, [3]).is_err());
        let s = VertexSet::new(5, [3, 1]).unwrap();
        assert_eq!(s.as_slice(), &[1, 3]);
    }
}
