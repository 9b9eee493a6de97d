//! Walecki's decomposition of `K_n` (odd `n`) and the general
//! decomposition checker used by every other module.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{edge, Edge, Graph, Vertex};

/// Edge-disjoint Hamilton cycles, optionally with one perfect matching,
/// partitioning a host graph on `n` vertices.
///
/// Cycles are stored canonically (smallest vertex first, smaller of its two
/// neighbors second) and the cycle list is sorted, so equal decompositions
/// compare and serialize identically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decomposition {
    #[serde(rename = "host_n")]
    pub n: usize,
    pub cycles: Vec<Vec<Vertex>>,
    pub matching: Option<Vec<Edge>>,
}

/// Rotate and orient a cyclic sequence into canonical form.
pub fn canonical_cycle(cycle: &[Vertex]) -> Vec<Vertex> {
    let len = cycle.len();
    if len == 0 {
        return Vec::new();
    }
    let start = (0..len).min_by_key(|&i| cycle[i]).unwrap();
    let next = cycle[(start + 1) % len];
    let prev = cycle[(start + len - 1) % len];
    if len < 3 || next <= prev {
        (0..len).map(|k| cycle[(start + k) % len]).collect()
    } else {
        (0..len).map(|k| cycle[(start + len - k) % len]).collect()
    }
}

/// Edges of a cyclic vertex sequence.
pub fn cycle_edges(cycle: &[Vertex]) -> impl Iterator<Item = Edge> + '_ {
    let len = cycle.len();
    (0..len).map(move |i| edge(cycle[i], cycle[(i + 1) % len]))
}

impl Decomposition {
    pub fn new(n: usize, cycles: Vec<Vec<Vertex>>, matching: Option<Vec<Edge>>) -> Self {
        let mut cycles: Vec<Vec<Vertex>> = cycles.iter().map(|c| canonical_cycle(c)).collect();
        cycles.sort();
        let matching = matching.map(|m| {
            let mut m: Vec<Edge> = m.into_iter().map(|(u, v)| edge(u, v)).collect();
            m.sort_unstable();
            m
        });
        Decomposition { n, cycles, matching }
    }

    /// All edges of all parts, cycles first.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self.cycles.iter().flat_map(|c| cycle_edges(c)).collect();
        if let Some(m) = &self.matching {
            out.extend(m.iter().map(|&(u, v)| edge(u, v)));
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WaleckiError {
    #[error("Walecki's construction needs odd n >= 3, got {0}")]
    InvalidOrder(usize),
}

/// The zig-zag construction: vertex `n-1` is a hub, the other `n-1` vertices
/// sit on a circle, and the `(n-1)/2` cycles are the rotations of the path
/// `0, 1, n-2, 2, n-3, …` closed through the hub.
pub fn walecki_decomposition(n: usize) -> Result<Decomposition, WaleckiError> {
    if n < 3 || n % 2 == 0 {
        return Err(WaleckiError::InvalidOrder(n));
    }
    let ring = n - 1;
    let hub = n - 1;
    let mut zigzag = Vec::with_capacity(ring);
    zigzag.push(0);
    for k in 1..=ring / 2 {
        zigzag.push(k);
        if zigzag.len() < ring {
            zigzag.push(ring - k);
        }
    }
    let cycles = (0..ring / 2)
        .map(|shift| {
            std::iter::once(hub)
                .chain(zigzag.iter().map(|&x| (x + shift) % ring))
                .collect()
        })
        .collect();
    Ok(Decomposition::new(n, cycles, None))
}

/// First problem found while checking a decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Violation {
    HostMismatch { graph_n: usize, decomposition_n: usize },
    CycleLength { cycle: usize, len: usize },
    VertexOutOfRange { cycle: usize, vertex: Vertex },
    RepeatedVertex { cycle: usize, vertex: Vertex },
    EdgeNotInGraph { edge: Edge },
    EdgeReused { edge: Edge },
    MatchingNotPerfect { uncovered: Vec<Vertex> },
    Uncovered { missing: usize, example: Edge },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    pub violation: Option<Violation>,
}

impl Verdict {
    fn fail(v: Violation) -> Self {
        Verdict {
            valid: false,
            violation: Some(v),
        }
    }
}

/// Check that `d` partitions the edges of `g` into Hamilton cycles (and a
/// perfect matching if present).
pub fn verify_decomposition(g: &Graph, d: &Decomposition) -> Verdict {
    let n = g.n();
    if d.n != n {
        return Verdict::fail(Violation::HostMismatch {
            graph_n: n,
            decomposition_n: d.n,
        });
    }
    let mut used = BTreeSet::new();
    let mut take = |e: Edge| -> Option<Violation> {
        if !g.has_edge(e.0, e.1) {
            return Some(Violation::EdgeNotInGraph { edge: e });
        }
        if !used.insert(e) {
            return Some(Violation::EdgeReused { edge: e });
        }
        None
    };
    for (i, cycle) in d.cycles.iter().enumerate() {
        if cycle.len() != n || n < 3 {
            return Verdict::fail(Violation::CycleLength {
                cycle: i,
                len: cycle.len(),
            });
        }
        let mut seen = vec![false; n];
        for &v in cycle {
            if v >= n {
                return Verdict::fail(Violation::VertexOutOfRange { cycle: i, vertex: v });
            }
            if std::mem::replace(&mut seen[v], true) {
                return Verdict::fail(Violation::RepeatedVertex { cycle: i, vertex: v });
            }
        }
        for e in cycle_edges(cycle) {
            if let Some(v) = take(e) {
                return Verdict::fail(v);
            }
        }
    }
    if let Some(m) = &d.matching {
        let mut covered = vec![false; n];
        for &(u, v) in m {
            if u >= n || v >= n {
                return Verdict::fail(Violation::EdgeNotInGraph { edge: (u, v) });
            }
            if let Some(viol) = take(edge(u, v)) {
                return Verdict::fail(viol);
            }
            if covered[u] || covered[v] {
                let dup = if covered[u] { u } else { v };
                return Verdict::fail(Violation::MatchingNotPerfect { uncovered: vec![dup] });
            }
            covered[u] = true;
            covered[v] = true;
        }
        let uncovered: Vec<Vertex> = (0..n).filter(|&v| !covered[v]).collect();
        if !uncovered.is_empty() {
            return Verdict::fail(Violation::MatchingNotPerfect { uncovered });
        }
    }
    if used.len() != g.edge_count() {
        let example = *g.edges().iter().find(|e| !used.contains(e)).unwrap();
        return Verdict::fail(Violation::Uncovered {
            missing: g.edge_count() - used.len(),
            example,
        });
    }
    Verdict {
        valid: true,
        violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k3_is_one_cycle() {
        let d = walecki_decomposition(3).unwrap();
        assert_eq!(d.cycles, vec![vec![0, 1, 2]]);
        assert!(verify_decomposition(&Graph::complete(3), &d).valid);
    }

    #[test]
    fn k5_two_cycles() {
        let d = walecki_decomposition(5).unwrap();
        assert_eq!(d.cycles.len(), 2);
        assert_eq!(d.edges().len(), 10);
        assert!(verify_decomposition(&Graph::complete(5), &d).valid);
    }

    #[test]
    fn even_or_small_rejected() {
        assert_eq!(walecki_decomposition(4), Err(WaleckiError::InvalidOrder(4)));
        assert_eq!(walecki_decomposition(1), Err(WaleckiError::InvalidOrder(1)));
    }

    #[test]
    fn walecki_many_orders() {
        for n in (3..=61).step_by(2) {
            let d = walecki_decomposition(n).unwrap();
            assert_eq!(d.cycles.len(), (n - 1) / 2);
            let v = verify_decomposition(&Graph::complete(n), &d);
            assert!(v.valid, "n = {n}: {v:?}");
        }
    }

    #[test]
    fn canonical_form() {
        assert_eq!(canonical_cycle(&[3, 1, 4, 0, 2]), vec![0, 2, 3, 1, 4]);
        assert_eq!(canonical_cycle(&[2, 0, 1]), vec![0, 1, 2]);
        assert_eq!(canonical_cycle(&[1, 0, 2]), vec![0, 1, 2]);
    }

    #[test]
    fn reused_cycle_detected() {
        let c = vec![0, 1, 2, 3, 4];
        let d = Decomposition::new(5, vec![c.clone(), c], None);
        let v = verify_decomposition(&Graph::complete(5), &d);
        assert!(matches!(v.violation, Some(Violation::EdgeReused { .. })));
    }

    #[test]
    fn partial_cover_detected() {
        let d = Decomposition::new(5, vec![vec![0, 1, 2, 3, 4]], None);
        let v = verify_decomposition(&Graph::complete(5), &d);
        assert!(matches!(v.violation, Some(Violation::Uncovered { missing: 5, .. })));
    }

    #[test]
    fn bad_matching_detected() {
        let k4 = Graph::complete(4);
        let d = Decomposition::new(4, vec![vec![0, 1, 2, 3]], Some(vec![(0, 2)]));
        let v = verify_decomposition(&k4, &d);
        assert!(matches!(v.violation, Some(Violation::MatchingNotPerfect { .. })));
        let d = Decomposition::new(4, vec![vec![0, 1, 2, 3]], Some(vec![(0, 2), (1, 3)]));
        assert!(verify_decomposition(&k4, &d).valid);
        let k4_minus = k4.subtract(&[(0, 3)]).unwrap();
        let d = Decomposition::new(4, vec![], Some(vec![(0, 1), (2, 3)]));
        assert!(!verify_decomposition(&k4_minus, &d).valid);
    }

    #[test]
    fn json_shape() {
        let d = walecki_decomposition(3).unwrap();
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"host_n":3,"cycles":[[0,1,2]],"matching":null}"#
        );
        let d = Decomposition::new(2, vec![], Some(vec![(1, 0)]));
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"host_n":2,"cycles":[],"matching":[[0,1]]}"#
        );
    }
}
