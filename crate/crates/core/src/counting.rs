//! Exact counts for small graphs and the bound formulas they are compared
//! against. Counts are big integers; bounds are natural logarithms.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{for_each_decomposition, CompletionError};
use crate::graph::{Edge, Graph};
use crate::hamilton::{adjacency_masks, all_cycles, mask_connected, Flow};

/// Vertex cap of [`count_hamilton_cycles_exact`].
pub const HAMILTON_CAP: usize = 16;
/// Edge cap of [`count_decompositions_exact`] (36 = `K_9`).
pub const DECOMPOSITION_EDGE_CAP: usize = 36;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountError {
    #[error("exact count needs {what} <= {cap}, got {got}")]
    TooLarge { what: &'static str, cap: usize, got: usize },
    #[error("graph is not regular")]
    NotRegular,
    #[error("degree {0} is odd")]
    OddDegree(usize),
    #[error("invalid arguments: {0}")]
    Parameter(String),
}

/// Number of Hamilton cycles (as subgraphs) by dynamic programming over
/// vertex subsets: paths from vertex 0, closed at the end, halved for the
/// two directions.
pub fn count_hamilton_cycles_exact(g: &Graph) -> Result<BigUint, CountError> {
    let n = g.n();
    if n > HAMILTON_CAP {
        return Err(CountError::TooLarge {
            what: "n",
            cap: HAMILTON_CAP,
            got: n,
        });
    }
    if n < 3 {
        return Ok(BigUint::default());
    }
    // dp[mask][v]: paths 0 → v whose interior+end set (over 1..n) is `mask`
    let m = n - 1;
    let size = 1usize << m;
    let mut dp = vec![0u64; size * m];
    for &w in g.neighbors(0) {
        let j = w - 1;
        dp[(1 << j) * m + j] = 1;
    }
    let nbr: Vec<u32> = (1..n)
        .map(|v| g.neighbors(v).iter().filter(|&&w| w > 0).fold(0u32, |a, &w| a | 1 << (w - 1)))
        .collect();
    for mask in 1..size {
        for j in 0..m {
            let ways = dp[mask * m + j];
            if ways == 0 {
                continue;
            }
            let mut next = nbr[j] & !(mask as u32);
            while next != 0 {
                let k = next.trailing_zeros() as usize;
                next &= next - 1;
                dp[(mask | 1 << k) * m + k] += ways;
            }
        }
    }
    let full = size - 1;
    let closed: u128 = g
        .neighbors(0)
        .iter()
        .map(|&w| dp[full * m + (w - 1)] as u128)
        .sum();
    Ok(BigUint::from(closed / 2))
}

fn check_even_regular(g: &Graph) -> Result<usize, CountError> {
    let r = g.regular_degree().ok_or(CountError::NotRegular)?;
    if r % 2 == 1 {
        return Err(CountError::OddDegree(r));
    }
    Ok(r)
}

/// Number of unordered Hamiltonian decompositions, by canonical-order
/// enumeration (each next cycle passes through the smallest remaining edge).
pub fn count_decompositions_exact(g: &Graph) -> Result<BigUint, CountError> {
    count_decompositions_capped(g, DECOMPOSITION_EDGE_CAP)
}

pub fn count_decompositions_capped(g: &Graph, edge_cap: usize) -> Result<BigUint, CountError> {
    check_even_regular(g)?;
    if g.edge_count() > edge_cap {
        return Err(CountError::TooLarge {
            what: "edge count",
            cap: edge_cap,
            got: g.edge_count(),
        });
    }
    let mut count = 0u64;
    let done = for_each_decomposition(g, u64::MAX, |_| count += 1).map_err(|e| match e {
        CompletionError::TooLarge { n, cap } => CountError::TooLarge { what: "n", cap, got: n },
        other => CountError::Parameter(other.to_string()),
    })?;
    debug_assert!(done);
    Ok(BigUint::from(count))
}

/// Number of ordered decompositions (sequences of cycles), enumerated
/// directly with no canonical restriction. Equals the unordered count times
/// `(r/2)!`.
pub fn count_ordered_decompositions(g: &Graph) -> Result<BigUint, CountError> {
    check_even_regular(g)?;
    if g.edge_count() > DECOMPOSITION_EDGE_CAP {
        return Err(CountError::TooLarge {
            what: "edge count",
            cap: DECOMPOSITION_EDGE_CAP,
            got: g.edge_count(),
        });
    }
    if g.edge_count() == 0 {
        return Ok(BigUint::from(1u8));
    }
    let mut adj = adjacency_masks(g);
    Ok(BigUint::from(ordered_rec(&mut adj, g.edge_count())))
}

fn ordered_rec(adj: &mut Vec<u64>, remaining: usize) -> u128 {
    if remaining == 0 {
        return 1;
    }
    if !mask_connected(adj) {
        return 0;
    }
    let n = adj.len();
    let mut cycles = Vec::new();
    let mut budget = u64::MAX;
    all_cycles(adj, &mut budget, &mut |c| {
        cycles.push(c.to_vec());
        Flow::Continue
    });
    let mut total = 0;
    for c in cycles {
        let flip = |adj: &mut Vec<u64>| {
            for i in 0..n {
                let (a, b) = (c[i], c[(i + 1) % n]);
                adj[a] ^= 1u64 << b;
                adj[b] ^= 1u64 << a;
            }
        };
        flip(adj);
        total += ordered_rec(adj, remaining - n);
        flip(adj);
    }
    total
}

/// `ln(k!)` by summing logarithms.
pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Log of the permanent bound on Hamilton cycles of an `r`-regular graph:
/// `(n/r)·ln(r!)`.
pub fn bregman_log_bound(n: usize, r: usize) -> f64 {
    if r == 0 {
        return 0.0;
    }
    n as f64 / r as f64 * ln_factorial(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    /// `Σ_{k = r, r−2, …, 2} (n/k)·ln(k!)`.
    pub finite: f64,
    /// `(nr/2)·ln(r/e²)`.
    pub asymptotic: f64,
}

/// Upper bound on the log of the number of Hamiltonian decompositions of an
/// `r`-regular graph: multiply the Hamilton-cycle bounds of the successive
/// `k`-regular remainders.
pub fn decomposition_log_upper(n: usize, r: usize) -> Result<UpperBound, CountError> {
    if r % 2 == 1 {
        return Err(CountError::OddDegree(r));
    }
    if r < 2 || r >= n {
        return Err(CountError::Parameter(format!("need 2 <= r < n, got n = {n}, r = {r}")));
    }
    let finite = (1..=r / 2).map(|j| bregman_log_bound(n, 2 * j)).sum();
    let asymptotic = n as f64 * r as f64 / 2.0 * (r as f64 / std::f64::consts::E.powi(2)).ln();
    Ok(UpperBound { finite, asymptotic })
}

/// Lower bound `(1 − 5ε)·(rn/2)·ln r`; `ε = 0` gives the limiting exponent.
pub fn decomposition_log_lower(n: usize, r: usize, epsilon: f64) -> f64 {
    (1.0 - 5.0 * epsilon) * (r as f64 * n as f64 / 2.0) * (r as f64).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub n: usize,
    pub r: usize,
    pub epsilon: f64,
    /// Unordered Hamiltonian decompositions, as a decimal string.
    pub exact_count: Option<String>,
    /// Ordered decompositions, as a decimal string.
    pub ordered_count: Option<String>,
    pub hamilton_cycles: Option<String>,
    pub log_lower: f64,
    pub log_upper: Option<f64>,
    pub log_upper_asymptotic: Option<f64>,
    pub bregman_log: f64,
    pub methods: Vec<String>,
}

/// Bounds for `g`, plus exact counts when `exact` is set and the graph is
/// small enough.
pub fn count_report(g: &Graph, epsilon: f64, exact: bool) -> Result<CountReport, CountError> {
    let n = g.n();
    let r = g.regular_degree().ok_or(CountError::NotRegular)?;
    let upper = decomposition_log_upper(n, r).ok();
    let mut report = CountReport {
        n,
        r,
        epsilon,
        exact_count: None,
        ordered_count: None,
        hamilton_cycles: None,
        log_lower: decomposition_log_lower(n, r, epsilon),
        log_upper: upper.map(|u| u.finite),
        log_upper_asymptotic: upper.map(|u| u.asymptotic),
        bregman_log: bregman_log_bound(n, r),
        methods: vec!["bounds".into()],
    };
    if exact {
        report.hamilton_cycles = Some(count_hamilton_cycles_exact(g)?.to_string());
        report.methods.push("held_karp".into());
        let unordered = count_decompositions_exact(g)?;
        let ordered = count_ordered_decompositions(g)?;
        report.exact_count = Some(unordered.to_string());
        report.ordered_count = Some(ordered.to_string());
        report.methods.push("canonical_enumeration".into());
        report.methods.push("ordered_enumeration".into());
    }
    Ok(report)
}

/// All `r`-regular graphs on `n` vertices in which vertex 0 is adjacent to
/// `1..=r`. Every `r`-regular graph is isomorphic to at least one of them.
/// With `connected_only`, disconnected graphs are dropped.
pub fn regular_graph_corpus(n: usize, r: usize, connected_only: bool) -> Vec<Graph> {
    if r >= n || (n * r) % 2 == 1 {
        return Vec::new();
    }
    let pairs: Vec<Edge> = (1..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut deg = vec![0usize; n];
    deg[0] = r;
    for d in deg.iter_mut().take(r + 1).skip(1) {
        *d = 1;
    }
    let mut chosen: Vec<Edge> = (1..=r).map(|v| (0, v)).collect();
    let mut out = Vec::new();
    corpus_rec(n, r, &pairs, 0, &mut deg, &mut chosen, &mut |edges| {
        let g = Graph::new(n, edges.iter().copied()).expect("generated edges are valid");
        if !connected_only || g.is_connected() {
            out.push(g);
        }
    });
    out
}

fn corpus_rec(
    n: usize,
    r: usize,
    pairs: &[Edge],
    i: usize,
    deg: &mut [usize],
    chosen: &mut Vec<Edge>,
    emit: &mut dyn FnMut(&[Edge]),
) {
    if i == pairs.len() {
        if deg.iter().all(|&d| d == r) {
            emit(chosen);
        }
        return;
    }
    let (u, v) = pairs[i];
    // once all pairs at u are decided, u must be full
    if v == u + 1 && u >= 1 {
        let prev = u - 1;
        if prev >= 1 && deg[prev] != r {
            return;
        }
    }
    if deg[u] < r && deg[v] < r {
        deg[u] += 1;
        deg[v] += 1;
        chosen.push((u, v));
        corpus_rec(n, r, pairs, i + 1, deg, chosen, emit);
        chosen.pop();
        deg[u] -= 1;
        deg[v] -= 1;
    }
    // leaving (u, v) out is only possible if u can still fill up
    let remaining_for_u = n - 1 - v;
    if deg[u] + remaining_for_u >= r {
        corpus_rec(n, r, pairs, i + 1, deg, chosen, emit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn hamilton_counts() {
        assert_eq!(count_hamilton_cycles_exact(&Graph::complete(5)).unwrap(), big(12));
        assert_eq!(count_hamilton_cycles_exact(&Graph::complete(7)).unwrap(), big(360));
        assert_eq!(count_hamilton_cycles_exact(&Graph::cycle(6)).unwrap(), big(1));
        assert_eq!(count_hamilton_cycles_exact(&Graph::complete(16)).unwrap(), big(653_837_184_000));
        assert!(count_hamilton_cycles_exact(&Graph::complete(17)).is_err());
    }

    #[test]
    fn decomposition_counts() {
        assert_eq!(count_decompositions_exact(&Graph::complete(5)).unwrap(), big(6));
        assert_eq!(count_decompositions_exact(&Graph::cycle(7)).unwrap(), big(1));
        assert_eq!(count_decompositions_exact(&Graph::complete(4)), Err(CountError::OddDegree(3)));
        let k7 = Graph::complete(7);
        let unordered = count_decompositions_exact(&k7).unwrap();
        let ordered = count_ordered_decompositions(&k7).unwrap();
        assert_eq!(ordered, unordered * big(6));
    }

    #[test]
    fn bregman_values() {
        assert!((bregman_log_bound(5, 4) - 1.25 * 24f64.ln()).abs() < 1e-12);
        assert!((bregman_log_bound(5, 4) - 3.9726).abs() < 1e-3);
        assert!((bregman_log_bound(6, 2) - 3.0 * 2f64.ln()).abs() < 1e-12);
        assert!((bregman_log_bound(7, 6) - 7.675).abs() < 1e-3);
    }

    #[test]
    fn upper_bounds() {
        let u = decomposition_log_upper(5, 4).unwrap();
        assert!((u.finite - 5.705).abs() < 1e-3);
        assert!(6f64.ln() <= u.finite);
        let u = decomposition_log_upper(9, 2).unwrap();
        assert!((u.finite - 4.5 * 2f64.ln()).abs() < 1e-12);
        let u = decomposition_log_upper(100, 50).unwrap();
        assert!((u.asymptotic - 2500.0 * (50f64.ln() - 2.0)).abs() < 1e-9);
        assert!((u.asymptotic - 4780.0).abs() < 1.0);
        assert!(decomposition_log_upper(5, 3).is_err());
    }

    #[test]
    fn lower_bounds() {
        assert!((decomposition_log_lower(100, 60, 0.05) - 2250.0 * 60f64.ln()).abs() < 1e-9);
        assert!((decomposition_log_lower(5, 4, 0.05) - 10.397).abs() < 1e-3);
        assert!((decomposition_log_lower(10, 4, 0.0) - 20.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn corpus_sizes() {
        // Hamilton cycles through the path 1-0-2: orderings of 3, 4, 5
        let c = regular_graph_corpus(6, 2, true);
        assert_eq!(c.len(), 6);
        // plus the two triangles {0,1,2}, {3,4,5}
        let all = regular_graph_corpus(6, 2, false);
        assert_eq!(all.len(), 7);
        assert_eq!(regular_graph_corpus(5, 4, true).len(), 1);
        assert!(regular_graph_corpus(5, 3, true).is_empty());
        for g in regular_graph_corpus(8, 3, false) {
            assert_eq!(g.regular_degree(), Some(3));
        }
    }

    #[test]
    fn report_json() {
        let rep = count_report(&Graph::complete(5), 0.05, true).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["exact_count"], "6");
        assert_eq!(v["ordered_count"], "12");
        assert_eq!(v["hamilton_cycles"], "12");
    }
}
