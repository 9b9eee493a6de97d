//! (≤2)-factors: spanning subgraphs whose components are cycles or isolated
//! edges, and partial Hamilton cycles (the same plus exactly one path).
//!
//! A (≤2)-factor of `g` is the image of a permutation `σ` with every
//! `iσ(i)` an edge: 2-cycles of `σ` become isolated edges and longer cycles
//! become cycles. Sampling draws a perfect matching of the bipartite double
//! cover of `g`; enumeration walks the factors directly.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{edge, Edge, Graph, Vertex};
use crate::rng::{seeded, sub_seed, Rng};
use crate::walecki::{canonical_cycle, cycle_edges};

/// Vertex cap for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 14;

/// Default number of draws before a factor above the component cap is
/// accepted anyway.
pub const DEFAULT_SAMPLE_ATTEMPTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FactorError {
    #[error("graph has no (<=2)-factor: the bipartite double cover has no perfect matching")]
    NoFactor,
    #[error("enumeration needs n <= {cap}, got {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("invalid factor: {0}")]
    Invalid(String),
}

/// `s* = ⌈√(n ln n)⌉`, the component budget of a sampled factor.
pub fn component_cap(n: usize) -> usize {
    if n < 2 {
        return 1;
    }
    let nf = n as f64;
    (nf * nf.ln()).sqrt().ceil() as usize
}

/// Spanning collection of vertex-disjoint cycles and isolated edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TwoFactor {
    pub n: usize,
    pub cycles: Vec<Vec<Vertex>>,
    pub edges: Vec<Edge>,
}

/// Spanning subgraph with exactly one path component; all other components
/// are cycles or isolated edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialHC {
    pub n: usize,
    pub path: Vec<Vertex>,
    pub cycles: Vec<Vec<Vertex>>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentProfile {
    pub components: usize,
    pub cycles: usize,
    pub isolated_edges: usize,
}

impl TwoFactor {
    /// Canonicalize cycles and edges.
    pub fn new(n: usize, cycles: Vec<Vec<Vertex>>, edges: Vec<Edge>) -> Self {
        let mut cycles: Vec<Vec<Vertex>> = cycles.iter().map(|c| canonical_cycle(c)).collect();
        cycles.sort();
        let mut edges: Vec<Edge> = edges.into_iter().map(|(u, v)| edge(u, v)).collect();
        edges.sort_unstable();
        TwoFactor { n, cycles, edges }
    }

    /// The factor induced by a permutation with no fixed points.
    pub fn from_permutation(sigma: &[Vertex]) -> Self {
        let n = sigma.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        let mut edges = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                cyc.push(v);
                v = sigma[v];
            }
            match cyc.len() {
                1 => panic!("fixed point {start} in permutation"),
                2 => edges.push(edge(cyc[0], cyc[1])),
                _ => cycles.push(cyc),
            }
        }
        TwoFactor::new(n, cycles, edges)
    }

    pub fn component_count(&self) -> usize {
        self.cycles.len() + self.edges.len()
    }

    pub fn is_hamilton_cycle(&self) -> bool {
        self.edges.is_empty() && self.cycles.len() == 1 && self.cycles[0].len() == self.n
    }

    pub fn edge_list(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self.cycles.iter().flat_map(|c| cycle_edges(c)).collect();
        out.extend(self.edges.iter().copied());
        out.sort_unstable();
        out
    }

    /// Spanning, vertex-disjoint, and every adjacency an edge of `host`.
    pub fn validate(&self, host: &Graph) -> Result<(), FactorError> {
        validate_parts(host, self.n, None, &self.cycles, &self.edges)
    }
}

impl PartialHC {
    pub fn new(n: usize, path: Vec<Vertex>, cycles: Vec<Vec<Vertex>>, edges: Vec<Edge>) -> Self {
        let TwoFactor { cycles, edges, .. } = TwoFactor::new(n, cycles, edges);
        PartialHC {
            n,
            path,
            cycles,
            edges,
        }
    }

    pub fn component_count(&self) -> usize {
        1 + self.cycles.len() + self.edges.len()
    }

    pub fn edge_list(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self.path.windows(2).map(|w| edge(w[0], w[1])).collect();
        out.extend(self.cycles.iter().flat_map(|c| cycle_edges(c)));
        out.extend(self.edges.iter().copied());
        out.sort_unstable();
        out
    }

    pub fn validate(&self, host: &Graph) -> Result<(), FactorError> {
        validate_parts(host, self.n, Some(&self.path), &self.cycles, &self.edges)
    }
}

fn validate_parts(
    host: &Graph,
    n: usize,
    path: Option<&Vec<Vertex>>,
    cycles: &[Vec<Vertex>],
    edges: &[Edge],
) -> Result<(), FactorError> {
    if n != host.n() {
        return Err(FactorError::Invalid(format!(
            "factor on {n} vertices, host on {}",
            host.n()
        )));
    }
    let mut seen = vec![false; n];
    let mut mark = |v: Vertex| -> Result<(), FactorError> {
        if v >= n {
            return Err(FactorError::Invalid(format!("vertex {v} out of range")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(FactorError::Invalid(format!("vertex {v} in two components")));
        }
        Ok(())
    };
    let mut adjacent: Vec<Edge> = Vec::new();
    if let Some(p) = path {
        if p.len() < 2 {
            return Err(FactorError::Invalid("path component needs 2 vertices".into()));
        }
        for &v in p {
            mark(v)?;
        }
        adjacent.extend(p.windows(2).map(|w| edge(w[0], w[1])));
    }
    for c in cycles {
        if c.len() < 3 {
            return Err(FactorError::Invalid(format!("cycle {c:?} shorter than 3")));
        }
        for &v in c {
            mark(v)?;
        }
        adjacent.extend(cycle_edges(c));
    }
    for &(u, v) in edges {
        mark(u)?;
        mark(v)?;
        adjacent.push(edge(u, v));
    }
    if let Some(v) = seen.iter().position(|&s| !s) {
        return Err(FactorError::Invalid(format!("vertex {v} not covered")));
    }
    if let Some(&(u, v)) = adjacent.iter().find(|&&(u, v)| !host.has_edge(u, v)) {
        return Err(FactorError::Invalid(format!("({u}, {v}) is not a host edge")));
    }
    Ok(())
}

pub fn component_profile(f: &TwoFactor) -> ComponentProfile {
    ComponentProfile {
        components: f.component_count(),
        cycles: f.cycles.len(),
        isolated_edges: f.edges.len(),
    }
}

/// Random perfect matching of the bipartite double cover of `g`, as a
/// permutation. Greedy start in random order, then augmenting paths with
/// shuffled neighbor lists. Not exactly uniform.
pub(crate) fn random_double_cover_matching(g: &Graph, rng: &mut Rng) -> Option<Vec<Vertex>> {
    let n = g.n();
    let mut adj: Vec<Vec<Vertex>> = (0..n).map(|v| g.neighbors(v).to_vec()).collect();
    for list in &mut adj {
        list.shuffle(rng);
    }
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(rng);
    let mut left = vec![usize::MAX; n];
    let mut right = vec![usize::MAX; n];
    for &u in &order {
        if let Some(&v) = adj[u].iter().find(|&&v| right[v] == usize::MAX) {
            left[u] = v;
            right[v] = u;
        }
    }
    let mut visited = vec![0usize; n];
    let mut stamp = 0;
    for &u in &order {
        if left[u] != usize::MAX {
            continue;
        }
        stamp += 1;
        if !augment(u, &adj, &mut left, &mut right, &mut visited, stamp) {
            return None;
        }
    }
    Some(left)
}

fn augment(
    u: Vertex,
    adj: &[Vec<Vertex>],
    left: &mut [usize],
    right: &mut [usize],
    visited: &mut [usize],
    stamp: usize,
) -> bool {
    for &v in &adj[u] {
        if visited[v] == stamp {
            continue;
        }
        visited[v] = stamp;
        if right[v] == usize::MAX || augment(right[v], adj, left, right, visited, stamp) {
            left[u] = v;
            right[v] = u;
            return true;
        }
    }
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleOptions {
    /// Resample factors with more components than this.
    pub component_cap: Option<usize>,
    pub attempts: usize,
}

impl SampleOptions {
    pub fn for_order(n: usize) -> Self {
        SampleOptions {
            component_cap: Some(component_cap(n)),
            attempts: DEFAULT_SAMPLE_ATTEMPTS,
        }
    }
}

/// Sample a (≤2)-factor of `g`, preferring ones with at most `s*` components.
pub fn sample_le2_factor(g: &Graph, seed: u64) -> Result<TwoFactor, FactorError> {
    sample_le2_factor_with(g, seed, SampleOptions::for_order(g.n()))
}

pub fn sample_le2_factor_with(
    g: &Graph,
    seed: u64,
    opts: SampleOptions,
) -> Result<TwoFactor, FactorError> {
    let mut best: Option<TwoFactor> = None;
    for attempt in 0..opts.attempts.max(1) {
        let mut rng = seeded(sub_seed(seed, attempt as u64));
        let sigma = random_double_cover_matching(g, &mut rng).ok_or(FactorError::NoFactor)?;
        let f = TwoFactor::from_permutation(&sigma);
        debug_assert!(f.validate(g).is_ok());
        match opts.component_cap {
            Some(cap) if f.component_count() > cap => {
                if best
                    .as_ref()
                    .is_none_or(|b| f.component_count() < b.component_count())
                {
                    best = Some(f);
                }
            }
            _ => return Ok(f),
        }
    }
    let f = best.expect("at least one attempt");
    log::warn!(
        "accepting (<=2)-factor with {} components above cap {:?}",
        f.component_count(),
        opts.component_cap
    );
    Ok(f)
}

/// Visit every (≤2)-factor of `g` with at most `max_components` components.
/// Each factor is produced once, as a subgraph.
pub fn for_each_le2_factor<F: FnMut(&TwoFactor)>(
    g: &Graph,
    max_components: Option<usize>,
    mut visit: F,
) -> Result<(), FactorError> {
    if g.n() > ENUMERATION_CAP {
        return Err(FactorError::TooLarge {
            n: g.n(),
            cap: ENUMERATION_CAP,
        });
    }
    let mut e = Enumerator {
        g,
        max_components: max_components.unwrap_or(usize::MAX),
        covered: vec![false; g.n()],
        cycles: Vec::new(),
        edges: Vec::new(),
    };
    e.run(&mut visit);
    Ok(())
}

/// All (≤2)-factors of `g` (orientation-free), optionally limited by
/// component count.
pub fn enumerate_le2_factors(
    g: &Graph,
    max_components: Option<usize>,
) -> Result<Vec<TwoFactor>, FactorError> {
    let mut out = Vec::new();
    for_each_le2_factor(g, max_components, |f| out.push(f.clone()))?;
    Ok(out)
}

/// Number of permutations behind a set of factors: each cycle of length
/// at least 3 has two orientations.
pub fn permutation_count(factors: &[TwoFactor]) -> u128 {
    factors.iter().map(|f| 1u128 << f.cycles.len()).sum()
}

struct Enumerator<'a> {
    g: &'a Graph,
    max_components: usize,
    covered: Vec<bool>,
    cycles: Vec<Vec<Vertex>>,
    edges: Vec<Edge>,
}

impl Enumerator<'_> {
    fn run<F: FnMut(&TwoFactor)>(&mut self, visit: &mut F) {
        let Some(v) = self.covered.iter().position(|&c| !c) else {
            visit(&TwoFactor::new(self.g.n(), self.cycles.clone(), self.edges.clone()));
            return;
        };
        if self.cycles.len() + self.edges.len() >= self.max_components {
            return;
        }
        self.covered[v] = true;
        let nbrs: Vec<Vertex> = self.g.neighbors(v).to_vec();
        for &w in &nbrs {
            if self.covered[w] {
                continue;
            }
            // isolated edge {v, w}
            self.covered[w] = true;
            self.edges.push(edge(v, w));
            self.run(visit);
            self.edges.pop();
            // cycles v, w, …, z with w < z fixing the orientation
            let mut path = vec![v, w];
            self.extend_cycle(&mut path, visit);
            self.covered[w] = false;
        }
        self.covered[v] = false;
    }

    fn extend_cycle<F: FnMut(&TwoFactor)>(&mut self, path: &mut Vec<Vertex>, visit: &mut F) {
        let v = path[0];
        let last = *path.last().unwrap();
        let nbrs: Vec<Vertex> = self.g.neighbors(last).to_vec();
        for &z in &nbrs {
            if self.covered[z] {
                continue;
            }
            self.covered[z] = true;
            path.push(z);
            if z > path[1] && self.g.has_edge(z, v) {
                self.cycles.push(path.clone());
                self.run(visit);
                self.cycles.pop();
            }
            self.extend_cycle(path, visit);
            path.pop();
            self.covered[z] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn k4_has_six_factors() {
        let fs = enumerate_le2_factors(&Graph::complete(4), None).unwrap();
        assert_eq!(fs.len(), 6);
        let profiles: Vec<_> = fs.iter().map(component_profile).collect();
        assert_eq!(profiles.iter().filter(|p| p.isolated_edges == 2).count(), 3);
        assert_eq!(profiles.iter().filter(|p| p.cycles == 1).count(), 3);
        assert_eq!(permutation_count(&fs), 9);
    }

    #[test]
    fn k5_has_22_factors() {
        let fs = enumerate_le2_factors(&Graph::complete(5), None).unwrap();
        assert_eq!(fs.len(), 22);
        assert_eq!(fs.iter().filter(|f| f.is_hamilton_cycle()).count(), 12);
        assert_eq!(permutation_count(&fs), 44);
        let unique: BTreeSet<_> = fs.iter().collect();
        assert_eq!(unique.len(), 22);
    }

    #[test]
    fn c5_has_one_factor() {
        let fs = enumerate_le2_factors(&Graph::cycle(5), None).unwrap();
        assert_eq!(fs, vec![TwoFactor::new(5, vec![vec![0, 1, 2, 3, 4]], vec![])]);
    }

    #[test]
    fn component_filter() {
        let fs = enumerate_le2_factors(&Graph::complete(5), Some(1)).unwrap();
        assert_eq!(fs.len(), 12);
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(
            enumerate_le2_factors(&Graph::complete(15), None),
            Err(FactorError::TooLarge { n: 15, .. })
        ));
    }

    #[test]
    fn sample_c5_is_itself() {
        let f = sample_le2_factor(&Graph::cycle(5), 9).unwrap();
        assert!(f.is_hamilton_cycle());
        assert_eq!(f.cycles[0], vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn sample_path_fails() {
        let p3 = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(sample_le2_factor(&p3, 0), Err(FactorError::NoFactor));
    }

    #[test]
    fn samples_are_valid() {
        let g = Graph::complete(12);
        for seed in 0..50 {
            let f = sample_le2_factor(&g, seed).unwrap();
            f.validate(&g).unwrap();
            assert!(f.component_count() <= component_cap(12));
        }
    }

    #[test]
    fn profiles() {
        let h = TwoFactor::new(7, vec![(0..7).collect()], vec![]);
        assert_eq!(
            component_profile(&h),
            ComponentProfile { components: 1, cycles: 1, isolated_edges: 0 }
        );
        let f = TwoFactor::new(5, vec![vec![2, 3, 4]], vec![(0, 1)]);
        assert_eq!(
            component_profile(&f),
            ComponentProfile { components: 2, cycles: 1, isolated_edges: 1 }
        );
        let m = TwoFactor::new(6, vec![], vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(
            component_profile(&m),
            ComponentProfile { components: 3, cycles: 0, isolated_edges: 3 }
        );
    }

    #[test]
    fn validation_catches_errors() {
        let k4 = Graph::complete(4);
        let missing = TwoFactor::new(4, vec![vec![0, 1, 2]], vec![]);
        assert!(missing.validate(&k4).is_err());
        let c4 = Graph::cycle(4);
        let bad_edge = TwoFactor::new(4, vec![], vec![(0, 2), (1, 3)]);
        assert!(bad_edge.validate(&c4).is_err());
        let ph = PartialHC::new(5, vec![0, 1, 2], vec![], vec![(3, 4)]);
        ph.validate(&Graph::complete(5)).unwrap();
        assert_eq!(ph.component_count(), 2);
        assert_eq!(ph.edge_list().len(), 3);
    }

    #[test]
    fn json_shape() {
        let f = TwoFactor::new(5, vec![vec![2, 3, 4]], vec![(1, 0)]);
        assert_eq!(
            serde_json::to_string(&f).unwrap(),
            r#"{"n":5,"cycles":[[2,3,4]],"edges":[[0,1]]}"#
        );
    }

    #[test]
    fn s_star_values() {
        assert_eq!(component_cap(21), 8);
        assert_eq!(component_cap(51), 15);
    }
}
