//! Extraction of an exactly `2d`-regular spanning subgraph from a
//! near-regular dense graph.
//!
//! The graph is oriented at random, a bipartite flow network is built with
//! `s → X` and `Y → t` capacities `d` and a unit arc `x → y` for every arc of
//! the orientation, and an integral maximum flow is computed. A flow of value
//! `d·n` selects a subdigraph with all in- and out-degrees equal to `d`;
//! forgetting the orientation gives the `2d`-regular subgraph.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::edges_between;
use crate::graph::{ceil_count, edge, Edge, Graph, Vertex, VertexSet};
use crate::rng::{seeded, sub_seed};

/// Default number of fresh orientations tried before giving up.
pub const DEFAULT_ORIENTATION_RETRIES: usize = 256;

/// Default number of random set pairs for the cross-density check.
pub const DEFAULT_DENSITY_TRIALS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularizeError {
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("degree hypothesis violated: vertex {vertex} has degree {degree}, allowed band is [{lo:.2}, {hi:.2}]")]
    DegreeHypothesis {
        vertex: Vertex,
        degree: usize,
        lo: f64,
        hi: f64,
    },
    #[error("no {target}-valued flow after {attempts} orientations (best flow {best_flow:?})")]
    RetriesExhausted {
        attempts: usize,
        target: u64,
        best_flow: Option<u64>,
    },
}

/// Orientation of an undirected graph. Internal to this module's pipeline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    arcs: Vec<(Vertex, Vertex)>,
}

impl Digraph {
    /// Rejects self-arcs, out-of-range endpoints and repeated ordered pairs.
    pub fn new(n: usize, arcs: Vec<(Vertex, Vertex)>) -> Result<Self, RegularizeError> {
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v) in &arcs {
            if u >= n || v >= n || u == v || !seen.insert((u, v)) {
                return Err(RegularizeError::Parameter(format!("bad arc ({u}, {v})")));
            }
        }
        Ok(Digraph { n, arcs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(Vertex, Vertex)] {
        &self.arcs
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(u, _) in &self.arcs {
            d[u] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(_, v) in &self.arcs {
            d[v] += 1;
        }
        d
    }
}

/// Orient every edge of `g` by an independent fair coin.
pub fn random_orientation(g: &Graph, seed: u64) -> Digraph {
    let mut rng = seeded(seed);
    let arcs = g
        .edges()
        .iter()
        .map(|&(u, v)| if rng.gen::<bool>() { (u, v) } else { (v, u) })
        .collect();
    Digraph { n: g.n(), arcs }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: u64,
}

/// Capacitated network with a distinguished source and sink.
///
/// Networks built by [`build_flow_network`] use the layout: `X` copies are
/// nodes `0..n`, `Y` copies are `n..2n`, the source is `2n`, the sink `2n+1`;
/// arcs are `s → X` (in vertex order), then the middle arcs in the order of
/// the digraph's arcs, then `Y → t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    node_count: usize,
    source: usize,
    sink: usize,
    arcs: Vec<FlowArc>,
    /// Vertex count `n` and half-degree `d` for bipartite networks.
    layout: Option<(usize, u64)>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize, arcs: Vec<FlowArc>) -> Self {
        assert!(source < node_count && sink < node_count && source != sink);
        assert!(arcs
            .iter()
            .all(|a| a.from < node_count && a.to < node_count && a.capacity > 0));
        FlowNetwork {
            node_count,
            source,
            sink,
            arcs,
            layout: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Index range of the `X → Y` arcs, for bipartite networks.
    pub fn middle_arcs(&self) -> std::ops::Range<usize> {
        match self.layout {
            Some((n, _)) => n..self.arcs.len() - n,
            None => 0..0,
        }
    }

    pub fn half_degree(&self) -> Option<u64> {
        self.layout.map(|(_, d)| d)
    }
}

/// The `s → X → Y → t` network of a digraph with target half-degree `d`.
pub fn build_flow_network(dg: &Digraph, half_degree: u64) -> FlowNetwork {
    assert!(half_degree >= 1, "half-degree must be positive");
    let n = dg.n;
    let (s, t) = (2 * n, 2 * n + 1);
    let mut arcs = Vec::with_capacity(2 * n + dg.arcs.len());
    arcs.extend((0..n).map(|x| FlowArc {
        from: s,
        to: x,
        capacity: half_degree,
    }));
    arcs.extend(dg.arcs.iter().map(|&(u, v)| FlowArc {
        from: u,
        to: n + v,
        capacity: 1,
    }));
    arcs.extend((0..n).map(|y| FlowArc {
        from: n + y,
        to: t,
        capacity: half_degree,
    }));
    FlowNetwork {
        node_count: 2 * n + 2,
        source: s,
        sink: t,
        arcs,
        layout: Some((n, half_degree)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flow {
    pub value: u64,
    /// Flow on each arc of the network, in arc order.
    pub per_arc: Vec<u64>,
}

/// Integral maximum flow (Dinic).
pub fn max_flow(net: &FlowNetwork) -> Flow {
    Dinic::new(net).run()
}

struct Dinic {
    source: usize,
    sink: usize,
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u64>,
    level: Vec<usize>,
    next: Vec<usize>,
    arc_count: usize,
}

impl Dinic {
    fn new(net: &FlowNetwork) -> Self {
        let mut head = vec![Vec::new(); net.node_count];
        let mut to = Vec::with_capacity(2 * net.arcs.len());
        let mut cap = Vec::with_capacity(2 * net.arcs.len());
        for a in &net.arcs {
            head[a.from].push(to.len());
            to.push(a.to);
            cap.push(a.capacity);
            head[a.to].push(to.len());
            to.push(a.from);
            cap.push(0);
        }
        Dinic {
            source: net.source,
            sink: net.sink,
            level: vec![usize::MAX; net.node_count],
            next: vec![0; net.node_count],
            head,
            to,
            cap,
            arc_count: net.arcs.len(),
        }
    }

    fn bfs(&mut self) -> bool {
        self.level.fill(usize::MAX);
        self.level[self.source] = 0;
        let mut queue = VecDeque::from([self.source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] == usize::MAX {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[self.sink] != usize::MAX
    }

    fn dfs(&mut self, u: usize, pushed: u64) -> u64 {
        if u == self.sink {
            return pushed;
        }
        while self.next[u] < self.head[u].len() {
            let e = self.head[u][self.next[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, pushed.min(self.cap[e]));
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0
    }

    fn run(mut self) -> Flow {
        let mut value = 0;
        while self.bfs() {
            self.next.fill(0);
            loop {
                let got = self.dfs(self.source, u64::MAX);
                if got == 0 {
                    break;
                }
                value += got;
            }
        }
        // flow on a forward arc equals the residual capacity of its reverse
        let per_arc = (0..self.arc_count).map(|i| self.cap[2 * i + 1]).collect();
        Flow { value, per_arc }
    }
}

/// Capacity and conservation check of a flow; returns the first problem.
pub fn check_flow(net: &FlowNetwork, flow: &Flow) -> Result<(), String> {
    if flow.per_arc.len() != net.arcs.len() {
        return Err("flow vector length mismatch".into());
    }
    let mut balance = vec![0i128; net.node_count];
    for (a, &f) in net.arcs.iter().zip(&flow.per_arc) {
        if f > a.capacity {
            return Err(format!("arc {}→{} carries {f} > {}", a.from, a.to, a.capacity));
        }
        balance[a.from] -= f as i128;
        balance[a.to] += f as i128;
    }
    for (v, &b) in balance.iter().enumerate() {
        if v != net.source && v != net.sink && b != 0 {
            return Err(format!("conservation fails at node {v}: imbalance {b}"));
        }
    }
    if balance[net.sink] != flow.value as i128 || balance[net.source] != -(flow.value as i128) {
        return Err("flow value does not match source/sink balance".into());
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizeParams {
    /// Target density: degrees are near `c0·n`.
    pub c0: f64,
    /// Degree slack: the output degree is `2⌈(c0 − eps0)·n/2⌉`.
    pub eps0: f64,
    /// Cross-density fraction of the caller's hypothesis.
    pub gamma0: f64,
    pub seed: u64,
    pub max_retries: usize,
}

impl RegularizeParams {
    pub fn new(c0: f64, eps0: f64, gamma0: f64, seed: u64) -> Self {
        RegularizeParams {
            c0,
            eps0,
            gamma0,
            seed,
            max_retries: DEFAULT_ORIENTATION_RETRIES,
        }
    }

    fn validate(&self) -> Result<(), RegularizeError> {
        if !(self.eps0 > 0.0 && self.eps0 <= self.c0 && self.c0 <= 1.0 && self.gamma0 > 0.0) {
            return Err(RegularizeError::Parameter(format!(
                "need 0 < eps0 <= c0 <= 1 and gamma0 > 0, got c0 = {}, eps0 = {}, gamma0 = {}",
                self.c0, self.eps0, self.gamma0
            )));
        }
        Ok(())
    }

    /// `d = ⌈(c0 − eps0)·n/2⌉`.
    pub fn half_degree(&self, n: usize) -> usize {
        ceil_count((self.c0 - self.eps0) * n as f64 / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extraction {
    /// Spanning `2d`-regular subgraph of the input.
    pub graph: Graph,
    pub half_degree: usize,
    /// Orientations drawn, including the successful one.
    pub attempts: usize,
}

/// Check the degree band `c0·n ± n^{2/3}` required by the extraction.
pub fn check_degree_band(g: &Graph, c0: f64) -> Result<(), RegularizeError> {
    let n = g.n() as f64;
    let slack = n.powf(2.0 / 3.0);
    let (lo, hi) = (c0 * n - slack, c0 * n + slack);
    for v in 0..g.n() {
        let d = g.degree(v) as f64;
        if d < lo - 1e-9 || d > hi + 1e-9 {
            return Err(RegularizeError::DegreeHypothesis {
                vertex: v,
                degree: g.degree(v),
                lo,
                hi,
            });
        }
    }
    Ok(())
}

/// Extract a spanning `2d`-regular subgraph, `d = ⌈(c0 − eps0)·n/2⌉`, retrying
/// with fresh orientations until the flow saturates.
pub fn extract_regular_subgraph(
    g: &Graph,
    params: &RegularizeParams,
) -> Result<Extraction, RegularizeError> {
    params.validate()?;
    check_degree_band(g, params.c0)?;
    extract_with_half_degree(g, params.half_degree(g.n()), params.seed, params.max_retries)
}

/// The orientation and flow loop for an explicit half-degree `d`.
pub fn extract_with_half_degree(
    g: &Graph,
    d: usize,
    seed: u64,
    max_retries: usize,
) -> Result<Extraction, RegularizeError> {
    let n = g.n();
    if d == 0 {
        return Ok(Extraction {
            graph: Graph::empty(n),
            half_degree: 0,
            attempts: 0,
        });
    }
    let target = (d * n) as u64;
    let mut best: Option<u64> = None;
    for attempt in 0..max_retries {
        let dg = random_orientation(g, sub_seed(seed, attempt as u64));
        // A vertex with fewer than d out- or in-arcs caps the flow below d·n.
        let outs = dg.out_degrees();
        let ins = dg.in_degrees();
        if outs.iter().chain(&ins).any(|&k| k < d) {
            continue;
        }
        let net = build_flow_network(&dg, d as u64);
        let flow = max_flow(&net);
        if let Err(msg) = check_flow(&net, &flow) {
            panic!("max-flow invariant violated: {msg}");
        }
        best = Some(best.map_or(flow.value, |b| b.max(flow.value)));
        if flow.value == target {
            let edges: Vec<Edge> = net
                .middle_arcs()
                .filter(|&i| flow.per_arc[i] == 1)
                .map(|i| {
                    let a = net.arcs[i];
                    edge(a.from, a.to - n)
                })
                .collect();
            let graph = Graph::new(n, edges).expect("flow arcs are edges of the input");
            assert_eq!(graph.regular_degree(), Some(2 * d));
            return Ok(Extraction {
                graph,
                half_degree: d,
                attempts: attempt + 1,
            });
        }
    }
    Err(RegularizeError::RetriesExhausted {
        attempts: max_retries,
        target,
        best_flow: best,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossDensityReport {
    pub holds: bool,
    pub trials: usize,
    /// Smallest `e(A,B)/n²` seen.
    pub min_ratio: f64,
    pub witness: Option<(VertexSet, VertexSet)>,
}

/// Sampled check of the hypothesis "at least `gamma0·n²` edges between any
/// `A, B` with `|A| >= c0·n/3` and `|B| >= n/2`".
pub fn sample_cross_density(
    g: &Graph,
    c0: f64,
    gamma0: f64,
    trials: usize,
    seed: u64,
) -> CrossDensityReport {
    let n = g.n();
    let mut rng = seeded(seed);
    let a_min = ceil_count(c0 * n as f64 / 3.0).clamp(1, n.max(1));
    let b_min = ceil_count(n as f64 / 2.0).clamp(1, n.max(1));
    let need = gamma0 * (n * n) as f64;
    let mut report = CrossDensityReport {
        holds: true,
        trials,
        min_ratio: f64::INFINITY,
        witness: None,
    };
    if n == 0 {
        return report;
    }
    for _ in 0..trials {
        let a_size = rng.gen_range(a_min..=n);
        let b_size = rng.gen_range(b_min..=n);
        let pick = |rng: &mut crate::rng::Rng, k| {
            let mut v = index::sample(rng, n, k).into_vec();
            v.sort_unstable();
            VertexSet::from_sorted(v)
        };
        let a = pick(&mut rng, a_size);
        let b = pick(&mut rng, b_size);
        let e = edges_between(g, &a, &b).expect("sets are in range");
        let ratio = e as f64 / (n * n) as f64;
        report.min_ratio = report.min_ratio.min(ratio);
        if (e as f64) < need && report.witness.is_none() {
            report.holds = false;
            report.witness = Some((a, b));
        }
    }
    report
}

/// Which case of the min-cut argument a cut `(S, T)` falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutCase {
    /// `|S| <= |T|`: the capacity bound is immediate.
    Trivial,
    /// `|S| < d`.
    SmallSource,
    /// `|S| − |T| >= 4·n^{2/3}/eps0`.
    LargeImbalance,
    /// `|S| <= (1 − c0/3)·n`.
    Moderate,
    /// `|S| > (1 − c0/3)·n`.
    LargeSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutAudit {
    pub capacity: u64,
    pub target: u64,
    pub case: CutCase,
    pub meets_target: bool,
}

/// Capacity of the cut `{s} ∪ S ∪ T` (with `S ⊆ X`, `T ⊆ Y` given as vertex
/// indices) in a bipartite network, and the case of the argument it belongs to.
pub fn audit_cut_cases(
    net: &FlowNetwork,
    params: &RegularizeParams,
    s: &VertexSet,
    t: &VertexSet,
) -> CutAudit {
    let (n, d) = net
        .layout
        .expect("cut audit needs a network built by build_flow_network");
    let mut in_cut = vec![false; net.node_count];
    in_cut[net.source] = true;
    for x in s.iter() {
        in_cut[x] = true;
    }
    for y in t.iter() {
        in_cut[n + y] = true;
    }
    let capacity = net
        .arcs
        .iter()
        .filter(|a| in_cut[a.from] && !in_cut[a.to])
        .map(|a| a.capacity)
        .sum();
    let nf = n as f64;
    let (ss, ts) = (s.len(), t.len());
    let case = if ss <= ts {
        CutCase::Trivial
    } else if (ss as u64) < d {
        CutCase::SmallSource
    } else if (ss - ts) as f64 >= 4.0 * nf.powf(2.0 / 3.0) / params.eps0 {
        CutCase::LargeImbalance
    } else if ss as f64 <= (1.0 - params.c0 / 3.0) * nf {
        CutCase::Moderate
    } else {
        CutCase::LargeSource
    };
    let target = d * n as u64;
    CutAudit {
        capacity,
        target,
        case,
        meets_target: capacity >= target,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circulant_k5() -> Digraph {
        let arcs = (0..5)
            .flat_map(|i| [(i, (i + 1) % 5), (i, (i + 2) % 5)])
            .collect();
        Digraph::new(5, arcs).unwrap()
    }

    #[test]
    fn orientation_preserves_degrees() {
        let tri = Graph::cycle(3);
        for seed in 0..10 {
            let dg = random_orientation(&tri, seed);
            assert_eq!(dg.arcs().len(), 3);
            let (o, i) = (dg.out_degrees(), dg.in_degrees());
            assert!((0..3).all(|v| o[v] + i[v] == 2));
        }
        assert!(random_orientation(&Graph::empty(4), 1).arcs().is_empty());
    }

    #[test]
    fn orientation_is_reproducible() {
        let k5 = Graph::complete(5);
        assert_eq!(random_orientation(&k5, 42), random_orientation(&k5, 42));
        assert_eq!(random_orientation(&k5, 42).arcs().len(), 10);
    }

    #[test]
    fn triangle_network_shape() {
        let dg = Digraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let net = build_flow_network(&dg, 1);
        assert_eq!(net.node_count(), 8);
        assert_eq!(net.arcs().len(), 9);
        assert_eq!(net.middle_arcs(), 3..6);
        assert_eq!(max_flow(&net).value, 3);
    }

    #[test]
    fn empty_middle_layer_has_no_flow() {
        let dg = Digraph::new(2, vec![]).unwrap();
        let net = build_flow_network(&dg, 1);
        assert_eq!(max_flow(&net).value, 0);
    }

    #[test]
    fn single_path_flow() {
        let dg = Digraph::new(2, vec![(0, 1)]).unwrap();
        let net = build_flow_network(&dg, 1);
        let flow = max_flow(&net);
        assert_eq!(flow.value, 1);
        check_flow(&net, &flow).unwrap();
    }

    #[test]
    fn balanced_k5_saturates() {
        let net = build_flow_network(&circulant_k5(), 2);
        let flow = max_flow(&net);
        assert_eq!(flow.value, 10);
        check_flow(&net, &flow).unwrap();
    }

    #[test]
    fn general_network_flow() {
        // classic 6-node example, max flow 23
        let arcs = [
            (0, 1, 16),
            (0, 2, 13),
            (1, 2, 10),
            (2, 1, 4),
            (1, 3, 12),
            (3, 2, 9),
            (2, 4, 14),
            (4, 3, 7),
            (3, 5, 20),
            (4, 5, 4),
        ]
        .map(|(from, to, capacity)| FlowArc { from, to, capacity })
        .to_vec();
        let net = FlowNetwork::new(6, 0, 5, arcs);
        let flow = max_flow(&net);
        assert_eq!(flow.value, 23);
        check_flow(&net, &flow).unwrap();
    }

    #[test]
    fn k9_gives_six_regular() {
        let k9 = Graph::complete(9);
        let params = RegularizeParams::new(8.0 / 9.0, 2.0 / 9.0, 0.1, 3);
        assert_eq!(params.half_degree(9), 3);
        let out = extract_regular_subgraph(&k9, &params).unwrap();
        assert_eq!(out.graph.regular_degree(), Some(6));
        assert!(out.graph.is_spanning_subgraph_of(&k9));
    }

    #[test]
    fn regular_input_is_returned() {
        let tri = Graph::cycle(3);
        let params = RegularizeParams::new(2.0 / 3.0, 1e-6, 0.1, 0);
        assert_eq!(params.half_degree(3), 1);
        let out = extract_regular_subgraph(&tri, &params).unwrap();
        assert_eq!(out.graph, tri);
    }

    #[test]
    fn star_violates_degree_band() {
        let star = Graph::new(6, (1..6).map(|v| (0, v))).unwrap();
        let params = RegularizeParams::new(5.0 / 6.0, 0.1, 0.1, 0);
        assert!(matches!(
            extract_regular_subgraph(&star, &params),
            Err(RegularizeError::DegreeHypothesis { .. })
        ));
    }

    #[test]
    fn impossible_target_exhausts_retries() {
        // A 4-cycle has no 4-regular spanning subgraph.
        let err = extract_with_half_degree(&Graph::cycle(4), 2, 0, 8).unwrap_err();
        assert!(matches!(err, RegularizeError::RetriesExhausted { attempts: 8, .. }));
    }

    #[test]
    fn bad_params_rejected() {
        let p = RegularizeParams::new(0.5, 0.6, 0.1, 0);
        assert!(matches!(
            extract_regular_subgraph(&Graph::complete(5), &p),
            Err(RegularizeError::Parameter(_))
        ));
    }

    #[test]
    fn cut_audit_examples() {
        let net = build_flow_network(&circulant_k5(), 2);
        let p = RegularizeParams::new(0.8, 0.2, 0.1, 0);
        let none = VertexSet::empty();
        let all = VertexSet::all(5);
        let a = audit_cut_cases(&net, &p, &none, &none);
        assert_eq!((a.capacity, a.case), (10, CutCase::Trivial));
        let a = audit_cut_cases(&net, &p, &all, &all);
        assert_eq!((a.capacity, a.case), (10, CutCase::Trivial));

        let s = VertexSet::new(5, [0, 1, 2]).unwrap();
        let t = VertexSet::new(5, [0]).unwrap();
        // arcs from S to Y \ T, counted directly from the orientation
        let e = circulant_k5()
            .arcs()
            .iter()
            .filter(|&&(u, v)| s.contains(u) && !t.contains(v))
            .count() as u64;
        let a = audit_cut_cases(&net, &p, &s, &t);
        assert_eq!(a.capacity, 2 * 2 + e + 2);
        assert_eq!(a.meets_target, e >= 4);
        assert!(a.meets_target, "max flow is dn, so every cut is at least dn");
    }

    #[test]
    fn cross_density_sampling() {
        let k10 = Graph::complete(10);
        let r = sample_cross_density(&k10, 0.9, 0.05, 500, 1);
        assert!(r.holds);
        let r = sample_cross_density(&Graph::empty(10), 0.9, 0.05, 10, 1);
        assert!(!r.holds);
    }
}
