//! The full decomposition pipeline: split `Γ`, peel Hamilton cycles off the
//! regular core with rotation steps, then decompose the regular residual by
//! search. Also the odd-degree variant (cycles plus a perfect matching) and
//! an exhaustive decomposition enumerator for small graphs.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{edge, Edge, Graph, Vertex};
use crate::hamilton::{
    adjacency_masks, as_hamilton_cycle, cycles_through, euler_split, mask_connected, random_hamilton_cycle, Flow,
};
use crate::partition::{check_host, tri_partition, PartitionError, PartitionMeta, PipelineParams};
use crate::rng::{seeded, sub_seed, Rng};
use crate::rotation::{extract_hamilton_step, gadget_degree_bound, RotationError, StepStats};
use crate::walecki::{cycle_edges, verify_decomposition, Decomposition};

/// Orders up to which the residual is decomposed by exhaustive search.
pub const EXHAUSTIVE_N: usize = 10;

/// Hamilton cycles tried per level of the randomized completer before
/// backing up.
const BRANCH_TRIES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompletionError {
    #[error("residual is not regular")]
    NotRegular,
    #[error("residual degree {0} is odd")]
    OddDegree(usize),
    #[error("no Hamiltonian decomposition exists: {0}")]
    NoDecomposition(String),
    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExhausted { nodes: u64 },
    #[error("exhaustive search needs n <= {cap}, got {n}")]
    TooLarge { n: usize, cap: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomposeError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("rotation step {step} failed: {source}")]
    Step { step: usize, source: RotationError },
    #[error("residual completion failed: {0}")]
    Completion(#[from] CompletionError),
    #[error("no perfect matching found")]
    NoPerfectMatching,
    #[error("wall-clock budget exhausted during {stage}")]
    Deadline { stage: String },
}

/// Coarse classification used for exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    /// The input cannot be decomposed as asked.
    Infeasible,
    /// A retry, node or time budget ran out.
    Budget,
}

impl DecomposeError {
    pub fn kind(&self) -> FailureKind {
        match self {
            DecomposeError::Partition(PartitionError::RetriesExhausted { .. })
            | DecomposeError::Step {
                source: RotationError::RestartsExhausted { .. },
                ..
            }
            | DecomposeError::Completion(CompletionError::BudgetExhausted { .. })
            | DecomposeError::Deadline { .. } => FailureKind::Budget,
            _ => FailureKind::Infeasible,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompletionLimits {
    pub nodes: u64,
    pub deadline: Option<Instant>,
}

impl CompletionLimits {
    pub fn nodes(nodes: u64) -> Self {
        CompletionLimits { nodes, deadline: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionMethod {
    Exhaustive,
    Randomized,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionStats {
    pub method: CompletionMethod,
    pub nodes: u64,
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub decomposition: Decomposition,
    pub stats: CompletionStats,
}

fn residual_degree(r: &Graph) -> Result<usize, CompletionError> {
    let d = r.regular_degree().ok_or(CompletionError::NotRegular)?;
    if d % 2 == 1 {
        return Err(CompletionError::OddDegree(d));
    }
    Ok(d)
}

/// Decompose a regular graph of even degree into Hamilton cycles.
///
/// Graphs with at most [`EXHAUSTIVE_N`] vertices are searched exhaustively
/// (a failure is a proof of non-existence). Larger graphs use randomized
/// search: rotation-extension Hamilton cycles whose removal leaves a
/// connected graph, down to degree 4, where a random Euler circuit is
/// coloured alternately into two 2-factors. That mode backtracks across
/// cycle choices until the node budget runs out.
pub fn complete_residual(r: &Graph, limits: &CompletionLimits, seed: u64) -> Result<Completion, CompletionError> {
    let n = r.n();
    let d = residual_degree(r)?;
    if d == 0 {
        return Ok(Completion {
            decomposition: Decomposition::new(n, Vec::new(), None),
            stats: CompletionStats {
                method: CompletionMethod::Exhaustive,
                nodes: 0,
                restarts: 0,
            },
        });
    }
    if !r.is_connected() {
        return Err(CompletionError::NoDecomposition("graph is disconnected".into()));
    }
    if n <= EXHAUSTIVE_N {
        let mut budget = limits.nodes;
        let mut found = None;
        for_each_decomposition_inner(r, &mut budget, &mut |cycles| {
            found = Some(cycles.to_vec());
            Flow::Stop
        })?;
        let nodes = limits.nodes - budget;
        let stats = CompletionStats {
            method: CompletionMethod::Exhaustive,
            nodes,
            restarts: 0,
        };
        return match found {
            Some(cycles) => Ok(Completion {
                decomposition: Decomposition::new(n, cycles, None),
                stats,
            }),
            None if budget == 0 => Err(CompletionError::BudgetExhausted { nodes }),
            None => Err(CompletionError::NoDecomposition("exhaustive search found none".into())),
        };
    }
    let mut search = Randomized {
        nodes: 0,
        limits: *limits,
        rng: seeded(seed),
    };
    let mut restarts = 0;
    loop {
        match search.solve(r) {
            Some(cycles) => {
                return Ok(Completion {
                    decomposition: Decomposition::new(n, cycles, None),
                    stats: CompletionStats {
                        method: CompletionMethod::Randomized,
                        nodes: search.nodes,
                        restarts,
                    },
                })
            }
            None if search.exhausted() => return Err(CompletionError::BudgetExhausted { nodes: search.nodes }),
            None => restarts += 1,
        }
    }
}

struct Randomized {
    nodes: u64,
    limits: CompletionLimits,
    rng: Rng,
}

impl Randomized {
    fn exhausted(&self) -> bool {
        self.nodes >= self.limits.nodes || self.limits.deadline.is_some_and(|t| Instant::now() >= t)
    }

    fn solve(&mut self, g: &Graph) -> Option<Vec<Vec<Vertex>>> {
        let n = g.n();
        match g.regular_degree()? {
            0 => Some(Vec::new()),
            2 => {
                self.nodes += 1;
                as_hamilton_cycle(n, g.edges()).map(|c| vec![c])
            }
            4 => {
                for _ in 0..64 * n {
                    if self.exhausted() {
                        return None;
                    }
                    self.nodes += 1;
                    let (a, b) = euler_split(g, &mut self.rng)?;
                    if let (Some(x), Some(y)) = (as_hamilton_cycle(n, &a), as_hamilton_cycle(n, &b)) {
                        return Some(vec![x, y]);
                    }
                }
                None
            }
            _ => {
                for _ in 0..BRANCH_TRIES {
                    if self.exhausted() {
                        return None;
                    }
                    self.nodes += 1;
                    let Some(h) = random_hamilton_cycle(g, &mut self.rng, 100 * n) else {
                        continue;
                    };
                    let mut hedges: Vec<Edge> = cycle_edges(&h).collect();
                    hedges.sort_unstable();
                    let rest = g.subtract(&hedges).expect("cycle edges are graph edges");
                    if !rest.is_connected() {
                        continue;
                    }
                    if let Some(mut more) = self.solve(&rest) {
                        more.push(h);
                        return Some(more);
                    }
                }
                None
            }
        }
    }
}

fn for_each_decomposition_inner(
    g: &Graph,
    budget: &mut u64,
    visit: &mut dyn FnMut(&[Vec<Vertex>]) -> Flow,
) -> Result<Flow, CompletionError> {
    residual_degree(g)?;
    if g.n() > crate::hamilton::MASK_CAP {
        return Err(CompletionError::TooLarge {
            n: g.n(),
            cap: crate::hamilton::MASK_CAP,
        });
    }
    let mut adj = adjacency_masks(g);
    let mut stack = Vec::new();
    Ok(enumerate_rec(&mut adj, g.edge_count(), &mut stack, budget, visit))
}

/// Canonical enumeration: the next cycle is always one through the smallest
/// remaining edge, so each unordered decomposition is produced once.
fn enumerate_rec(
    adj: &mut Vec<u64>,
    remaining: usize,
    stack: &mut Vec<Vec<Vertex>>,
    budget: &mut u64,
    visit: &mut dyn FnMut(&[Vec<Vertex>]) -> Flow,
) -> Flow {
    if remaining == 0 {
        return visit(stack);
    }
    if *budget == 0 {
        return Flow::Stop;
    }
    if !mask_connected(adj) {
        return Flow::Continue;
    }
    let u = adj.iter().position(|&m| m != 0).unwrap();
    let v = adj[u].trailing_zeros() as usize;
    let mut cycles = Vec::new();
    if cycles_through(adj, (u, v), budget, &mut |c| {
        cycles.push(c.to_vec());
        Flow::Continue
    }) == Flow::Stop
    {
        return Flow::Stop;
    }
    let n = adj.len();
    for c in cycles {
        for i in 0..n {
            let (a, b) = (c[i], c[(i + 1) % n]);
            adj[a] &= !(1u64 << b);
            adj[b] &= !(1u64 << a);
        }
        stack.push(c);
        let r = enumerate_rec(adj, remaining - n, stack, budget, visit);
        let c = stack.pop().unwrap();
        for i in 0..n {
            let (a, b) = (c[i], c[(i + 1) % n]);
            adj[a] |= 1u64 << b;
            adj[b] |= 1u64 << a;
        }
        if r == Flow::Stop {
            return Flow::Stop;
        }
    }
    Flow::Continue
}

/// Visit every unordered Hamiltonian decomposition of `g` once. Returns
/// `Ok(false)` if `budget` search nodes ran out first.
pub fn for_each_decomposition<F: FnMut(&[Vec<Vertex>])>(
    g: &Graph,
    budget: u64,
    mut visit: F,
) -> Result<bool, CompletionError> {
    let mut left = budget;
    let flow = for_each_decomposition_inner(g, &mut left, &mut |cycles| {
        visit(cycles);
        Flow::Continue
    })?;
    Ok(flow == Flow::Continue)
}

/// All Hamiltonian decompositions of a small graph, canonical and sorted.
pub fn enumerate_decompositions(g: &Graph, budget: u64) -> Result<Vec<Decomposition>, CompletionError> {
    let mut out = Vec::new();
    let complete = for_each_decomposition(g, budget, |cycles| {
        out.push(Decomposition::new(g.n(), cycles.to_vec(), None));
    })?;
    if !complete {
        return Err(CompletionError::BudgetExhausted { nodes: budget });
    }
    out.sort_by(|a, b| a.cycles.cmp(&b.cycles));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Split, rotation steps, residual completion.
    Pipeline,
    /// Below the minimum order: the whole graph goes to the completer.
    Direct,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub partition_ms: f64,
    pub steps_ms: f64,
    pub completion_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub decomposition: Decomposition,
    pub route: Route,
    pub r: usize,
    pub d0: usize,
    /// Rotation steps taken, `min((d0 − εr)/2, (d0 − 4)/2, step limit)`.
    pub steps: usize,
    pub partition: Option<PartitionMeta>,
    pub step_stats: Vec<StepStats>,
    pub residual_degree: usize,
    pub completion: CompletionStats,
    pub notes: Vec<String>,
    pub timings: Timings,
}

/// Number of rotation steps for a core of degree `d0`: `⌊(d0 − εr)/2⌋`,
/// capped so that the core keeps degree at least 4 after the last step.
pub fn planned_steps(d0: usize, r: usize, epsilon: f64, limit: Option<usize>) -> usize {
    if d0 < 4 {
        return 0;
    }
    let base = ((d0 as f64 - epsilon * r as f64) / 2.0).floor().max(0.0) as usize;
    let t = base.min((d0 - 4) / 2);
    limit.map_or(t, |l| t.min(l))
}

/// Steps whose input core degree `d0 − 2i` stays at or above the gadget
/// degree bound, so every step can repair reservoir edges.
pub fn gadget_safe_steps(d0: usize, n: usize, delta: f64) -> usize {
    let bound = gadget_degree_bound(n, delta);
    if (d0 as f64) < bound {
        return 0;
    }
    ((d0 as f64 - bound) / 2.0).floor() as usize + 1
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn check_deadline(params: &PipelineParams, stage: &str) -> Result<(), DecomposeError> {
    match params.deadline {
        Some(t) if Instant::now() >= t => Err(DecomposeError::Deadline { stage: stage.into() }),
        _ => Ok(()),
    }
}

/// Decompose an `r`-regular graph (`r` even) into `r/2` Hamilton cycles.
/// The result is verified against `Γ` before it is returned.
pub fn decompose_pipeline(gamma: &Graph, params: &PipelineParams) -> Result<PipelineRun, DecomposeError> {
    let n = gamma.n();
    let r = check_host(gamma, params.c)?;
    let seed = params.seed;
    let limits = CompletionLimits {
        nodes: params.completion_budget,
        deadline: params.deadline,
    };
    if n < params.min_n.max(3) {
        let t = Instant::now();
        let completion = complete_residual(gamma, &limits, sub_seed(seed, 2))?;
        let run = PipelineRun {
            decomposition: completion.decomposition,
            route: Route::Direct,
            r,
            d0: 0,
            steps: 0,
            partition: None,
            step_stats: Vec::new(),
            residual_degree: r,
            completion: completion.stats,
            notes: vec![format!("n = {n} is below the pipeline minimum {}", params.min_n)],
            timings: Timings {
                completion_ms: ms(t),
                ..Timings::default()
            },
        };
        assert!(verify_decomposition(gamma, &run.decomposition).valid);
        return Ok(run);
    }

    let mut timings = Timings::default();
    let t = Instant::now();
    let tp = tri_partition(gamma, params)?;
    timings.partition_ms = ms(t);
    let mut notes = Vec::new();
    if !tp.meta.core_degree_bound_met {
        notes.push(format!(
            "core degree {} is below (1 - 2ε)r = {:.1}",
            tp.d0,
            (1.0 - 2.0 * params.epsilon) * r as f64
        ));
    }
    let mut steps = planned_steps(tp.d0, r, params.epsilon, params.step_limit);
    if params.strict_gadget_bounds {
        let safe = gadget_safe_steps(tp.d0, n, params.delta);
        if safe < steps {
            notes.push(format!(
                "rotation steps capped at {safe} of {steps}: later cores fall below the gadget degree bound {:.2}",
                gadget_degree_bound(n, params.delta)
            ));
            steps = safe;
        }
    }

    let t = Instant::now();
    let (mut g, mut f) = (tp.g.clone(), tp.f.clone());
    let mut cycles: Vec<Vec<Vertex>> = Vec::with_capacity(r / 2);
    let mut step_stats = Vec::with_capacity(steps);
    for i in 0..steps {
        check_deadline(params, "rotation steps")?;
        let step = extract_hamilton_step(&g, &f, params, sub_seed(seed, 1000 + i as u64))
            .map_err(|source| DecomposeError::Step { step: i, source })?;
        assert_eq!(step.g_prime.regular_degree(), Some(tp.d0 - 2 * (i + 1)), "core lost regularity");
        cycles.push(step.h);
        step_stats.push(step.stats);
        g = step.g_prime;
        f = step.f_prime;
    }
    timings.steps_ms = ms(t);

    let mut used: Vec<Edge> = cycles.iter().flat_map(|c| cycle_edges(c)).collect();
    used.sort_unstable();
    let residual = gamma.subtract(&used).expect("extracted cycles are edge-disjoint subgraphs of Γ");
    let residual_degree = r - 2 * steps;
    assert_eq!(residual.regular_degree(), Some(residual_degree));

    let t = Instant::now();
    check_deadline(params, "residual completion")?;
    let completion = complete_residual(&residual, &limits, sub_seed(seed, 2))?;
    timings.completion_ms = ms(t);
    cycles.extend(completion.decomposition.cycles);
    let decomposition = Decomposition::new(n, cycles, None);
    let verdict = verify_decomposition(gamma, &decomposition);
    assert!(verdict.valid, "pipeline produced an invalid decomposition: {verdict:?}");
    Ok(PipelineRun {
        decomposition,
        route: Route::Pipeline,
        r,
        d0: tp.d0,
        steps,
        partition: Some(tp.meta),
        step_stats,
        residual_degree,
        completion: completion.stats,
        notes,
        timings,
    })
}

/// Backtracking perfect matching: always branch on the unmatched vertex
/// with the fewest unmatched neighbors.
pub fn perfect_matching(g: &Graph, rng: &mut Rng, budget: u64) -> Option<Vec<Edge>> {
    let n = g.n();
    if n % 2 == 1 {
        return None;
    }
    let mut adj: Vec<Vec<Vertex>> = (0..n).map(|v| g.neighbors(v).to_vec()).collect();
    for list in &mut adj {
        list.shuffle(rng);
    }
    let mut mate = vec![usize::MAX; n];
    let mut left = budget;
    fn rec(adj: &[Vec<Vertex>], mate: &mut [usize], left: &mut u64) -> bool {
        let free = |v: &Vertex| mate[*v] == usize::MAX;
        let pick = (0..adj.len())
            .filter(free)
            .min_by_key(|&v| adj[v].iter().filter(|w| free(w)).count());
        let Some(v) = pick else { return true };
        if *left == 0 {
            return false;
        }
        *left -= 1;
        let cands: Vec<Vertex> = adj[v].iter().copied().filter(free).collect();
        for w in cands {
            mate[v] = w;
            mate[w] = v;
            if rec(adj, mate, left) {
                return true;
            }
            mate[v] = usize::MAX;
            mate[w] = usize::MAX;
        }
        false
    }
    rec(&adj, &mut mate, &mut left).then(|| {
        (0..n).filter(|&v| v < mate[v]).map(|v| edge(v, mate[v])).collect()
    })
}

/// Decompose an `r`-regular graph with `r` odd into `(r − 1)/2` Hamilton
/// cycles and a perfect matching.
pub fn decompose_odd(gamma: &Graph, params: &PipelineParams) -> Result<PipelineRun, DecomposeError> {
    let n = gamma.n();
    let r = gamma
        .regular_degree()
        .ok_or_else(|| DecomposeError::Precondition("graph is not regular".into()))?;
    if r % 2 == 0 {
        return Err(DecomposeError::Precondition(format!(
            "degree {r} is even; use the even-degree pipeline"
        )));
    }
    if n % 2 == 1 {
        return Err(DecomposeError::Precondition(format!("odd order {n} has no perfect matching")));
    }
    let mut rng = seeded(sub_seed(params.seed, 3));
    let matching = perfect_matching(gamma, &mut rng, params.completion_budget).ok_or(DecomposeError::NoPerfectMatching)?;
    let rest = gamma.subtract(&matching).expect("matching edges are graph edges");
    let mut run = if r == 1 {
        PipelineRun {
            decomposition: Decomposition::new(n, Vec::new(), None),
            route: Route::Direct,
            r: 0,
            d0: 0,
            steps: 0,
            partition: None,
            step_stats: Vec::new(),
            residual_degree: 0,
            completion: CompletionStats {
                method: CompletionMethod::Exhaustive,
                nodes: 0,
                restarts: 0,
            },
            notes: Vec::new(),
            timings: Timings::default(),
        }
    } else {
        let c = params.c.min((r - 1) as f64 / (n - 1) as f64);
        let inner = PipelineParams { c, ..params.clone() };
        decompose_pipeline(&rest, &inner)?
    };
    if n == 2 {
        run.notes.push("degenerate order n = 2: a single matching edge".into());
    }
    run.r = r;
    run.decomposition = Decomposition::new(n, run.decomposition.cycles, Some(matching));
    let verdict = verify_decomposition(gamma, &run.decomposition);
    assert!(verdict.valid, "odd decomposition invalid: {verdict:?}");
    Ok(run)
}
