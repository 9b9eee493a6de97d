//! Rotation-extension: turn a (≤2)-factor of `G ∪ F` into a Hamilton cycle
//! by merging components, extending and rotating a path, and closing it, then
//! repair the degrees of `G` with substitution gadgets.
//!
//! One call to [`extract_hamilton_step`] removes a Hamilton cycle `H` from a
//! `d`-regular `G` and returns a `(d − 2)`-regular `G′` together with the
//! edge sets `E_G ⊆ G` and `E_F ⊆ F` that keep the degrees balanced.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factor::{component_cap, sample_le2_factor_with, FactorError, PartialHC, SampleOptions, TwoFactor};
use crate::graph::{edge, Edge, Graph, Vertex};
use crate::partition::PipelineParams;
use crate::rng::{seeded, sub_seed, Rng};
use crate::walecki::{canonical_cycle, cycle_edges};

/// Paths examined per rotation round before giving up on that round.
const ROUND_CAP: usize = 512;
/// Paths examined by the unrestricted rotation search.
const FALLBACK_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RotationError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("factor has a single component; nothing to merge")]
    SingleComponent,
    #[error("no edge of G ∪ F leaves the chosen component")]
    Disconnected,
    #[error("rotations exhausted without extending or closing the path")]
    Stuck,
    #[error("no (<=2)-factor: {0}")]
    NoFactor(#[from] FactorError),
    #[error("no substitution gadget for ({x}, {y})")]
    GadgetNotFound { x: Vertex, y: Vertex },
    #[error("gadget bound violated: {0}")]
    GadgetBound(String),
    #[error("no Hamilton cycle after {restarts} restarts (last failure: {last})")]
    RestartsExhausted { restarts: usize, last: String },
}

/// Current spanning structure: a (≤2)-factor or a partial Hamilton cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Shape {
    Factor(TwoFactor),
    Partial(PartialHC),
}

impl Shape {
    pub fn component_count(&self) -> usize {
        match self {
            Shape::Factor(f) => f.component_count(),
            Shape::Partial(p) => p.component_count(),
        }
    }

    pub fn edge_list(&self) -> Vec<Edge> {
        match self {
            Shape::Factor(f) => f.edge_list(),
            Shape::Partial(p) => p.edge_list(),
        }
    }

    pub fn hamilton_cycle(&self) -> Option<&[Vertex]> {
        match self {
            Shape::Factor(f) if f.is_hamilton_cycle() => Some(&f.cycles[0]),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    /// Open a cycle and join it to another component.
    Merge,
    /// Absorb another component into the path (after zero or more rotations).
    Extend,
    /// Close the path into a cycle (after zero or more rotations).
    Close,
}

/// One applied move: the edges it put into and took out of the structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub added: Vec<Edge>,
    pub removed: Vec<Edge>,
    /// Pivot rotations performed before the final extension or closure.
    pub rotations: usize,
    pub components: usize,
}

/// Sizes from the last structured rotation round.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLog {
    pub segments: usize,
    /// Vertex ranges (positions on the path) of the two refined segments.
    pub j1: (usize, usize),
    pub j2: (usize, usize),
    pub a: usize,
    pub b: usize,
    pub s: usize,
    /// The unrestricted fallback search was needed.
    pub relaxed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RotationState {
    pub initial: TwoFactor,
    pub current: Shape,
    pub history: Vec<Move>,
    pub last_round: Option<RoundLog>,
}

impl RotationState {
    pub fn new(initial: TwoFactor) -> Self {
        RotationState {
            current: Shape::Factor(initial.clone()),
            initial,
            history: Vec::new(),
            last_round: None,
        }
    }

    /// Apply the history to the initial factor's edge set.
    pub fn replay(&self) -> BTreeSet<Edge> {
        replay(&self.initial, &self.history)
    }
}

pub fn replay(initial: &TwoFactor, history: &[Move]) -> BTreeSet<Edge> {
    let mut set: BTreeSet<Edge> = initial.edge_list().into_iter().collect();
    for m in history {
        for e in &m.removed {
            assert!(set.remove(e), "replayed removal of absent edge {e:?}");
        }
        for &e in &m.added {
            assert!(set.insert(e), "replayed addition of present edge {e:?}");
        }
    }
    set
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Loc {
    Path(usize),
    Cycle(usize),
    Iso(usize),
}

#[derive(Clone, Debug)]
struct Work {
    n: usize,
    path: Option<Vec<Vertex>>,
    cycles: Vec<Vec<Vertex>>,
    iso: Vec<Edge>,
}

impl Work {
    fn from_shape(s: &Shape) -> Self {
        match s {
            Shape::Factor(f) => Work {
                n: f.n,
                path: None,
                cycles: f.cycles.clone(),
                iso: f.edges.clone(),
            },
            Shape::Partial(p) => Work {
                n: p.n,
                path: Some(p.path.clone()),
                cycles: p.cycles.clone(),
                iso: p.edges.clone(),
            },
        }
    }

    fn into_shape(self) -> Shape {
        match self.path {
            None => Shape::Factor(TwoFactor::new(self.n, self.cycles, self.iso)),
            Some(p) => Shape::Partial(PartialHC::new(self.n, p, self.cycles, self.iso)),
        }
    }

    fn locate(&self) -> Vec<Loc> {
        let mut loc = vec![Loc::Path(0); self.n];
        if let Some(p) = &self.path {
            for (i, &v) in p.iter().enumerate() {
                loc[v] = Loc::Path(i);
            }
        }
        for (i, c) in self.cycles.iter().enumerate() {
            for &v in c {
                loc[v] = Loc::Cycle(i);
            }
        }
        for (i, &(u, v)) in self.iso.iter().enumerate() {
            loc[u] = Loc::Iso(i);
            loc[v] = Loc::Iso(i);
        }
        loc
    }

    fn edges(&self) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        if let Some(p) = &self.path {
            out.extend(p.windows(2).map(|w| edge(w[0], w[1])));
        }
        for c in &self.cycles {
            out.extend(cycle_edges(c));
        }
        out.extend(self.iso.iter().copied());
        out
    }

    fn component_count(&self) -> usize {
        self.path.is_some() as usize + self.cycles.len() + self.iso.len()
    }

    /// Detach the component holding `z` as a vertex sequence starting at `z`.
    /// A cycle is opened at one of the two cycle edges at `z`.
    fn take_from(&mut self, z: Vertex, loc: Loc, rng: &mut Rng) -> Vec<Vertex> {
        match loc {
            Loc::Cycle(i) => {
                let c = self.cycles.swap_remove(i);
                let k = c.iter().position(|&v| v == z).unwrap();
                let len = c.len();
                if rng.gen_bool(0.5) {
                    (0..len).map(|j| c[(k + j) % len]).collect()
                } else {
                    (0..len).map(|j| c[(k + len - j) % len]).collect()
                }
            }
            Loc::Iso(i) => {
                let (a, b) = self.iso.swap_remove(i);
                if a == z {
                    vec![a, b]
                } else {
                    vec![b, a]
                }
            }
            Loc::Path(_) => unreachable!("path component is handled by the caller"),
        }
    }
}

fn diff_move(before: &BTreeSet<Edge>, after: &Work, kind: MoveKind, rotations: usize) -> Move {
    let after_set = after.edges();
    Move {
        kind,
        added: after_set.difference(before).copied().collect(),
        removed: before.difference(&after_set).copied().collect(),
        rotations,
        components: after.component_count(),
    }
}

fn union_has(g: &Graph, f: &Graph, u: Vertex, v: Vertex) -> bool {
    g.has_edge(u, v) || f.has_edge(u, v)
}

/// Join a smallest component of a (≤2)-factor to another component through
/// an edge of `G ∪ F` outside the factor. Components with fewer than `d`
/// vertices look for a `G`-edge first, larger ones for an `F`-edge first.
pub fn merge_step(h: &TwoFactor, g: &Graph, f: &Graph, rng: &mut Rng) -> Result<(PartialHC, Move), RotationError> {
    if h.component_count() < 2 {
        return Err(RotationError::SingleComponent);
    }
    let mut work = Work::from_shape(&Shape::Factor(h.clone()));
    let before = work.edges();
    let loc = work.locate();
    // a shortest cycle, or an isolated edge when there are no cycles
    let members: Vec<Vertex> = match work.cycles.iter().min_by_key(|c| c.len()) {
        Some(c) => c.clone(),
        None => vec![work.iso[0].0, work.iso[0].1],
    };
    let own = loc[members[0]];
    let d = g.max_degree();
    let sources: [&Graph; 2] = if members.len() < d { [g, f] } else { [f, g] };
    let mut choice = None;
    for src in sources {
        let mut cands: Vec<Edge> = members
            .iter()
            .flat_map(|&u| src.neighbors(u).iter().map(move |&w| (u, w)))
            .filter(|&(_, w)| loc[w] != own)
            .collect();
        if let Some(&e) = cands.choose(rng) {
            choice = Some(e);
            break;
        }
        cands.clear();
    }
    let (u, w) = choice.ok_or(RotationError::Disconnected)?;
    let loc_w = loc[w];
    // remove the merged components in index order so indices stay valid
    let (first, second) = match (own, loc_w) {
        (Loc::Cycle(a), Loc::Cycle(b)) | (Loc::Iso(a), Loc::Iso(b)) if a < b => ((w, loc_w), (u, own)),
        _ => ((u, own), (w, loc_w)),
    };
    let mut seq_first = work.take_from(first.0, first.1, rng);
    let seq_second = work.take_from(second.0, second.1, rng);
    let (mut cu, cw) = if first.0 == u {
        (std::mem::take(&mut seq_first), seq_second)
    } else {
        (seq_second, std::mem::take(&mut seq_first))
    };
    // `cu` starts at u; reverse so that it ends at u
    cu.reverse();
    cu.extend(cw);
    work.path = Some(cu);
    let mv = diff_move(&before, &work, MoveKind::Merge, 0);
    let Shape::Partial(p) = work.into_shape() else { unreachable!() };
    Ok((p, mv))
}

/// `path[..=pos]` followed by the rest reversed: the rotation with pivot
/// `path[pos]` that keeps `path[0]` fixed.
fn rotate(path: &[Vertex], pos: usize) -> Vec<Vertex> {
    let mut out = Vec::with_capacity(path.len());
    out.extend_from_slice(&path[..=pos]);
    out.extend(path[pos + 1..].iter().rev());
    out
}

struct Finisher<'a> {
    g: &'a Graph,
    f: &'a Graph,
    work: &'a Work,
    loc: Vec<Loc>,
}

impl Finisher<'_> {
    /// Extend at an endpoint of `q` if some neighbor lies off the path;
    /// otherwise close `q` if its endpoints are adjacent.
    fn finish(&self, q: &[Vertex], rng: &mut Rng) -> Option<(Work, MoveKind)> {
        for (end, reversed) in [(q[q.len() - 1], false), (q[0], true)] {
            for src in [self.g, self.f] {
                let cands: Vec<Vertex> = src
                    .neighbors(end)
                    .iter()
                    .copied()
                    .filter(|&z| !matches!(self.loc[z], Loc::Path(_)))
                    .collect();
                if let Some(&z) = cands.choose(rng) {
                    let mut work = self.work.clone();
                    let mut path = q.to_vec();
                    if reversed {
                        path.reverse();
                    }
                    let tail = work.take_from(z, self.loc[z], rng);
                    path.extend(tail);
                    work.path = Some(path);
                    return Some((work, MoveKind::Extend));
                }
            }
        }
        if q.len() >= 3 && union_has(self.g, self.f, q[0], q[q.len() - 1]) {
            let mut work = self.work.clone();
            work.path = None;
            work.cycles.push(q.to_vec());
            return Some((work, MoveKind::Close));
        }
        None
    }
}

/// Split `0..t` into `s` nearly equal position ranges.
fn segments(t: usize, s: usize) -> Vec<(usize, usize)> {
    (0..s).map(|i| (i * t / s, (i + 1) * t / s)).collect()
}

fn interior(seg: (usize, usize)) -> std::ops::Range<usize> {
    (seg.0 + 1)..seg.1.saturating_sub(1).max(seg.0 + 1)
}

fn count_in(path: &[Vertex], range: std::ops::Range<usize>, g: &Graph, v: Vertex) -> usize {
    range.filter(|&i| g.has_edge(path[i], v)).count()
}

/// The segment pair of the rotation argument: `J1` holds many
/// `G`-neighbors of the first endpoint, `J2` many of the last.
fn choose_segments(path: &[Vertex], g: &Graph, delta: f64) -> Option<(usize, (usize, usize), (usize, usize))> {
    let t = path.len();
    let s = ((2.0 / delta).ceil() as usize).min(t / 3);
    if s < 2 {
        return None;
    }
    let segs = segments(t, s);
    let (v1, vt) = (path[0], path[t - 1]);
    let best = |v: Vertex| {
        (0..s)
            .max_by_key(|&i| (count_in(path, interior(segs[i]), g, v), std::cmp::Reverse(i)))
            .unwrap()
    };
    let (p, q) = (best(v1), best(vt));
    if p != q {
        return Some((s, segs[p], segs[q]));
    }
    let (lo, hi) = segs[p];
    if hi - lo < 6 {
        return Some((s, segs[p], segs[p]));
    }
    // split I_p in two and keep the better-balanced orientation
    let mut best_split = None;
    for cut in lo + 3..=hi - 3 {
        for (j1, j2) in [((lo, cut), (cut, hi)), ((cut, hi), (lo, cut))] {
            let score = count_in(path, interior(j1), g, v1).min(count_in(path, interior(j2), g, vt));
            if best_split.is_none_or(|(b, _, _)| score > b) {
                best_split = Some((score, j1, j2));
            }
        }
    }
    let (_, j1, j2) = best_split.unwrap();
    Some((s, j1, j2))
}

fn sample_cap<T>(mut v: Vec<T>, cap: usize, rng: &mut Rng) -> Vec<T> {
    if v.len() > cap {
        v.shuffle(rng);
        v.truncate(cap);
    }
    v
}

/// Extend the path of a partial Hamilton cycle into another component, or
/// close it into a cycle, after up to three rounds of rotations.
///
/// The rounds follow the segment argument: rotations with pivots among the
/// `G`-neighbors of the last endpoint inside `J2` (endpoints `A`), then among
/// the `G`-neighbors of the first endpoint inside `J1` (endpoints `B`), then
/// among the `G`-neighbors of `a ∈ A` outside `J1 ∪ J2` (endpoints `S`).
/// Every intermediate path is tested for an extension first and a closing
/// edge second. When the structured rounds find nothing, an unrestricted
/// breadth-first rotation search over `G ∪ F` is tried.
pub fn rotate_or_close(
    state: &mut RotationState,
    g: &Graph,
    f: &Graph,
    delta: f64,
    rng: &mut Rng,
) -> Result<Shape, RotationError> {
    let Shape::Partial(p) = &state.current else {
        return Err(RotationError::Precondition("rotation needs a partial Hamilton cycle".into()));
    };
    let work = Work::from_shape(&state.current);
    let before = work.edges();
    let fin = Finisher {
        g,
        f,
        loc: work.locate(),
        work: &work,
    };
    let path = p.path.clone();
    let mut log = RoundLog::default();
    let done = |(w, kind): (Work, MoveKind), rotations: usize, log: RoundLog, state: &mut RotationState| {
        let mv = diff_move(&before, &w, kind, rotations);
        state.history.push(mv);
        state.last_round = Some(log);
        state.current = w.into_shape();
        Ok(state.current.clone())
    };

    if let Some(r) = fin.finish(&path, rng) {
        return done(r, 0, log, state);
    }

    if let Some((s, j1, j2)) = choose_segments(&path, g, delta) {
        log.segments = s;
        log.j1 = j1;
        log.j2 = j2;
        let v1 = path[0];
        let vt = path[path.len() - 1];
        let len = path.len();
        let in_j1: BTreeSet<Vertex> = (j1.0..j1.1).map(|i| path[i]).collect();
        let in_j2: BTreeSet<Vertex> = (j2.0..j2.1).map(|i| path[i]).collect();
        let int_j1: BTreeSet<Vertex> = interior(j1).map(|i| path[i]).collect();

        // round A: pivots v_i ∈ N_G(v_t) ∩ int(J2), endpoint v_1 fixed
        let a_paths: Vec<Vec<Vertex>> = interior(j2)
            .filter(|&i| i + 2 < len && g.has_edge(path[i], vt))
            .map(|i| rotate(&path, i))
            .collect();
        let a_paths = sample_cap(a_paths, ROUND_CAP, rng);
        log.a = a_paths.len();
        for q in &a_paths {
            if let Some(r) = fin.finish(q, rng) {
                return done(r, 1, log, state);
            }
        }
        // round B: pivots in N_G(v_1) ∩ int(J1), endpoint a fixed
        let mut b_paths = Vec::new();
        for q in &a_paths {
            let rev: Vec<Vertex> = q.iter().rev().copied().collect();
            for k in 0..len - 2 {
                if int_j1.contains(&rev[k]) && g.has_edge(rev[k], v1) {
                    b_paths.push(rotate(&rev, k));
                }
            }
        }
        let b_paths = sample_cap(b_paths, ROUND_CAP, rng);
        log.b = b_paths.iter().map(|q| q[q.len() - 1]).collect::<BTreeSet<_>>().len();
        for q in &b_paths {
            if let Some(r) = fin.finish(q, rng) {
                return done(r, 2, log, state);
            }
        }
        // round S: pivots in N_G(a) outside J1 ∪ J2, endpoint b fixed
        let mut s_paths = Vec::new();
        for q in &b_paths {
            let rev: Vec<Vertex> = q.iter().rev().copied().collect();
            let a = rev[len - 1];
            for k in 0..len - 2 {
                let v = rev[k];
                if !in_j1.contains(&v) && !in_j2.contains(&v) && g.has_edge(v, a) {
                    s_paths.push(rotate(&rev, k));
                }
            }
        }
        let s_paths = sample_cap(s_paths, ROUND_CAP, rng);
        log.s = s_paths.iter().map(|q| q[q.len() - 1]).collect::<BTreeSet<_>>().len();
        for q in &s_paths {
            if let Some(r) = fin.finish(q, rng) {
                return done(r, 3, log, state);
            }
        }
    }

    // unrestricted breadth-first rotations at either end over G ∪ F
    log.relaxed = true;
    let mut seen: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();
    let mut queue: VecDeque<(Vec<Vertex>, usize)> = VecDeque::new();
    seen.insert((path[0], path[path.len() - 1]));
    queue.push_back((path.clone(), 0));
    let mut explored = 0;
    while let Some((q, depth)) = queue.pop_front() {
        explored += 1;
        if explored > FALLBACK_CAP {
            break;
        }
        let len = q.len();
        let mut next = Vec::new();
        for rev in [false, true] {
            let base: Vec<Vertex> = if rev { q.iter().rev().copied().collect() } else { q.clone() };
            let end = base[len - 1];
            for k in 0..len.saturating_sub(2) {
                if union_has(g, f, base[k], end) {
                    next.push(rotate(&base, k));
                }
            }
        }
        next.shuffle(rng);
        for r in next {
            let key = (r[0].min(r[len - 1]), r[0].max(r[len - 1]));
            if !seen.insert(key) {
                continue;
            }
            if let Some(res) = fin.finish(&r, rng) {
                return done(res, depth + 1, log, state);
            }
            queue.push_back((r, depth + 1));
        }
    }
    state.last_round = Some(log);
    Err(RotationError::Stuck)
}

/// Find `x1, x2, y1, y2` outside `s` (and distinct from `x`, `y` and each
/// other) with `xx1, yy1, x2y2 ∈ G` and `x1x2, y1y2 ∈ F`. Edges in `avoid`
/// (the Hamilton cycle being removed) are not used.
pub fn substitution_gadget(
    g: &Graph,
    f: &Graph,
    x: Vertex,
    y: Vertex,
    s: &BTreeSet<Vertex>,
    avoid: &BTreeSet<Edge>,
) -> Result<(Vertex, Vertex, Vertex, Vertex), RotationError> {
    if x == y {
        return Err(RotationError::Precondition("gadget endpoints must differ".into()));
    }
    if !f.has_edge(x, y) {
        return Err(RotationError::Precondition(format!("({x}, {y}) is not an edge of F")));
    }
    let free = |v: Vertex, taken: &[Vertex]| !s.contains(&v) && v != x && v != y && !taken.contains(&v);
    let usable = |a: Vertex, b: Vertex| !avoid.contains(&edge(a, b));
    for &x1 in g.neighbors(x) {
        if !free(x1, &[]) || !usable(x, x1) {
            continue;
        }
        for &x2 in f.neighbors(x1) {
            if !free(x2, &[x1]) {
                continue;
            }
            for &y1 in g.neighbors(y) {
                if !free(y1, &[x1, x2]) || !usable(y, y1) {
                    continue;
                }
                for &y2 in f.neighbors(y1) {
                    if free(y2, &[x1, x2, y1]) && g.has_edge(x2, y2) && usable(x2, y2) {
                        return Ok((x1, x2, y1, y2));
                    }
                }
            }
        }
    }
    Err(RotationError::GadgetNotFound { x, y })
}

/// Smallest core degree `2δ²n + n^0.6` at which a step may repair
/// reservoir edges with substitution gadgets.
pub fn gadget_degree_bound(n: usize, delta: f64) -> f64 {
    2.0 * delta * delta * n as f64 + (n as f64).powf(0.6)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub restarts: usize,
    pub moves: usize,
    pub move_cap: usize,
    pub initial_components: usize,
    /// Edges of `H` taken from `F`.
    pub hamilton_f_edges: usize,
    /// Size of the gadget exclusion set at the end.
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepResult {
    /// The Hamilton cycle, canonical form.
    pub h: Vec<Vertex>,
    pub e_g: Vec<Edge>,
    pub e_f: Vec<Edge>,
    pub g_prime: Graph,
    pub f_prime: Graph,
    pub initial: TwoFactor,
    pub history: Vec<Move>,
    pub stats: StepStats,
}

/// Grow a Hamilton cycle of `G ∪ F` from `state`, at most `cap` moves.
fn grow(
    state: &mut RotationState,
    g: &Graph,
    f: &Graph,
    delta: f64,
    cap: usize,
    rng: &mut Rng,
) -> Result<Vec<Vertex>, RotationError> {
    loop {
        if let Some(h) = state.current.hamilton_cycle() {
            return Ok(h.to_vec());
        }
        if state.history.len() >= cap {
            return Err(RotationError::Stuck);
        }
        match &state.current {
            Shape::Factor(tf) => {
                let (p, mv) = merge_step(tf, g, f, rng)?;
                state.history.push(mv);
                state.current = Shape::Partial(p);
            }
            Shape::Partial(_) => {
                rotate_or_close(state, g, f, delta, rng)?;
            }
        }
    }
}

/// Remove one Hamilton cycle from `G ∪ F` keeping `G` regular.
///
/// Samples a (≤2)-factor of `G`, turns it into a Hamilton cycle `H` in at most
/// `2s* + 1` moves, then for each edge `xy ∈ H ∩ F` applies a substitution
/// gadget: `x1x2, y1y2` join `E_F` and `xx1, yy1, x2y2` join `E_G`. Returns
/// `G′ = (G ∪ E_F) ∖ (H ∪ E_G)` and `F′ = F ∖ (H ∪ E_F)`. Any dead end
/// restarts from a fresh factor.
pub fn extract_hamilton_step(
    g: &Graph,
    f: &Graph,
    params: &PipelineParams,
    seed: u64,
) -> Result<StepResult, RotationError> {
    let n = g.n();
    if f.n() != n {
        return Err(RotationError::Precondition(format!("G has {n} vertices, F has {}", f.n())));
    }
    let d = g
        .regular_degree()
        .ok_or_else(|| RotationError::Precondition("G is not regular".into()))?;
    if d % 2 == 1 || d < 4 {
        return Err(RotationError::Precondition(format!("G must be d-regular with d even and >= 4, got {d}")));
    }
    if let Some(&e) = g.edges().iter().find(|e| f.has_edge(e.0, e.1)) {
        return Err(RotationError::Precondition(format!("G and F share edge {e:?}")));
    }
    let cap = 2 * component_cap(n) + 1;
    let opts = SampleOptions {
        component_cap: Some(component_cap(n)),
        attempts: params.factor_attempts,
    };
    let n_pow = (n as f64).powf(0.6);
    let mut last = String::from("none");
    for restart in 0..params.restart_budget.max(1) {
        let run_seed = sub_seed(seed, restart as u64);
        let initial = sample_le2_factor_with(g, run_seed, opts)?;
        let mut rng = seeded(sub_seed(run_seed, u64::MAX));
        let mut state = RotationState::new(initial.clone());
        let cycle = match grow(&mut state, g, f, params.delta, cap, &mut rng) {
            Ok(c) => c,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let h_edges: BTreeSet<Edge> = cycle_edges(&cycle).collect();
        let hf: Vec<Edge> = h_edges.iter().copied().filter(|e| f.has_edge(e.0, e.1)).collect();
        let mut excluded: BTreeSet<Vertex> = hf.iter().flat_map(|&(a, b)| [a, b]).collect();
        if params.strict_gadget_bounds && !hf.is_empty() {
            let need = gadget_degree_bound(n, params.delta);
            if (d as f64) < need {
                last = format!("degree {d} below 2δ²n + n^0.6 = {need:.2}");
                continue;
            }
        }
        let mut e_g = Vec::new();
        let mut e_f = Vec::new();
        let mut failed = None;
        for &(x, y) in &hf {
            if params.strict_gadget_bounds && excluded.len() as f64 + 4.0 > n_pow {
                failed = Some(format!("exclusion set would reach {} > n^0.6 = {n_pow:.2}", excluded.len() + 4));
                break;
            }
            match substitution_gadget(g, f, x, y, &excluded, &h_edges) {
                Ok((x1, x2, y1, y2)) => {
                    excluded.extend([x1, x2, y1, y2]);
                    e_f.extend([edge(x1, x2), edge(y1, y2)]);
                    e_g.extend([edge(x, x1), edge(y, y1), edge(x2, y2)]);
                }
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        if let Some(msg) = failed {
            last = msg;
            continue;
        }
        e_g.sort_unstable();
        e_f.sort_unstable();
        let h_in_g: Vec<Edge> = h_edges.iter().copied().filter(|e| g.has_edge(e.0, e.1)).collect();
        let mut removed_g: Vec<Edge> = h_in_g.iter().chain(&e_g).copied().collect();
        removed_g.sort_unstable();
        let g_prime = g
            .subtract(&removed_g)
            .expect("H ∩ G and E_G are disjoint subsets of G")
            .union(&e_f)
            .expect("E_F is disjoint from G");
        let mut removed_f: Vec<Edge> = hf.iter().chain(&e_f).copied().collect();
        removed_f.sort_unstable();
        let f_prime = f.subtract(&removed_f).expect("H ∩ F and E_F are disjoint subsets of F");
        assert_eq!(g_prime.regular_degree(), Some(d - 2), "G' lost regularity");
        let moves = state.history.len();
        return Ok(StepResult {
            h: canonical_cycle(&cycle),
            e_g,
            e_f,
            g_prime,
            f_prime,
            stats: StepStats {
                restarts: restart,
                moves,
                move_cap: cap,
                initial_components: initial.component_count(),
                hamilton_f_edges: hf.len(),
                excluded: excluded.len(),
            },
            initial,
            history: state.history,
        });
    }
    Err(RotationError::RestartsExhausted {
        restarts: params.restart_budget.max(1),
        last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::derive_params;

    fn two_triangles_plus(extra: &[Edge]) -> Graph {
        let mut e = vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        e.extend_from_slice(extra);
        Graph::new(6, e).unwrap()
    }

    #[test]
    fn merge_two_triangles() {
        let g = two_triangles_plus(&[(2, 3)]);
        let h = TwoFactor::new(6, vec![vec![0, 1, 2], vec![3, 4, 5]], vec![]);
        let (p, mv) = merge_step(&h, &g, &Graph::empty(6), &mut seeded(1)).unwrap();
        assert_eq!(p.path.len(), 6);
        assert_eq!(p.edge_list().len(), 5);
        assert_eq!(p.component_count(), 1);
        assert_eq!(mv.added, vec![(2, 3)]);
        assert_eq!(mv.removed.len(), 2);
        p.validate(&g).unwrap();
    }

    #[test]
    fn merge_errors() {
        let k6 = Graph::complete(6);
        let hc = TwoFactor::new(6, vec![(0..6).collect()], vec![]);
        assert_eq!(merge_step(&hc, &k6, &Graph::empty(6), &mut seeded(0)).unwrap_err(), RotationError::SingleComponent);
        let g = two_triangles_plus(&[]);
        let h = TwoFactor::new(6, vec![vec![0, 1, 2], vec![3, 4, 5]], vec![]);
        assert_eq!(merge_step(&h, &g, &Graph::empty(6), &mut seeded(0)).unwrap_err(), RotationError::Disconnected);
    }

    #[test]
    fn merge_with_isolated_edge() {
        let g = Graph::complete(5);
        let h = TwoFactor::new(5, vec![vec![0, 1, 2]], vec![(3, 4)]);
        for seed in 0..20 {
            let (p, mv) = merge_step(&h, &g, &Graph::empty(5), &mut seeded(seed)).unwrap();
            p.validate(&g).unwrap();
            assert_eq!(p.component_count(), 1);
            assert_eq!(mv.added.len(), 1);
            assert_eq!(mv.removed.len(), 1);
        }
    }

    #[test]
    fn extend_into_cycle() {
        let g = Graph::new(6, [(0, 1), (1, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let p = PartialHC::new(6, vec![0, 1, 2], vec![vec![3, 4, 5]], vec![]);
        let mut st = RotationState::new(TwoFactor::new(6, vec![], vec![]));
        st.current = Shape::Partial(p);
        let out = rotate_or_close(&mut st, &g, &Graph::empty(6), 0.1, &mut seeded(0)).unwrap();
        assert_eq!(out.component_count(), 1);
        assert_eq!(st.history[0].kind, MoveKind::Extend);
        match out {
            Shape::Partial(p) => {
                assert_eq!(p.path.len(), 6);
                p.validate(&g).unwrap();
            }
            _ => panic!("expected a path"),
        }
    }

    #[test]
    fn spanning_path_in_complete_graph_closes() {
        let g = Graph::complete(7);
        let mut st = RotationState::new(TwoFactor::new(7, vec![], vec![]));
        st.current = Shape::Partial(PartialHC::new(7, (0..7).collect(), vec![], vec![]));
        let out = rotate_or_close(&mut st, &g, &Graph::empty(7), 0.1, &mut seeded(0)).unwrap();
        assert!(out.hamilton_cycle().is_some());
        assert_eq!(st.history[0].kind, MoveKind::Close);
    }

    #[test]
    fn hand_rotation_closes_five_cycle() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 4), (0, 2)]).unwrap();
        let mut st = RotationState::new(TwoFactor::new(5, vec![], vec![]));
        st.current = Shape::Partial(PartialHC::new(5, vec![0, 1, 2, 3, 4], vec![], vec![]));
        let out = rotate_or_close(&mut st, &g, &Graph::empty(5), 0.1, &mut seeded(0)).unwrap();
        let h = out.hamilton_cycle().unwrap();
        assert_eq!(canonical_cycle(h), vec![0, 1, 4, 3, 2]);
        assert!(cycle_edges(h).all(|(u, v)| g.has_edge(u, v)));
        assert_eq!(st.history[0].rotations, 1);
    }

    #[test]
    fn gadget_cases() {
        let k = Graph::complete(20);
        let none = BTreeSet::new();
        let no_edges = BTreeSet::new();
        let (x1, x2, y1, y2) = substitution_gadget(&k, &k, 0, 1, &none, &no_edges).unwrap();
        let all = [0, 1, x1, x2, y1, y2];
        assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), 6);
        assert_eq!((x1, x2, y1, y2), (2, 3, 4, 5));
        let blocked: BTreeSet<Vertex> = (2..20).collect();
        assert!(matches!(
            substitution_gadget(&k, &k, 0, 1, &blocked, &no_edges),
            Err(RotationError::GadgetNotFound { .. })
        ));
        assert!(matches!(
            substitution_gadget(&k, &k, 3, 3, &none, &no_edges),
            Err(RotationError::Precondition(_))
        ));
    }

    #[test]
    fn k9_step_without_reservoir() {
        let g = Graph::complete(9);
        let f = Graph::empty(9);
        let p = derive_params(1.0, 0.05, 0.01, 0.2, 0).unwrap();
        for seed in 0..20 {
            let st = extract_hamilton_step(&g, &f, &p, seed).unwrap();
            assert!(st.e_g.is_empty() && st.e_f.is_empty());
            assert_eq!(st.g_prime.regular_degree(), Some(6));
            assert_eq!(st.h.len(), 9);
            let replayed = replay(&st.initial, &st.history);
            let h: BTreeSet<Edge> = cycle_edges(&st.h).collect();
            assert_eq!(replayed, h);
            assert!(st.stats.moves <= st.stats.move_cap);
        }
    }

    #[test]
    fn step_preconditions() {
        let p = derive_params(1.0, 0.05, 0.01, 0.2, 0).unwrap();
        let c = Graph::cycle(6);
        assert!(matches!(
            extract_hamilton_step(&c, &Graph::empty(6), &p, 0),
            Err(RotationError::Precondition(_))
        ));
        // 4-regular on 6 vertices plus an isolated vertex: no factor exists
        let k5 = Graph::complete(5);
        let g = k5.disjoint_union(&Graph::empty(1));
        assert!(extract_hamilton_step(&g, &Graph::empty(6), &p, 0).is_err());
    }
}
