//! Hamilton cycle search: exhaustive enumeration on small graphs, randomized
//! rotation-extension on dense ones, and the Euler-circuit split of a
//! 4-regular graph into two 2-factors.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::graph::{Edge, Graph, Vertex};
use crate::rng::Rng;

/// Largest order handled by the bitmask enumerators.
pub const MASK_CAP: usize = 64;

pub(crate) fn adjacency_masks(g: &Graph) -> Vec<u64> {
    assert!(g.n() <= MASK_CAP, "bitmask search needs n <= {MASK_CAP}");
    (0..g.n())
        .map(|v| g.neighbors(v).iter().fold(0u64, |m, &w| m | 1 << w))
        .collect()
}

/// Search control returned by visitors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Depth-first enumeration of Hamilton cycles of the graph given by `adj`.
///
/// Cycles start with the fixed arc `start → second`; the cycle is reported
/// when the path covers every vertex and its last vertex is adjacent to
/// `start` and accepted by `close`. Returns `Flow::Stop` if the visitor
/// stopped the search or `budget` ran out (the budget is decremented per node).
pub(crate) fn hamilton_dfs(
    adj: &[u64],
    start: Vertex,
    second: Vertex,
    close: &dyn Fn(Vertex) -> bool,
    budget: &mut u64,
    visit: &mut dyn FnMut(&[Vertex]) -> Flow,
) -> Flow {
    let n = adj.len();
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut path = vec![start, second];
    let visited = (1u64 << start) | (1u64 << second);
    rec(adj, full, start, &mut path, visited, close, budget, visit)
}

#[allow(clippy::too_many_arguments)]
fn rec(
    adj: &[u64],
    full: u64,
    start: Vertex,
    path: &mut Vec<Vertex>,
    visited: u64,
    close: &dyn Fn(Vertex) -> bool,
    budget: &mut u64,
    visit: &mut dyn FnMut(&[Vertex]) -> Flow,
) -> Flow {
    if *budget == 0 {
        return Flow::Stop;
    }
    *budget -= 1;
    let end = *path.last().unwrap();
    if visited == full {
        if adj[end] >> start & 1 == 1 && close(end) {
            return visit(path);
        }
        return Flow::Continue;
    }
    let open = full & !visited;
    // every unvisited vertex needs two usable neighbors, the start one
    let usable = open | (1u64 << end) | (1u64 << start);
    if adj[start] & (open | 1u64 << end) == 0 {
        return Flow::Continue;
    }
    let mut rest = open;
    while rest != 0 {
        let w = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        if (adj[w] & usable).count_ones() < 2 {
            return Flow::Continue;
        }
    }
    let mut cand = adj[end] & open;
    while cand != 0 {
        let w = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        path.push(w);
        let r = rec(adj, full, start, path, visited | 1u64 << w, close, budget, visit);
        path.pop();
        if r == Flow::Stop {
            return Flow::Stop;
        }
    }
    Flow::Continue
}

/// Every Hamilton cycle through the edge `(u, v)`, each once, as a vertex
/// sequence starting `u, v`.
pub(crate) fn cycles_through(
    adj: &[u64],
    (u, v): Edge,
    budget: &mut u64,
    visit: &mut dyn FnMut(&[Vertex]) -> Flow,
) -> Flow {
    if adj.len() < 3 || adj[u] >> v & 1 == 0 {
        return Flow::Continue;
    }
    hamilton_dfs(adj, u, v, &|_| true, budget, visit)
}

/// Every Hamilton cycle of the graph, each once, starting at vertex 0 and
/// leaving it through its smaller neighbor.
pub(crate) fn all_cycles(adj: &[u64], budget: &mut u64, visit: &mut dyn FnMut(&[Vertex]) -> Flow) -> Flow {
    if adj.len() < 3 {
        return Flow::Continue;
    }
    let mut nbrs = adj[0];
    while nbrs != 0 {
        let a = nbrs.trailing_zeros() as usize;
        nbrs &= nbrs - 1;
        if hamilton_dfs(adj, 0, a, &|last| last > a, budget, visit) == Flow::Stop {
            return Flow::Stop;
        }
    }
    Flow::Continue
}

/// Connectivity of the graph given by bitmasks, ignoring nothing: every
/// vertex must be reached.
pub(crate) fn mask_connected(adj: &[u64]) -> bool {
    let n = adj.len();
    if n <= 1 {
        return true;
    }
    let mut seen = 1u64;
    let mut frontier = 1u64;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[v] & !seen;
        seen |= new;
        frontier |= new;
    }
    seen.count_ones() as usize == n
}

/// Random Hamilton cycle by rotation-extension: extend the path at its end
/// when possible, otherwise rotate at a random pivot; close when spanning.
pub fn random_hamilton_cycle(g: &Graph, rng: &mut Rng, max_steps: usize) -> Option<Vec<Vertex>> {
    let n = g.n();
    if n < 3 {
        return None;
    }
    const NONE: usize = usize::MAX;
    let mut pos = vec![NONE; n];
    let start = rng.gen_range(0..n);
    let mut path = vec![start];
    pos[start] = 0;
    let mut open: Vec<Vertex> = Vec::new();
    for _ in 0..max_steps {
        let end = *path.last().unwrap();
        open.clear();
        open.extend(g.neighbors(end).iter().copied().filter(|&w| pos[w] == NONE));
        if let Some(&w) = open.choose(rng) {
            pos[w] = path.len();
            path.push(w);
            continue;
        }
        if path.len() == n && g.has_edge(path[0], end) {
            return Some(path);
        }
        // rotate: pivot w adjacent to the end, reverse the part after w
        let len = path.len();
        let pivots: Vec<usize> = g
            .neighbors(end)
            .iter()
            .map(|&w| pos[w])
            .filter(|&p| p + 2 < len)
            .collect();
        let Some(&p) = pivots.choose(rng) else {
            path.reverse();
            for (i, &v) in path.iter().enumerate() {
                pos[v] = i;
            }
            continue;
        };
        path[p + 1..].reverse();
        for (i, &v) in path.iter().enumerate().skip(p + 1) {
            pos[v] = i;
        }
    }
    None
}

/// Split a connected 4-regular graph into two 2-factors by colouring the
/// edges of a random Euler circuit alternately.
pub fn euler_split(g: &Graph, rng: &mut Rng) -> Option<(Vec<Edge>, Vec<Edge>)> {
    let n = g.n();
    let edges = g.edges();
    let m = edges.len();
    if m == 0 || m % 2 == 1 {
        return None;
    }
    let mut adj: Vec<Vec<(Vertex, usize)>> = vec![Vec::new(); n];
    for (id, &(u, v)) in edges.iter().enumerate() {
        adj[u].push((v, id));
        adj[v].push((u, id));
    }
    for list in &mut adj {
        list.shuffle(rng);
    }
    let mut used = vec![false; m];
    let mut next = vec![0usize; n];
    let start = loop {
        let v = rng.gen_range(0..n);
        if !adj[v].is_empty() {
            break v;
        }
    };
    // Hierholzer, recording the arc used to enter each stacked vertex
    let mut stack: Vec<(Vertex, usize)> = vec![(start, usize::MAX)];
    let mut circuit: Vec<usize> = Vec::with_capacity(m);
    while let Some(&(v, via)) = stack.last() {
        let list = &adj[v];
        while next[v] < list.len() && used[list[next[v]].1] {
            next[v] += 1;
        }
        if next[v] == list.len() {
            stack.pop();
            if via != usize::MAX {
                circuit.push(via);
            }
        } else {
            let (w, id) = list[next[v]];
            used[id] = true;
            stack.push((w, id));
        }
    }
    if circuit.len() != m {
        return None;
    }
    let mut a = Vec::with_capacity(m / 2);
    let mut b = Vec::with_capacity(m / 2);
    for (i, &id) in circuit.iter().enumerate() {
        if i % 2 == 0 {
            a.push(edges[id]);
        } else {
            b.push(edges[id]);
        }
    }
    Some((a, b))
}

/// The single cycle of a connected 2-regular edge set on `n` vertices.
pub fn as_hamilton_cycle(n: usize, edges: &[Edge]) -> Option<Vec<Vertex>> {
    if n < 3 || edges.len() != n {
        return None;
    }
    let mut nb = vec![[usize::MAX; 2]; n];
    for &(u, v) in edges {
        for (x, y) in [(u, v), (v, u)] {
            if nb[x][0] == usize::MAX {
                nb[x][0] = y;
            } else if nb[x][1] == usize::MAX {
                nb[x][1] = y;
            } else {
                return None;
            }
        }
    }
    if nb.iter().any(|p| p[1] == usize::MAX) {
        return None;
    }
    let mut cycle = Vec::with_capacity(n);
    let (mut prev, mut cur) = (usize::MAX, 0);
    loop {
        cycle.push(cur);
        let nxt = if nb[cur][0] != prev { nb[cur][0] } else { nb[cur][1] };
        prev = cur;
        cur = nxt;
        if cur == 0 {
            break;
        }
        if cycle.len() > n {
            return None;
        }
    }
    (cycle.len() == n).then_some(cycle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::walecki::cycle_edges;

    #[test]
    fn counts_small_complete_graphs() {
        for (n, want) in [(4usize, 3u64), (5, 12), (6, 60), (7, 360)] {
            let adj = adjacency_masks(&Graph::complete(n));
            let mut count = 0;
            let mut budget = u64::MAX;
            all_cycles(&adj, &mut budget, &mut |_| {
                count += 1;
                Flow::Continue
            });
            assert_eq!(count, want, "K{n}");
        }
    }

    #[test]
    fn through_edge_k5() {
        let adj = adjacency_masks(&Graph::complete(5));
        let mut count = 0;
        let mut budget = u64::MAX;
        cycles_through(&adj, (0, 1), &mut budget, &mut |c| {
            assert_eq!(&c[..2], &[0, 1]);
            count += 1;
            Flow::Continue
        });
        // 12 cycles, each uses 5 of the 10 edges
        assert_eq!(count, 6);
    }

    #[test]
    fn random_cycles_are_hamiltonian() {
        let g = Graph::complete(30);
        for seed in 0..20 {
            let c = random_hamilton_cycle(&g, &mut seeded(seed), 10_000).unwrap();
            assert_eq!(as_hamilton_cycle(30, &cycle_edges(&c).collect::<Vec<_>>()).map(|c| c.len()), Some(30));
        }
        assert!(random_hamilton_cycle(&Graph::complete(3).disjoint_union(&Graph::complete(3)), &mut seeded(0), 1000).is_none());
    }

    #[test]
    fn euler_split_balances_degrees() {
        let g = Graph::complete(5);
        for seed in 0..20 {
            let (a, b) = euler_split(&g, &mut seeded(seed)).unwrap();
            for part in [&a, &b] {
                let h = Graph::new(5, part.iter().copied()).unwrap();
                assert_eq!(h.regular_degree(), Some(2));
            }
        }
    }

    #[test]
    fn cycle_recovery() {
        assert_eq!(as_hamilton_cycle(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]), Some(vec![0, 1, 2, 3]));
        assert_eq!(as_hamilton_cycle(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]), None);
    }
}
