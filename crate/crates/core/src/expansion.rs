//! Structural predicates: edge density between vertex sets, robust
//! neighborhoods, robust expansion and (α,β)-regularity.
//!
//! Real thresholds such as `ν·n` are rounded up with [`ceil_count`]. Exact
//! checks enumerate every vertex subset and are capped at [`EXACT_CAP`]
//! vertices; above that only sampled certification is available.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ceil_count, Graph, GraphError, Vertex, VertexSet};
use crate::rng::seeded;

/// Largest vertex count for which exact subset enumeration is allowed.
pub const EXACT_CAP: usize = 24;

/// Default number of random subsets checked in sampled mode.
pub const DEFAULT_TRIALS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("exact check requested for n = {n}, above the cap of {cap}")]
    ExactTooLarge { n: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// How a predicate is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Exact,
    Sampled { trials: usize, seed: u64 },
}

/// Which mode produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VerdictMode {
    Exact,
    Sampled { trials: usize },
}

impl From<CheckMode> for VerdictMode {
    fn from(m: CheckMode) -> Self {
        match m {
            CheckMode::Exact => VerdictMode::Exact,
            CheckMode::Sampled { trials, .. } => VerdictMode::Sampled { trials },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpanderVerdict {
    pub holds: bool,
    /// A set `S` violating the expansion inequality, when `holds` is false.
    pub witness: Option<VertexSet>,
    pub mode: VerdictMode,
}

/// Number of edges with one endpoint in `a` and the other in `b`. An edge
/// with both endpoints in `a ∩ b` is counted once.
pub fn edges_between(g: &Graph, a: &VertexSet, b: &VertexSet) -> Result<usize, GraphError> {
    a.check_range(g.n())?;
    b.check_range(g.n())?;
    let ina = a.indicator(g.n());
    let inb = b.indicator(g.n());
    Ok(g
        .edges()
        .iter()
        .filter(|&&(u, v)| (ina[u] && inb[v]) || (ina[v] && inb[u]))
        .count())
}

fn check_fraction(name: &str, x: f64) -> Result<(), ExpansionError> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(ExpansionError::Parameter(format!(
            "{name} must lie in (0, 1], got {x}"
        )))
    }
}

/// Vertices with at least `⌈ν·n⌉` neighbors in `s`.
pub fn robust_neighborhood(g: &Graph, s: &VertexSet, nu: f64) -> Result<VertexSet, ExpansionError> {
    check_fraction("nu", nu)?;
    s.check_range(g.n())?;
    let threshold = ceil_count(nu * g.n() as f64);
    let ins = s.indicator(g.n());
    let members = (0..g.n())
        .filter(|&v| g.neighbors(v).iter().filter(|&&w| ins[w]).count() >= threshold)
        .collect();
    Ok(VertexSet::from_sorted(members))
}

fn adjacency_masks(g: &Graph) -> Vec<u64> {
    (0..g.n())
        .map(|v| g.neighbors(v).iter().fold(0u64, |m, &w| m | 1 << w))
        .collect()
}

/// Robust `(ν, τ)`-expansion: `|RN_ν(S)| >= |S| + ⌈ν·n⌉` for every `S` with
/// `⌈τ·n⌉ <= |S| <= ⌊(1-τ)·n⌋`.
///
/// Sampled mode draws the size uniformly from the admissible range and then a
/// uniform subset of that size; it either reports a concrete counterexample or
/// certifies the sampled sets.
pub fn is_robust_expander(
    g: &Graph,
    nu: f64,
    tau: f64,
    mode: CheckMode,
) -> Result<ExpanderVerdict, ExpansionError> {
    if !(nu > 0.0 && nu <= tau && tau < 1.0) {
        return Err(ExpansionError::Parameter(format!(
            "need 0 < nu <= tau < 1, got nu = {nu}, tau = {tau}"
        )));
    }
    let n = g.n();
    let threshold = ceil_count(nu * n as f64);
    let lo = ceil_count(tau * n as f64).max(1);
    let hi = ((1.0 - tau) * n as f64 + 1e-9).floor() as usize;
    let verdict = |witness: Option<VertexSet>| ExpanderVerdict {
        holds: witness.is_none(),
        witness,
        mode: mode.into(),
    };
    if lo > hi {
        return Ok(verdict(None));
    }
    match mode {
        CheckMode::Exact => {
            if n > EXACT_CAP {
                return Err(ExpansionError::ExactTooLarge { n, cap: EXACT_CAP });
            }
            let adj = adjacency_masks(g);
            for mask in 0u64..(1u64 << n) {
                let size = mask.count_ones() as usize;
                if size < lo || size > hi {
                    continue;
                }
                let rn = adj
                    .iter()
                    .filter(|&&a| (a & mask).count_ones() as usize >= threshold)
                    .count();
                if rn < size + threshold {
                    return Ok(verdict(Some(VertexSet::from_mask(mask))));
                }
            }
            Ok(verdict(None))
        }
        CheckMode::Sampled { trials, seed } => {
            let mut rng = seeded(seed);
            for _ in 0..trials {
                let size = rng.gen_range(lo..=hi);
                let mut members = index::sample(&mut rng, n, size).into_vec();
                members.sort_unstable();
                let s = VertexSet::from_sorted(members);
                let rn = robust_neighborhood(g, &s, nu)?;
                if rn.len() < size + threshold {
                    return Ok(verdict(Some(s)));
                }
            }
            Ok(verdict(None))
        }
    }
}

/// Why a graph failed the (α,β)-regularity test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegularityViolation {
    MinDegree { vertex: Vertex, degree: usize },
    Density { s: VertexSet, t: VertexSet, density: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub holds: bool,
    pub violation: Option<RegularityViolation>,
    pub mode: VerdictMode,
}

/// (α,β)-regularity: minimum degree at least `α·n − 1`, and
/// `|e(S,T)/(|S||T|) − α| <= β` for all disjoint `S, T` with
/// `|S|, |T| >= ⌈β·n⌉`.
///
/// The exact mode enumerates `S` and, for every size of `T`, only the two
/// extreme choices of `T` (the vertices outside `S` with the most and the
/// fewest neighbors in `S`); every other `T` of that size has a density in
/// between, so this is exhaustive.
pub fn check_alpha_beta_regular(
    g: &Graph,
    alpha: f64,
    beta: f64,
    mode: CheckMode,
) -> Result<RegularityVerdict, ExpansionError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ExpansionError::Parameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(ExpansionError::Parameter(format!(
            "beta must lie in (0, 1/2), got {beta}"
        )));
    }
    let n = g.n();
    if mode == CheckMode::Exact && n > EXACT_CAP {
        return Err(ExpansionError::ExactTooLarge { n, cap: EXACT_CAP });
    }
    let verdict = |violation: Option<RegularityViolation>| RegularityVerdict {
        holds: violation.is_none(),
        violation,
        mode: mode.into(),
    };
    let min_allowed = alpha * n as f64 - 1.0;
    if let Some(v) = (0..n).find(|&v| (g.degree(v) as f64) + 1e-9 < min_allowed) {
        return Ok(verdict(Some(RegularityViolation::MinDegree {
            vertex: v,
            degree: g.degree(v),
        })));
    }
    let k = ceil_count(beta * n as f64).max(1);
    if 2 * k > n {
        return Ok(verdict(None));
    }
    let off = |e: usize, s: usize, t: usize| {
        let density = e as f64 / (s * t) as f64;
        ((density - alpha).abs() > beta + 1e-12).then_some(density)
    };
    match mode {
        CheckMode::Exact => {
            let adj = adjacency_masks(g);
            let mut outside: Vec<(usize, Vertex)> = Vec::with_capacity(n);
            for mask in 0u64..(1u64 << n) {
                let s = mask.count_ones() as usize;
                if s < k || n - s < k {
                    continue;
                }
                outside.clear();
                outside.extend(
                    (0..n)
                        .filter(|&v| mask >> v & 1 == 0)
                        .map(|v| ((adj[v] & mask).count_ones() as usize, v)),
                );
                outside.sort_unstable();
                let m = outside.len();
                let mut low = 0;
                let mut high = 0;
                for t in 1..=m {
                    low += outside[t - 1].0;
                    high += outside[m - t].0;
                    if t < k {
                        continue;
                    }
                    let hit = off(low, s, t)
                        .map(|d| (d, &outside[..t]))
                        .or_else(|| off(high, s, t).map(|d| (d, &outside[m - t..])));
                    if let Some((density, chosen)) = hit {
                        let mut tv: Vec<Vertex> = chosen.iter().map(|&(_, v)| v).collect();
                        tv.sort_unstable();
                        return Ok(verdict(Some(RegularityViolation::Density {
                            s: VertexSet::from_mask(mask),
                            t: VertexSet::from_sorted(tv),
                            density,
                        })));
                    }
                }
            }
            Ok(verdict(None))
        }
        CheckMode::Sampled { trials, seed } => {
            let mut rng = seeded(seed);
            for _ in 0..trials {
                let s_size = rng.gen_range(k..=n - k);
                let t_size = rng.gen_range(k..=n - s_size);
                let picked = index::sample(&mut rng, n, s_size + t_size).into_vec();
                let mut sv = picked[..s_size].to_vec();
                let mut tv = picked[s_size..].to_vec();
                sv.sort_unstable();
                tv.sort_unstable();
                let s = VertexSet::from_sorted(sv);
                let t = VertexSet::from_sorted(tv);
                let e = edges_between(g, &s, &t)?;
                if let Some(density) = off(e, s_size, t_size) {
                    return Ok(verdict(Some(RegularityViolation::Density { s, t, density })));
                }
            }
            Ok(verdict(None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, v: &[usize]) -> VertexSet {
        VertexSet::new(n, v.iter().copied()).unwrap()
    }

    #[test]
    fn edges_between_examples() {
        let k5 = Graph::complete(5);
        assert_eq!(edges_between(&k5, &set(5, &[0, 1]), &set(5, &[2, 3, 4])).unwrap(), 6);
        // Enumerating K5's ten edges: 01 02 03 12 13 23 qualify, 04 14 24 34 do not.
        assert_eq!(edges_between(&k5, &set(5, &[0, 1, 2]), &set(5, &[1, 2, 3])).unwrap(), 6);
        let tri = Graph::cycle(3);
        assert_eq!(edges_between(&tri, &set(3, &[0]), &set(3, &[0])).unwrap(), 0);
        assert!(edges_between(&tri, &set(5, &[4]), &set(3, &[0])).is_err());
    }

    #[test]
    fn robust_neighborhood_examples() {
        let c4 = Graph::cycle(4);
        let rn = robust_neighborhood(&c4, &set(4, &[0]), 0.25).unwrap();
        assert_eq!(rn.as_slice(), &[1, 3]);
        let k5 = Graph::complete(5);
        let rn = robust_neighborhood(&k5, &set(5, &[0, 1]), 0.2).unwrap();
        assert_eq!(rn.as_slice(), &[0, 1, 2, 3, 4]);
        let rn = robust_neighborhood(&k5, &set(5, &[0]), 0.5).unwrap();
        assert!(rn.is_empty());
    }

    #[test]
    fn k8_is_robust_expander() {
        let v = is_robust_expander(&Graph::complete(8), 0.1, 0.25, CheckMode::Exact).unwrap();
        assert!(v.holds);
        assert_eq!(v.mode, VerdictMode::Exact);
    }

    #[test]
    fn empty_graph_is_not_expander() {
        let v = is_robust_expander(&Graph::empty(8), 0.1, 0.25, CheckMode::Exact).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness.unwrap().len(), 2);
    }

    #[test]
    fn two_k4_rejected_with_valid_witness() {
        let g = Graph::complete(4).disjoint_union(&Graph::complete(4));
        let v = is_robust_expander(&g, 0.2, 0.25, CheckMode::Exact).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        let rn = robust_neighborhood(&g, &w, 0.2).unwrap();
        assert!(rn.len() < w.len() + 2);
        // One side is a witness too.
        let side = set(8, &[0, 1, 2, 3]);
        assert_eq!(robust_neighborhood(&g, &side, 0.2).unwrap(), side);
    }

    #[test]
    fn exact_cap_enforced() {
        let err = is_robust_expander(&Graph::complete(25), 0.1, 0.2, CheckMode::Exact);
        assert!(matches!(err, Err(ExpansionError::ExactTooLarge { n: 25, .. })));
        let ok = is_robust_expander(
            &Graph::complete(25),
            0.1,
            0.2,
            CheckMode::Sampled { trials: 200, seed: 1 },
        )
        .unwrap();
        assert!(ok.holds);
        assert_eq!(ok.mode, VerdictMode::Sampled { trials: 200 });
    }

    #[test]
    fn sampled_finds_counterexample_in_empty_graph() {
        let v = is_robust_expander(
            &Graph::empty(40),
            0.1,
            0.25,
            CheckMode::Sampled { trials: 5, seed: 3 },
        )
        .unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn expander_parameter_validation() {
        let g = Graph::complete(5);
        assert!(is_robust_expander(&g, 0.3, 0.2, CheckMode::Exact).is_err());
        assert!(is_robust_expander(&g, 0.0, 0.2, CheckMode::Exact).is_err());
    }

    #[test]
    fn alpha_beta_examples() {
        let v = check_alpha_beta_regular(&Graph::complete(10), 1.0, 0.3, CheckMode::Exact).unwrap();
        assert!(v.holds);
        let v = check_alpha_beta_regular(&Graph::empty(10), 0.5, 0.3, CheckMode::Exact).unwrap();
        assert!(matches!(v.violation, Some(RegularityViolation::MinDegree { .. })));
        let v = check_alpha_beta_regular(&Graph::cycle(10), 0.5, 0.2, CheckMode::Exact).unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn alpha_beta_density_violation_on_cycle() {
        // Degree condition 2 >= 0.3*10 - 1 holds, so the density test decides.
        let c10 = Graph::cycle(10);
        let v = check_alpha_beta_regular(&c10, 0.3, 0.2, CheckMode::Exact).unwrap();
        match v.violation {
            Some(RegularityViolation::Density { s, t, density }) => {
                let e = edges_between(&c10, &s, &t).unwrap();
                assert_eq!(density, e as f64 / (s.len() * t.len()) as f64);
                assert!((density - 0.3).abs() > 0.2);
                assert!(s.iter().all(|v| !t.contains(v)));
            }
            other => panic!("expected density violation, got {other:?}"),
        }
        let sampled = check_alpha_beta_regular(
            &c10,
            0.3,
            0.2,
            CheckMode::Sampled { trials: 2000, seed: 5 },
        )
        .unwrap();
        assert!(!sampled.holds);
    }

    #[test]
    fn alpha_beta_rejects_bad_beta() {
        assert!(check_alpha_beta_regular(&Graph::complete(4), 1.0, 0.5, CheckMode::Exact).is_err());
    }
}
