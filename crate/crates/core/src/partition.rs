//! Random three-way split of a dense regular graph `Γ` into a regular core
//! `G`, a sparse random reservoir `F` and a residual `R`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{edges_between, is_robust_expander, CheckMode, ExpanderVerdict, EXACT_CAP};
use crate::graph::{ceil_count, Edge, Graph, VertexSet};
use crate::regularize::{extract_with_half_degree, DEFAULT_ORIENTATION_RETRIES};
use crate::rng::{seeded, sub_seed};

pub const DEFAULT_PARTITION_RETRIES: usize = 16;
pub const DEFAULT_RESTART_BUDGET: usize = 200;
pub const DEFAULT_MIN_N: usize = 8;
pub const DEFAULT_COMPLETION_BUDGET: u64 = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("graph is not regular")]
    NotRegular,
    #[error("degree {0} is odd")]
    OddDegree(usize),
    #[error("degree {r} is below c·(n-1) = {bound:.2}")]
    TooSparse { r: usize, bound: f64 },
    #[error("no regular core found in {attempts} random splits")]
    RetriesExhausted { attempts: usize },
}

/// Every tunable of the pipeline. The Greek-letter parameters obey
/// `α = 3εc`, `δ = min(εc/5, τ/2)`, `ν = min(δ, εγ/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub tau: f64,
    pub delta: f64,
    pub nu: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Fresh random splits tried by [`tri_partition`].
    pub partition_retries: usize,
    /// Orientations tried per candidate core degree.
    pub orientation_retries: usize,
    /// Draws per (≤2)-factor before accepting one above the component cap.
    pub factor_attempts: usize,
    /// Restarts allowed per extracted Hamilton cycle.
    pub restart_budget: usize,
    /// Random sets per sampled check in [`verify_partition`].
    pub sample_trials: usize,
    /// Minimum `F`-edge count between sampled pairs in [`verify_partition`].
    pub density_floor: usize,
    /// Smallest order run through the full pipeline.
    pub min_n: usize,
    /// Optional cap on rotation steps before residual completion.
    pub step_limit: Option<usize>,
    /// Search-node budget of the residual completer.
    pub completion_budget: u64,
    /// Enforce the `|S| <= n^0.6` and `d >= 2δ²n + n^0.6` bounds of the
    /// substitution gadget instead of only reporting them.
    pub strict_gadget_bounds: bool,
    /// Wall-clock limit for the whole run.
    #[serde(skip)]
    pub deadline: Option<std::time::Instant>,
}

/// Build [`PipelineParams`] with `δ` at its largest allowed value.
pub fn derive_params(
    c: f64,
    epsilon: f64,
    gamma: f64,
    tau: f64,
    seed: u64,
) -> Result<PipelineParams, PartitionError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(PartitionError::Parameter(format!("need 0 < c <= 1, got {c}")));
    }
    if !(epsilon > 0.0 && epsilon < 0.1) {
        return Err(PartitionError::Parameter(format!(
            "need 0 < epsilon < 1/10, got {epsilon}"
        )));
    }
    if !(gamma > 0.0) {
        return Err(PartitionError::Parameter(format!("need gamma > 0, got {gamma}")));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(PartitionError::Parameter(format!("need 0 < tau < 1, got {tau}")));
    }
    let delta = (epsilon * c / 5.0).min(tau / 2.0);
    Ok(PipelineParams {
        c,
        epsilon,
        gamma,
        tau,
        delta,
        nu: delta.min(epsilon * gamma / 2.0),
        alpha: 3.0 * epsilon * c,
        seed,
        partition_retries: DEFAULT_PARTITION_RETRIES,
        orientation_retries: DEFAULT_ORIENTATION_RETRIES,
        factor_attempts: crate::factor::DEFAULT_SAMPLE_ATTEMPTS,
        restart_budget: DEFAULT_RESTART_BUDGET,
        sample_trials: crate::regularize::DEFAULT_DENSITY_TRIALS,
        density_floor: 1,
        min_n: DEFAULT_MIN_N,
        step_limit: None,
        completion_budget: DEFAULT_COMPLETION_BUDGET,
        strict_gadget_bounds: true,
        deadline: None,
    })
}

impl PipelineParams {
    /// Parameters for an `r`-regular graph on `n` vertices: `c = r/(n-1)`,
    /// `ε = 0.05`, `γ = 0.01`, `τ = 0.2`.
    pub fn for_graph(n: usize, r: usize, seed: u64) -> Self {
        let c = if n > 1 { (r as f64 / (n - 1) as f64).clamp(1e-6, 1.0) } else { 1.0 };
        derive_params(c, 0.05, 0.01, 0.2, seed).expect("defaults are in range")
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        PipelineParams { seed, ..self.clone() }
    }
}

/// Probability that an edge lands in `F`: `1/ln n`, or `1/2` for `n <= 3`.
pub fn reservoir_probability(n: usize) -> f64 {
    if n <= 3 {
        0.5
    } else {
        1.0 / (n as f64).ln()
    }
}

/// Check that `Γ` is `r`-regular with `r` even and `r >= c·(n-1)`.
pub fn check_host(gamma: &Graph, c: f64) -> Result<usize, PartitionError> {
    let r = gamma.regular_degree().ok_or(PartitionError::NotRegular)?;
    if r % 2 == 1 {
        return Err(PartitionError::OddDegree(r));
    }
    let bound = c * gamma.n().saturating_sub(1) as f64;
    if (r as f64) < bound - 1e-9 {
        return Err(PartitionError::TooSparse { r, bound });
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriPartition {
    /// Regular core of even degree `d0`.
    pub g: Graph,
    pub f: Graph,
    pub r: Graph,
    pub params: PipelineParams,
    pub d0: usize,
    pub meta: PartitionMeta,
}

/// Serializable summary written next to the three edge lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionMeta {
    pub n: usize,
    pub r: usize,
    pub d0: usize,
    /// `2⌈(c0 − ε0)n/2⌉`, the core degree the extraction aims for first.
    pub target_degree: usize,
    /// Whether `d0 >= (1 − 2ε)r`.
    pub core_degree_bound_met: bool,
    pub reservoir_probability: f64,
    /// Splits drawn in total.
    pub split_attempts: usize,
    /// Orientations drawn for the returned split.
    pub orientation_attempts: usize,
    pub sizes: PartSizes,
    pub params: PipelineParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartSizes {
    pub g: usize,
    pub f: usize,
    pub r: usize,
    pub r_star: usize,
}

/// Split every edge independently into `F` (probability `1/ln n`), `R*`
/// (probability `ε`) or `G*`, then extract an even-regular spanning core
/// `G ⊆ G*`. The core degree starts at `2⌈(c0 − ε0)n/2⌉` with
/// `c0 = (1 − ε − 1/ln n)·r/n`, `ε0 = εr/(2n)` and steps down until the flow
/// extraction succeeds. `R = R* ∪ (G* ∖ G)`.
///
/// Splits are redrawn until `d0 >= (1 − 2ε)r` or the retry budget runs out;
/// the split with the largest core degree (earliest on ties) is returned.
pub fn tri_partition(gamma: &Graph, params: &PipelineParams) -> Result<TriPartition, PartitionError> {
    let r = check_host(gamma, params.c)?;
    let n = gamma.n();
    let nf = n as f64;
    let p_f = reservoir_probability(n);
    let eps = params.epsilon;
    let c0 = (1.0 - eps - p_f) * r as f64 / nf;
    let eps0 = eps * r as f64 / (2.0 * nf);
    let target_half = ceil_count((c0 - eps0) * nf / 2.0);

    let mut best: Option<TriPartition> = None;
    let mut attempts_made = 0;
    for attempt in 0..params.partition_retries.max(1) {
        attempts_made = attempt + 1;
        let split_seed = sub_seed(params.seed, attempt as u64);
        let mut rng = seeded(split_seed);
        let (mut f_edges, mut r_star, mut g_star) = (Vec::new(), Vec::new(), Vec::new());
        for &e in gamma.edges() {
            let x: f64 = rng.gen();
            if x < p_f {
                f_edges.push(e);
            } else if x < p_f + eps {
                r_star.push(e);
            } else {
                g_star.push(e);
            }
        }
        let g_star = Graph::from_sorted(n, g_star);
        let start = target_half.min(g_star.min_degree() / 2);
        let floor = best.as_ref().map_or(1, |b| b.d0 / 2 + 1);
        let mut found = None;
        let mut orientation_attempts = 0;
        for d in (floor..=start).rev() {
            match extract_with_half_degree(
                &g_star,
                d,
                sub_seed(split_seed, 1 + d as u64),
                params.orientation_retries,
            ) {
                Ok(ex) => {
                    orientation_attempts += ex.attempts;
                    found = Some(ex);
                    break;
                }
                Err(_) => orientation_attempts += params.orientation_retries,
            }
        }
        let Some(ex) = found else {
            log::debug!("split {attempt}: no regular core");
            continue;
        };
        let core = ex.graph;
        let d0 = 2 * ex.half_degree;
        let leftover = g_star.subtract(core.edges()).expect("core is a subgraph of G*");
        let r_star_len = r_star.len();
        let residual = Graph::from_sorted(n, r_star)
            .union(leftover.edges())
            .expect("R* and G* are disjoint");
        let f = Graph::from_sorted(n, f_edges);
        let meta = PartitionMeta {
            n,
            r,
            d0,
            target_degree: 2 * target_half,
            core_degree_bound_met: d0 as f64 >= (1.0 - 2.0 * eps) * r as f64 - 1e-9,
            reservoir_probability: p_f,
            split_attempts: attempt + 1,
            orientation_attempts,
            sizes: PartSizes {
                g: core.edge_count(),
                f: f.edge_count(),
                r: residual.edge_count(),
                r_star: r_star_len,
            },
            params: params.clone(),
        };
        let bound_met = meta.core_degree_bound_met;
        best = Some(TriPartition {
            g: core,
            f,
            r: residual,
            params: params.clone(),
            d0,
            meta,
        });
        if bound_met {
            break;
        }
    }
    if let Some(mut tp) = best {
        tp.meta.split_attempts = attempts_made;
        return Ok(tp);
    }
    Err(PartitionError::RetriesExhausted {
        attempts: params.partition_retries.max(1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactBullet {
    pub pass: bool,
    pub problem: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityBullet {
    /// Every sampled pair had at least `floor` edges of `F`.
    pub pass: bool,
    /// Every sampled pair had at least `n^1.6` edges of `F`.
    pub literal_pass: bool,
    pub floor: usize,
    pub literal_threshold: f64,
    pub min_edges: usize,
    pub trials: usize,
    pub witness: Option<(VertexSet, VertexSet)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub exact: ExactBullet,
    pub density: DensityBullet,
    pub expansion: ExpanderVerdict,
}

impl PartitionReport {
    pub fn all_pass(&self) -> bool {
        self.exact.pass && self.density.pass && self.expansion.holds
    }
}

fn check_exact(gamma: &Graph, tp: &TriPartition) -> Option<String> {
    let n = gamma.n();
    for (name, part) in [("G", &tp.g), ("F", &tp.f), ("R", &tp.r)] {
        if part.n() != n {
            return Some(format!("{name} has {} vertices, expected {n}", part.n()));
        }
    }
    match tp.g.regular_degree() {
        Some(d) if d == tp.d0 && d % 2 == 0 => {}
        Some(d) => return Some(format!("G is {d}-regular, expected even degree {}", tp.d0)),
        None if n == 0 => {}
        None => return Some("G is not regular".into()),
    }
    let total = tp.g.edge_count() + tp.f.edge_count() + tp.r.edge_count();
    let mut all: Vec<Edge> = Vec::with_capacity(total);
    all.extend_from_slice(tp.g.edges());
    all.extend_from_slice(tp.f.edges());
    all.extend_from_slice(tp.r.edges());
    all.sort_unstable();
    if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
        return Some(format!("edge {:?} lies in two parts", w[0]));
    }
    if all != gamma.edges() {
        return Some(format!(
            "parts hold {} edges, host has {}",
            all.len(),
            gamma.edge_count()
        ));
    }
    None
}

/// Check the three properties of a split: (i) exact edge partition and
/// regularity of `G`; (ii) sampled `F`-density between sets with
/// `|A| >= δ²n`, `|B| >= (1/2 − δ)n`; (iii) robust `(ν, τ)`-expansion of `R`
/// (exact up to [`EXACT_CAP`] vertices, sampled above).
pub fn verify_partition(gamma: &Graph, tp: &TriPartition, trials: usize, seed: u64) -> PartitionReport {
    let problem = check_exact(gamma, tp);
    let exact = ExactBullet {
        pass: problem.is_none(),
        problem,
    };

    let n = tp.f.n();
    let nf = n as f64;
    let p = &tp.params;
    let mut density = DensityBullet {
        pass: true,
        literal_pass: true,
        floor: p.density_floor,
        literal_threshold: nf.powf(1.6),
        min_edges: usize::MAX,
        trials,
        witness: None,
    };
    if n > 0 {
        let a_min = ceil_count(p.delta * p.delta * nf).clamp(1, n);
        let b_min = ceil_count((0.5 - p.delta) * nf).clamp(1, n);
        let mut rng = seeded(sub_seed(seed, 0));
        for _ in 0..trials {
            let mut pick = |lo: usize| {
                let k = rng.gen_range(lo..=n);
                let mut v = index::sample(&mut rng, n, k).into_vec();
                v.sort_unstable();
                VertexSet::from_sorted(v)
            };
            let a = pick(a_min);
            let b = pick(b_min);
            let e = edges_between(&tp.f, &a, &b).expect("sets are in range");
            density.min_edges = density.min_edges.min(e);
            if (e as f64) < density.literal_threshold {
                density.literal_pass = false;
            }
            if e < density.floor && density.witness.is_none() {
                density.pass = false;
                density.witness = Some((a, b));
            }
        }
    }
    if density.min_edges == usize::MAX {
        density.min_edges = 0;
    }

    let mode = if n <= EXACT_CAP {
        CheckMode::Exact
    } else {
        CheckMode::Sampled {
            trials,
            seed: sub_seed(seed, 1),
        }
    };
    let expansion = is_robust_expander(&tp.r, p.nu, p.tau, mode).expect("ν <= τ by construction");
    PartitionReport {
        exact,
        density,
        expansion,
    }
}
