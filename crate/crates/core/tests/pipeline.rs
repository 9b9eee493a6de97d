use std::collections::BTreeSet;

use hamdeck::counting::{count_decompositions_exact, count_hamilton_cycles_exact, regular_graph_corpus};
use hamdeck::decompose::{
    complete_residual, decompose_odd, decompose_pipeline, enumerate_decompositions, CompletionLimits,
    DecomposeError, FailureKind, Route,
};
use hamdeck::graph::Graph;
use hamdeck::partition::{tri_partition, verify_partition, PipelineParams};
use hamdeck::walecki::{verify_decomposition, walecki_decomposition};

#[test]
fn pipeline_decomposes_complete_graphs() {
    for n in [9usize, 13, 21] {
        let g = Graph::complete(n);
        for seed in 0..3 {
            let run = decompose_pipeline(&g, &PipelineParams::for_graph(n, n - 1, seed)).unwrap();
            assert_eq!(run.decomposition.cycles.len(), (n - 1) / 2);
            assert!(verify_decomposition(&g, &run.decomposition).valid);
            assert_eq!(run.route, Route::Pipeline);
            assert_eq!(run.residual_degree, run.r - 2 * run.steps);
        }
    }
}

#[test]
fn pipeline_on_k75() {
    let g = Graph::complete(75);
    let run = decompose_pipeline(&g, &PipelineParams::for_graph(75, 74, 0)).unwrap();
    assert_eq!(run.decomposition.cycles.len(), 37);
    assert!(run.steps > 0);
    assert!(verify_decomposition(&g, &run.decomposition).valid);
}

#[test]
fn pipeline_is_deterministic() {
    let g = Graph::complete(21);
    let p = PipelineParams::for_graph(21, 20, 11);
    let a = decompose_pipeline(&g, &p).unwrap();
    let b = decompose_pipeline(&g, &p).unwrap();
    assert_eq!(a.decomposition, b.decomposition);
    assert_eq!(a.step_stats, b.step_stats);
}

#[test]
fn pipeline_on_a_non_complete_host() {
    // K_21 minus a Walecki cycle: 18-regular
    let k = Graph::complete(21);
    let w = walecki_decomposition(21).unwrap();
    let hc: Vec<_> = hamdeck::walecki::cycle_edges(&w.cycles[0]).collect();
    let g = k.subtract(&hc).unwrap();
    let run = decompose_pipeline(&g, &PipelineParams::for_graph(21, 18, 4)).unwrap();
    assert_eq!(run.decomposition.cycles.len(), 9);
    assert!(verify_decomposition(&g, &run.decomposition).valid);
}

#[test]
fn odd_variant() {
    for n in [4usize, 6, 10, 12] {
        let g = Graph::complete(n);
        let run = decompose_odd(&g, &PipelineParams::for_graph(n, n - 1, 1)).unwrap();
        assert_eq!(run.decomposition.cycles.len(), (n - 2) / 2);
        assert_eq!(run.decomposition.matching.as_ref().map(Vec::len), Some(n / 2));
        assert!(verify_decomposition(&g, &run.decomposition).valid);
    }
}

#[test]
fn failures_are_classified() {
    let star = Graph::new(9, (1..9).map(|v| (0, v))).unwrap();
    let err = decompose_pipeline(&star, &PipelineParams::for_graph(9, 1, 0)).unwrap_err();
    assert_eq!(err.kind(), FailureKind::Infeasible);
    let err = decompose_pipeline(&Graph::complete(10), &PipelineParams::for_graph(10, 9, 0)).unwrap_err();
    assert_eq!(err.kind(), FailureKind::Infeasible);
    let mut p = PipelineParams::for_graph(21, 20, 0);
    p.deadline = Some(std::time::Instant::now());
    let err = decompose_pipeline(&Graph::complete(21), &p).unwrap_err();
    assert!(matches!(err, DecomposeError::Deadline { .. }));
    assert_eq!(err.kind(), FailureKind::Budget);
}

#[test]
fn split_verification_holds_exactly() {
    for seed in 0..5 {
        let g = Graph::complete(21);
        let p = PipelineParams::for_graph(21, 20, seed);
        let tp = tri_partition(&g, &p).unwrap();
        let report = verify_partition(&g, &tp, 1000, seed);
        assert!(report.exact.pass, "{:?}", report.exact.problem);
    }
}

#[test]
fn completer_reaches_every_k5_decomposition() {
    let k5 = Graph::complete(5);
    let all = enumerate_decompositions(&k5, u64::MAX).unwrap();
    assert_eq!(all.len() as u64, 6);
    assert_eq!(count_decompositions_exact(&k5).unwrap(), 6u32.into());
    let mut hit = BTreeSet::new();
    for seed in 0..200 {
        let d = complete_residual(&k5, &CompletionLimits::nodes(1_000_000), seed).unwrap().decomposition;
        let i = all.iter().position(|x| *x == d).expect("completer output is a decomposition");
        hit.insert(i);
    }
    assert!(!hit.is_empty());
}

#[test]
fn decomposition_counts_respect_cycle_counts() {
    // each decomposition of a 4-regular graph uses two Hamilton cycles, and
    // each Hamilton cycle is in at most one of them
    for g in regular_graph_corpus(7, 4, true).into_iter().take(40) {
        let d = count_decompositions_exact(&g).unwrap();
        let h = count_hamilton_cycles_exact(&g).unwrap();
        assert!(d.clone() * 2u32 <= h);
    }
}
