use proptest::prelude::*;

use hamdeck::expansion::{edges_between, is_robust_expander, robust_neighborhood, CheckMode};
use hamdeck::graph::{Edge, Graph, VertexSet};

fn pairs(n: usize) -> Vec<Edge> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

fn graph_from_mask(n: usize, mask: &[bool]) -> Graph {
    Graph::new(n, pairs(n).into_iter().zip(mask).filter(|(_, &b)| b).map(|(e, _)| e)).unwrap()
}

/// A graph on 2..=max_n vertices together with a second edge mask.
fn graph_pair(max_n: usize) -> impl Strategy<Value = (usize, Vec<bool>, Vec<bool>)> {
    (2..=max_n).prop_flat_map(|n| {
        let m = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(any::<bool>(), m), prop::collection::vec(any::<bool>(), m))
    })
}

/// Vertex labels 0..n split into three disjoint sets by a label per vertex.
fn three_sets(n: usize, labels: &[u8]) -> [VertexSet; 3] {
    let pick = |k: u8| VertexSet::new(n, (0..n).filter(|&v| labels[v] % 4 == k)).unwrap();
    [pick(0), pick(1), pick(2)]
}

proptest! {
    #[test]
    fn edges_between_is_symmetric((n, mask, _) in graph_pair(12), labels in prop::collection::vec(any::<u8>(), 12)) {
        let g = graph_from_mask(n, &mask);
        let [a, b, _] = three_sets(n, &labels);
        prop_assert_eq!(edges_between(&g, &a, &b).unwrap(), edges_between(&g, &b, &a).unwrap());
    }

    #[test]
    fn edges_between_adds_over_disjoint_sets((n, mask, _) in graph_pair(12), labels in prop::collection::vec(any::<u8>(), 12)) {
        let g = graph_from_mask(n, &mask);
        let [a, b, c] = three_sets(n, &labels);
        let bc = VertexSet::new(n, b.iter().chain(c.iter())).unwrap();
        prop_assert_eq!(
            edges_between(&g, &a, &bc).unwrap(),
            edges_between(&g, &a, &b).unwrap() + edges_between(&g, &a, &c).unwrap()
        );
    }

    #[test]
    fn robust_neighborhood_is_monotone(
        (n, mask, _) in graph_pair(12),
        labels in prop::collection::vec(any::<u8>(), 12),
        nu in 0.01f64..0.5,
        nu_step in 0.0f64..0.3,
    ) {
        let g = graph_from_mask(n, &mask);
        let [a, b, _] = three_sets(n, &labels);
        let ab = VertexSet::new(n, a.iter().chain(b.iter())).unwrap();
        let small = robust_neighborhood(&g, &a, nu).unwrap();
        let large = robust_neighborhood(&g, &ab, nu).unwrap();
        prop_assert!(small.is_subset_of(&large));
        let stricter = robust_neighborhood(&g, &ab, nu + nu_step).unwrap();
        prop_assert!(stricter.is_subset_of(&large));
    }

    #[test]
    fn subtract_undoes_union((n, mask, extra) in graph_pair(12)) {
        let g = graph_from_mask(n, &mask);
        let h: Vec<Edge> = pairs(n).into_iter().zip(&extra).zip(&mask)
            .filter(|((_, &x), &m)| x && !m).map(|((e, _), _)| e).collect();
        let joined = g.union(&h).unwrap();
        prop_assert_eq!(joined.edge_count(), g.edge_count() + h.len());
        prop_assert_eq!(joined.subtract(&h).unwrap(), g);
    }

    #[test]
    fn edge_list_round_trip((n, mask, _) in graph_pair(12)) {
        let g = graph_from_mask(n, &mask);
        prop_assert_eq!(Graph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Adding edges never destroys robust expansion.
    #[test]
    fn expansion_survives_edge_addition(
        (n, mask, extra) in graph_pair(12),
        nu in 0.05f64..0.25,
        tau_gap in 0.0f64..0.2,
    ) {
        let g = graph_from_mask(n, &mask);
        let union: Vec<bool> = mask.iter().zip(&extra).map(|(a, b)| *a || *b).collect();
        let sup = graph_from_mask(n, &union);
        let tau = nu + tau_gap;
        let before = is_robust_expander(&g, nu, tau, CheckMode::Exact).unwrap();
        let after = is_robust_expander(&sup, nu, tau, CheckMode::Exact).unwrap();
        prop_assert!(!before.holds || after.holds);
    }
}
