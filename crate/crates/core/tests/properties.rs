//! Property tests for the library-wide invariants.

mod common;

use isofw_core::graph::{
    format_graph, generate, parse_graph, verify_isomorphism, GraphName, Permutation,
    WeightedGraph,
};
use isofw_core::relaxation::HOperator;
use isofw_core::spectral::{decompose, TOL_GROUP};
use nalgebra::DVector;
use proptest::prelude::*;

/// Strategy: a random weighted graph on 2..=8 vertices with a random
/// permutation of the same size.
fn graph_and_perm() -> impl Strategy<Value = (WeightedGraph, Permutation)> {
    (2usize..=8)
        .prop_flat_map(|n| {
            let edges = proptest::collection::vec(
                (0..n, 0..n, 1u8..=4),
                0..=(n * (n - 1) / 2).max(1),
            );
            let perm = Just(n).prop_perturb(|n, mut rng| {
                let mut map: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                    map.swap(i, j);
                }
                Permutation::from_images(map).unwrap()
            });
            (Just(n), edges, perm)
        })
        .prop_map(|(n, raw_edges, perm)| {
            let mut g = WeightedGraph::from_edges(n, &[]).unwrap();
            let mut edges = Vec::new();
            for (i, j, w) in raw_edges {
                if i != j {
                    let (i, j) = (i.min(j), i.max(j));
                    if !edges.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                        edges.push((i, j, w as f64));
                    }
                }
            }
            if !edges.is_empty() {
                g = WeightedGraph::from_weighted_edges(n, &edges).unwrap();
            }
            (g, perm)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_round_trip((g, p) in graph_and_perm()) {
        let h = g.apply_permutation(&p).unwrap();
        // applying a permutation yields an isomorphic graph with p a witness
        prop_assert!(verify_isomorphism(&g, &h, &p));
        prop_assert!(common::is_isomorphism(&g, &h, &p));
        // and the inverse undoes it
        let back = h.apply_permutation(&p.inverse()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn file_round_trip_is_lossless((g, _) in graph_and_perm()) {
        let text = format_graph(&g);
        let again = parse_graph(&text).unwrap();
        prop_assert_eq!(&again, &g);
        // idempotent formatting
        prop_assert_eq!(format_graph(&again), text);
    }

    #[test]
    fn h_quadratic_form_is_nonnegative((g, p) in graph_and_perm()) {
        let h = g.apply_permutation(&p).unwrap();
        let op = HOperator::new(&g, &h);
        let n = g.n();
        // a deterministic batch of pseudo-random vectors
        for k in 0..8u64 {
            let x = DVector::from_fn(n * n, |i, _| {
                let v = (i as u64).wrapping_mul(6364136223846793005).wrapping_add(k * 1442695040888963407);
                ((v >> 33) as f64 / (1u64 << 31) as f64) - 1.0
            });
            let q = op.quadratic_form(&x).unwrap();
            prop_assert!(q >= -1e-12, "x^T H x = {q} < 0");
        }
    }

    #[test]
    fn grouped_spectrum_invariants((g, p) in graph_and_perm()) {
        let s = decompose(&g, TOL_GROUP).unwrap();
        let n = g.n();
        prop_assert_eq!(s.mu().iter().sum::<usize>(), n);
        let lam = s.lambda();
        for w in lam.windows(2) {
            prop_assert!(w[0] > w[1], "eigenvalues must strictly decrease");
        }
        // permutation invariance of lambda and mu
        let gp = g.apply_permutation(&p).unwrap();
        let sp = decompose(&gp, TOL_GROUP).unwrap();
        prop_assert_eq!(s.mu(), sp.mu());
        for (a, b) in lam.iter().zip(sp.lambda()) {
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        }
        // orthonormality across all blocks
        let u = s.full_basis();
        let gram = u.transpose() * &u;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)] - want).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn paley_regularity() {
    for q in [5u64, 13, 17, 29, 37] {
        let g = generate(&GraphName::Paley(q)).unwrap();
        let want = (q - 1) as f64 / 2.0;
        for i in 0..g.n() {
            assert_eq!(g.degree(i), want, "paley({q}) vertex {i}");
        }
    }
}
