//! Shared test oracles, all independent of the solver's own code paths.

use isofw_core::graph::{Permutation, WeightedGraph};
use nalgebra::DMatrix;

/// Exact edge-preservation check, written directly against the adjacency
/// matrices so it cannot share bugs with `verify_isomorphism`.
pub fn is_isomorphism(a: &WeightedGraph, b: &WeightedGraph, p: &Permutation) -> bool {
    let n = a.n();
    if b.n() != n || p.len() != n {
        return false;
    }
    for i in 0..n {
        for j in 0..n {
            if b.weight(p.image(i), p.image(j)) != a.weight(i, j) {
                return false;
            }
        }
    }
    true
}

/// Brute-force ground truth: enumerates all n! permutations.
pub fn brute_force_isomorphic(a: &WeightedGraph, b: &WeightedGraph) -> bool {
    if a.n() != b.n() {
        return false;
    }
    let n = a.n();
    let mut images: Vec<usize> = (0..n).collect();
    heap_search(&mut images, n, a, b)
}

fn heap_search(images: &mut Vec<usize>, k: usize, a: &WeightedGraph, b: &WeightedGraph) -> bool {
    if k == 1 {
        let p = Permutation::from_images(images.clone()).unwrap();
        return is_isomorphism(a, b, &p);
    }
    for i in 0..k {
        if heap_search(images, k - 1, a, b) {
            return true;
        }
        if k % 2 == 0 {
            images.swap(i, k - 1);
        } else {
            images.swap(0, k - 1);
        }
    }
    false
}

/// All isomorphisms between two small graphs, by enumeration.
pub fn all_isomorphisms(a: &WeightedGraph, b: &WeightedGraph) -> Vec<Permutation> {
    let n = a.n();
    let mut found = Vec::new();
    let mut images: Vec<usize> = (0..n).collect();
    collect(&mut images, n, a, b, &mut found);
    found
}

fn collect(
    images: &mut Vec<usize>,
    k: usize,
    a: &WeightedGraph,
    b: &WeightedGraph,
    out: &mut Vec<Permutation>,
) {
    if k == 1 {
        let p = Permutation::from_images(images.clone()).unwrap();
        if is_isomorphism(a, b, &p) {
            out.push(p);
        }
        return;
    }
    for i in 0..k {
        collect(images, k - 1, a, b, out);
        if k % 2 == 0 {
            images.swap(i, k - 1);
        } else {
            images.swap(0, k - 1);
        }
    }
}

/// Dense Kronecker product (oracle use only).
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |i, j| {
        a[(i / rb, j / cb)] * b[(i % rb, j % cb)]
    })
}

/// Explicit `H = (A (x) I - I (x) B)^2` (oracle use only, small n).
pub fn explicit_h(a: &WeightedGraph, b: &WeightedGraph) -> DMatrix<f64> {
    let n = a.n();
    let id = DMatrix::<f64>::identity(n, n);
    let k = kron(a.adjacency(), &id) - kron(&id, b.adjacency());
    &k * &k
}
