//! Dense linear assignment by shortest augmenting paths (Jonker-Volgenant
//! style, O(n^3)). Used to extract a candidate permutation from a fractional
//! doubly stochastic iterate; every candidate is re-verified exactly before
//! it can influence a verdict.

use nalgebra::DMatrix;

/// Returns, for each column `j`, the row assigned to it so that the sum of
/// `score[(row, j)]` is maximized.
pub fn max_score_assignment(score: &DMatrix<f64>) -> Vec<usize> {
    let n = score.nrows();
    assert_eq!(n, score.ncols());
    // classic potentials formulation on the cost matrix -score, with a
    // virtual 0 row/column at index 0
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j]: row matched to column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = -score[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![0usize; n];
    for j in 1..=n {
        rows[j - 1] = p[j] - 1;
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_the_identity_on_a_diagonal_matrix() {
        let m = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.0 });
        assert_eq!(max_score_assignment(&m), vec![0, 1, 2, 3]);
    }

    #[test]
    fn recovers_a_permutation_matrix() {
        // pi(j) = row with the 1 in column j
        let images = [2usize, 0, 3, 1];
        let m = DMatrix::from_fn(4, 4, |i, j| if images[j] == i { 1.0 } else { 0.0 });
        assert_eq!(max_score_assignment(&m), images.to_vec());
    }

    #[test]
    fn beats_greedy_on_a_classic_trap() {
        // greedy picks (0,0)=9 then is forced into 1+1; optimal is 8+7+2=17
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                9.0, 8.0, 1.0, //
                8.0, 9.0, 1.0, //
                1.0, 2.0, 1.0,
            ],
        );
        let rows = max_score_assignment(&m);
        let total: f64 = (0..3).map(|j| m[(rows[j], j)]).sum();
        // brute force over all 6 permutations
        let mut best = f64::NEG_INFINITY;
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for perm in perms {
            let s: f64 = (0..3).map(|j| m[(perm[j], j)]).sum();
            best = best.max(s);
        }
        assert!((total - best).abs() <= 1e-12);
    }

    #[test]
    fn random_matrices_match_brute_force() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..40 {
            let n = rng.random_range(2..6);
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-5.0..5.0));
            let rows = max_score_assignment(&m);
            let got: f64 = (0..n).map(|j| m[(rows[j], j)]).sum();
            let best = brute_force_best(&m);
            assert!((got - best).abs() <= 1e-9, "n={n}: {got} vs {best}");
        }
    }

    fn brute_force_best(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::NEG_INFINITY;
        permute(&mut perm, 0, m, &mut best);
        best
    }

    fn permute(perm: &mut Vec<usize>, k: usize, m: &DMatrix<f64>, best: &mut f64) {
        let n = perm.len();
        if k == n {
            let s: f64 = (0..n).map(|j| m[(perm[j], j)]).sum();
            *best = best.max(s);
            return;
        }
        for i in k..n {
            perm.swap(k, i);
            permute(perm, k + 1, m, best);
            perm.swap(k, i);
        }
    }
}
