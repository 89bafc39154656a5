//! Dense LU factorization with partial pivoting.
//!
//! Minimal support for the simplex basis: factorize once, then solve with the
//! matrix or its transpose. Row permutation is stored explicitly so both
//! solve directions share the factors.

use nalgebra::{DMatrix, DVector};

pub struct LuFactors {
    /// Combined L (strict lower, unit diagonal) and U (upper).
    lu: DMatrix<f64>,
    /// Row permutation: row `i` of the permuted matrix is row `perm[i]` of
    /// the original, i.e. `(P A)[i, :] = A[perm[i], :]` and `P A = L U`.
    perm: Vec<usize>,
}

pub struct Singular;

impl LuFactors {
    pub fn factorize(a: &DMatrix<f64>) -> Result<Self, Singular> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // partial pivot on column k
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-13 {
                return Err(Singular);
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= m * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut y = DVector::zeros(n);
        for i in 0..n {
            y[i] = b[self.perm[i]];
        }
        // forward: L y' = P b (unit diagonal)
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        // backward: U x = y'
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        y
    }

    /// Solves `A^T x = b` using the same factors: `A^T = U^T L^T P`.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut y = b.clone();
        // forward: U^T y' = b (U^T is lower triangular)
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        // backward: L^T z = y' (unit diagonal)
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.lu[(j, i)] * y[j];
            }
            y[i] = s;
        }
        // x = P^T z
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_both_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1usize, 2, 5, 17, 40] {
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
                + DMatrix::<f64>::identity(n, n) * 2.0;
            let lu = LuFactors::factorize(&a).ok().unwrap();
            let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let x = lu.solve(&b);
            assert!((&a * &x - &b).amax() <= 1e-9, "n={n}");
            let xt = lu.solve_transpose(&b);
            assert!((a.transpose() * &xt - &b).amax() <= 1e-9, "n={n}");
        }
    }

    #[test]
    fn rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(LuFactors::factorize(&a).is_err());
    }
}
