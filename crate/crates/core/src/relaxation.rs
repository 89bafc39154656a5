//! The commutation operator `H`, its null space, and sign fixing.
//!
//! For isospectral adjacency matrices `A` and `B`, the operator
//! `H = (A (x) I - I (x) B)^2` is symmetric positive semi-definite and its
//! null space is spanned by the Kronecker products of eigenvectors belonging
//! to equal eigenvalues. Every doubly stochastic `X` with `X A = B X` lives in
//! that null space, which lets the solver work in the reduced coordinates of
//! the block matrix `S` with `X = U_B S U_A^T`. `H` itself is never
//! materialized: its action costs two dense `n x n` multiplications.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::WeightedGraph;
use crate::spectral::{compare_spectra, GroupedSpectrum};
use crate::vectorize::{unvec, vec_of};

#[derive(Debug, Error)]
pub enum RelaxationError {
    #[error("vector length {0} does not match n^2 = {1}")]
    BadLength(usize, usize),
    #[error("multiplicities {mu:?} sum to {got}, expected {want}")]
    InconsistentMultiplicities {
        mu: Vec<usize>,
        got: usize,
        want: usize,
    },
    #[error("graphs are not isospectral (max eigenvalue gap {0:.3e})")]
    NotIsospectral(f64),
    #[error("block {0} has shape {1}x{2}, expected {3}x{3}")]
    BlockShape(usize, usize, usize, usize),
    #[error("block {0} is not orthogonal (||R^T R - I||_max = {1:.3e})")]
    NotOrthogonal(usize, f64),
}

/// Matrix-free representation of `H = (A (x) I - I (x) B)^2`.
#[derive(Debug, Clone)]
pub struct HOperator {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    n: usize,
}

impl HOperator {
    pub fn new(a: &WeightedGraph, b: &WeightedGraph) -> Self {
        assert_eq!(a.n(), b.n(), "H operator needs equal-size graphs");
        Self {
            a: a.adjacency().clone(),
            b: b.adjacency().clone(),
            n: a.n(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// One application of the first-order factor: `vec(X A - B X)`.
    fn commutator(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * &self.a - &self.b * x
    }

    /// Computes `H x` in `O(n^3)` without materializing `H`.
    pub fn matvec(&self, x: &DVector<f64>) -> Result<DVector<f64>, RelaxationError> {
        let n2 = self.n * self.n;
        if x.len() != n2 {
            return Err(RelaxationError::BadLength(x.len(), n2));
        }
        let first = self.commutator(&unvec(x, self.n));
        let second = self.commutator(&first);
        Ok(vec_of(&second))
    }

    /// The quadratic form `x^T H x = ||X A - B X||_F^2`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> Result<f64, RelaxationError> {
        let n2 = self.n * self.n;
        if x.len() != n2 {
            return Err(RelaxationError::BadLength(x.len(), n2));
        }
        Ok(self.commutator(&unvec(x, self.n)).norm_squared())
    }

    /// Residual `||H x||_inf`, used in trace records.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        self.matvec(x).map(|v| v.amax()).unwrap_or(f64::INFINITY)
    }
}

/// `rank(H) = n^2 - sum_k mu_k^2` for isospectral graphs with shared
/// multiplicities `mu`.
pub fn rank_of_h(mu: &[usize], n: usize) -> Result<usize, RelaxationError> {
    let total: usize = mu.iter().sum();
    if total != n {
        return Err(RelaxationError::InconsistentMultiplicities {
            mu: mu.to_vec(),
            got: total,
            want: n,
        });
    }
    Ok(n * n - mu.iter().map(|&m| m * m).sum::<usize>())
}

/// Table of squared eigenvalue gaps `(lambda_A_i - lambda_B_j)^2`; together
/// with the multiplicities this is the spectrum of `H`.
pub fn h_eigenvalue_table(lambda_a: &[f64], lambda_b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(lambda_a.len(), lambda_b.len(), |i, j| {
        (lambda_a[i] - lambda_b[j]).powi(2)
    })
}

/// Orthonormal basis of `null(H)` in block-Kronecker form.
///
/// For every shared eigenvalue `k` the columns `u_A^(k,alpha) (x) u_B^(k,beta)`
/// span the corresponding part of the null space. The basis is kept implicit:
/// applications to reduced coordinates cost a handful of skinny matrix
/// products instead of `n^2 x r` storage.
#[derive(Debug, Clone)]
pub struct NullSpaceBasis {
    n: usize,
    /// Per shared eigenvalue: (U_A block, U_B block).
    blocks: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl NullSpaceBasis {
    /// Pairs up the eigenvector blocks of two isospectral decompositions.
    pub fn new(
        sa: &GroupedSpectrum,
        sb: &GroupedSpectrum,
        tol: f64,
    ) -> Result<Self, RelaxationError> {
        let cmp = compare_spectra(sa, sb, tol);
        if !cmp.isospectral {
            return Err(RelaxationError::NotIsospectral(cmp.max_eigenvalue_gap));
        }
        let blocks = sa
            .blocks()
            .iter()
            .zip(sb.blocks())
            .map(|(ba, bb)| (ba.vectors.clone(), bb.vectors.clone()))
            .collect();
        Ok(Self { n: sa.n(), blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, k: usize) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.blocks[k].0, &self.blocks[k].1)
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.blocks.iter().map(|(ua, _)| ua.ncols()).collect()
    }

    /// Total dimension `r = sum_k mu_k^2`.
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|(ua, _)| ua.ncols().pow(2)).sum()
    }

    /// Materializes one basis column `u_A^(k,alpha) (x) u_B^(k,beta)` as the
    /// matrix `u_B^(k,beta) (u_A^(k,alpha))^T`.
    pub fn column_matrix(&self, k: usize, alpha: usize, beta: usize) -> DMatrix<f64> {
        let (ua, ub) = &self.blocks[k];
        DMatrix::from_fn(self.n, self.n, |i, j| ub[(i, beta)] * ua[(j, alpha)])
    }
}

/// Block matrix `S` with one `mu_k x mu_k` block per shared eigenvalue; the
/// reduced coordinates of a feasible point.
#[derive(Debug, Clone)]
pub struct SBlockMatrix {
    pub blocks: Vec<DMatrix<f64>>,
}

impl SBlockMatrix {
    pub fn zeros(mu: &[usize]) -> Self {
        Self {
            blocks: mu.iter().map(|&m| DMatrix::zeros(m, m)).collect(),
        }
    }

    pub fn identity(mu: &[usize]) -> Self {
        Self {
            blocks: mu.iter().map(|&m| DMatrix::identity(m, m)).collect(),
        }
    }

    /// Diagonal `S` from per-block scalar signs (all blocks must be 1x1).
    pub fn from_signs(signs: &[f64]) -> Self {
        Self {
            blocks: signs
                .iter()
                .map(|&s| DMatrix::from_element(1, 1, s))
                .collect(),
        }
    }
}

/// Builds `X*(S) = U_B S U_A^T`, a minimizer of `||X A - B X||_F`.
pub fn build_x_of_s(
    basis: &NullSpaceBasis,
    s: &SBlockMatrix,
) -> Result<DMatrix<f64>, RelaxationError> {
    if s.blocks.len() != basis.num_blocks() {
        return Err(RelaxationError::BlockShape(
            s.blocks.len(),
            0,
            0,
            basis.num_blocks(),
        ));
    }
    let mut x = DMatrix::zeros(basis.n(), basis.n());
    for (k, block) in s.blocks.iter().enumerate() {
        let (ua, ub) = basis.block(k);
        let mu = ua.ncols();
        if block.nrows() != mu || block.ncols() != mu {
            return Err(RelaxationError::BlockShape(
                k,
                block.nrows(),
                block.ncols(),
                mu,
            ));
        }
        x += ub * block * ua.transpose();
    }
    Ok(x)
}

/// Minimizer `Q*(R) = U_B R U_A^T` of the orthogonal relaxation, for
/// block-orthogonal `R`. The result is orthogonal and commutes the two
/// adjacency matrices exactly like a candidate isomorphism would.
pub fn orthogonal_minimizer(
    sa: &GroupedSpectrum,
    sb: &GroupedSpectrum,
    r_blocks: &[DMatrix<f64>],
) -> Result<DMatrix<f64>, RelaxationError> {
    let basis = NullSpaceBasis::new(sa, sb, crate::spectral::TOL_GROUP)?;
    for (k, r) in r_blocks.iter().enumerate() {
        let mu = sa.blocks()[k].multiplicity();
        if r.nrows() != mu || r.ncols() != mu {
            return Err(RelaxationError::BlockShape(k, r.nrows(), r.ncols(), mu));
        }
        let dev = (r.transpose() * r - DMatrix::<f64>::identity(mu, mu)).amax();
        if dev > 1e-9 {
            return Err(RelaxationError::NotOrthogonal(k, dev));
        }
    }
    build_x_of_s(
        &basis,
        &SBlockMatrix {
            blocks: r_blocks.to_vec(),
        },
    )
}

/// Per-block outcome of the pseudo-stochasticity sign equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockSign {
    /// The block is 1x1 and its sign is pinned to +1 or -1.
    Forced(f64),
    /// Repeated eigenvalue or ambiguous eigenvector: left to the optimizer.
    Free,
    /// No sign can satisfy the equations; the graphs are not isomorphic.
    Infeasible,
}

/// Resolves the sign equations `S w_A = w_B`, `S^T w_B = w_A` blockwise.
///
/// Distinct eigenvalues with friendly eigenvectors force `s_k = w_B / w_A`
/// when the magnitudes agree and are infeasible otherwise. Unfriendly but
/// unambiguous eigenvectors are pinned by matching entry multisets of the
/// eigenvector pair. Repeated-eigenvalue blocks and ambiguous eigenvectors
/// stay free.
pub fn sign_equations(
    sa: &GroupedSpectrum,
    sb: &GroupedSpectrum,
    tol_friendly: f64,
    tol_entry: f64,
) -> Vec<BlockSign> {
    let sqrt_n = (sa.n() as f64).sqrt();
    let w_tol = tol_friendly * sqrt_n;
    sa.blocks()
        .iter()
        .zip(sb.blocks())
        .map(|(ba, bb)| {
            if ba.multiplicity() > 1 {
                return BlockSign::Free;
            }
            let (wa, wb) = (ba.w[0], bb.w[0]);
            let (fa, fb) = (wa.abs() > w_tol, wb.abs() > w_tol);
            if fa || fb {
                // friendly case: |w_A| must match |w_B|
                if !(fa && fb) || (wa.abs() - wb.abs()).abs() > 1e-6 * wa.abs().max(1.0) {
                    return BlockSign::Infeasible;
                }
                return BlockSign::Forced((wb / wa).signum());
            }
            // unfriendly: compare entry multisets of the eigenvector pair
            let ua = ba.vectors.column(0);
            let ub = bb.vectors.column(0);
            let plus = multisets_match(ua.as_slice(), ub.as_slice(), 1.0, tol_entry);
            let minus = multisets_match(ua.as_slice(), ub.as_slice(), -1.0, tol_entry);
            match (plus, minus) {
                (true, true) => BlockSign::Free, // ambiguous
                (true, false) => BlockSign::Forced(1.0),
                (false, true) => BlockSign::Forced(-1.0),
                (false, false) => BlockSign::Infeasible,
            }
        })
        .collect()
}

fn multisets_match(u: &[f64], v: &[f64], sign: f64, tol: f64) -> bool {
    let mut su: Vec<f64> = u.to_vec();
    let mut sv: Vec<f64> = v.iter().map(|&x| sign * x).collect();
    su.sort_by(f64::total_cmp);
    sv.sort_by(f64::total_cmp);
    su.iter().zip(&sv).all(|(a, b)| (a - b).abs() <= tol)
}
