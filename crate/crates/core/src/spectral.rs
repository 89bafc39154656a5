//! Grouped eigendecomposition and eigenvector classification.
//!
//! Eigenvalues are grouped into blocks of (numerically) repeated values; each
//! block keeps an orthonormal basis of its eigenspace. On top of that we
//! classify single eigenvectors as friendly (not orthogonal to the all-ones
//! vector) or ambiguous (entry multiset invariant under negation), which is
//! what the sign-fixing stage of the solver consumes.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::WeightedGraph;

/// Default relative gap under which two eigenvalues are grouped together.
pub const TOL_GROUP: f64 = 1e-8;
/// Default threshold on `|<u, 1>| / sqrt(n)` for friendliness.
pub const TOL_FRIENDLY: f64 = 1e-8;
/// Default entrywise tolerance for multiset comparison in ambiguity checks.
pub const TOL_ENTRY: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("eigensolver failed to converge")]
    NoConvergence,
    #[error("multiplicities {0:?} sum to {1}, expected {2}")]
    BadMultiplicities(Vec<usize>, usize, usize),
}

/// One group of numerically equal eigenvalues with its eigenspace basis.
#[derive(Debug, Clone)]
pub struct EigenBlock {
    /// Representative eigenvalue (mean of the grouped raw values).
    pub value: f64,
    /// `n x mu` orthonormal basis of the eigenspace.
    pub vectors: DMatrix<f64>,
    /// Projections `vectors^T * 1`, one entry per basis column.
    pub w: DVector<f64>,
    /// Friendliness flag per column.
    pub friendly: Vec<bool>,
    /// Ambiguity flag per column.
    pub ambiguous: Vec<bool>,
}

impl EigenBlock {
    pub fn multiplicity(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Eigendecomposition of an adjacency matrix with eigenvalues grouped by
/// multiplicity, sorted in strictly decreasing order.
#[derive(Debug, Clone)]
pub struct GroupedSpectrum {
    n: usize,
    blocks: Vec<EigenBlock>,
}

impl GroupedSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[EigenBlock] {
        &self.blocks
    }

    /// Unique eigenvalues, strictly decreasing.
    pub fn lambda(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.value).collect()
    }

    /// Multiplicities matching [`Self::lambda`]; they sum to `n`.
    pub fn mu(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.multiplicity()).collect()
    }

    /// True when every eigenvalue is distinct.
    pub fn all_distinct(&self) -> bool {
        self.blocks.len() == self.n
    }

    /// Number of eigenvector columns flagged unfriendly.
    pub fn unfriendly_count(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| &b.friendly)
            .filter(|&&f| !f)
            .count()
    }

    /// Number of eigenvector columns flagged ambiguous.
    pub fn ambiguous_count(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| &b.ambiguous)
            .filter(|&&a| a)
            .count()
    }

    /// A graph is friendly when all eigenvalues are distinct and all
    /// eigenvectors are friendly.
    pub fn is_friendly(&self) -> bool {
        self.all_distinct() && self.blocks.iter().all(|b| b.friendly[0])
    }

    /// Assembles a spectrum from raw blocks; synthetic-input tests only.
    #[cfg(test)]
    pub(crate) fn from_blocks_for_tests(n: usize, blocks: Vec<EigenBlock>) -> Self {
        Self { n, blocks }
    }

    /// Concatenates all blocks into the full `n x n` eigenvector matrix.
    pub fn full_basis(&self) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(self.n, self.n);
        let mut col = 0;
        for b in &self.blocks {
            u.columns_mut(col, b.multiplicity()).copy_from(&b.vectors);
            col += b.multiplicity();
        }
        u
    }
}

/// Result of comparing two grouped spectra.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumComparison {
    pub isospectral: bool,
    pub matched_multiplicities: bool,
    pub max_eigenvalue_gap: f64,
}

/// Computes the grouped eigendecomposition of a graph's adjacency matrix.
///
/// Two raw eigenvalues land in the same group when their gap is at most
/// `tol_group * max(1, ||A||_2)`, chained transitively so the grouping does
/// not depend on traversal order. Each group's basis is re-orthonormalized
/// with a QR pass; distinct eigenvectors get a canonical sign.
pub fn decompose(g: &WeightedGraph, tol_group: f64) -> Result<GroupedSpectrum, SpectralError> {
    let n = g.n();
    let eig = g
        .adjacency()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(SpectralError::NoConvergence)?;

    // sort descending by eigenvalue
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let scale = sorted_vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let gap_tol = tol_group * scale;

    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sorted_vals[end - 1] - sorted_vals[end] <= gap_tol {
            end += 1;
        }
        let mu = end - start;
        let mut basis = DMatrix::zeros(n, mu);
        for (c, &raw) in order[start..end].iter().enumerate() {
            basis.set_column(c, &eig.eigenvectors.column(raw));
        }
        // re-orthonormalize: the span is what matters downstream
        let basis = thin_q(basis);
        let value = sorted_vals[start..end].iter().sum::<f64>() / mu as f64;
        blocks.push(make_block(value, basis, n));
        start = end;
    }

    Ok(GroupedSpectrum { n, blocks })
}

fn thin_q(m: DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    let qr = m.qr();
    let q = qr.q();
    q.columns(0, cols).into_owned()
}

fn make_block(value: f64, mut vectors: DMatrix<f64>, n: usize) -> EigenBlock {
    let sqrt_n = (n as f64).sqrt();
    let mu = vectors.ncols();
    if mu == 1 {
        let sign = canonical_sign(vectors.column(0).as_slice(), sqrt_n);
        if sign < 0.0 {
            vectors.column_mut(0).neg_mut();
        }
    }
    let ones = DVector::from_element(n, 1.0);
    let w = vectors.transpose() * &ones;
    let friendly: Vec<bool> = (0..mu)
        .map(|c| w[c].abs() > TOL_FRIENDLY * sqrt_n)
        .collect();
    let ambiguous: Vec<bool> = (0..mu)
        .map(|c| classify_ambiguous(vectors.column(c).as_slice(), TOL_ENTRY))
        .collect();
    EigenBlock {
        value,
        vectors,
        w,
        friendly,
        ambiguous,
    }
}

/// Canonical sign for a single eigenvector: positive projection onto the
/// all-ones vector when friendly, otherwise the sign whose sorted entry
/// sequence is lexicographically larger. Returns +1.0 or -1.0 for the stored
/// orientation.
fn canonical_sign(u: &[f64], sqrt_n: f64) -> f64 {
    let dot: f64 = u.iter().sum();
    if dot.abs() > TOL_FRIENDLY * sqrt_n {
        return dot.signum();
    }
    let mut s: Vec<f64> = u.to_vec();
    s.sort_by(f64::total_cmp);
    for (i, &v) in s.iter().enumerate() {
        let neg = -s[s.len() - 1 - i];
        if (v - neg).abs() > TOL_ENTRY {
            return if v > neg { 1.0 } else { -1.0 };
        }
    }
    1.0 // ambiguous: both signs equivalent
}

/// True when `u` and `-u` have the same entry multiset, i.e. there exists a
/// permutation `P` with `u = -P u`. Decided by comparing the sorted entries
/// of `u` against the reversed, negated sorted entries within `tol_entry`.
pub fn classify_ambiguous(u: &[f64], tol_entry: f64) -> bool {
    let mut s: Vec<f64> = u.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    (0..m).all(|i| (s[i] + s[m - 1 - i]).abs() <= tol_entry)
}

/// Number of unfriendly eigenvector columns in a spectrum.
pub fn count_unfriendly(s: &GroupedSpectrum) -> usize {
    s.unfriendly_count()
}

/// Compares eigenvalues and multiplicities of two spectra.
///
/// Isospectral means identical multiplicity vectors and per-group eigenvalue
/// gaps at most `tol * max(1, ||lambda||_inf)`.
pub fn compare_spectra(
    sa: &GroupedSpectrum,
    sb: &GroupedSpectrum,
    tol: f64,
) -> SpectrumComparison {
    let matched = sa.n() == sb.n() && sa.mu() == sb.mu();
    if !matched {
        return SpectrumComparison {
            isospectral: false,
            matched_multiplicities: false,
            max_eigenvalue_gap: f64::INFINITY,
        };
    }
    let la = sa.lambda();
    let lb = sb.lambda();
    let scale = la
        .iter()
        .chain(lb.iter())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let max_gap = la
        .iter()
        .zip(lb.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    SpectrumComparison {
        isospectral: max_gap <= tol * scale,
        matched_multiplicities: true,
        max_eigenvalue_gap: max_gap,
    }
}
