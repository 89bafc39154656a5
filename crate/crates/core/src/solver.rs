//! The decision pipeline.
//!
//! `check` runs: spectral gate, sign fixing (with a closed-form fast path for
//! distinct spectra), LP feasibility of the reduced polytope, then a
//! Frank-Wolfe loop on the concave penalty `-x^T x` with perturbation
//! restarts. An `Isomorphic` verdict always carries a permutation certificate
//! that passed exact re-verification; `NotIsomorphic` is only issued from one
//! of three proofs (spectral mismatch, sign infeasibility, or a Farkas ray
//! for the reduced LP); everything else is `Inconclusive`.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assignment::max_score_assignment;
use crate::graph::{verify_isomorphism, Permutation, WeightedGraph};
use crate::relaxation::{
    rank_of_h, sign_equations, BlockSign, HOperator, NullSpaceBasis, RelaxationError,
};
use crate::simplex::{self, FarkasRay, IneqOracle, LpOutcome, LpProblem, SimplexOptions};
use crate::spectral::{compare_spectra, decompose, GroupedSpectrum, SpectralError};
use crate::vectorize::{unvec, vec_of};

/// Tolerances, budgets, and reproducibility knobs for [`check`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative gap for grouping repeated eigenvalues.
    pub tol_group: f64,
    /// Threshold on `|<u, 1>|/sqrt(n)` for friendliness.
    pub tol_friendly: f64,
    /// Entrywise tolerance for multiset comparisons (ambiguity, sign fixing).
    pub tol_entry: f64,
    /// Rounding tolerance: an entry counts as binary within this slack.
    pub tol_bin: f64,
    /// Allowed equality residual for feasible points.
    pub tol_eq: f64,
    /// Allowed negativity for feasible points.
    pub tol_pos: f64,
    /// Frank-Wolfe iterations per restart.
    pub max_iters: usize,
    /// Perturbation restarts after stagnation.
    pub max_restarts: usize,
    /// Blend range for perturbation restarts.
    pub perturb_range: (f64, f64),
    /// Seed for all randomness in the solver.
    pub seed: u64,
    /// Largest accepted vertex count.
    pub size_cap: usize,
    /// Optional CSV trace destination.
    pub trace_path: Option<PathBuf>,
    /// Optional directory for per-iterate matrix snapshots.
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_group: crate::spectral::TOL_GROUP,
            tol_friendly: crate::spectral::TOL_FRIENDLY,
            tol_entry: crate::spectral::TOL_ENTRY,
            tol_bin: 1e-6,
            tol_eq: 1e-8,
            tol_pos: 1e-8,
            max_iters: 200,
            max_restarts: 20,
            perturb_range: (0.1, 0.5),
            seed: 0,
            size_cap: 128,
            trace_path: None,
            snapshot_dir: None,
        }
    }
}

/// Why a pair was proven non-isomorphic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotIsoReason {
    /// Eigenvalues or multiplicities differ.
    SpectralGate,
    /// The sign equations have no solution, or their unique solution is not
    /// a permutation on a friendly pair.
    SignInfeasible,
    /// The reduced polytope is empty (Farkas-certified).
    LpInfeasible,
}

impl fmt::Display for NotIsoReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NotIsoReason::SpectralGate => "spectral-gate",
            NotIsoReason::SignInfeasible => "sign-infeasible",
            NotIsoReason::LpInfeasible => "lp-infeasible",
        };
        f.write_str(s)
    }
}

/// The solver's answer.
#[derive(Debug, Clone)]
pub enum IsoVerdict {
    NotIsomorphic {
        reason: NotIsoReason,
        detail: String,
    },
    Isomorphic {
        certificate: Permutation,
    },
    Inconclusive {
        best_x: DVector<f64>,
        best_f: f64,
    },
}

impl IsoVerdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            IsoVerdict::Isomorphic { .. } => 0,
            IsoVerdict::NotIsomorphic { .. } => 1,
            IsoVerdict::Inconclusive { .. } => 2,
        }
    }
}

/// Where the pipeline settled the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    SpectralGate,
    SignStage,
    FastPath,
    LpFeasibility,
    FrankWolfe,
}

/// One trace record per Frank-Wolfe iterate.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub restart: usize,
    pub iter: usize,
    pub f: f64,
    pub fw_gap: f64,
    pub eq_resid: f64,
    pub pos_resid: f64,
    pub h_resid: f64,
}

/// Diagnostics accompanying a verdict.
#[derive(Debug, Clone)]
pub struct CheckStats {
    pub stage: Stage,
    pub fw_iters: usize,
    pub restarts: usize,
    pub lp_solves: usize,
    pub lambda: Vec<f64>,
    pub mu: Vec<usize>,
    pub rank_h: Option<usize>,
    pub free_dimension: Option<usize>,
    pub trace: Vec<TraceRow>,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("graphs have {0} vertices, exceeding the size cap {1} (ISOFW_SIZE_CAP)")]
    SizeCap(usize, usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Relaxation(#[from] RelaxationError),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Reduced LP
// ---------------------------------------------------------------------------

/// The reduced feasibility/linear-minimization problem.
///
/// Coordinates are the free entries of the block matrix `S` (whole blocks
/// whose sign was not pinned by the sign equations). Pinned blocks are folded
/// into the constant part `x_fix`, so the feasible set is
/// `{ x_fix + N sigma : row/col sums 1, entries >= 0 }` with one redundant
/// row-sum constraint dropped from the equality system.
pub struct ReducedLp {
    basis: NullSpaceBasis,
    /// Block index and multiplicity of each free block, in order.
    free_blocks: Vec<(usize, usize)>,
    /// Per free block, its offset in the sigma vector.
    offsets: Vec<usize>,
    r_free: usize,
    x_fix: DMatrix<f64>,
    x_fix_vec: DVector<f64>,
    /// Full 2n-row equality matrix (row sums then column sums).
    e_full: DMatrix<f64>,
    d_full: DVector<f64>,
    /// Equality system with the redundant first row dropped.
    e_red: DMatrix<f64>,
    d_red: DVector<f64>,
    /// Right-hand side of `N sigma >= h`, namely `-x_fix`.
    h: DVector<f64>,
    n: usize,
}

impl ReducedLp {
    pub fn build(
        sa: &GroupedSpectrum,
        sb: &GroupedSpectrum,
        signs: &[BlockSign],
        tol: f64,
    ) -> Result<Self, RelaxationError> {
        let basis = NullSpaceBasis::new(sa, sb, tol)?;
        let n = basis.n();
        assert_eq!(signs.len(), basis.num_blocks());

        let mut x_fix = DMatrix::zeros(n, n);
        let mut free_blocks = Vec::new();
        let mut offsets = Vec::new();
        let mut r_free = 0;
        for (k, sign) in signs.iter().enumerate() {
            let (ua, ub) = basis.block(k);
            match sign {
                BlockSign::Forced(s) => {
                    x_fix += ub * ua.transpose() * *s;
                }
                BlockSign::Free => {
                    let mu = ua.ncols();
                    free_blocks.push((k, mu));
                    offsets.push(r_free);
                    r_free += mu * mu;
                }
                BlockSign::Infeasible => {
                    panic!("ReducedLp::build called with an infeasible sign");
                }
            }
        }

        // equality rows: row sums then column sums of X - 1
        let mut e_full = DMatrix::zeros(2 * n, r_free);
        for (&(k, mu), &off) in free_blocks.iter().zip(&offsets) {
            let (ua, ub) = basis.block(k);
            let wa = ua.transpose() * DVector::from_element(n, 1.0);
            let wb = ub.transpose() * DVector::from_element(n, 1.0);
            for alpha in 0..mu {
                for beta in 0..mu {
                    let col = off + alpha * mu + beta;
                    for i in 0..n {
                        e_full[(i, col)] = ub[(i, beta)] * wa[alpha];
                        e_full[(n + i, col)] = ua[(i, alpha)] * wb[beta];
                    }
                }
            }
        }
        let mut d_full = DVector::zeros(2 * n);
        for i in 0..n {
            d_full[i] = 1.0 - x_fix.row(i).sum();
            d_full[n + i] = 1.0 - x_fix.column(i).sum();
        }
        let e_red = e_full.rows(1, 2 * n - 1).into_owned();
        let d_red = d_full.rows(1, 2 * n - 1).into_owned();
        let x_fix_vec = vec_of(&x_fix);
        let h = -&x_fix_vec;

        Ok(Self {
            basis,
            free_blocks,
            offsets,
            r_free,
            x_fix,
            x_fix_vec,
            e_full,
            d_full,
            e_red,
            d_red,
            h,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_free(&self) -> usize {
        self.r_free
    }

    pub fn x_fix(&self) -> &DMatrix<f64> {
        &self.x_fix
    }

    /// Full 2n-row equality matrix, for rank checks and residuals.
    pub fn e_full(&self) -> &DMatrix<f64> {
        &self.e_full
    }

    /// Right-hand side matching [`Self::e_full`].
    pub fn d_full(&self) -> &DVector<f64> {
        &self.d_full
    }

    /// The point `X(sigma) = x_fix + sum_k U_B S^(k) U_A^T`.
    pub fn x_matrix(&self, sigma: &DVector<f64>) -> DMatrix<f64> {
        let mut x = self.x_fix.clone();
        for (&(k, mu), &off) in self.free_blocks.iter().zip(&self.offsets) {
            let (ua, ub) = self.basis.block(k);
            let s = DMatrix::from_fn(mu, mu, |b, a| sigma[off + a * mu + b]);
            x += ub * s * ua.transpose();
        }
        x
    }

    pub fn x_vector(&self, sigma: &DVector<f64>) -> DVector<f64> {
        vec_of(&self.x_matrix(sigma))
    }

    /// Adjoint of the free-coordinate map: `N^T vec(Z)`.
    pub fn project(&self, z: &DMatrix<f64>) -> DVector<f64> {
        let mut sigma = DVector::zeros(self.r_free);
        for (&(k, mu), &off) in self.free_blocks.iter().zip(&self.offsets) {
            let (ua, ub) = self.basis.block(k);
            let s = ub.transpose() * z * ua;
            for alpha in 0..mu {
                for beta in 0..mu {
                    sigma[off + alpha * mu + beta] = s[(beta, alpha)];
                }
            }
        }
        sigma
    }

    /// Residuals of a candidate point: (equality, negativity).
    pub fn residuals(&self, x: &DVector<f64>) -> (f64, f64) {
        let xm = unvec(x, self.n);
        let mut eq = 0.0f64;
        for i in 0..self.n {
            eq = eq.max((xm.row(i).sum() - 1.0).abs());
            eq = eq.max((xm.column(i).sum() - 1.0).abs());
        }
        let neg = -x.iter().cloned().fold(0.0f64, f64::min);
        (eq, neg.max(0.0))
    }

    fn oracle(&self) -> ReducedOracle<'_> {
        ReducedOracle(self)
    }

    fn problem<'a>(&'a self, oracle: &'a ReducedOracle<'a>) -> LpProblem<'a, ReducedOracle<'a>> {
        LpProblem {
            eq: &self.e_red,
            eq_rhs: &self.d_red,
            ineq: oracle,
            ineq_rhs: &self.h,
        }
    }
}

/// Inequality oracle exposing the rows of the free null-space basis.
pub struct ReducedOracle<'a>(&'a ReducedLp);

impl IneqOracle for ReducedOracle<'_> {
    fn rows(&self) -> usize {
        self.0.n * self.0.n
    }

    fn apply(&self, s: &DVector<f64>) -> DVector<f64> {
        let lp = self.0;
        let mut x = DMatrix::zeros(lp.n, lp.n);
        for (&(k, mu), &off) in lp.free_blocks.iter().zip(&lp.offsets) {
            let (ua, ub) = lp.basis.block(k);
            let sm = DMatrix::from_fn(mu, mu, |b, a| s[off + a * mu + b]);
            x += ub * sm * ua.transpose();
        }
        vec_of(&x)
    }

    fn apply_transpose(&self, z: &DVector<f64>) -> DVector<f64> {
        self.0.project(&unvec(z, self.0.n))
    }

    fn row(&self, j: usize) -> DVector<f64> {
        let lp = self.0;
        let (i, col) = (j % lp.n, j / lp.n);
        let mut out = DVector::zeros(lp.r_free);
        for (&(k, mu), &off) in lp.free_blocks.iter().zip(&lp.offsets) {
            let (ua, ub) = lp.basis.block(k);
            for alpha in 0..mu {
                for beta in 0..mu {
                    out[off + alpha * mu + beta] = ub[(i, beta)] * ua[(col, alpha)];
                }
            }
        }
        out
    }
}

/// Outcome of one LP call in solver terms.
pub enum LpResult {
    Vertex(DVector<f64>),
    /// Farkas-verified emptiness of the reduced polytope.
    Infeasible(FarkasRay),
    /// Iteration cap or numerical breakdown; never treated as infeasible.
    Failed(String),
}

/// Solves `min c^T sigma` over the reduced polytope, returning a vertex.
pub fn solve_lp(lp: &ReducedLp, c: &DVector<f64>, warm: Option<&[usize]>) -> LpResult {
    solve_lp_with_basis(lp, c, warm).0
}

fn solve_lp_with_basis(
    lp: &ReducedLp,
    c: &DVector<f64>,
    warm: Option<&[usize]>,
) -> (LpResult, Option<Vec<usize>>) {
    let oracle = lp.oracle();
    let problem = lp.problem(&oracle);
    let opts = SimplexOptions {
        refactor_every: (lp.r_free() / 6).clamp(64, 256),
        ..SimplexOptions::default()
    };
    let (outcome, basis) = simplex::solve(&problem, c, opts, warm);
    let res = match outcome {
        LpOutcome::Optimal { sigma, .. } => LpResult::Vertex(sigma),
        LpOutcome::Infeasible(ray) => {
            if simplex::verify_farkas(&problem, &ray) {
                LpResult::Infeasible(ray)
            } else {
                LpResult::Failed("unverified infeasibility ray".into())
            }
        }
        LpOutcome::IterationLimit => LpResult::Failed("LP iteration cap exceeded".into()),
        LpOutcome::Numerical(msg) => LpResult::Failed(msg),
    };
    (res, basis)
}

/// A feasible starting point.
///
/// Without an RNG this prefers `sigma = 0` (for regular isospectral pairs
/// that is the constant doubly stochastic matrix) and otherwise asks the LP
/// for any feasible vertex. With an RNG the phase-1 cost vector is random,
/// which diversifies restarts.
pub fn initial_point(
    lp: &ReducedLp,
    cfg: &SolverConfig,
    rng: Option<&mut ChaCha8Rng>,
) -> LpResult {
    match rng {
        None => {
            let x0 = &lp.x_fix_vec;
            let (eq, neg) = lp.residuals(x0);
            if eq <= cfg.tol_eq && neg <= cfg.tol_pos {
                return LpResult::Vertex(DVector::zeros(lp.r_free()));
            }
            solve_lp(lp, &DVector::zeros(lp.r_free()), None)
        }
        Some(rng) => {
            let c = DVector::from_fn(lp.r_free(), |_, _| rng.random_range(-1.0..1.0));
            solve_lp(lp, &c, None)
        }
    }
}

/// Strict rounding: every row must have exactly one entry within `tol_bin`
/// of 1 and the rest within `tol_bin` of 0, and the ones must form a
/// permutation. Returns `None` otherwise.
pub fn round_to_permutation(x: &DVector<f64>, n: usize, tol_bin: f64) -> Option<Permutation> {
    let xm = unvec(x, n);
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for i in 0..n {
        let mut one_col = None;
        for j in 0..n {
            let v = xm[(i, j)];
            if (v - 1.0).abs() <= tol_bin {
                if one_col.is_some() {
                    return None;
                }
                one_col = Some(j);
            } else if v.abs() > tol_bin {
                return None;
            }
        }
        let j = one_col?;
        if used[j] {
            return None;
        }
        used[j] = true;
        // X ~ P with P[i, j] = 1 iff pi(j) = i
        map[j] = i;
    }
    Permutation::from_images(map).ok()
}

// ---------------------------------------------------------------------------
// Frank-Wolfe machinery
// ---------------------------------------------------------------------------

/// Mutable state of one Frank-Wolfe run.
pub struct SolverState {
    pub sigma: DVector<f64>,
    pub x: DVector<f64>,
    pub f: f64,
    pub iter: usize,
    pub restart: usize,
    warm_basis: Option<Vec<usize>>,
}

impl SolverState {
    /// Builds a state from reduced coordinates, recomputing `x` and `f`.
    pub fn from_sigma(lp: &ReducedLp, sigma: DVector<f64>, restart: usize) -> Self {
        let x = lp.x_vector(&sigma);
        let f = -x.norm_squared();
        Self {
            sigma,
            x,
            f,
            iter: 0,
            restart,
            warm_basis: None,
        }
    }
}

/// What a Frank-Wolfe step did.
pub enum StepOutcome {
    /// Moved to the oracle vertex (gamma = 1).
    Moved { gap: f64 },
    /// The oracle could not improve the objective (gamma = 0).
    Stagnated { gap: f64 },
    /// LP trouble; the caller decides whether restarts remain.
    LpFailed(String),
}

/// One Frank-Wolfe step: solve the linear minimization oracle at `state.x`
/// and move to its vertex if that improves the concave objective. For the
/// strictly concave `-x^T x` the exact line search on [0, 1] always picks an
/// endpoint, so gamma is either 0 (stagnation) or 1.
pub fn frank_wolfe_step(state: &mut SolverState, lp: &ReducedLp) -> StepOutcome {
    let grad_sigma = -lp.project(&unvec(&state.x, lp.n()));
    let (res, basis) = solve_lp_with_basis(lp, &grad_sigma, state.warm_basis.as_deref());
    if let Some(b) = basis {
        state.warm_basis = Some(b);
    }
    let sigma_y = match res {
        LpResult::Vertex(s) => s,
        LpResult::Infeasible(_) => {
            // the current state is feasible, so an infeasible LMO can only
            // be numerical noise
            return StepOutcome::LpFailed("LMO reported infeasible".into());
        }
        LpResult::Failed(msg) => return StepOutcome::LpFailed(msg),
    };
    let y = lp.x_vector(&sigma_y);
    let f_y = -y.norm_squared();
    let gap = 2.0 * (y.dot(&state.x) - state.x.norm_squared());
    state.iter += 1;
    if f_y < state.f - 1e-10 * state.f.abs().max(1.0) {
        state.sigma = sigma_y;
        state.x = y;
        state.f = f_y;
        StepOutcome::Moved { gap }
    } else {
        StepOutcome::Stagnated { gap }
    }
}

/// Restart after stagnation: blend toward the vertex optimizing a random
/// cost vector, `x' = (1 - eps) x + eps y_rand` with `eps` drawn from the
/// configured perturbation range. Objective monotonicity resets across this
/// boundary.
pub fn perturb_restart(
    state: &mut SolverState,
    lp: &ReducedLp,
    cfg: &SolverConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(), String> {
    let c = DVector::from_fn(lp.r_free(), |_, _| rng.random_range(-1.0..1.0));
    let sigma_rand = match solve_lp(lp, &c, state.warm_basis.as_deref()) {
        LpResult::Vertex(s) => s,
        LpResult::Infeasible(_) => return Err("restart LP reported infeasible".into()),
        LpResult::Failed(msg) => return Err(msg),
    };
    let (lo, hi) = cfg.perturb_range;
    let eps = rng.random_range(lo..hi);
    state.sigma = &state.sigma * (1.0 - eps) + sigma_rand * eps;
    state.x = lp.x_vector(&state.sigma);
    state.f = -state.x.norm_squared();
    state.iter = 0;
    state.restart += 1;
    Ok(())
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

struct TraceSink {
    rows: Vec<TraceRow>,
    file: Option<BufWriter<fs::File>>,
    snapshot_dir: Option<PathBuf>,
}

impl TraceSink {
    fn new(cfg: &SolverConfig) -> Result<Self, CheckError> {
        let file = match &cfg.trace_path {
            Some(path) => {
                let f = fs::File::create(path).map_err(|source| CheckError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let mut w = BufWriter::new(f);
                writeln!(w, "# seed={}", cfg.seed).map_err(|source| CheckError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                writeln!(w, "restart,iter,f,fw_gap,eq_resid,pos_resid,h_resid").map_err(
                    |source| CheckError::Io {
                        path: path.display().to_string(),
                        source,
                    },
                )?;
                Some(w)
            }
            None => None,
        };
        if let Some(dir) = &cfg.snapshot_dir {
            fs::create_dir_all(dir).map_err(|source| CheckError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
        Ok(Self {
            rows: Vec::new(),
            file,
            snapshot_dir: cfg.snapshot_dir.clone(),
        })
    }

    fn record(&mut self, row: TraceRow, x: &DVector<f64>, n: usize) {
        if let Some(w) = &mut self.file {
            let _ = writeln!(
                w,
                "{},{},{},{},{},{},{}",
                row.restart, row.iter, row.f, row.fw_gap, row.eq_resid, row.pos_resid, row.h_resid
            );
        }
        if let Some(dir) = &self.snapshot_dir {
            let path = dir.join(format!("x_r{:03}_k{:03}.csv", row.restart, row.iter));
            let xm = unvec(x, n);
            let mut out = String::new();
            for i in 0..n {
                let cells: Vec<String> = (0..n).map(|j| format!("{}", xm[(i, j)])).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            let _ = fs::write(path, out);
        }
        self.rows.push(row);
    }
}

/// Decides whether two graphs are isomorphic. See the module docs for the
/// stages; `check_with_stats` additionally returns per-run diagnostics.
pub fn check(
    a: &WeightedGraph,
    b: &WeightedGraph,
    cfg: &SolverConfig,
) -> Result<IsoVerdict, CheckError> {
    check_with_stats(a, b, cfg).map(|(verdict, _)| verdict)
}

pub fn check_with_stats(
    a: &WeightedGraph,
    b: &WeightedGraph,
    cfg: &SolverConfig,
) -> Result<(IsoVerdict, CheckStats), CheckError> {
    let mut stats = CheckStats {
        stage: Stage::SpectralGate,
        fw_iters: 0,
        restarts: 0,
        lp_solves: 0,
        lambda: Vec::new(),
        mu: Vec::new(),
        rank_h: None,
        free_dimension: None,
        trace: Vec::new(),
        seed: cfg.seed,
    };

    if a.n() != b.n() {
        return Ok((
            IsoVerdict::NotIsomorphic {
                reason: NotIsoReason::SpectralGate,
                detail: format!("vertex counts differ: {} vs {}", a.n(), b.n()),
            },
            stats,
        ));
    }
    let n = a.n();
    if n > cfg.size_cap {
        return Err(CheckError::SizeCap(n, cfg.size_cap));
    }

    let sa = decompose(a, cfg.tol_group)?;
    let sb = decompose(b, cfg.tol_group)?;
    stats.lambda = sa.lambda();
    stats.mu = sa.mu();

    let cmp = compare_spectra(&sa, &sb, cfg.tol_group);
    if !cmp.isospectral {
        let detail = if !cmp.matched_multiplicities {
            format!("multiplicities differ: {:?} vs {:?}", sa.mu(), sb.mu())
        } else {
            format!("max eigenvalue gap {:.3e}", cmp.max_eigenvalue_gap)
        };
        return Ok((
            IsoVerdict::NotIsomorphic {
                reason: NotIsoReason::SpectralGate,
                detail,
            },
            stats,
        ));
    }
    stats.rank_h = Some(rank_of_h(&sa.mu(), n)?);

    // sign equations (1x1 blocks pinned; repeated or ambiguous blocks free)
    let signs = sign_equations(&sa, &sb, cfg.tol_friendly, cfg.tol_entry);
    if let Some(k) = signs.iter().position(|s| matches!(s, BlockSign::Infeasible)) {
        stats.stage = Stage::SignStage;
        return Ok((
            IsoVerdict::NotIsomorphic {
                reason: NotIsoReason::SignInfeasible,
                detail: format!(
                    "eigenvalue block {} (lambda = {:.6}) admits no sign",
                    k + 1,
                    sa.lambda()[k]
                ),
            },
            stats,
        ));
    }

    let lp = ReducedLp::build(&sa, &sb, &signs, cfg.tol_group)?;
    stats.free_dimension = Some(lp.r_free());
    let h_op = HOperator::new(a, b);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sink = TraceSink::new(cfg)?;

    // fast path: distinct spectrum with every sign pinned leaves a single
    // candidate X*(S)
    let all_forced = signs.iter().all(|s| matches!(s, BlockSign::Forced(_)));
    if sa.all_distinct() && all_forced {
        stats.stage = Stage::FastPath;
        if let Some(p) = try_certificate(&lp.x_fix_vec, n, cfg, a, b) {
            return Ok((IsoVerdict::Isomorphic { certificate: p }, stats));
        }
        if sa.is_friendly() && sb.is_friendly() {
            return Ok((
                IsoVerdict::NotIsomorphic {
                    reason: NotIsoReason::SignInfeasible,
                    detail: "friendly pair: the unique feasible point is not a permutation"
                        .into(),
                },
                stats,
            ));
        }
        // fall through: the pinned point may be infeasible, let the LP decide
    }

    // initial feasible point
    stats.stage = Stage::LpFeasibility;
    stats.lp_solves += 1;
    let sigma0 = match initial_point(&lp, cfg, None) {
        LpResult::Vertex(s) => s,
        LpResult::Infeasible(_ray) => {
            return Ok((
                IsoVerdict::NotIsomorphic {
                    reason: NotIsoReason::LpInfeasible,
                    detail: "reduced polytope is empty (Farkas certificate verified)".into(),
                },
                stats,
            ));
        }
        LpResult::Failed(_msg) => {
            let best_x = lp.x_fix_vec.clone();
            let best_f = -best_x.norm_squared();
            return Ok((IsoVerdict::Inconclusive { best_x, best_f }, stats));
        }
    };

    stats.stage = Stage::FrankWolfe;
    let mut state = SolverState::from_sigma(&lp, sigma0, 0);
    let mut best = (state.x.clone(), state.f);
    let mut stall_streak = 0usize;

    let record = |state: &SolverState, gap: f64, sink: &mut TraceSink| {
        let (eq, pos) = lp.residuals(&state.x);
        let row = TraceRow {
            restart: state.restart,
            iter: state.iter,
            f: state.f,
            fw_gap: gap,
            eq_resid: eq,
            pos_resid: pos,
            h_resid: h_op.residual(&state.x),
        };
        sink.record(row, &state.x, n);
    };

    record(&state, 0.0, &mut sink);
    if let Some(p) = try_certificate(&state.x, n, cfg, a, b) {
        stats.trace = sink.rows.clone();
        return Ok((IsoVerdict::Isomorphic { certificate: p }, stats));
    }

    loop {
        // one restart's descent
        while state.iter < cfg.max_iters {
            match frank_wolfe_step(&mut state, &lp) {
                StepOutcome::Moved { gap } => {
                    stats.fw_iters += 1;
                    stats.lp_solves += 1;
                    record(&state, gap, &mut sink);
                    if state.f < best.1 {
                        best = (state.x.clone(), state.f);
                    }
                    if let Some(p) = try_certificate(&state.x, n, cfg, a, b) {
                        stats.trace = sink.rows.clone();
                        return Ok((IsoVerdict::Isomorphic { certificate: p }, stats));
                    }
                }
                StepOutcome::Stagnated { gap: _ } => {
                    stats.fw_iters += 1;
                    stats.lp_solves += 1;
                    break;
                }
                StepOutcome::LpFailed(_) => break,
            }
        }

        if state.restart >= cfg.max_restarts {
            break;
        }
        stats.restarts += 1;
        stats.lp_solves += 1;
        stall_streak += 1;
        // most restarts jump to a fresh random vertex (diversification);
        // every fourth blends away from the stuck point instead
        if stall_streak % 4 != 0 {
            match initial_point(&lp, cfg, Some(&mut rng)) {
                LpResult::Vertex(sigma) => {
                    let restart = state.restart + 1;
                    state = SolverState::from_sigma(&lp, sigma, restart);
                }
                _ => break,
            }
        } else if perturb_restart(&mut state, &lp, cfg, &mut rng).is_err() {
            break;
        }
        record(&state, 0.0, &mut sink);
        if state.f < best.1 {
            best = (state.x.clone(), state.f);
        }
        if let Some(p) = try_certificate(&state.x, n, cfg, a, b) {
            stats.trace = sink.rows.clone();
            return Ok((IsoVerdict::Isomorphic { certificate: p }, stats));
        }
    }

    stats.trace = sink.rows.clone();
    Ok((
        IsoVerdict::Inconclusive {
            best_x: best.0,
            best_f: best.1,
        },
        stats,
    ))
}

/// Tries to turn an iterate into a verified certificate: strict rounding
/// first, then an assignment-based extraction for concentrated fractional
/// points. Only exact verification can produce a permutation here.
fn try_certificate(
    x: &DVector<f64>,
    n: usize,
    cfg: &SolverConfig,
    a: &WeightedGraph,
    b: &WeightedGraph,
) -> Option<Permutation> {
    if let Some(p) = round_to_permutation(x, n, cfg.tol_bin) {
        if verify_isomorphism(a, b, &p) {
            return Some(p);
        }
    }
    let xm = unvec(x, n);
    let rows = max_score_assignment(&xm);
    let mut map = vec![0usize; n];
    for (j, &i) in rows.iter().enumerate() {
        map[j] = i;
    }
    let p = Permutation::from_images(map).ok()?;
    if verify_isomorphism(a, b, &p) {
        return Some(p);
    }
    None
}
