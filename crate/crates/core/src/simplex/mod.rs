//! Dense revised simplex engine for the reduced linear programs.
//!
//! Solves `min c^T s  s.t.  E s = d,  G s >= h` with `s` free, where `E` is a
//! small explicit matrix and `G` is given implicitly by an oracle (in the
//! solver, the rows of the null-space basis). The engine runs a two-phase
//! primal simplex on the dual program
//!
//! `max d^T u + h^T v  s.t.  E^T u + G^T v = c,  v >= 0`
//!
//! whose basis has only `dim(s)` rows, with a product-form inverse and
//! periodic refactorization. The optimal primal point is recovered from the
//! final simplex multipliers and is always a vertex of the primal polytope;
//! an unbounded dual yields a Farkas ray certifying primal infeasibility.
//! Dantzig pricing switches to Bland's rule after a degeneracy streak so the
//! method terminates on the highly degenerate polytopes this crate produces.

mod lu;

use nalgebra::{DMatrix, DVector};

use lu::LuFactors;

/// Row oracle for the inequality block `G s >= h`.
///
/// `G` has `rows()` rows and `dim` columns where `dim` matches the equality
/// matrix. Implementations must be deterministic.
pub trait IneqOracle {
    fn rows(&self) -> usize;
    /// `G s` for all rows at once.
    fn apply(&self, s: &DVector<f64>) -> DVector<f64>;
    /// `G^T z`.
    fn apply_transpose(&self, z: &DVector<f64>) -> DVector<f64>;
    /// A single row of `G`.
    fn row(&self, j: usize) -> DVector<f64>;
}

/// Explicit dense inequality block.
pub struct DenseIneq<'a>(pub &'a DMatrix<f64>);

impl IneqOracle for DenseIneq<'_> {
    fn rows(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, s: &DVector<f64>) -> DVector<f64> {
        self.0 * s
    }
    fn apply_transpose(&self, z: &DVector<f64>) -> DVector<f64> {
        self.0.transpose() * z
    }
    fn row(&self, j: usize) -> DVector<f64> {
        self.0.row(j).transpose()
    }
}

/// The LP `min c^T s  s.t.  E s = d,  G s >= h`.
pub struct LpProblem<'a, O: IneqOracle> {
    pub eq: &'a DMatrix<f64>,
    pub eq_rhs: &'a DVector<f64>,
    pub ineq: &'a O,
    pub ineq_rhs: &'a DVector<f64>,
}

/// Farkas certificate of primal infeasibility:
/// `E^T u + G^T v = 0`, `v >= 0`, `d^T u + h^T v > 0`.
#[derive(Debug, Clone)]
pub struct FarkasRay {
    pub eq_mult: DVector<f64>,
    pub ineq_mult: DVector<f64>,
    /// The strictly positive value `d^T u + h^T v`.
    pub violation: f64,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    /// Vertex-optimal solution.
    Optimal {
        sigma: DVector<f64>,
        objective: f64,
    },
    /// Verified-by-construction infeasibility certificate.
    Infeasible(FarkasRay),
    /// Pivot budget exhausted; distinct from infeasibility.
    IterationLimit,
    /// Numerical breakdown (singular basis, failed drive-out, drift).
    Numerical(String),
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iters: usize,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before Bland's rule engages.
    pub degeneracy_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iters: 0, // 0 = auto from problem size
            refactor_every: 100,
            degeneracy_streak: 40,
        }
    }
}

const TOL_PRICE: f64 = 1e-9;
const TOL_PIVOT: f64 = 1e-10;
const TOL_RATIO: f64 = 1e-12;
const TOL_FEAS: f64 = 1e-7;

/// Column ids: `0..m_e` are `u+`, `m_e..2*m_e` are `u-`, then `m_i` columns
/// of `v`, then `r` artificials.
#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    UPlus(usize),
    UMinus(usize),
    V(usize),
    Artificial(usize),
}

struct Engine<'a, O: IneqOracle> {
    lp: &'a LpProblem<'a, O>,
    cost: &'a DVector<f64>,
    r: usize,
    m_e: usize,
    m_i: usize,
    art_sign: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    factors: LuFactors,
    etas: Vec<(usize, DVector<f64>)>,
    x_basic: DVector<f64>,
    iters: usize,
    opts: SimplexOptions,
}

pub fn solve<O: IneqOracle>(
    lp: &LpProblem<'_, O>,
    cost: &DVector<f64>,
    opts: SimplexOptions,
    warm_basis: Option<&[usize]>,
) -> (LpOutcome, Option<Vec<usize>>) {
    let r = lp.eq.ncols();
    assert_eq!(cost.len(), r);
    assert_eq!(lp.eq_rhs.len(), lp.eq.nrows());
    assert_eq!(lp.ineq_rhs.len(), lp.ineq.rows());

    if r == 0 {
        // zero-dimensional primal: feasible iff the constraints allow s = ()
        let eq_bad = lp.eq_rhs.iter().position(|&v| v.abs() > TOL_FEAS);
        let ineq_bad = lp.ineq_rhs.iter().position(|&v| v > TOL_FEAS);
        return match (eq_bad, ineq_bad) {
            (None, None) => (
                LpOutcome::Optimal {
                    sigma: DVector::zeros(0),
                    objective: 0.0,
                },
                None,
            ),
            (Some(i), _) => {
                let mut u = DVector::zeros(lp.eq.nrows());
                u[i] = lp.eq_rhs[i].signum();
                let violation = lp.eq_rhs[i].abs();
                (
                    LpOutcome::Infeasible(FarkasRay {
                        eq_mult: u,
                        ineq_mult: DVector::zeros(lp.ineq.rows()),
                        violation,
                    }),
                    None,
                )
            }
            (None, Some(j)) => {
                let mut v = DVector::zeros(lp.ineq.rows());
                v[j] = 1.0;
                (
                    LpOutcome::Infeasible(FarkasRay {
                        eq_mult: DVector::zeros(lp.eq.nrows()),
                        ineq_mult: v,
                        violation: lp.ineq_rhs[j],
                    }),
                    None,
                )
            }
        };
    }

    let mut engine = Engine {
        lp,
        cost,
        r,
        m_e: lp.eq.nrows(),
        m_i: lp.ineq.rows(),
        art_sign: cost.iter().map(|&c| if c < 0.0 { -1.0 } else { 1.0 }).collect(),
        basis: Vec::new(),
        in_basis: Vec::new(),
        factors: LuFactors::factorize(&DMatrix::identity(1, 1)).ok().unwrap(),
        etas: Vec::new(),
        x_basic: DVector::zeros(r),
        iters: 0,
        opts,
    };
    let outcome = engine.run(warm_basis);
    let basis = match outcome {
        LpOutcome::Optimal { .. } => Some(engine.basis.clone()),
        _ => None,
    };
    (outcome, basis)
}

impl<O: IneqOracle> Engine<'_, O> {
    fn num_cols(&self) -> usize {
        2 * self.m_e + self.m_i + self.r
    }

    fn kind(&self, id: usize) -> ColKind {
        if id < self.m_e {
            ColKind::UPlus(id)
        } else if id < 2 * self.m_e {
            ColKind::UMinus(id - self.m_e)
        } else if id < 2 * self.m_e + self.m_i {
            ColKind::V(id - 2 * self.m_e)
        } else {
            ColKind::Artificial(id - 2 * self.m_e - self.m_i)
        }
    }

    fn column(&self, id: usize) -> DVector<f64> {
        match self.kind(id) {
            ColKind::UPlus(i) => self.lp.eq.row(i).transpose(),
            ColKind::UMinus(i) => -self.lp.eq.row(i).transpose(),
            ColKind::V(j) => self.lp.ineq.row(j),
            ColKind::Artificial(i) => {
                let mut e = DVector::zeros(self.r);
                e[i] = self.art_sign[i];
                e
            }
        }
    }

    /// Dual objective coefficient of a column in the given phase.
    fn dual_cost(&self, id: usize, phase_one: bool) -> f64 {
        if phase_one {
            return match self.kind(id) {
                ColKind::Artificial(_) => 1.0,
                _ => 0.0,
            };
        }
        match self.kind(id) {
            ColKind::UPlus(i) => -self.lp.eq_rhs[i],
            ColKind::UMinus(i) => self.lp.eq_rhs[i],
            ColKind::V(j) => -self.lp.ineq_rhs[j],
            ColKind::Artificial(_) => 0.0,
        }
    }

    fn ftran(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut y = self.factors.solve(v);
        for (p, eta) in &self.etas {
            let yp = y[*p] / eta[*p];
            y.axpy(-yp, eta, 1.0);
            y[*p] = yp;
        }
        y
    }

    fn btran(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut y = v.clone();
        for (p, eta) in self.etas.iter().rev() {
            let yp = (y[*p] - (eta.dot(&y) - eta[*p] * y[*p])) / eta[*p];
            y[*p] = yp;
        }
        self.factors.solve_transpose(&y)
    }

    fn refactorize(&mut self) -> Result<(), LpOutcome> {
        let mut b = DMatrix::zeros(self.r, self.r);
        for (p, &id) in self.basis.iter().enumerate() {
            b.set_column(p, &self.column(id));
        }
        self.factors = LuFactors::factorize(&b)
            .map_err(|_| LpOutcome::Numerical("singular basis".into()))?;
        self.etas.clear();
        self.x_basic = self.factors.solve(self.cost);
        let scale = self.cost.amax().max(1.0);
        let worst = self.x_basic.iter().cloned().fold(0.0f64, |m, v| m.min(v));
        if worst < -1e-5 * scale {
            return Err(LpOutcome::Numerical(format!(
                "basic solution drifted infeasible ({worst:.3e})"
            )));
        }
        for v in self.x_basic.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(())
    }

    /// Reduced costs of every non-basic column, computed in bulk from the
    /// simplex multipliers.
    fn reduced_costs(&self, phase_one: bool) -> (DVector<f64>, Vec<f64>) {
        let cost_b = DVector::from_fn(self.r, |p, _| self.dual_cost(self.basis[p], phase_one));
        let pi = self.btran(&cost_b);
        let e_pi = self.lp.eq * &pi;
        let g_pi = self.lp.ineq.apply(&pi);
        let mut red = vec![0.0; self.num_cols()];
        for i in 0..self.m_e {
            red[i] = self.dual_cost(i, phase_one) - e_pi[i];
            red[self.m_e + i] = self.dual_cost(self.m_e + i, phase_one) + e_pi[i];
        }
        for j in 0..self.m_i {
            let id = 2 * self.m_e + j;
            red[id] = self.dual_cost(id, phase_one) - g_pi[j];
        }
        // artificials never re-enter
        (pi, red)
    }

    fn choose_entering(&self, red: &[f64], bland: bool, tol: f64) -> Option<usize> {
        let structural = 2 * self.m_e + self.m_i;
        if bland {
            (0..structural).find(|&id| !self.in_basis[id] && red[id] < -tol)
        } else {
            let mut best = None;
            let mut best_val = -tol;
            for (id, &rc) in red.iter().enumerate().take(structural) {
                if !self.in_basis[id] && rc < best_val {
                    best_val = rc;
                    best = Some(id);
                }
            }
            best
        }
    }

    /// Ratio test: returns (position, step). `None` means unbounded.
    fn choose_leaving(&self, w: &DVector<f64>, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for p in 0..self.r {
            if w[p] > TOL_PIVOT {
                let num = self.x_basic[p].max(0.0);
                let ratio = num / w[p];
                match best {
                    None => best = Some((p, ratio)),
                    Some((bp, br)) => {
                        if ratio < br - TOL_RATIO {
                            best = Some((p, ratio));
                        } else if ratio <= br + TOL_RATIO {
                            // tie: prefer larger pivot for stability, or
                            // smallest basic id under Bland's rule
                            let better = if bland {
                                self.basis[p] < self.basis[bp]
                            } else {
                                w[p] > w[bp]
                            };
                            if better {
                                best = Some((p, ratio.min(br)));
                            }
                        }
                    }
                }
            }
        }
        best
    }

    fn pivot(&mut self, enter: usize, pos: usize, w: DVector<f64>, step: f64) {
        self.x_basic.axpy(-step, &w, 1.0);
        for v in self.x_basic.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.x_basic[pos] = step;
        self.in_basis[self.basis[pos]] = false;
        self.in_basis[enter] = true;
        self.basis[pos] = enter;
        self.etas.push((pos, w));
        self.iters += 1;
    }

    /// Core pricing loop for one phase. Returns Ok(true) on optimality,
    /// Ok(false) on unboundedness (entering column recorded in `unbounded`).
    fn phase_loop(
        &mut self,
        phase_one: bool,
        max_iters: usize,
        unbounded: &mut Option<(usize, DVector<f64>)>,
    ) -> Result<bool, LpOutcome> {
        let mut degen_streak = 0usize;
        let mut bland = false;
        loop {
            if self.iters >= max_iters {
                return Err(LpOutcome::IterationLimit);
            }
            if self.etas.len() >= self.opts.refactor_every {
                self.refactorize().map_err(|e| e)?;
            }
            let (_, red) = self.reduced_costs(phase_one);
            let scale = red.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let tol = TOL_PRICE * scale;
            let Some(enter) = self.choose_entering(&red, bland, tol) else {
                return Ok(true);
            };
            let col = self.column(enter);
            let w = self.ftran(&col);
            let Some((pos, step)) = self.choose_leaving(&w, bland) else {
                *unbounded = Some((enter, w));
                return Ok(false);
            };
            // tiny pivot element: refactorize once and retry the pricing
            if w[pos].abs() < TOL_PIVOT.max(1e-11 * w.amax()) && !self.etas.is_empty() {
                self.refactorize().map_err(|e| e)?;
                continue;
            }
            if step <= TOL_RATIO {
                degen_streak += 1;
                if degen_streak >= self.opts.degeneracy_streak {
                    bland = true;
                }
            } else {
                degen_streak = 0;
                bland = false;
            }
            self.pivot(enter, pos, w, step);
        }
    }

    fn run(&mut self, warm_basis: Option<&[usize]>) -> LpOutcome {
        let max_iters = if self.opts.max_iters > 0 {
            self.opts.max_iters
        } else {
            20_000 + 30 * self.r + self.m_i
        };

        // warm start: reuse a previous optimal basis when it stays feasible
        // for the new right-hand side (the primal cost vector)
        let mut warm_ok = false;
        if let Some(prev) = warm_basis {
            if prev.len() == self.r
                && prev
                    .iter()
                    .all(|&id| id < 2 * self.m_e + self.m_i)
            {
                self.basis = prev.to_vec();
                self.in_basis = vec![false; self.num_cols()];
                for &id in prev {
                    self.in_basis[id] = true;
                }
                self.etas.clear();
                if self.refactorize().is_ok() {
                    warm_ok = true;
                }
            }
        }

        if !warm_ok {
            // artificial start: B = diag(sign(c)), basic values |c|
            self.basis = (0..self.r).map(|i| 2 * self.m_e + self.m_i + i).collect();
            self.in_basis = vec![false; self.num_cols()];
            for &id in &self.basis {
                self.in_basis[id] = true;
            }
            let b = DMatrix::from_fn(self.r, self.r, |i, j| {
                if i == j {
                    self.art_sign[i]
                } else {
                    0.0
                }
            });
            self.factors = match LuFactors::factorize(&b) {
                Ok(f) => f,
                Err(_) => return LpOutcome::Numerical("artificial basis".into()),
            };
            self.etas.clear();
            self.x_basic = DVector::from_fn(self.r, |i, _| self.cost[i].abs());

            // phase 1: drive the artificial variables to zero
            let mut unbounded = None;
            match self.phase_loop(true, max_iters, &mut unbounded) {
                Ok(true) => {}
                Ok(false) => {
                    return LpOutcome::Numerical("phase-1 unbounded".into());
                }
                Err(out) => return out,
            }
            let infeas: f64 = self
                .basis
                .iter()
                .zip(self.x_basic.iter())
                .filter(|(&id, _)| matches!(self.kind(id), ColKind::Artificial(_)))
                .map(|(_, &v)| v)
                .sum();
            if infeas > TOL_FEAS * self.cost.amax().max(1.0) {
                // dual infeasible; with a bounded primal this cannot happen
                // in exact arithmetic, so treat it as numerical trouble
                return LpOutcome::Numerical(format!("phase-1 optimum {infeas:.3e} > 0"));
            }
            if let Err(out) = self.drive_out_artificials() {
                return out;
            }
        }

        // phase 2
        let mut unbounded = None;
        match self.phase_loop(false, max_iters, &mut unbounded) {
            Ok(true) => self.recover_optimal(),
            Ok(false) => {
                let (enter, w) = unbounded.expect("unbounded must set the ray");
                self.build_farkas(enter, &w)
            }
            Err(out) => out,
        }
    }

    /// Pivots any remaining basic artificial out on a structural column with a
    /// nonzero entry in its row; all such pivots are degenerate.
    fn drive_out_artificials(&mut self) -> Result<(), LpOutcome> {
        for pos in 0..self.r {
            if !matches!(self.kind(self.basis[pos]), ColKind::Artificial(_)) {
                continue;
            }
            let mut e_p = DVector::zeros(self.r);
            e_p[pos] = 1.0;
            let rho = self.btran(&e_p);
            let e_rho = self.lp.eq * &rho;
            let g_rho = self.lp.ineq.apply(&rho);
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m_e {
                let val = e_rho[i].abs();
                if val > best.map_or(1e-9, |(_, b)| b) && !self.in_basis[i] {
                    best = Some((i, val));
                }
            }
            for j in 0..self.m_i {
                let id = 2 * self.m_e + j;
                let val = g_rho[j].abs();
                if val > best.map_or(1e-9, |(_, b)| b) && !self.in_basis[id] {
                    best = Some((id, val));
                }
            }
            let Some((enter, _)) = best else {
                return Err(LpOutcome::Numerical(
                    "cannot drive artificial out of basis".into(),
                ));
            };
            let col = self.column(enter);
            let w = self.ftran(&col);
            self.pivot(enter, pos, w, 0.0);
            if self.etas.len() >= self.opts.refactor_every {
                self.refactorize().map_err(|e| e)?;
            }
        }
        Ok(())
    }

    fn recover_optimal(&mut self) -> LpOutcome {
        let cost_b = DVector::from_fn(self.r, |p, _| self.dual_cost(self.basis[p], false));
        let pi = self.btran(&cost_b);
        let sigma = -pi;
        let objective = self.cost.dot(&sigma);
        // cross-check strong duality: dual objective equals primal objective
        let dual_obj: f64 = -self
            .basis
            .iter()
            .zip(self.x_basic.iter())
            .map(|(&id, &v)| self.dual_cost(id, false) * v)
            .sum::<f64>();
        let scale = objective.abs().max(1.0);
        if (dual_obj - objective).abs() > 1e-5 * scale {
            return LpOutcome::Numerical(format!(
                "duality gap {:.3e}",
                (dual_obj - objective).abs()
            ));
        }
        LpOutcome::Optimal { sigma, objective }
    }

    fn build_farkas(&self, enter: usize, w: &DVector<f64>) -> LpOutcome {
        let mut u = DVector::zeros(self.m_e);
        let mut v = DVector::zeros(self.m_i);
        let add = |id: usize, amount: f64, u: &mut DVector<f64>, v: &mut DVector<f64>| {
            match self.kind(id) {
                ColKind::UPlus(i) => u[i] += amount,
                ColKind::UMinus(i) => u[i] -= amount,
                ColKind::V(j) => v[j] += amount,
                ColKind::Artificial(_) => {}
            }
        };
        add(enter, 1.0, &mut u, &mut v);
        for (p, &id) in self.basis.iter().enumerate() {
            if w[p] != 0.0 {
                add(id, -w[p], &mut u, &mut v);
            }
        }
        let violation = self.lp.eq_rhs.dot(&u) + self.lp.ineq_rhs.dot(&v);
        LpOutcome::Infeasible(FarkasRay {
            eq_mult: u,
            ineq_mult: v,
            violation,
        })
    }
}

/// Checks a Farkas ray against the problem data; the solver only trusts
/// infeasibility verdicts that pass this test.
pub fn verify_farkas<O: IneqOracle>(lp: &LpProblem<'_, O>, ray: &FarkasRay) -> bool {
    let scale = ray.eq_mult.amax().max(ray.ineq_mult.amax()).max(1.0);
    if ray.ineq_mult.iter().any(|&v| v < -1e-9 * scale) {
        return false;
    }
    let combo = lp.eq.transpose() * &ray.eq_mult + lp.ineq.apply_transpose(&ray.ineq_mult);
    if combo.amax() > 1e-6 * scale {
        return false;
    }
    let violation = lp.eq_rhs.dot(&ray.eq_mult) + lp.ineq_rhs.dot(&ray.ineq_mult);
    violation > 1e-9 * scale
}
