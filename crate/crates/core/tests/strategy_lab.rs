// Scratch experiments for restart schedules; not part of the suite.
#![allow(dead_code)]
use isofw_core::graph::{generate, verify_isomorphism, GraphName, Permutation};
use isofw_core::relaxation::sign_equations;
use isofw_core::solver::{
    frank_wolfe_step, round_to_permutation, solve_lp, LpResult, ReducedLp, SolverConfig,
    SolverState, StepOutcome,
};
use isofw_core::spectral::decompose;
use isofw_core::vectorize::unvec;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn run_schedule(schedule: &str, seed: u64, max_restarts: usize) -> (bool, usize, usize) {
    let a = generate(&GraphName::Paley(29)).unwrap();
    let mut prng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let p = Permutation::random(29, &mut prng);
    let b = a.apply_permutation(&p).unwrap();
    let cfg = SolverConfig { seed, ..SolverConfig::default() };
    let sa = decompose(&a, cfg.tol_group).unwrap();
    let sb = decompose(&b, cfg.tol_group).unwrap();
    let signs = sign_equations(&sa, &sb, cfg.tol_friendly, cfg.tol_entry);
    let lp = ReducedLp::build(&sa, &sb, &signs, cfg.tol_group).unwrap();
    let n = 29;
    let r = lp.r_free();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let try_cert = |x: &DVector<f64>| -> bool {
        if let Some(perm) = round_to_permutation(x, n, 1e-6) {
            if verify_isomorphism(&a, &b, &perm) { return true; }
        }
        let xm = unvec(x, n);
        let rows = isofw_core::assignment::max_score_assignment(&xm);
        if let Ok(perm) = Permutation::from_images({
            let mut m = vec![0usize; n];
            for (j, &i) in rows.iter().enumerate() { m[j] = i; }
            m
        }) {
            return verify_isomorphism(&a, &b, &perm);
        }
        false
    };

    let mut state = SolverState::from_sigma(&lp, DVector::zeros(r), 0);
    let mut fw_iters = 0usize;
    let mut restarts = 0usize;
    loop {
        // inner FW descent
        for _ in 0..cfg.max_iters {
            if try_cert(&state.x) { return (true, fw_iters, restarts); }
            match frank_wolfe_step(&mut state, &lp) {
                StepOutcome::Moved { .. } => { fw_iters += 1; }
                StepOutcome::Stagnated { .. } => { fw_iters += 1; break; }
                StepOutcome::LpFailed(_) => break,
            }
        }
        if try_cert(&state.x) { return (true, fw_iters, restarts); }
        if restarts >= max_restarts { return (false, fw_iters, restarts); }
        restarts += 1;
        // restart cost per schedule
        let kind = match schedule {
            "blend_rand" => 0,
            "fresh_rand" => 1,
            "fresh_sq_noise" => 2,
            "mix" => match restarts % 3 { 0 => 0, 1 => 1, _ => 2 },
            _ => panic!(),
        };
        let c = match kind {
            0 | 1 => DVector::from_fn(r, |_, _| rng.random_range(-1.0..1.0)),
            _ => {
                // squared-entry emphasis with noise
                let xm = unvec(&state.x, n);
                let sq = nalgebra::DMatrix::from_fn(n, n, |i, j| -(xm[(i, j)] * xm[(i, j)]));
                let base = lp.project(&sq);
                let s = base.amax().max(1e-9);
                DVector::from_fn(r, |i, _| base[i] + 0.5 * s * rng.random_range(-1.0..1.0))
            }
        };
        let sigma_y = match solve_lp(&lp, &c, None) {
            LpResult::Vertex(s) => s,
            _ => return (false, fw_iters, restarts),
        };
        match kind {
            0 => {
                let eps = rng.random_range(0.1..0.5);
                let sigma = &state.sigma * (1.0 - eps) + &sigma_y * eps;
                state = SolverState::from_sigma(&lp, sigma, restarts);
            }
            _ => {
                state = SolverState::from_sigma(&lp, sigma_y, restarts);
            }
        }
    }
}

#[test]
#[ignore]
fn schedules() {
    for schedule in ["fresh_rand", "fresh_sq_noise"] {
        let t = std::time::Instant::now();
        let mut ok = 0;
        let mut tot_iters = 0;
        let mut max_iters = 0;
        let mut tot_restarts = 0;
        for seed in [5u64, 0, 1, 2, 3] {
            let (success, iters, restarts) = run_schedule(schedule, seed, 20);
            if success { ok += 1; }
            tot_iters += iters;
            max_iters = max_iters.max(iters);
            tot_restarts += restarts;
            eprintln!("  seed {seed}: ok={success} iters={iters} restarts={restarts}"); eprint!("{}", if success { '+' } else { '!' });
        }
        eprintln!(" {schedule}: ok={ok}/10 fw_iters tot={tot_iters} max={max_iters} restarts={tot_restarts} time={:?}", t.elapsed());
    }
}
