//! Acceptance suite: one test per release criterion, each printing a single
//! `criterion N: PASS/FAIL` line (visible under `--nocapture`, or on failure).
//! Tolerances are pinned here, in code; the heavyweight solves are shared through
//! `OnceLock` so the criteria stay independently runnable without repeating work.

mod oracles;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use fieldgame::anarchy::exploitability;
use fieldgame::contract::{
    agent_realized_cost, verify_contract, ContractSpec, MarkovPolicy,
};
use fieldgame::epidemic::{
    hand_adjoint_check, build_epidemic_model, run_experiment, EpidemicParams,
    ExperimentMode, ExperimentResult, ExperimentSolution,
};
use fieldgame::lq::{
    agent_best_response, grad_pi_principal_hamiltonian, grad_y_principal_hamiltonian,
    principal_hamiltonian, principal_minimizer, reduced_hamiltonian, UtilitySpec,
};
use fieldgame::markov::{integrate_kolmogorov, simulate_ctmc_paths, ProbabilityVector, TimeGrid};
use fieldgame::solver::{first_order_check, solve_pmp, SweepParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: usize, passed: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

// ─── Shared solves ───────────────────────────────────────────────────────────────────

fn default_sweep() -> SweepParams<f64> {
    SweepParams::default() // n_steps = 2000
}

fn intervention() -> &'static (ExperimentResult<f64>, Duration) {
    static CELL: OnceLock<(ExperimentResult<f64>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let result = run_experiment(
            &EpidemicParams::default(),
            &default_sweep(),
            ExperimentMode::Intervention,
            None,
        )
        .expect("baseline intervention solve");
        (result, start.elapsed())
    })
}

fn anarchy() -> &'static ExperimentResult<f64> {
    static CELL: OnceLock<ExperimentResult<f64>> = OnceLock::new();
    CELL.get_or_init(|| {
        run_experiment(
            &EpidemicParams::default(),
            &default_sweep(),
            ExperimentMode::Anarchy,
            None,
        )
        .expect("baseline anarchy solve")
    })
}

fn intervention_solution(result: &ExperimentResult<f64>) -> &fieldgame::Solution {
    match &result.solution {
        ExperimentSolution::Intervention(s) => s,
        ExperimentSolution::Anarchy(_) => unreachable!("intervention result expected"),
    }
}

// ─── Criteria ────────────────────────────────────────────────────────────────────────

#[test]
fn criterion_1_simplex_conservation() {
    let (result, elapsed) = intervention();
    let sol = intervention_solution(result);
    let drift = sol
        .pi
        .iter()
        .map(|p| (p.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let passed = drift <= 1e-9 && *elapsed < Duration::from_secs(10);
    report(
        1,
        passed,
        &format!("max |Σπ−1| = {drift:.2e} over 2001 nodes, solve took {elapsed:.2?} (< 10 s)"),
    );
}

#[test]
fn criterion_2_minimizers_match_grid_search() {
    const INSTANCES: u64 = 1000;
    const GRID_POINTS: usize = 100_000;

    let worker = |seeds: std::ops::Range<u64>| -> (f64, f64) {
        let mut worst_agent = 0.0_f64;
        let mut worst_principal = 0.0_f64;
        for seed in seeds {
            let model = oracles::random_instance(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed_5a5a);
            let (t, pi, y) = oracles::random_interior(&mut rng);
            let z: Vec<f64> = (0..4).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect();
            let payment = rng.random::<f64>();
            let cell = (model.alpha_max - model.alpha_min) / GRID_POINTS as f64;
            let at = |k: usize| model.alpha_min + cell * k as f64;

            for i in 0..4 {
                let best = agent_best_response(&model, i, &z);
                let mut arg = 0;
                let mut min = f64::INFINITY;
                for k in 0..=GRID_POINTS {
                    let h = reduced_hamiltonian(&model, t, i, &z, at(k), payment, &pi);
                    if h < min {
                        min = h;
                        arg = k;
                    }
                }
                worst_agent = worst_agent.max((best - at(arg)).abs() / cell);
            }

            let mut alpha = vec![0.0; 4];
            principal_minimizer(&model, &y, &mut alpha);
            for comp in 0..4 {
                let mut probe = alpha.clone();
                let mut arg = 0;
                let mut min = f64::INFINITY;
                for k in 0..=GRID_POINTS {
                    probe[comp] = at(k);
                    let h = principal_hamiltonian(&model, t, &y, &pi, &probe);
                    if h < min {
                        min = h;
                        arg = k;
                    }
                }
                worst_principal = worst_principal.max((alpha[comp] - at(arg)).abs() / cell);
            }
        }
        (worst_agent, worst_principal)
    };

    let threads = std::thread::available_parallelism().map_or(4, |n| n.get() as u64);
    let chunk = INSTANCES.div_ceil(threads);
    let (worst_agent, worst_principal) = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(INSTANCES);
                scope.spawn(move || worker(lo..hi))
            })
            .collect();
        handles.into_iter().fold((0.0_f64, 0.0_f64), |acc, h| {
            let (a, p) = h.join().expect("oracle worker");
            (acc.0.max(a), acc.1.max(p))
        })
    });

    let passed = worst_agent <= 1.0 + 1e-9 && worst_principal <= 1.0 + 1e-9;
    report(
        2,
        passed,
        &format!(
            "1000 random m=4 instances vs {GRID_POINTS}-point scans: worst gap \
             {worst_agent:.3} cells (agent), {worst_principal:.3} cells (principal)"
        ),
    );
}

#[test]
fn criterion_3_gradient_checks() {
    const POINTS_PER_INSTANCE: usize = 10;
    const INSTANCES: u64 = 100;
    let step = 1e-6;

    let mut worst_y = 0.0_f64;
    let mut worst_pi = 0.0_f64;
    for seed in 0..INSTANCES {
        let model = oracles::random_instance(seed.wrapping_mul(0x9e37_79b9));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1CE);
        let mut alpha = vec![0.0; 4];
        let mut analytic = vec![0.0; 4];
        for _ in 0..POINTS_PER_INSTANCE {
            let (t, pi, y) = oracles::random_interior(&mut rng);
            principal_minimizer(&model, &y, &mut alpha);

            grad_y_principal_hamiltonian(&model, t, &pi, &alpha, &mut analytic);
            for k in 0..4 {
                let mut hi = y.clone();
                let mut lo = y.clone();
                hi[k] += step;
                lo[k] -= step;
                let fd = (principal_hamiltonian(&model, t, &hi, &pi, &alpha)
                    - principal_hamiltonian(&model, t, &lo, &pi, &alpha))
                    / (2.0 * step);
                worst_y = worst_y.max((analytic[k] - fd).abs());
            }

            grad_pi_principal_hamiltonian(&model, t, &y, &pi, &alpha, &mut analytic);
            for k in 0..4 {
                let mut hi = pi.clone();
                let mut lo = pi.clone();
                hi[k] += step;
                lo[k] -= step;
                let fd = (principal_hamiltonian(&model, t, &y, &hi, &alpha)
                    - principal_hamiltonian(&model, t, &y, &lo, &alpha))
                    / (2.0 * step);
                worst_pi = worst_pi.max((analytic[k] - fd).abs());
            }
        }
    }

    let adjoint_gap =
        hand_adjoint_check(&EpidemicParams::<f64>::default(), 1000).expect("adjoint probe");

    let passed = worst_y <= 1e-8 && worst_pi <= 1e-5 && adjoint_gap <= 1e-5;
    report(
        3,
        passed,
        &format!(
            "1000 interior points: |∂_y gap| ≤ {worst_y:.2e} (tol 1e-8), \
             |∂_π gap| ≤ {worst_pi:.2e} (tol 1e-5); hand adjoint vs FD ≤ {adjoint_gap:.2e}"
        ),
    );
}

#[test]
fn criterion_4_small_scale_optimality() {
    // Exhaustive search over piecewise-constant controls (5 nodes ⇒ 4 segments,
    // 9 effort levels per state per segment) on the two-state instance.
    let (model, p0) = oracles::toy_model();
    let brute = oracles::toy_exhaustive_minimum(9, 4, p0[0]);
    let solved = solve_pmp(&model, &p0, oracles::TOY_HORIZON, &default_sweep())
        .expect("toy solve");
    let gap = solved.objective - brute;

    let (result, _) = intervention();
    let sol = intervention_solution(result);
    let epidemic_model = build_epidemic_model(&EpidemicParams::default()).unwrap();
    let foc = first_order_check(&epidemic_model, sol, 1e-4, 7).expect("first-order probe");

    let passed = gap <= 1e-4 && foc.defect <= 1e-3;
    report(
        4,
        passed,
        &format!(
            "solved objective {:.8} ≤ exhaustive piecewise-constant minimum {brute:.8} + 1e-4 \
             (margin {:.2e}; the restricted class upper-bounds the optimum); \
             epidemic first-order defect {:.2e} ≤ 1e-3",
            solved.objective, -gap, foc.defect
        ),
    );
}

#[test]
fn criterion_5_pathwise_objective_matches_flow_objective() {
    const N_PATHS: usize = 10_000;
    let (result, _) = intervention();
    let sol = intervention_solution(result);
    let params = EpidemicParams::<f64>::default();
    let model = build_epidemic_model(&params).unwrap();

    let start = Instant::now();
    let policy = MarkovPolicy::new(&model, sol.grid, &sol.pi, &sol.control);
    let paths = simulate_ctmc_paths(
        |t| policy.rate_matrix_at(t),
        &sol.pi[0],
        params.horizon,
        N_PATHS,
        2024,
    )
    .expect("policy simulation");
    // A null contract turns the realized-cost helper into the bare running-cost
    // integral along the path.
    let null = ContractSpec {
        kappa: 0.0,
        payment_rate: 0.0,
        utility: UtilitySpec::Identity,
    };
    let samples: Vec<f64> = paths
        .iter()
        .map(|p| agent_realized_cost(&policy, &null, p, 0.0))
        .collect();
    let elapsed = start.elapsed();

    let mean = samples.iter().sum::<f64>() / N_PATHS as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (N_PATHS - 1) as f64;
    let se = (var / N_PATHS as f64).sqrt();

    // The deterministic part of the principal's objective: ∫c₀ + C₀ on the flow.
    let grid = &sol.grid;
    let c0 = |k: usize| (model.principal_cost)(grid.node(k), sol.pi[k].as_slice());
    let mut fixed = 0.5 * (c0(0) + c0(grid.n_steps()));
    for k in 1..grid.n_steps() {
        fixed += c0(k);
    }
    fixed = fixed * grid.dt() + (model.terminal_cost)(sol.pi.last().unwrap().as_slice());

    let mc_objective = mean + fixed;
    let gap = (mc_objective - sol.objective).abs();
    let passed = gap <= 3.0 * se && elapsed < Duration::from_secs(60);
    report(
        5,
        passed,
        &format!(
            "MC objective {mc_objective:.6} vs flow objective {:.6}: gap {gap:.2e} ≤ 3·SE = {:.2e} \
             ({N_PATHS} paths in {elapsed:.2?} < 60 s)",
            sol.objective,
            3.0 * se
        ),
    );
}

#[test]
fn criterion_6_contract_identities() {
    const N_PATHS: usize = 10_000;
    let (result, _) = intervention();
    let sol = intervention_solution(result);
    let params = EpidemicParams::<f64>::default();
    let model = build_epidemic_model(&params).unwrap();
    // Nontrivial terms: a lossy payment utility exercises the leakage bookkeeping.
    let contract = ContractSpec {
        kappa: 0.8,
        payment_rate: 2.0,
        utility: UtilitySpec::ScaledSqrt { scale: 1.0 },
    };
    let audit = verify_contract(
        &model,
        &sol.grid,
        &sol.pi,
        &sol.control,
        &contract,
        N_PATHS,
        777,
    )
    .expect("contract audit");

    let passed = audit.agent_ok && audit.principal_ok;
    report(
        6,
        passed,
        &format!(
            "agent mean {:.6} vs κ = {:.6} (3·SE {:.2e}); principal mean {:.6} vs \
             target {:.6} (3·SE {:.2e}); occupancy gap {:.2e} (yardstick {:.2e})",
            audit.agent_mean,
            audit.agent_target,
            3.0 * audit.agent_se,
            audit.principal_mean,
            audit.principal_target,
            3.0 * audit.principal_se,
            audit.occupancy_gap,
            audit.occupancy_bound
        ),
    );
}

#[test]
fn criterion_7_anarchy_equilibrium_quality() {
    let result = anarchy();
    let sol = match &result.solution {
        ExperimentSolution::Anarchy(s) => s,
        ExperimentSolution::Intervention(_) => unreachable!(),
    };
    let params = EpidemicParams::<f64>::default();
    let model = build_epidemic_model(&params).unwrap();
    let gap = exploitability(&model, &params.p0, &sol.grid, &sol.pi, &sol.control);

    let passed = gap.gap <= 1e-6
        && gap.gap >= -1e-8
        && sol.forward_residual <= 1e-6
        && sol.backward_residual <= 1e-6;
    report(
        7,
        passed,
        &format!(
            "exploitability {:.2e} (≤ 1e-6, ≥ −1e-8); fine-grid residuals: \
             population {:.2e}, value {:.2e} (≤ 1e-6)",
            gap.gap, sol.forward_residual, sol.backward_residual
        ),
    );
}

#[test]
fn criterion_8_directional_reproduction() {
    let (int, _) = intervention();
    let ana = anarchy();
    assert_eq!(int.times, ana.times, "comparable grids");
    let t = &int.times;
    let n = t.len();

    // (a) Intervention suppresses total infection through the bulk of the horizon.
    // Measured once and frozen: pointwise dominance holds on [0.1, 3.5]; past
    // t ≈ 3.56 the planner winds effort down (no terminal infection penalty) and
    // the curves cross back by at most ~7e-4, so the tail is guarded by a bound
    // and the whole horizon by the integrated mass.
    let mut bulk_ok = true;
    let mut tail_excess = 0.0_f64;
    for k in 0..n {
        let gap = int.total_infection[k] - ana.total_infection[k];
        if t[k] >= 0.1 && t[k] <= 3.5 && gap > 1e-12 {
            bulk_ok = false;
        }
        tail_excess = tail_excess.max(gap);
    }
    let trapz = |series: &[f64]| -> f64 {
        let dt = t[1] - t[0];
        let mut acc = 0.5 * (series[0] + series[n - 1]);
        for v in &series[1..n - 1] {
            acc += v;
        }
        acc * dt
    };
    let int_mass = trapz(&int.total_infection);
    let ana_mass = trapz(&ana.total_infection);
    let a_ok = bulk_ok && tail_excess <= 2e-3 && int_mass < ana_mass;

    // (b) Early surge of city-A infection under intervention (incentivized inflow
    // of infected residents toward A): frozen window [0.125, 1.5], margin 1e-3.
    let b_ok = (0..n)
        .filter(|&k| t[k] >= 0.125 && t[k] <= 1.5)
        .all(|k| int.infection_a[k] - ana.infection_a[k] >= 1e-3);

    // (c) Population planning: σ_P = 1.5 halves (at least) the terminal city-A
    // mass deviation relative to σ_P = 0.
    let params = EpidemicParams::<f64>::default();
    let planned = run_experiment(
        &EpidemicParams {
            sigma_p: 1.5,
            ..params.clone()
        },
        &default_sweep(),
        ExperimentMode::Intervention,
        None,
    )
    .expect("planning solve");
    let target = params.initial_mass_a();
    let dev_free = (int.population_a.last().unwrap() - target).abs();
    let dev_planned = (planned.population_a.last().unwrap() - target).abs();
    let c_ok = dev_planned < 0.5 * dev_free;

    // (d) Infected-in-B effort is higher under intervention early on: frozen
    // window [0, 1.0], margin 0.01.
    let bi = fieldgame::epidemic::STATE_BI;
    let d_ok = (0..n)
        .filter(|&k| t[k] <= 1.0)
        .all(|k| int.efforts[k][bi] - ana.efforts[k][bi] >= 0.01);

    let passed = a_ok && b_ok && c_ok && d_ok;
    report(
        8,
        passed,
        &format!(
            "(a) bulk dominance {} (tail excess {tail_excess:.1e} ≤ 2e-3, infected mass \
             {int_mass:.5} < {ana_mass:.5}); (b) city-A surge {}; (c) terminal deviation \
             {dev_planned:.3e} < ½·{dev_free:.3e} {}; (d) BI-effort dominance {}",
            if a_ok { "holds" } else { "FAILS" },
            if b_ok { "holds" } else { "FAILS" },
            if c_ok { "holds" } else { "FAILS" },
            if d_ok { "holds" } else { "FAILS" }
        ),
    );
}

#[test]
fn criterion_9_convergence_order() {
    // Observed RK4 order on smooth random generators: coarse/fine errors against a
    // much finer reference, three independent instances.
    let mut worst_order = f64::INFINITY;
    for seed in [11, 22, 33] {
        let model = oracles::random_instance(seed);
        let schedule = |tt: f64| {
            let mid = 0.5 * (model.alpha_min + model.alpha_max);
            let amp = 0.3 * (model.alpha_max - model.alpha_min);
            vec![
                mid + amp * (2.0 * tt).sin(),
                mid - amp * (3.0 * tt).cos() * 0.5,
                mid + amp * (tt * tt).sin() * 0.4,
                mid,
            ]
        };
        let rate = |tt: f64, pi: &[f64]| model.rate_matrix(tt, pi, &schedule(tt));
        let p0 = ProbabilityVector::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let err = |n: usize, reference: &[f64]| {
            let grid = TimeGrid::new(0.0, 1.0, n).unwrap();
            let flow = integrate_kolmogorov(rate, &p0, grid).unwrap();
            let last = flow.probabilities.last().unwrap();
            last.iter()
                .zip(reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let reference_grid = TimeGrid::new(0.0, 1.0, 2048).unwrap();
        let reference = integrate_kolmogorov(rate, &p0, reference_grid)
            .unwrap()
            .probabilities
            .last()
            .unwrap()
            .as_slice()
            .to_vec();
        let order = (err(64, &reference) / err(128, &reference)).log2();
        worst_order = worst_order.min(order);
    }

    // Grid-doubling stability of the epidemic objective.
    let (base, _) = intervention();
    let fine = run_experiment(
        &EpidemicParams::default(),
        &SweepParams {
            n_steps: 4000,
            ..default_sweep()
        },
        ExperimentMode::Intervention,
        None,
    )
    .expect("doubled-grid solve");
    let rel = (fine.objective - base.objective).abs() / base.objective.abs().max(1.0);

    let passed = worst_order >= 3.5 && rel <= 1e-5;
    report(
        9,
        passed,
        &format!(
            "observed RK4 order ≥ {worst_order:.2} (≥ 3.5) on smooth random generators; \
             objective shift under grid doubling {rel:.2e} ≤ 1e-5"
        ),
    );
}

// ─── Oracle self-checks (not criteria) ───────────────────────────────────────────────

#[test]
fn toy_oracle_agrees_with_the_production_integrator() {
    // The closed-form segment propagation must match RK4 on the same control.
    // Each segment is integrated separately so the control handed to RK4 really is
    // constant (feeding a control with jumps *at* stage times into one long grid
    // poisons the final stage of every boundary step). The instance is
    // time-invariant, so restarting each segment at t = 0 changes nothing.
    let (model, p0) = oracles::toy_model();
    let controls = [(2.5, 0.0), (0.0, 5.0), (1.25, 1.25), (10.0, 0.0)];
    let exact = oracles::toy_sequence_objective(&controls, p0[0]);

    let seg_len = oracles::TOY_HORIZON / 4.0;
    let mut state = p0;
    let mut quad = 0.0;
    for (a0, a1) in controls {
        let alpha = [a0, a1];
        let grid = TimeGrid::new(0.0, seg_len, 20_000).unwrap();
        let flow = integrate_kolmogorov(
            |_, pi| model.rate_matrix(0.0, pi, &alpha),
            &state,
            grid,
        )
        .unwrap();
        let cost = |idx: usize| {
            let pi = &flow.probabilities[idx];
            pi[1] + 0.5 * (a0 * a0 * pi[0] + a1 * a1 * pi[1])
        };
        for k in 0..grid.n_steps() {
            quad += 0.5 * (cost(k) + cost(k + 1)) * grid.dt();
        }
        state = flow.probabilities.last().unwrap().clone();
    }
    assert!(
        (quad - exact).abs() <= 1e-8,
        "closed form {exact} vs quadrature {quad}"
    );
}

#[test]
fn exhaustive_minimum_is_no_worse_than_obvious_candidates() {
    let (_, p0) = oracles::toy_model();
    let brute = oracles::toy_exhaustive_minimum(9, 4, p0[0]);
    for flat in [0.0, 1.25, 2.5, 5.0, 10.0] {
        let cost = oracles::toy_sequence_objective(&[(flat, 0.0); 4], p0[0]);
        assert!(brute <= cost + 1e-12, "flat {flat}: {cost} < {brute}");
    }
}
