//! Turning a solved flow into an implementable contract, and checking it on paths.
//!
//! The solved control `â(t)` is a recommendation; agents follow it only if the payment
//! stream makes deviation unprofitable. In the linear-quadratic family the right
//! exposure is startlingly simple: while in state `j`, the contract credits the agent
//!
//! ```text
//! w_j(t) = − γ_j â_j(t) / Σ_{l≠j} λ_{j,l}
//! ```
//!
//! (in cost units, so the credit is negative exactly when effort is being demanded)
//! for a jump to *any* other state. Facing that exposure vector, the agent's
//! best-response formula returns exactly `â_j(t)` — the round trip that pins both the
//! sign and the scale, and that [`build_z_table`] documents in its tests.
//!
//! The rest of the transfer is bookkeeping: a flat payment rate `r̂` during the window
//! and a terminal payment assembled pathwise by [`terminal_payment`],
//!
//! ```text
//! ξ̂ = −y₀(X₀) + ∫₀ᵀ [ c(t, X_t, â, π) − u(r̂) + (exit rate)·w_{X_t}(t) ] dt
//!      − Σ_{jumps} w_{X_{t−}}(t),
//! ```
//!
//! the integrated-compensator-minus-jump-sum structure making the agent's realized
//! cost equal `y₀(X₀)` plus a mean-zero martingale. Two consequences hold for *any*
//! exposure table, and [`verify_contract`] tests them by honest Monte Carlo:
//!
//! * the agent's average realized cost is the reservation level `κ` (with
//!   `y₀ = (κ, …, κ)` from [`choose_y0`]), and
//! * the principal's average realized cost is `W̃ + T (r̂ − u(r̂)) − κ`, the solved
//!   objective plus payment leakage minus what the agent's participation is worth.
//!
//! Everything the simulation and the payment formula share — interpolated control,
//! rates, running costs — flows through one [`MarkovPolicy`] value, so the two sides
//! can never drift apart by using slightly different closures.

use crate::error::Result;
use crate::lq::{LqModelSpec, UtilitySpec};
use crate::markov::{
    empirical_occupancy, simulate_ctmc_paths, CTMCPath, ProbabilityVector, RateMatrix, TimeGrid,
};
use crate::scalar::Scalar;
use crate::solver::evaluate_objective;

// ─── Contract terms ──────────────────────────────────────────────────────────────────

/// The offered terms: a reservation level, a flat payment rate, and how agents value
/// payment flows.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractSpec<S: Scalar> {
    /// The agent's reservation cost `κ`: the contract is tuned so an agent's expected
    /// realized cost is exactly this.
    pub kappa: S,
    /// Flat payment rate `r̂ ≥ 0` paid during the whole window.
    pub payment_rate: S,
    /// How agents value payment flows.
    pub utility: UtilitySpec<S>,
}

impl<S: Scalar> ContractSpec<S> {
    /// The utility flow `u(r̂)` the agent enjoys from the flat payment.
    #[must_use]
    pub fn payment_utility(&self) -> S {
        self.utility.apply(self.payment_rate)
    }
}

/// The initial cost-to-go vector the contract promises: the constant vector
/// `(κ, …, κ)`, so the reservation level binds whatever state an agent starts in.
/// Any vector whose `p°`-average is `κ` balances in expectation; the constant one
/// balances state by state.
#[must_use]
pub fn choose_y0<S: Scalar>(kappa: S, m: usize) -> Vec<S> {
    vec![kappa; m]
}

// ─── Policy closure ──────────────────────────────────────────────────────────────────

/// One agent's view of a solved flow: interpolated control, rates, and running costs,
/// shared verbatim between the path simulator and the payment formulas.
pub struct MarkovPolicy<'a, S: Scalar> {
    model: &'a LqModelSpec<S>,
    grid: TimeGrid<S>,
    pi_nodes: &'a [ProbabilityVector<S>],
    control_nodes: &'a [Vec<S>],
}

impl<'a, S: Scalar> MarkovPolicy<'a, S> {
    /// Bundles a flow; the node arrays must live on `grid`.
    #[must_use]
    pub fn new(
        model: &'a LqModelSpec<S>,
        grid: TimeGrid<S>,
        pi_nodes: &'a [ProbabilityVector<S>],
        control_nodes: &'a [Vec<S>],
    ) -> Self {
        debug_assert_eq!(pi_nodes.len(), grid.n_nodes());
        debug_assert_eq!(control_nodes.len(), grid.n_nodes());
        Self {
            model,
            grid,
            pi_nodes,
            control_nodes,
        }
    }

    /// The grid the flow lives on.
    #[must_use]
    pub fn grid(&self) -> &TimeGrid<S> {
        &self.grid
    }

    /// Interpolated population distribution.
    pub fn pi_at(&self, t: S, out: &mut [S]) {
        crate::markov::interp_nodes(&self.grid, self.pi_nodes, t, out);
    }

    /// Interpolated recommended control.
    pub fn control_at(&self, t: S, out: &mut [S]) {
        crate::markov::interp_nodes(&self.grid, self.control_nodes, t, out);
    }

    /// The generator one agent faces at time `t` under the recommendation.
    #[must_use]
    pub fn rate_matrix_at(&self, t: S) -> RateMatrix<S> {
        let m = self.model.m;
        let mut pi = vec![S::zero(); m];
        let mut alpha = vec![S::zero(); m];
        self.pi_at(t, &mut pi);
        self.control_at(t, &mut alpha);
        self.model.rate_matrix(t, &pi, &alpha)
    }

    /// The agent's running cost in state `i` at time `t` under the recommendation:
    /// `c₁(t, i, π(t)) + (γᵢ/2) âᵢ(t)²`.
    #[must_use]
    pub fn running_cost_at(&self, t: S, i: usize) -> S {
        let m = self.model.m;
        let mut pi = vec![S::zero(); m];
        let mut alpha = vec![S::zero(); m];
        self.pi_at(t, &mut pi);
        self.control_at(t, &mut alpha);
        (self.model.agent_cost)(t, i, &pi)
            + self.model.gamma[i] / S::lit(2.0) * alpha[i] * alpha[i]
    }
}

// ─── Exposure table ──────────────────────────────────────────────────────────────────

/// The contract's jump-exposure table: for each grid node and each state `j`, the
/// credit `w_j` booked on a jump out of `j` (the same for every destination; the
/// own-state component of the exposure vector is zero).
#[derive(Debug, Clone, PartialEq)]
pub struct ZTable<S: Scalar> {
    /// Grid the table is sampled on.
    pub grid: TimeGrid<S>,
    /// `values[k][j]`: off-state exposure of state `j` at node `k`.
    pub values: Vec<Vec<S>>,
}

impl<S: Scalar> ZTable<S> {
    /// Linear interpolation of `w_j` at time `t`.
    #[must_use]
    pub fn offstate_at(&self, t: S, j: usize) -> S {
        let dt = self.grid.dt();
        let pos = (t - self.grid.t0()) / dt;
        let k = pos
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(self.grid.n_steps().saturating_sub(1));
        let theta = ((t - self.grid.node(k)) / dt).max(S::zero()).min(S::one());
        let (a, b) = (self.values[k][j], self.values[k + 1][j]);
        a + (b - a) * theta
    }

    /// The full exposure vector seen from state `j`: `w_j` in every other component,
    /// zero at `j` itself.
    pub fn vector_at(&self, t: S, j: usize, out: &mut [S]) {
        let w = self.offstate_at(t, j);
        for (i, o) in out.iter_mut().enumerate() {
            *o = if i == j { S::zero() } else { w };
        }
    }

    /// The credit booked for a `from → to` jump at time `t`.
    #[must_use]
    pub fn increment(&self, t: S, from: usize, to: usize) -> S {
        if from == to {
            S::zero()
        } else {
            self.offstate_at(t, from)
        }
    }
}

/// Builds the exposure table implementing a control node array: at each node and
/// state, `w_j = −γ_j â_j / Σ_{l≠j} λ_{j,l}` (zero where the state has no control
/// authority at all — effort there is costless-zero and needs no incentive).
///
/// The sign and scale are forced by the best-response round trip: an agent in state
/// `j` facing the exposure vector `(w_j, …, 0_j, …, w_j)` computes a λ-weighted spread
/// of `w_j Σλ` and responds with `clamp(−w_j Σλ / γ_j) = â_j`.
#[must_use]
pub fn build_z_table<S: Scalar>(
    model: &LqModelSpec<S>,
    grid: TimeGrid<S>,
    control_nodes: &[Vec<S>],
) -> ZTable<S> {
    debug_assert_eq!(control_nodes.len(), grid.n_nodes());
    let m = model.m;
    let values = control_nodes
        .iter()
        .map(|alpha| {
            (0..m)
                .map(|j| {
                    let mut lambda_sum = S::zero();
                    for l in 0..m {
                        if l != j {
                            lambda_sum += model.lambda(j, l);
                        }
                    }
                    if lambda_sum == S::zero() {
                        S::zero()
                    } else {
                        -model.gamma[j] * alpha[j] / lambda_sum
                    }
                })
                .collect()
        })
        .collect();
    ZTable { grid, values }
}

// ─── Pathwise payments ───────────────────────────────────────────────────────────────

/// The partition the pathwise integrals are taken on: grid nodes plus jump times,
/// sorted and deduplicated. On each cell the occupied state is constant and every
/// interpolated quantity is smooth, so the per-cell trapezoid rule is clean.
fn path_partition<S: Scalar>(grid: &TimeGrid<S>, path: &CTMCPath<S>) -> Vec<S> {
    let mut points: Vec<S> = (0..grid.n_nodes()).map(|k| grid.node(k)).collect();
    points.extend(path.jumps.iter().map(|&(t, _)| t));
    points.sort_by(|a, b| a.partial_cmp(b).expect("times are ordered"));
    points.dedup();
    points
}

/// The terminal payment `ξ̂` owed on one realized path (see the module documentation
/// for the formula and why it works).
#[must_use]
pub fn terminal_payment<S: Scalar>(
    policy: &MarkovPolicy<'_, S>,
    contract: &ContractSpec<S>,
    y0: &[S],
    z: &ZTable<S>,
    path: &CTMCPath<S>,
) -> S {
    let u_flow = contract.payment_utility();
    let integrand = |t: S, state: usize| {
        let q = policy.rate_matrix_at(t);
        policy.running_cost_at(t, state) - u_flow + q.exit_rate(state) * z.offstate_at(t, state)
    };

    let points = path_partition(policy.grid(), path);
    let half = S::lit(0.5);
    let mut integral = S::zero();
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let state = path.state_at(a);
        integral += half * (integrand(a, state) + integrand(b, state)) * (b - a);
    }

    let mut jump_sum = S::zero();
    for &(t, to) in &path.jumps {
        let from = path.state_before(t);
        jump_sum += z.increment(t, from, to);
    }

    -y0[path.initial_state] + integral - jump_sum
}

/// The agent's realized cost on one path under the contract:
/// `∫ (c − u(r̂)) dt − ξ̂`.
#[must_use]
pub fn agent_realized_cost<S: Scalar>(
    policy: &MarkovPolicy<'_, S>,
    contract: &ContractSpec<S>,
    path: &CTMCPath<S>,
    xi: S,
) -> S {
    let u_flow = contract.payment_utility();
    let points = path_partition(policy.grid(), path);
    let half = S::lit(0.5);
    let mut integral = S::zero();
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let state = path.state_at(a);
        let ga = policy.running_cost_at(a, state) - u_flow;
        let gb = policy.running_cost_at(b, state) - u_flow;
        integral += half * (ga + gb) * (b - a);
    }
    integral - xi
}

/// The principal's flow-plus-terminal cost that does not depend on the realized path:
/// `∫ c₀(t, π) dt + C₀(π(T))`, trapezoid on the grid nodes.
fn principal_deterministic_cost<S: Scalar>(
    model: &LqModelSpec<S>,
    grid: &TimeGrid<S>,
    pi_nodes: &[ProbabilityVector<S>],
) -> S {
    let half = S::lit(0.5);
    let n = grid.n_steps();
    let at = |k: usize| (model.principal_cost)(grid.node(k), pi_nodes[k].as_slice());
    let mut integral = half * (at(0) + at(n));
    for k in 1..n {
        integral += at(k);
    }
    integral * grid.dt() + (model.terminal_cost)(pi_nodes[n].as_slice())
}

// ─── Monte-Carlo verification ────────────────────────────────────────────────────────

/// One simulated agent under the contract: the path and the money that changed hands.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractRealization<S: Scalar> {
    /// The sampled trajectory.
    pub path: CTMCPath<S>,
    /// Terminal payment `ξ̂` on this path.
    pub terminal_payment: S,
    /// The agent's realized cost (should average `κ`).
    pub agent_cost: S,
    /// The principal's realized cost (should average `W̃ + T(r̂ − u(r̂)) − κ`).
    pub principal_cost: S,
}

/// The outcome of a Monte-Carlo contract audit.
#[derive(Debug, Clone)]
pub struct ContractVerification<S: Scalar> {
    /// Per-path records, in seed order.
    pub realizations: Vec<ContractRealization<S>>,
    /// Sample mean / standard error / target / pass for the agent identity.
    pub agent_mean: S,
    /// Standard error of the agent-cost sample mean.
    pub agent_se: S,
    /// The reservation level `κ` the mean must hit.
    pub agent_target: S,
    /// `|mean − target| ≤ 3 SE`.
    pub agent_ok: bool,
    /// Sample mean of the principal's realized cost.
    pub principal_mean: S,
    /// Standard error of the principal-cost sample mean.
    pub principal_se: S,
    /// `W̃ + T(r̂ − u(r̂)) − κ`.
    pub principal_target: S,
    /// `|mean − target| ≤ 3 SE`.
    pub principal_ok: bool,
    /// Worst node/state gap between empirical occupancy and the solved flow.
    pub occupancy_gap: S,
    /// `3 √(0.25/n)`: the crude binomial yardstick for that gap (informational — the
    /// gap also carries discretization error, so it does not gate `passed`).
    pub occupancy_bound: S,
    /// Whether the occupancy gap sat within the yardstick.
    pub occupancy_ok: bool,
    /// The audit verdict: both money identities within 3 standard errors.
    pub passed: bool,
}

fn mean_and_se<S: Scalar>(samples: impl Iterator<Item = S> + Clone, n: usize) -> (S, S) {
    let n_s = S::from_usize(n).expect("sample count fits");
    let mean = samples.clone().fold(S::zero(), |a, x| a + x) / n_s;
    let var = samples
        .map(|x| (x - mean) * (x - mean))
        .fold(S::zero(), |a, x| a + x)
        / S::from_usize(n - 1).expect("sample count fits");
    (mean, (var / n_s).sqrt())
}

/// Audits a contract by simulation: `n_paths` agents follow the recommended policy,
/// each gets paid per the contract, and the two money identities are checked against
/// three standard errors. Deterministic in `base_seed` (path `k` uses `base_seed ^ k`).
pub fn verify_contract<S: Scalar>(
    model: &LqModelSpec<S>,
    grid: &TimeGrid<S>,
    pi_nodes: &[ProbabilityVector<S>],
    control_nodes: &[Vec<S>],
    contract: &ContractSpec<S>,
    n_paths: usize,
    base_seed: u64,
) -> Result<ContractVerification<S>> {
    assert!(n_paths >= 2, "need at least two paths for a standard error");
    let policy = MarkovPolicy::new(model, *grid, pi_nodes, control_nodes);
    let z = build_z_table(model, *grid, control_nodes);
    let y0 = choose_y0(contract.kappa, model.m);

    let horizon = grid.t1();
    let paths = simulate_ctmc_paths(
        |t| policy.rate_matrix_at(t),
        &pi_nodes[0],
        horizon,
        n_paths,
        base_seed,
    )?;

    let fixed_cost = principal_deterministic_cost(model, grid, pi_nodes)
        + contract.payment_rate * (grid.t1() - grid.t0());
    let realizations: Vec<ContractRealization<S>> = paths
        .into_iter()
        .map(|path| {
            let xi = terminal_payment(&policy, contract, &y0, &z, &path);
            let agent_cost = agent_realized_cost(&policy, contract, &path, xi);
            let principal_cost = fixed_cost + xi;
            ContractRealization {
                path,
                terminal_payment: xi,
                agent_cost,
                principal_cost,
            }
        })
        .collect();

    let (agent_mean, agent_se) =
        mean_and_se(realizations.iter().map(|r| r.agent_cost), n_paths);
    let (principal_mean, principal_se) =
        mean_and_se(realizations.iter().map(|r| r.principal_cost), n_paths);

    let objective = evaluate_objective(model, grid, pi_nodes, control_nodes);
    let leakage = contract.payment_rate - contract.payment_utility();
    let principal_target = objective + (grid.t1() - grid.t0()) * leakage - contract.kappa;

    let three = S::lit(3.0);
    let agent_ok = (agent_mean - contract.kappa).abs() <= three * agent_se;
    let principal_ok = (principal_mean - principal_target).abs() <= three * principal_se;

    let path_refs: Vec<CTMCPath<S>> = realizations.iter().map(|r| r.path.clone()).collect();
    let occupancy = empirical_occupancy(&path_refs, *grid, model.m)?;
    let mut occupancy_gap = S::zero();
    for (emp, ode) in occupancy.iter().zip(pi_nodes) {
        for i in 0..model.m {
            let gap = (emp[i] - ode[i]).abs();
            if gap > occupancy_gap {
                occupancy_gap = gap;
            }
        }
    }
    let occupancy_bound =
        three * (S::lit(0.25) / S::from_usize(n_paths).expect("count fits")).sqrt();

    Ok(ContractVerification {
        agent_mean,
        agent_se,
        agent_target: contract.kappa,
        agent_ok,
        principal_mean,
        principal_se,
        principal_target,
        principal_ok,
        occupancy_gap,
        occupancy_bound,
        occupancy_ok: occupancy_gap <= occupancy_bound,
        passed: agent_ok && principal_ok,
        realizations,
    })
}
