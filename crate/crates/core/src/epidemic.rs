//! The two-city epidemic-containment scenario.
//!
//! Four states track where an agent lives and whether they are infected:
//! `0 = AI` (city A, infected), `1 = AH` (city A, healthy), `2 = BI`, `3 = BH`.
//! Health transitions happen within a city at rates driven by the city's own
//! composition — recovery speeds up as the healthy share `s` grows (care capacity),
//! infection scales with the infected share `r` — while migration between cities is
//! pure effort: moving intensity `ν·α`, so nobody changes health status mid-move.
//! Agents pay a congestion-style flow cost `φ(r)` for the infection level of the city
//! they are in, the authority pays `exp(σ_A π_AI + σ_B π_BI)` for prevalence and
//! optionally `σ_P (π_A(T) − π_A(0))²` for unbalancing the cities.
//!
//! [`build_epidemic_model`] assembles this as a general model value with analytic
//! population-gradients; [`hand_adjoint_rhs`] writes the resulting adjoint
//! equations in closed form (interior form, shares summing to one), and
//! [`hand_adjoint_check`] confirms the two against a finite-difference probe of
//! the Hamiltonian itself. [`run_experiment`] packages the two endgames — intervention
//! (the authority designs incentives) and anarchy (agents fend for themselves) — into
//! the report series the comparison plots are built from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anarchy::{solve_anarchy, AnarchySolution};
use crate::contract::{verify_contract, ContractSpec, ContractVerification};
use crate::error::{Error, Result};
use crate::lq::{
    clamp_b, principal_hamiltonian, principal_minimizer, LqModelSpec, UtilitySpec,
};
use crate::markov::ProbabilityVector;
use crate::scalar::Scalar;
use crate::solver::{solve_pmp, FBODESolution, SweepParams};

/// State indices, fixed by convention everywhere in this module.
pub const STATE_AI: usize = 0;
/// City A, healthy.
pub const STATE_AH: usize = 1;
/// City B, infected.
pub const STATE_BI: usize = 2;
/// City B, healthy.
pub const STATE_BH: usize = 3;

/// Scenario parameters. The health-rate maps are linear, `θ(q) = coeff · q`, as are
/// the city cost rates `φ(q) = coeff · q`; only the coefficients are configurable.
///
/// The cost/rate coefficient defaults are the reference scenario this crate's
/// experiments and tests are calibrated on; the migration efficacies, effort floor,
/// initial distribution, and horizon have no canonical values at all. Everything is
/// a plain field, so any run can override any of it.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicParams<S: Scalar> {
    /// Recovery responsiveness in city A: rate `AI → AH` is `θ_A⁺ · s_A`.
    pub theta_a_plus: S,
    /// Infection responsiveness in city A: rate `AH → AI` is `θ_A⁻ · r_A`.
    pub theta_a_minus: S,
    /// Recovery responsiveness in city B.
    pub theta_b_plus: S,
    /// Infection responsiveness in city B.
    pub theta_b_minus: S,
    /// City A flow-cost coefficient: residents pay `φ_A · r_A` per unit time.
    pub phi_a: S,
    /// City B flow-cost coefficient.
    pub phi_b: S,
    /// Migration efficacy for the infected (rate per unit effort).
    pub nu_i: S,
    /// Migration efficacy for the healthy.
    pub nu_h: S,
    /// Effort cost coefficient for the infected.
    pub gamma_i: S,
    /// Effort cost coefficient for the healthy.
    pub gamma_h: S,
    /// Effort bounds.
    pub alpha_lo: S,
    /// Maximum effort.
    pub alpha_hi: S,
    /// Authority's exponential prevalence weights for `π_AI` and `π_BI`.
    pub sigma_a: S,
    /// Weight on `π_BI` in the authority's running cost.
    pub sigma_b: S,
    /// Population-planning weight on the terminal city-A mass deviation.
    pub sigma_p: S,
    /// Initial distribution over `(AI, AH, BI, BH)`.
    pub p0: ProbabilityVector<S>,
    /// Horizon.
    pub horizon: S,
    /// Floor applied to city-mass denominators so the share ratios stay finite even
    /// if a city empties; inert on interior flows.
    pub eps_floor: S,
}

impl<S: Scalar> Default for EpidemicParams<S> {
    fn default() -> Self {
        Self {
            theta_a_plus: S::lit(0.4),
            theta_a_minus: S::lit(0.1),
            theta_b_plus: S::lit(0.2),
            theta_b_minus: S::lit(0.2),
            phi_a: S::lit(1.0),
            phi_b: S::lit(2.0),
            nu_i: S::lit(1.0),
            nu_h: S::lit(1.0),
            gamma_i: S::lit(2.0),
            gamma_h: S::lit(0.5),
            alpha_lo: S::zero(),
            alpha_hi: S::lit(10.0),
            sigma_a: S::lit(1.0),
            sigma_b: S::lit(1.0),
            sigma_p: S::zero(),
            p0: ProbabilityVector::new(vec![
                S::lit(0.05),
                S::lit(0.45),
                S::lit(0.25),
                S::lit(0.25),
            ])
            .expect("default distribution is valid"),
            horizon: S::lit(5.0),
            eps_floor: S::lit(1e-12),
        }
    }
}

impl<S: Scalar> EpidemicParams<S> {
    /// Structural validation: nonnegative coefficients, strictly positive effort
    /// costs and migration efficacies, a four-state initial distribution, a positive
    /// horizon, and a positive denominator floor.
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("theta_a_plus", self.theta_a_plus),
            ("theta_a_minus", self.theta_a_minus),
            ("theta_b_plus", self.theta_b_plus),
            ("theta_b_minus", self.theta_b_minus),
            ("phi_a", self.phi_a),
            ("phi_b", self.phi_b),
            ("sigma_a", self.sigma_a),
            ("sigma_b", self.sigma_b),
            ("sigma_p", self.sigma_p),
        ];
        for (name, v) in nonneg {
            if !(v >= S::zero()) {
                return Err(Error::InvalidModel(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        let positive = [
            ("nu_i", self.nu_i),
            ("nu_h", self.nu_h),
            ("gamma_i", self.gamma_i),
            ("gamma_h", self.gamma_h),
            ("horizon", self.horizon),
            ("eps_floor", self.eps_floor),
        ];
        for (name, v) in positive {
            if !(v > S::zero()) {
                return Err(Error::InvalidModel(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.alpha_lo < self.alpha_hi) {
            return Err(Error::InvalidModel(format!(
                "empty effort interval [{}, {}]",
                self.alpha_lo, self.alpha_hi
            )));
        }
        if self.p0.len() != 4 {
            return Err(Error::Dimension {
                what: "epidemic initial distribution".into(),
                expected: 4,
                got: self.p0.len(),
            });
        }
        Ok(())
    }

    /// The planning target: city A's initial population mass.
    #[must_use]
    pub fn initial_mass_a(&self) -> S {
        self.p0[STATE_AI] + self.p0[STATE_AH]
    }
}

/// City shares at a population vector: `(r_A, s_A, r_B, s_B)` with floored
/// denominators (`r` infected share, `s` healthy share).
fn shares<S: Scalar>(pi: &[S], floor: S) -> (S, S, S, S) {
    let da = (pi[STATE_AI] + pi[STATE_AH]).max(floor);
    let db = (pi[STATE_BI] + pi[STATE_BH]).max(floor);
    (
        pi[STATE_AI] / da,
        pi[STATE_AH] / da,
        pi[STATE_BI] / db,
        pi[STATE_BH] / db,
    )
}

/// Assembles the four-state scenario as a general model value.
///
/// The baseline matrix carries the health transitions (share-driven, within-city)
/// plus the floor-effort migration rates `ν·α_lo`; the effort channel `λ` carries
/// exactly the two migration pairs, so total migration intensity is `ν·α` and the
/// health-mixing entries (`AI↔BH`, `AH↔BI`) are structurally zero. Population
/// gradients of the share ratios are supplied analytically.
pub fn build_epidemic_model<S: Scalar>(params: &EpidemicParams<S>) -> Result<LqModelSpec<S>> {
    params.validate()?;
    let p = params.clone();
    let floor = p.eps_floor;
    let target_a = p.initial_mass_a();

    let mut lambda = vec![S::zero(); 16];
    lambda[STATE_AI * 4 + STATE_BI] = p.nu_i;
    lambda[STATE_BI * 4 + STATE_AI] = p.nu_i;
    lambda[STATE_AH * 4 + STATE_BH] = p.nu_h;
    lambda[STATE_BH * 4 + STATE_AH] = p.nu_h;

    let base = {
        let p = p.clone();
        move |_t: S, i: usize, j: usize, pi: &[S]| -> S {
            let (ra, sa, rb, sb) = shares(pi, floor);
            match (i, j) {
                (STATE_AI, STATE_AH) => p.theta_a_plus * sa,
                (STATE_AH, STATE_AI) => p.theta_a_minus * ra,
                (STATE_BI, STATE_BH) => p.theta_b_plus * sb,
                (STATE_BH, STATE_BI) => p.theta_b_minus * rb,
                (STATE_AI, STATE_BI) | (STATE_BI, STATE_AI) => p.nu_i * p.alpha_lo,
                (STATE_AH, STATE_BH) | (STATE_BH, STATE_AH) => p.nu_h * p.alpha_lo,
                _ => S::zero(),
            }
        }
    };

    // ∂/∂π of the share ratios, floored consistently with the values: with
    // d = max(π_I + π_H, floor),  ∂r/∂π_I = π_H/d², ∂r/∂π_H = −π_I/d², and s mirrors.
    let base_grad = {
        let p = p.clone();
        move |_t: S, i: usize, j: usize, pi: &[S], out: &mut [S]| {
            out.fill(S::zero());
            let da = (pi[STATE_AI] + pi[STATE_AH]).max(floor);
            let db = (pi[STATE_BI] + pi[STATE_BH]).max(floor);
            match (i, j) {
                (STATE_AI, STATE_AH) => {
                    let c = p.theta_a_plus / (da * da);
                    out[STATE_AI] = -c * pi[STATE_AH];
                    out[STATE_AH] = c * pi[STATE_AI];
                }
                (STATE_AH, STATE_AI) => {
                    let c = p.theta_a_minus / (da * da);
                    out[STATE_AI] = c * pi[STATE_AH];
                    out[STATE_AH] = -c * pi[STATE_AI];
                }
                (STATE_BI, STATE_BH) => {
                    let c = p.theta_b_plus / (db * db);
                    out[STATE_BI] = -c * pi[STATE_BH];
                    out[STATE_BH] = c * pi[STATE_BI];
                }
                (STATE_BH, STATE_BI) => {
                    let c = p.theta_b_minus / (db * db);
                    out[STATE_BI] = c * pi[STATE_BH];
                    out[STATE_BH] = -c * pi[STATE_BI];
                }
                _ => {}
            }
        }
    };

    let cost = {
        let p = p.clone();
        move |_t: S, i: usize, pi: &[S]| -> S {
            let (ra, _, rb, _) = shares(pi, floor);
            if i < 2 {
                p.phi_a * ra
            } else {
                p.phi_b * rb
            }
        }
    };

    let cost_grad = {
        let p = p.clone();
        move |_t: S, i: usize, pi: &[S], out: &mut [S]| {
            out.fill(S::zero());
            if i < 2 {
                let da = (pi[STATE_AI] + pi[STATE_AH]).max(floor);
                let c = p.phi_a / (da * da);
                out[STATE_AI] = c * pi[STATE_AH];
                out[STATE_AH] = -c * pi[STATE_AI];
            } else {
                let db = (pi[STATE_BI] + pi[STATE_BH]).max(floor);
                let c = p.phi_b / (db * db);
                out[STATE_BI] = c * pi[STATE_BH];
                out[STATE_BH] = -c * pi[STATE_BI];
            }
        }
    };

    let (sa, sb, sp) = (p.sigma_a, p.sigma_b, p.sigma_p);
    Ok(LqModelSpec {
        m: 4,
        lambda,
        gamma: vec![p.gamma_i, p.gamma_h, p.gamma_i, p.gamma_h],
        alpha_min: p.alpha_lo,
        alpha_max: p.alpha_hi,
        base_rate: Box::new(base),
        base_rate_grad_pi: Box::new(base_grad),
        agent_cost: Box::new(cost),
        agent_cost_grad_pi: Box::new(cost_grad),
        principal_cost: Box::new(move |_t, pi: &[S]| {
            (sa * pi[STATE_AI] + sb * pi[STATE_BI]).exp()
        }),
        principal_cost_grad_pi: Box::new(move |_t, pi: &[S], out: &mut [S]| {
            let c0 = (sa * pi[STATE_AI] + sb * pi[STATE_BI]).exp();
            out[STATE_AI] = sa * c0;
            out[STATE_AH] = S::zero();
            out[STATE_BI] = sb * c0;
            out[STATE_BH] = S::zero();
        }),
        terminal_cost: Box::new(move |pi: &[S]| {
            let dev = pi[STATE_AI] + pi[STATE_AH] - target_a;
            sp * dev * dev
        }),
        terminal_cost_grad: Box::new(move |pi: &[S], out: &mut [S]| {
            let g = S::lit(2.0) * sp * (pi[STATE_AI] + pi[STATE_AH] - target_a);
            out[STATE_AI] = g;
            out[STATE_AH] = g;
            out[STATE_BI] = S::zero();
            out[STATE_BH] = S::zero();
        }),
    })
}

/// The scenario's optimal efforts in closed form, directly from the adjoint vector:
/// migration is the only controlled channel, so each state's effort depends on a
/// single adjoint spread.
#[must_use]
pub fn closed_form_effort<S: Scalar>(params: &EpidemicParams<S>, y: &[S]) -> [S; 4] {
    let b = |z: S| clamp_b(z, params.alpha_lo, params.alpha_hi);
    [
        b(params.nu_i * (y[STATE_AI] - y[STATE_BI]) / params.gamma_i),
        b(params.nu_h * (y[STATE_AH] - y[STATE_BH]) / params.gamma_h),
        b(params.nu_i * (y[STATE_BI] - y[STATE_AI]) / params.gamma_i),
        b(params.nu_h * (y[STATE_BH] - y[STATE_AH]) / params.gamma_h),
    ]
}

/// The adjoint equations `ẏ = −∂_π H̃` written out by hand for this scenario, in
/// their interior form (city shares summing to one; the denominator floor inert).
///
/// With `Δ_A = θ_A⁺ − θ_A⁻`, `Δ_B = θ_B⁺ − θ_B⁻`, `c₀ = exp(σ_A π_AI + σ_B π_BI)`,
/// and the closed-form efforts `â(y)`:
///
/// ```text
/// ẏ_AI = −[ (y_AH − y_AI) Δ_A s_A² + (y_BI − y_AI) ν_I â_AI + σ_A c₀ + φ_A + ½γ_I â_AI² ]
/// ẏ_AH = −[ (y_AH − y_AI) Δ_A r_A² + (y_BH − y_AH) ν_H â_AH            + ½γ_H â_AH² ]
/// ẏ_BI = −[ (y_BH − y_BI) Δ_B s_B² + (y_AI − y_BI) ν_I â_BI + σ_B c₀ + φ_B + ½γ_I â_BI² ]
/// ẏ_BH = −[ (y_BH − y_BI) Δ_B r_B² + (y_AH − y_BH) ν_H â_BH            + ½γ_H â_BH² ]
/// ```
///
/// The share-squared factors bundle the direct transition term with the population
/// sensitivity of the health rates; the city cost terms collapse to the bare `φ` for
/// infected states and cancel entirely for healthy ones (residents' marginal effect
/// on their own city's cost exactly offsets the cost they pay).
#[must_use]
pub fn hand_adjoint_rhs<S: Scalar>(
    params: &EpidemicParams<S>,
    pi: &[S],
    y: &[S],
) -> [S; 4] {
    let (ra, sa, rb, sb) = shares(pi, params.eps_floor);
    let alpha = closed_form_effort(params, y);
    let c0 = (params.sigma_a * pi[STATE_AI] + params.sigma_b * pi[STATE_BI]).exp();
    let half = S::lit(0.5);
    let delta_a = params.theta_a_plus - params.theta_a_minus;
    let delta_b = params.theta_b_plus - params.theta_b_minus;
    let spread_a = y[STATE_AH] - y[STATE_AI];
    let spread_b = y[STATE_BH] - y[STATE_BI];

    [
        -(spread_a * delta_a * sa * sa
            + (y[STATE_BI] - y[STATE_AI]) * params.nu_i * alpha[STATE_AI]
            + params.sigma_a * c0
            + params.phi_a
            + half * params.gamma_i * alpha[STATE_AI] * alpha[STATE_AI]),
        -(spread_a * delta_a * ra * ra
            + (y[STATE_BH] - y[STATE_AH]) * params.nu_h * alpha[STATE_AH]
            + half * params.gamma_h * alpha[STATE_AH] * alpha[STATE_AH]),
        -(spread_b * delta_b * sb * sb
            + (y[STATE_AI] - y[STATE_BI]) * params.nu_i * alpha[STATE_BI]
            + params.sigma_b * c0
            + params.phi_b
            + half * params.gamma_i * alpha[STATE_BI] * alpha[STATE_BI]),
        -(spread_b * delta_b * rb * rb
            + (y[STATE_AH] - y[STATE_BH]) * params.nu_h * alpha[STATE_BH]
            + half * params.gamma_h * alpha[STATE_BH] * alpha[STATE_BH]),
    ]
}

/// Compares the hand-written adjoint right-hand sides against a central
/// finite-difference gradient of the Hamiltonian assembled by
/// [`build_epidemic_model`], at `n_samples` random interior points (fixed internal
/// seed, so runs are reproducible). Returns the worst absolute component gap.
pub fn hand_adjoint_check<S: Scalar>(
    params: &EpidemicParams<S>,
    n_samples: usize,
) -> Result<S> {
    let model = build_epidemic_model(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ad01);
    let step = S::lit(1e-6);
    let mut worst = S::zero();
    let mut alpha = vec![S::zero(); 4];
    let mut pi = vec![S::zero(); 4];
    let mut y = vec![S::zero(); 4];

    for _ in 0..n_samples {
        let t = S::lit(rng.random::<f64>()) * params.horizon;
        // Interior population: a normalized positive sample blended with uniform
        // keeps every component ≥ 0.1, far from the denominator floor.
        let raw: [f64; 4] = core::array::from_fn(|_| rng.random::<f64>() + 0.1);
        let total: f64 = raw.iter().sum();
        for (p, r) in pi.iter_mut().zip(raw) {
            *p = S::lit(0.6 * r / total + 0.1);
        }
        for v in y.iter_mut() {
            *v = S::lit(rng.random::<f64>() * 4.0 - 2.0);
        }

        principal_minimizer(&model, &y, &mut alpha);
        let rhs = hand_adjoint_rhs(params, &pi, &y);
        for k in 0..4 {
            let mut hi = pi.clone();
            let mut lo = pi.clone();
            hi[k] += step;
            lo[k] -= step;
            let fd = (principal_hamiltonian(&model, t, &y, &hi, &alpha)
                - principal_hamiltonian(&model, t, &y, &lo, &alpha))
                / (S::lit(2.0) * step);
            let gap = (rhs[k] + fd).abs();
            if gap > worst {
                worst = gap;
            }
        }
    }
    Ok(worst)
}

// ─── Experiments ─────────────────────────────────────────────────────────────────────

/// Which endgame to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentMode {
    /// The authority designs incentives (planned equilibrium).
    Intervention,
    /// No contract: agents best-respond to the crowd.
    Anarchy,
}

/// The underlying solve, preserved in full for downstream export.
#[derive(Debug, Clone)]
pub enum ExperimentSolution<S: Scalar> {
    /// Planned equilibrium.
    Intervention(FBODESolution<S>),
    /// Selfish equilibrium.
    Anarchy(AnarchySolution<S>),
}

/// Report series for one experiment run: everything the comparison figures need,
/// sampled at the solver's grid nodes.
#[derive(Debug, Clone)]
pub struct ExperimentResult<S: Scalar> {
    /// Which endgame produced this.
    pub mode: ExperimentMode,
    /// Node times.
    pub times: Vec<S>,
    /// Total infected mass `π_AI + π_BI`.
    pub total_infection: Vec<S>,
    /// City A infected share `π_AI / (π_AI + π_AH)`.
    pub infection_a: Vec<S>,
    /// City B infected share.
    pub infection_b: Vec<S>,
    /// City A population mass `π_AI + π_AH`.
    pub population_a: Vec<S>,
    /// Per-state efforts at each node.
    pub efforts: Vec<Vec<S>>,
    /// Intervention: the planner's objective; anarchy: the population-average cost.
    pub objective: S,
    /// Solver warnings plus any notes added here.
    pub warnings: Vec<String>,
    /// Monte-Carlo contract audit, when requested (intervention only).
    pub audit: Option<ContractVerification<S>>,
    /// The full solve.
    pub solution: ExperimentSolution<S>,
}

/// Runs one epidemic experiment end to end and derives the report series.
///
/// `mc = Some((n_paths, seed))` additionally audits the intervention solution's
/// contract by simulation with a zero-payment contract (`κ = 0`, `r̂ = 0`; the audit
/// identities hold for any terms, so the zero contract is the cleanest probe). The
/// block is skipped with a warning in anarchy mode, where there is no contract.
pub fn run_experiment<S: Scalar>(
    params: &EpidemicParams<S>,
    sweep: &SweepParams<S>,
    mode: ExperimentMode,
    mc: Option<(usize, u64)>,
) -> Result<ExperimentResult<S>> {
    let model = build_epidemic_model(params)?;
    let floor = params.eps_floor;

    let (times, pi, efforts, objective, mut warnings, audit, solution) = match mode {
        ExperimentMode::Intervention => {
            let sol = solve_pmp(&model, &params.p0, params.horizon, sweep)?;
            let audit = match mc {
                Some((n_paths, seed)) => {
                    let contract = ContractSpec {
                        kappa: S::zero(),
                        payment_rate: S::zero(),
                        utility: UtilitySpec::Identity,
                    };
                    Some(verify_contract(
                        &model, &sol.grid, &sol.pi, &sol.control, &contract, n_paths, seed,
                    )?)
                }
                None => None,
            };
            let times = (0..sol.grid.n_nodes()).map(|k| sol.grid.node(k)).collect();
            let pi: Vec<Vec<S>> = sol.pi.iter().map(|p| p.as_slice().to_vec()).collect();
            (
                times,
                pi,
                sol.control.clone(),
                sol.objective,
                sol.warnings.clone(),
                audit,
                ExperimentSolution::Intervention(sol),
            )
        }
        ExperimentMode::Anarchy => {
            let sol = solve_anarchy(&model, &params.p0, params.horizon, sweep)?;
            let mut warnings = sol.warnings.clone();
            if mc.is_some() {
                warnings.push(
                    "monte-carlo audit skipped: anarchy mode has no contract to verify".into(),
                );
            }
            let times = (0..sol.grid.n_nodes()).map(|k| sol.grid.node(k)).collect();
            let pi: Vec<Vec<S>> = sol.pi.iter().map(|p| p.as_slice().to_vec()).collect();
            (
                times,
                pi,
                sol.control.clone(),
                sol.average_cost,
                warnings,
                None,
                ExperimentSolution::Anarchy(sol),
            )
        }
    };

    let mut total_infection = Vec::with_capacity(pi.len());
    let mut infection_a = Vec::with_capacity(pi.len());
    let mut infection_b = Vec::with_capacity(pi.len());
    let mut population_a = Vec::with_capacity(pi.len());
    for p in &pi {
        total_infection.push(p[STATE_AI] + p[STATE_BI]);
        infection_a.push(p[STATE_AI] / (p[STATE_AI] + p[STATE_AH]).max(floor));
        infection_b.push(p[STATE_BI] / (p[STATE_BI] + p[STATE_BH]).max(floor));
        population_a.push(p[STATE_AI] + p[STATE_AH]);
    }
    warnings.dedup();

    Ok(ExperimentResult {
        mode,
        times,
        total_infection,
        infection_a,
        infection_b,
        population_a,
        efforts,
        objective,
        warnings,
        audit,
        solution,
    })
}
