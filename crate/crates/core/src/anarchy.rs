//! The self-interested population equilibrium — what happens without a contract.
//!
//! Left alone, each agent minimizes only their own cost against the crowd: the value
//! function solves the backward HJB equation
//!
//! ```text
//! v̇ᵢ = −[ Σ_{j≠i} (v_j − vᵢ) q(t, i, j, âᵢ, π) + c₁(t, i, π) + (γᵢ/2) âᵢ² ],
//! v(T) = 0,
//! ```
//!
//! with `âᵢ` the agent's own best response to `v`, while the population distribution
//! runs forward under those efforts. [`solve_anarchy`] finds the consistent pair with
//! the same damped-sweep machinery as the principal's problem (initial guess `v ≡ 0`,
//! damping halved twice on failure — the equilibrium map here is tame enough that the
//! horizon-continuation ladder has never been needed).
//!
//! The certificate for an equilibrium is [`exploitability`]: fix the population flow,
//! price the *prescribed* control by a linear backward pass, price the *best response*
//! by the HJB pass, and average the difference at time zero over `p°`. The gap is
//! nonnegative up to integration error, vanishes exactly at an equilibrium, and grows
//! when the caller hands in a control the agents would rather deviate from — which is
//! precisely how the verification suite uses it.

use crate::error::{Error, Result};
use crate::lq::{agent_best_response, LqModelSpec};
use crate::markov::{integrate_kolmogorov, interp_nodes, ProbabilityVector, TimeGrid};
use crate::scalar::Scalar;
use crate::solver::{rk4_backward, SweepParams};

/// A converged equilibrium: matched distribution/value/control node arrays.
#[derive(Debug, Clone)]
pub struct AnarchySolution<S: Scalar> {
    /// The grid all node arrays live on.
    pub grid: TimeGrid<S>,
    /// Population distribution per node; `pi[0]` is the initial condition, bitwise.
    pub pi: Vec<ProbabilityVector<S>>,
    /// Agent value function per node; the last node is exactly zero.
    pub value: Vec<Vec<S>>,
    /// Equilibrium effort per node; exactly the best response at `value[k]`.
    pub control: Vec<Vec<S>>,
    /// Population-average equilibrium cost `p° · v(0)`.
    pub average_cost: S,
    /// Sweeps spent by the rung that converged.
    pub iterations: usize,
    /// Sup-norm of the last applied value update.
    pub final_update: S,
    /// Worst node gap when the distribution is re-integrated on a 2× grid.
    pub forward_residual: S,
    /// Worst node gap when the value is re-integrated on a 2× grid.
    pub backward_residual: S,
    /// Anything unusual about how convergence was reached.
    pub warnings: Vec<String>,
}

impl<S: Scalar> AnarchySolution<S> {
    /// The larger of the two re-integration residuals.
    #[must_use]
    pub fn residual(&self) -> S {
        self.forward_residual.max(self.backward_residual)
    }

    /// Linear interpolation of the equilibrium control at `t`.
    pub fn interp_control(&self, t: S, out: &mut [S]) {
        interp_nodes(&self.grid, &self.control, t, out);
    }
}

/// The agent-side running cost `c₁(t, i, π) + (γᵢ/2) α²`.
fn agent_running_cost<S: Scalar>(model: &LqModelSpec<S>, t: S, i: usize, alpha: S, pi: &[S]) -> S {
    (model.agent_cost)(t, i, pi) + model.gamma[i] / S::lit(2.0) * alpha * alpha
}

/// HJB right-hand side at one state: transport under `alpha` plus running cost,
/// already negated for the backward integrator.
fn hjb_rhs_component<S: Scalar>(
    model: &LqModelSpec<S>,
    t: S,
    i: usize,
    v: &[S],
    alpha: S,
    pi: &[S],
) -> S {
    let vi = v[i];
    let mut transport = S::zero();
    for (j, &vj) in v.iter().enumerate() {
        if j != i {
            transport += (vj - vi) * model.controlled_rate(t, i, j, alpha, pi);
        }
    }
    -(transport + agent_running_cost(model, t, i, alpha, pi))
}

/// Backward HJB pass against a frozen distribution, effort re-minimized at every
/// stage from the running value state.
fn backward_hjb<S: Scalar>(
    model: &LqModelSpec<S>,
    grid: &TimeGrid<S>,
    pi_nodes: &[ProbabilityVector<S>],
) -> Vec<Vec<S>> {
    let m = model.m;
    let mut pi_t = vec![S::zero(); m];
    rk4_backward(grid, vec![S::zero(); m], |t, v_state, out| {
        interp_nodes(grid, pi_nodes, t, &mut pi_t);
        for i in 0..m {
            let alpha = agent_best_response(model, i, v_state);
            out[i] = hjb_rhs_component(model, t, i, v_state, alpha, &pi_t);
        }
    })
}

/// Forward distribution sweep under best responses to a frozen value node array.
fn forward_under_best_response<S: Scalar>(
    model: &LqModelSpec<S>,
    p0: &ProbabilityVector<S>,
    grid: &TimeGrid<S>,
    v_nodes: &[Vec<S>],
) -> Result<Vec<ProbabilityVector<S>>> {
    let m = model.m;
    let flow = integrate_kolmogorov(
        |t, pi_state: &[S]| {
            let mut v_t = vec![S::zero(); m];
            interp_nodes(grid, v_nodes, t, &mut v_t);
            let mut alpha = vec![S::zero(); m];
            for (i, a) in alpha.iter_mut().enumerate() {
                *a = agent_best_response(model, i, &v_t);
            }
            model.rate_matrix(t, pi_state, &alpha)
        },
        p0,
        *grid,
    )?;
    Ok(flow.probabilities)
}

/// Finds the anarchy equilibrium on `[0, horizon]`. The `probe_multiplicity` switch is
/// ignored here: the certificate for this solve is [`exploitability`], which checks
/// the returned pair directly rather than comparing basins.
pub fn solve_anarchy<S: Scalar>(
    model: &LqModelSpec<S>,
    p0: &ProbabilityVector<S>,
    horizon: S,
    params: &SweepParams<S>,
) -> Result<AnarchySolution<S>> {
    model.validate()?;
    if p0.len() != model.m {
        return Err(Error::Dimension {
            what: "initial distribution".into(),
            expected: model.m,
            got: p0.len(),
        });
    }
    let grid = TimeGrid::new(S::zero(), horizon, params.n_steps)?;
    let m = model.m;

    let mut converged: Option<(Vec<Vec<S>>, usize, S)> = None;
    let mut warnings = Vec::new();
    let mut last_err = None;
    'ladder: for halvings in 0..3 {
        let damping = params.damping / S::from_usize(1 << halvings).expect("small power of two");
        let mut v: Vec<Vec<S>> = vec![vec![S::zero(); m]; grid.n_nodes()];
        let mut applied = S::infinity();
        for iter in 1..=params.max_iters {
            let pi_nodes = match forward_under_best_response(model, p0, &grid, &v) {
                Ok(nodes) => nodes,
                Err(e) => return Err(e),
            };
            let v_raw = backward_hjb(model, &grid, &pi_nodes);
            applied = S::zero();
            for (row, raw_row) in v.iter_mut().zip(&v_raw) {
                for (vi, &ri) in row.iter_mut().zip(raw_row) {
                    let delta = damping * (ri - *vi);
                    if delta.abs() > applied {
                        applied = delta.abs();
                    }
                    *vi += delta;
                }
            }
            if !applied.is_finite() {
                return Err(Error::NonFinite {
                    what: "value update".into(),
                    value: applied.widen(),
                    at: f64::NAN,
                });
            }
            if applied <= params.tol {
                if halvings > 0 {
                    warnings.push(format!(
                        "converged only after damping was reduced to {}",
                        damping.widen()
                    ));
                }
                converged = Some((v, iter, applied));
                break 'ladder;
            }
        }
        last_err = Some(Error::NoConvergence {
            iterations: params.max_iters,
            last_update: applied.widen(),
            tol: params.tol.widen(),
        });
    }
    let (v_conv, iterations, final_update) =
        converged.ok_or_else(|| last_err.expect("ladder ran"))?;

    // Consolidate exactly as the principal's solver does: distribution from the
    // converged value, value from that distribution (terminal condition 0 is exact by
    // construction), controls regenerated from the stored value.
    let pi = forward_under_best_response(model, p0, &grid, &v_conv)?;
    let value = backward_hjb(model, &grid, &pi);
    let control: Vec<Vec<S>> = value
        .iter()
        .map(|v| (0..m).map(|i| agent_best_response(model, i, v)).collect())
        .collect();
    let average_cost = p0.dot(&value[0]);

    let fine = grid.refined(2);
    let pi_fine = {
        let flow = integrate_kolmogorov(
            |t, pi_state: &[S]| {
                let mut v_t = vec![S::zero(); m];
                interp_nodes(&grid, &value, t, &mut v_t);
                let mut alpha = vec![S::zero(); m];
                for (i, a) in alpha.iter_mut().enumerate() {
                    *a = agent_best_response(model, i, &v_t);
                }
                model.rate_matrix(t, pi_state, &alpha)
            },
            p0,
            fine,
        )?;
        flow.probabilities
    };
    let mut forward_residual = S::zero();
    for (k, coarse) in pi.iter().enumerate() {
        for i in 0..m {
            let gap = (coarse[i] - pi_fine[2 * k][i]).abs();
            if gap > forward_residual {
                forward_residual = gap;
            }
        }
    }
    let value_fine = {
        let mut pi_t = vec![S::zero(); m];
        rk4_backward(&fine, vec![S::zero(); m], |t, v_state, out| {
            interp_nodes(&grid, &pi, t, &mut pi_t);
            for i in 0..m {
                let alpha = agent_best_response(model, i, v_state);
                out[i] = hjb_rhs_component(model, t, i, v_state, alpha, &pi_t);
            }
        })
    };
    let mut backward_residual = S::zero();
    for (k, coarse) in value.iter().enumerate() {
        for i in 0..m {
            let gap = (coarse[i] - value_fine[2 * k][i]).abs();
            if gap > backward_residual {
                backward_residual = gap;
            }
        }
    }

    Ok(AnarchySolution {
        grid,
        pi,
        value,
        control,
        average_cost,
        iterations,
        final_update,
        forward_residual,
        backward_residual,
        warnings,
    })
}

// ─── Exploitability ──────────────────────────────────────────────────────────────────

/// The two time-zero population-average values behind an exploitability test.
#[derive(Debug, Clone, Copy)]
pub struct Exploitability<S: Scalar> {
    /// Average cost of following the prescribed control against the given flow.
    pub policy_value: S,
    /// Average cost of best-responding against the same flow.
    pub best_response_value: S,
    /// `policy_value − best_response_value`: what a deviator saves. Nonnegative up to
    /// integration error; zero exactly at an equilibrium.
    pub gap: S,
}

/// How much one agent can gain by deviating from `control_nodes` when the population
/// follows `pi_nodes`.
///
/// The prescribed control is priced by a *linear* backward pass with the effort frozen
/// to the interpolated node values — so a perturbed control handed in by the caller
/// genuinely changes the answer — while the alternative re-minimizes pointwise. Both
/// passes share the grid, integrator, and terminal condition (zero), so their
/// difference cancels discretization bias to leading order.
pub fn exploitability<S: Scalar>(
    model: &LqModelSpec<S>,
    p0: &ProbabilityVector<S>,
    grid: &TimeGrid<S>,
    pi_nodes: &[ProbabilityVector<S>],
    control_nodes: &[Vec<S>],
) -> Exploitability<S> {
    let m = model.m;
    let mut pi_t = vec![S::zero(); m];
    let mut alpha_t = vec![S::zero(); m];

    let v_policy = rk4_backward(grid, vec![S::zero(); m], |t, v_state, out| {
        interp_nodes(grid, pi_nodes, t, &mut pi_t);
        interp_nodes(grid, control_nodes, t, &mut alpha_t);
        for i in 0..m {
            out[i] = hjb_rhs_component(model, t, i, v_state, alpha_t[i], &pi_t);
        }
    });
    let v_best = rk4_backward(grid, vec![S::zero(); m], |t, v_state, out| {
        interp_nodes(grid, pi_nodes, t, &mut pi_t);
        for i in 0..m {
            let alpha = agent_best_response(model, i, v_state);
            out[i] = hjb_rhs_component(model, t, i, v_state, alpha, &pi_t);
        }
    });

    let policy_value = p0.dot(&v_policy[0]);
    let best_response_value = p0.dot(&v_best[0]);
    Exploitability {
        policy_value,
        best_response_value,
        gap: policy_value - best_response_value,
    }
}
