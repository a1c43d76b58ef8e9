//! The linear-quadratic model family and its Hamiltonians.
//!
//! Each agent occupies one of `m` states and chooses an effort level `α` from a
//! bounded interval `[α_lo, α_hi]`. Effort tilts the agent's jump intensities
//! linearly around a population-dependent baseline,
//!
//! ```text
//! q(t, i, j, α, π) = q̄ᵢⱼ(t, π) + λᵢⱼ · (α − α_lo),      j ≠ i,
//! ```
//!
//! and costs quadratically, `(γᵢ/2) α²`, on top of a state cost `c₁(t, i, π)`.
//! The principal pays a flow and a terminal transfer, carries their own flow cost
//! `c₀(t, π)` and terminal cost `C₀(π(T))`, and — because best responses are
//! affine in the continuation spread — can steer the whole population through the
//! functions in this module:
//!
//! * [`agent_best_response`] and [`reduced_hamiltonian`] describe one agent facing
//!   a continuation value `z`;
//! * [`principal_hamiltonian`], [`principal_minimizer`], and the gradient functions
//!   describe the population-level control problem whose characteristics the
//!   forward–backward solver integrates;
//! * [`optimal_flat_payment`] picks the cheapest constant payment rate given how
//!   agents value transfers ([`UtilitySpec`]).
//!
//! The model itself is a plain struct of closures, [`LqModelSpec`], so concrete
//! families (the epidemic model, randomized test instances) are ordinary values.
//! Population gradients of the baseline rates and costs are part of the spec:
//! the adjoint equation needs them analytically, and hiding a finite-difference
//! fallback here would silently degrade every downstream tolerance.

use crate::error::{Error, Result};
use crate::markov::RateMatrix;
use crate::scalar::Scalar;

/// Baseline intensity `q̄ᵢⱼ(t, π)`: arguments `(t, i, j, π)`.
pub type RateFn<S> = Box<dyn Fn(S, usize, usize, &[S]) -> S + Send + Sync>;
/// Writes `∂q̄ᵢⱼ/∂π_k` for all `k` into the output slice: arguments `(t, i, j, π, out)`.
pub type RateGradFn<S> = Box<dyn Fn(S, usize, usize, &[S], &mut [S]) + Send + Sync>;
/// Agent state cost `c₁(t, i, π)`.
pub type CostFn<S> = Box<dyn Fn(S, usize, &[S]) -> S + Send + Sync>;
/// Writes `∂c₁(t, i, ·)/∂π_k` for all `k`.
pub type CostGradFn<S> = Box<dyn Fn(S, usize, &[S], &mut [S]) + Send + Sync>;
/// Principal flow cost `c₀(t, π)`.
pub type FieldFn<S> = Box<dyn Fn(S, &[S]) -> S + Send + Sync>;
/// Writes `∂c₀(t, ·)/∂π_k` for all `k`.
pub type FieldGradFn<S> = Box<dyn Fn(S, &[S], &mut [S]) + Send + Sync>;
/// Principal terminal cost `C₀(π)`.
pub type TerminalFn<S> = Box<dyn Fn(&[S]) -> S + Send + Sync>;
/// Writes `∇C₀(π)` into the output slice.
pub type TerminalGradFn<S> = Box<dyn Fn(&[S], &mut [S]) + Send + Sync>;

// ─── Model specification ─────────────────────────────────────────────────────────────

/// A complete instance of the linear-quadratic family.
///
/// `lambda` and the baseline/cost closures may depend on the population `π`; the
/// *control channel* is always the affine tilt `λᵢⱼ (α − α_lo)` with `λᵢⱼ ≥ 0`, which
/// is what keeps best responses in closed form. Gradients of the π-dependent pieces
/// are supplied analytically alongside the values.
pub struct LqModelSpec<S: Scalar> {
    /// Number of states (≥ 2).
    pub m: usize,
    /// Control sensitivities `λᵢⱼ ≥ 0`, row-major `m × m`, zero diagonal.
    pub lambda: Vec<S>,
    /// Quadratic effort weights `γᵢ > 0`, one per state.
    pub gamma: Vec<S>,
    /// Lower effort bound `α_lo`.
    pub alpha_min: S,
    /// Upper effort bound `α_hi`.
    pub alpha_max: S,
    /// Baseline intensities `q̄ᵢⱼ(t, π) ≥ 0`.
    pub base_rate: RateFn<S>,
    /// `∂q̄ᵢⱼ/∂π` (all components at once).
    pub base_rate_grad_pi: RateGradFn<S>,
    /// Agent state cost `c₁(t, i, π)`.
    pub agent_cost: CostFn<S>,
    /// `∂c₁/∂π`.
    pub agent_cost_grad_pi: CostGradFn<S>,
    /// Principal flow cost `c₀(t, π)`.
    pub principal_cost: FieldFn<S>,
    /// `∂c₀/∂π`.
    pub principal_cost_grad_pi: FieldGradFn<S>,
    /// Principal terminal cost `C₀(π)`.
    pub terminal_cost: TerminalFn<S>,
    /// `∇C₀(π)`.
    pub terminal_cost_grad: TerminalGradFn<S>,
}

impl<S: Scalar> LqModelSpec<S> {
    /// Checks the static shape invariants (closure values are checked where they are
    /// consumed, since they depend on runtime arguments).
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 states, got {}",
                self.m
            )));
        }
        if self.lambda.len() != self.m * self.m {
            return Err(Error::Dimension {
                what: "lambda".into(),
                expected: self.m * self.m,
                got: self.lambda.len(),
            });
        }
        if self.gamma.len() != self.m {
            return Err(Error::Dimension {
                what: "gamma".into(),
                expected: self.m,
                got: self.gamma.len(),
            });
        }
        for i in 0..self.m {
            for j in 0..self.m {
                let l = self.lambda[i * self.m + j];
                if i == j && l != S::zero() {
                    return Err(Error::InvalidModel(format!(
                        "lambda must have a zero diagonal; entry ({i}, {i}) is {}",
                        l.widen()
                    )));
                }
                if !(l >= S::zero()) {
                    return Err(Error::InvalidModel(format!(
                        "lambda({i}, {j}) = {} must be nonnegative",
                        l.widen()
                    )));
                }
            }
            if !(self.gamma[i] > S::zero()) {
                return Err(Error::InvalidModel(format!(
                    "gamma({i}) = {} must be positive",
                    self.gamma[i].widen()
                )));
            }
        }
        if !(self.alpha_min < self.alpha_max) {
            return Err(Error::InvalidModel(format!(
                "effort bounds must satisfy lo < hi, got [{}, {}]",
                self.alpha_min.widen(),
                self.alpha_max.widen()
            )));
        }
        Ok(())
    }

    /// `λᵢⱼ`.
    #[must_use]
    pub fn lambda(&self, i: usize, j: usize) -> S {
        self.lambda[i * self.m + j]
    }

    /// The controlled intensity `q̄ᵢⱼ(t, π) + λᵢⱼ (α − α_lo)` for `j ≠ i`.
    #[must_use]
    pub fn controlled_rate(&self, t: S, i: usize, j: usize, alpha_i: S, pi: &[S]) -> S {
        debug_assert_ne!(i, j, "controlled_rate is an off-diagonal intensity");
        (self.base_rate)(t, i, j, pi) + self.lambda(i, j) * (alpha_i - self.alpha_min)
    }

    /// Assembles the full generator under the per-state effort profile `alpha`.
    #[must_use]
    pub fn rate_matrix(&self, t: S, pi: &[S], alpha: &[S]) -> RateMatrix<S> {
        debug_assert_eq!(alpha.len(), self.m);
        RateMatrix::from_off_diagonal(self.m, |i, j| self.controlled_rate(t, i, j, alpha[i], pi))
    }

    /// Clamps `z` to the effort interval (see [`clamp_b`]).
    #[must_use]
    pub fn clamp(&self, z: S) -> S {
        clamp_b(z, self.alpha_min, self.alpha_max)
    }
}

/// Projects `z` onto `[lo, hi]`: the truncation every closed-form optimizer in this
/// module passes through, kept as its own function so the clamping convention
/// (`lo` wins for NaN-free inputs below the interval, `hi` above) is stated once.
#[must_use]
pub fn clamp_b<S: Scalar>(z: S, lo: S, hi: S) -> S {
    debug_assert!(lo < hi, "clamp interval must be ordered");
    z.max(lo).min(hi)
}

/// `Σ_{j≠i} λᵢⱼ (z_j − zᵢ)`: the λ-weighted spread of a continuation vector around
/// its `i`-th component. This single number is what effort trades against.
fn lambda_weighted_spread<S: Scalar>(model: &LqModelSpec<S>, i: usize, z: &[S]) -> S {
    let zi = z[i];
    let mut drive = S::zero();
    for (j, &zj) in z.iter().enumerate() {
        if j != i {
            drive += model.lambda(i, j) * (zj - zi);
        }
    }
    drive
}

// ─── Agent side ──────────────────────────────────────────────────────────────────────

/// The agent's optimal effort in state `i` against the continuation vector `z`:
/// the unconstrained minimizer `−(1/γᵢ) Σ_{j≠i} λᵢⱼ (z_j − zᵢ)`, clamped to the
/// effort interval.
///
/// A *negative* spread (continuation values drop where λ points) makes effort
/// attractive; the quadratic cost scales it down by `1/γᵢ`.
#[must_use]
pub fn agent_best_response<S: Scalar>(model: &LqModelSpec<S>, i: usize, z: &[S]) -> S {
    let unconstrained = -lambda_weighted_spread(model, i, z) / model.gamma[i];
    model.clamp(unconstrained)
}

/// The agent's reduced Hamiltonian in state `i`:
///
/// ```text
/// H(t, i, z, α) = c₁(t, i, π) + (γᵢ/2) α² − r + Σ_{j≠i} (z_j − zᵢ)(q(t, i, j, α, π) − 1).
/// ```
///
/// `payment_flow` is the utility flow `r` the agent receives (apply the agent's
/// utility to the raw rate before passing it in). The `− 1` inside the sum comes
/// from writing the dynamics against a reference measure with unit intensities;
/// it shifts the value but never the minimizing effort.
#[must_use]
pub fn reduced_hamiltonian<S: Scalar>(
    model: &LqModelSpec<S>,
    t: S,
    i: usize,
    z: &[S],
    alpha: S,
    payment_flow: S,
    pi: &[S],
) -> S {
    let zi = z[i];
    let mut coupling = S::zero();
    for (j, &zj) in z.iter().enumerate() {
        if j != i {
            coupling += (zj - zi) * (model.controlled_rate(t, i, j, alpha, pi) - S::one());
        }
    }
    (model.agent_cost)(t, i, pi) + model.gamma[i] / S::lit(2.0) * alpha * alpha - payment_flow
        + coupling
}

// ─── Principal side ──────────────────────────────────────────────────────────────────

/// The principal's Hamiltonian
///
/// ```text
/// H̃(t, y, π, α) = ⟨y, Q(t, π, α)ᵀ π⟩ + c₀(t, π) + Σᵢ πᵢ (c₁(t, i, π) + (γᵢ/2) αᵢ²),
/// ```
///
/// the running rate at which the population flow moves the adjoint plus everything
/// the principal ends up paying for (their own flow cost and the agents' certainty
/// equivalent, which the contract passes through at face value).
#[must_use]
pub fn principal_hamiltonian<S: Scalar>(
    model: &LqModelSpec<S>,
    t: S,
    y: &[S],
    pi: &[S],
    alpha: &[S],
) -> S {
    let m = model.m;
    let mut transport = S::zero();
    for i in 0..m {
        let yi = y[i];
        for j in 0..m {
            if j != i {
                transport += pi[i] * (y[j] - yi) * model.controlled_rate(t, i, j, alpha[i], pi);
            }
        }
    }
    let mut running = (model.principal_cost)(t, pi);
    let half = S::lit(0.5);
    for i in 0..m {
        running += pi[i] * ((model.agent_cost)(t, i, pi) + half * model.gamma[i] * alpha[i] * alpha[i]);
    }
    transport + running
}

/// The effort profile minimizing `H̃` over the box `[α_lo, α_hi]^m`: component `i` is
/// `clamp(−(1/γᵢ) Σ_{k≠i} λᵢₖ (y_k − yᵢ))` — the same affine-in-spread form as the
/// agents' own best response, with the adjoint `y` in place of the continuation `z`.
///
/// `H̃` is separable and strictly convex in each `αᵢ` (wherever `πᵢ > 0`), so the
/// componentwise clamp *is* the global box minimizer; where `πᵢ = 0` the component
/// is immaterial and this choice keeps it continuous.
pub fn principal_minimizer<S: Scalar>(model: &LqModelSpec<S>, y: &[S], out: &mut [S]) {
    debug_assert_eq!(out.len(), model.m);
    for i in 0..model.m {
        out[i] = model.clamp(-lambda_weighted_spread(model, i, y) / model.gamma[i]);
    }
}

/// `∂H̃/∂y = Q(t, π, α)ᵀ π`: the forward-equation right-hand side. Independent of `y`,
/// and its components sum to zero because the generator is conservative.
pub fn grad_y_principal_hamiltonian<S: Scalar>(
    model: &LqModelSpec<S>,
    t: S,
    pi: &[S],
    alpha: &[S],
    out: &mut [S],
) {
    model.rate_matrix(t, pi, alpha).apply_transpose(pi, out);
}

/// `∂H̃/∂π`, with the effort profile held fixed (the envelope term is the caller's
/// business: at `α = â(y)` it vanishes on the interior and the sweep solvers rely on
/// exactly this fixed-α derivative).
///
/// Component `k` collects four effects of `π_k`: the mass sitting at `k` is
/// transported (`Σ_{j≠k} (y_j − y_k) q(t, k, j, α_k, π)`), it pays its own running
/// costs (`c₁(t, k, π) + (γ_k/2) α_k²`), and it bends the baselines and costs felt
/// by everyone else (the three analytic-gradient sums).
pub fn grad_pi_principal_hamiltonian<S: Scalar>(
    model: &LqModelSpec<S>,
    t: S,
    y: &[S],
    pi: &[S],
    alpha: &[S],
    out: &mut [S],
) {
    let m = model.m;
    debug_assert_eq!(out.len(), m);
    let half = S::lit(0.5);

    for k in 0..m {
        let yk = y[k];
        let mut transport = S::zero();
        for j in 0..m {
            if j != k {
                transport += (y[j] - yk) * model.controlled_rate(t, k, j, alpha[k], pi);
            }
        }
        out[k] = transport
            + (model.agent_cost)(t, k, pi)
            + half * model.gamma[k] * alpha[k] * alpha[k];
    }

    let mut grad = vec![S::zero(); m];
    for i in 0..m {
        let yi = y[i];
        for j in 0..m {
            if j != i {
                (model.base_rate_grad_pi)(t, i, j, pi, &mut grad);
                let weight = pi[i] * (y[j] - yi);
                for (o, &g) in out.iter_mut().zip(&grad) {
                    *o += weight * g;
                }
            }
        }
    }
    for i in 0..m {
        (model.agent_cost_grad_pi)(t, i, pi, &mut grad);
        for (o, &g) in out.iter_mut().zip(&grad) {
            *o += pi[i] * g;
        }
    }
    (model.principal_cost_grad_pi)(t, pi, &mut grad);
    for (o, &g) in out.iter_mut().zip(&grad) {
        *o += g;
    }
}

/// `∂H̃/∂α`: component `i` is `πᵢ (Σ_{j≠i} λᵢⱼ (y_j − yᵢ) + γᵢ αᵢ)`. Used by the
/// stationarity check on solved flows.
pub fn grad_alpha_principal_hamiltonian<S: Scalar>(
    model: &LqModelSpec<S>,
    y: &[S],
    pi: &[S],
    alpha: &[S],
    out: &mut [S],
) {
    debug_assert_eq!(out.len(), model.m);
    for i in 0..model.m {
        out[i] = pi[i] * (lambda_weighted_spread(model, i, y) + model.gamma[i] * alpha[i]);
    }
}

// ─── Payments ────────────────────────────────────────────────────────────────────────

/// How agents value a payment rate `r ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySpec<S: Scalar> {
    /// `u(r) = r`: transfers valued at face value.
    Identity,
    /// `u(r) = scale · √r`: diminishing value of faster payment.
    ScaledSqrt {
        /// Multiplier on `√r`.
        scale: S,
    },
    /// `u(r) = scale · r^exponent` (use `exponent ∈ (0, 1]` for concavity).
    Power {
        /// Multiplier on the power.
        scale: S,
        /// Exponent applied to the rate.
        exponent: S,
    },
}

impl<S: Scalar> Default for UtilitySpec<S> {
    fn default() -> Self {
        Self::Identity
    }
}

impl<S: Scalar> UtilitySpec<S> {
    /// Evaluates `u(r)`; rates are clamped at zero before any fractional power.
    #[must_use]
    pub fn apply(&self, r: S) -> S {
        match *self {
            Self::Identity => r,
            Self::ScaledSqrt { scale } => scale * r.max(S::zero()).sqrt(),
            Self::Power { scale, exponent } => scale * r.max(S::zero()).powf(exponent),
        }
    }
}

/// The payment rate minimizing the principal's leakage `r − u(r)` on `[lo, hi]`,
/// found by golden-section search (the leakage is continuous, and strictly unimodal
/// for the concave utilities this crate ships). Returns `(r̂, r̂ − u(r̂))`.
///
/// For the identity utility the leakage is identically zero and every rate ties;
/// the returned `r̂` is then just the search's resting point and callers should
/// treat it as arbitrary.
#[must_use]
pub fn optimal_flat_payment<S: Scalar>(utility: &UtilitySpec<S>, lo: S, hi: S) -> (S, S) {
    assert!(lo < hi, "payment bracket must be ordered");
    let leakage = |r: S| r - utility.apply(r);
    let inv_phi = (S::lit(5.0).sqrt() - S::one()) / S::lit(2.0);
    let width_tol = (hi - lo) * S::lit(1e-12).max(S::epsilon() * S::lit(4.0));

    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (leakage(c), leakage(d));
    for _ in 0..256 {
        if b - a <= width_tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = leakage(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = leakage(d);
        }
    }
    let r = (a + b) / S::lit(2.0);
    (r, leakage(r))
}
