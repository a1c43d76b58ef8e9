//! Finite-state probability-flow primitives.
//!
//! A population of statistically identical agents moves on the state space `{0, …, m−1}`.
//! Everything downstream of this module is built from four ingredients:
//!
//! * distributions on the m-simplex ([`ProbabilityVector`]),
//! * conservative transition-rate matrices, possibly time- and population-dependent
//!   ([`RateMatrix`]),
//! * the forward equation `dπ/dt = Q(t, π)ᵀ π`, integrated with the classical
//!   fourth-order Runge–Kutta scheme on a fixed uniform grid
//!   ([`integrate_kolmogorov`]), and
//! * exact sampling of one agent's continuous-time trajectory under time-varying rates,
//!   by uniformization/thinning at a dominating rate ([`simulate_ctmc_path`]).
//!
//! The fixed-step integrator is deliberate: runs must be bit-reproducible across
//! machines, and the dynamics encountered here are smooth enough that a fixed RK4 grid
//! (default 2000 steps for horizons up to ~20) resolves them to well below the
//! verification tolerances. Conservative generators keep the simplex invariant
//! analytically, so the integrator only clips roundoff-level negatives and renormalizes,
//! recording the cumulative correction; substantial drift is treated as a bug in the
//! caller's rate function and aborts the run rather than being papered over.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, RateViolation, Result};
use crate::scalar::Scalar;

/// Tolerance on `|Σᵢ πᵢ − 1|` for a vector to count as a distribution.
pub const MASS_TOL: f64 = 1e-9;
/// Tolerance on row sums of a rate matrix.
pub const RATE_ROW_SUM_TOL: f64 = 1e-12;
/// Abort threshold for the cumulative clip-and-renormalize correction of a flow,
/// quoted for `f64`. The integrator widens it to a per-run roundoff budget
/// (`8 · m · n_steps · ε`) when the scalar's machine epsilon makes 1e-6
/// unreachable, so `f32` runs are not punished for ordinary rounding.
pub const DRIFT_ABORT: f64 = 1e-6;
/// Number of scan points used to bound row exit rates over a horizon.
const DOMINATING_RATE_SCAN: usize = 2048;
/// Safety factor applied on top of the scanned supremum of exit rates.
const DOMINATING_RATE_HEADROOM: f64 = 1.05;

// ─── Distributions on the simplex ───────────────────────────────────────────────────

/// A probability distribution over `m` states: nonnegative entries summing to one
/// (within [`MASS_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector<S: Scalar>(Vec<S>);

impl<S: Scalar> ProbabilityVector<S> {
    /// Validates and wraps `entries`.
    pub fn new(entries: Vec<S>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidProbability {
                reason: format!("need at least 2 states, got {}", entries.len()),
            });
        }
        let mut sum = S::zero();
        for (i, &p) in entries.iter().enumerate() {
            if !(p >= S::zero()) {
                return Err(Error::InvalidProbability {
                    reason: format!("entry {i} is {} (must be >= 0)", p.widen()),
                });
            }
            sum += p;
        }
        if (sum - S::one()).abs().widen() > MASS_TOL {
            return Err(Error::InvalidProbability {
                reason: format!("entries sum to {}, not 1 (tol {MASS_TOL})", sum.widen()),
            });
        }
        Ok(Self(entries))
    }

    /// The uniform distribution on `m` states.
    #[must_use]
    pub fn uniform(m: usize) -> Self {
        let w = S::one() / S::from_usize(m).expect("state count fits in the scalar");
        let mut entries = vec![w; m];
        // Compensate the last entry so the mass is exactly 1 regardless of how 1/m rounds.
        let partial: S = entries.iter().take(m - 1).fold(S::zero(), |a, &x| a + x);
        entries[m - 1] = S::one() - partial;
        Self(entries)
    }

    /// The point mass on `state`.
    #[must_use]
    pub fn unit(m: usize, state: usize) -> Self {
        assert!(state < m, "unit state {state} out of range for {m} states");
        let mut entries = vec![S::zero(); m];
        entries[state] = S::one();
        Self(entries)
    }

    /// Number of states.
    #[must_use]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when the vector has no entries (never, for validated vectors).
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Read-only access to the entries.
    #[must_use]
    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    /// Dot product with an arbitrary vector of the same length.
    #[must_use]
    pub fn dot(&self, other: &[S]) -> S {
        assert_eq!(self.0.len(), other.len(), "dot length mismatch");
        self.0
            .iter()
            .zip(other)
            .fold(S::zero(), |acc, (&p, &x)| acc + p * x)
    }
}

impl<S: Scalar> AsRef<[S]> for ProbabilityVector<S> {
    fn as_ref(&self) -> &[S] {
        &self.0
    }
}

impl<S: Scalar> std::ops::Deref for ProbabilityVector<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.0
    }
}

// ─── Rate matrices ───────────────────────────────────────────────────────────────────

/// An `m × m` transition-rate matrix: nonnegative off-diagonal intensities, rows
/// summing to zero. Stored row-major; `entry(i, j)` is the rate of `i → j` jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix<S: Scalar> {
    m: usize,
    entries: Vec<S>,
}

impl<S: Scalar> RateMatrix<S> {
    /// Wraps a row-major entry buffer without validating it; call [`RateMatrix::validate`]
    /// to check the conservativity invariants.
    pub fn from_entries(m: usize, entries: Vec<S>) -> Result<Self> {
        if entries.len() != m * m {
            return Err(RateViolation::WrongEntryCount {
                m,
                expected: m * m,
                got: entries.len(),
            }
            .into());
        }
        Ok(Self { m, entries })
    }

    /// Builds a conservative matrix from its off-diagonal intensities; each diagonal
    /// entry is set to minus the row's off-diagonal sum, so rows sum to zero by
    /// construction (up to one rounding of the sum).
    pub fn from_off_diagonal(m: usize, mut rate: impl FnMut(usize, usize) -> S) -> Self {
        let mut entries = vec![S::zero(); m * m];
        for i in 0..m {
            let mut exit = S::zero();
            for j in 0..m {
                if i != j {
                    let q = rate(i, j);
                    entries[i * m + j] = q;
                    exit += q;
                }
            }
            entries[i * m + i] = -exit;
        }
        Self { m, entries }
    }

    /// The all-zero generator on `m` states.
    #[must_use]
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            entries: vec![S::zero(); m * m],
        }
    }

    /// Number of states.
    #[must_use]
    pub fn dim(&self) -> usize {
        self.m
    }

    /// The rate of `i → j` transitions (diagonal entries are the negative exit rates).
    #[must_use]
    pub fn entry(&self, i: usize, j: usize) -> S {
        self.entries[i * self.m + j]
    }

    /// Total exit rate out of state `i`: `Σ_{j≠i} q(i, j)`.
    #[must_use]
    pub fn exit_rate(&self, i: usize) -> S {
        let mut s = S::zero();
        for j in 0..self.m {
            if j != i {
                s += self.entry(i, j);
            }
        }
        s
    }

    /// Checks nonnegativity of the off-diagonal and that each row sums to zero within
    /// [`RATE_ROW_SUM_TOL`]; reports the first offending entry or row. The row-sum
    /// tolerance is widened to `4 · ε · Σ|qᵢⱼ|` when the row's magnitude (or a
    /// reduced-precision scalar) makes the quoted figure tighter than roundoff.
    pub fn validate(&self) -> std::result::Result<(), RateViolation> {
        for i in 0..self.m {
            let mut row_sum = S::zero();
            let mut row_abs = S::zero();
            for j in 0..self.m {
                let q = self.entry(i, j);
                if i != j && q < S::zero() {
                    return Err(RateViolation::NegativeOffDiagonal {
                        i,
                        j,
                        value: q.widen(),
                    });
                }
                row_sum += q;
                row_abs += q.abs();
            }
            let tol = RATE_ROW_SUM_TOL.max(4.0 * S::epsilon().widen() * row_abs.widen());
            if row_sum.abs().widen() > tol {
                return Err(RateViolation::RowSumNonzero {
                    i,
                    sum: row_sum.widen(),
                    tol,
                });
            }
        }
        Ok(())
    }

    /// Writes `Qᵀ p` into `out`: the right-hand side of the forward equation.
    pub fn apply_transpose(&self, p: &[S], out: &mut [S]) {
        debug_assert_eq!(p.len(), self.m);
        debug_assert_eq!(out.len(), self.m);
        for o in out.iter_mut() {
            *o = S::zero();
        }
        for (j, &pj) in p.iter().enumerate() {
            let row = &self.entries[j * self.m..(j + 1) * self.m];
            for (o, &q) in out.iter_mut().zip(row) {
                *o += q * pj;
            }
        }
    }
}

// ─── Time grids and flows ────────────────────────────────────────────────────────────

/// A uniform grid of `n_steps + 1` nodes on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<S: Scalar> {
    t0: S,
    t1: S,
    n_steps: usize,
}

impl<S: Scalar> TimeGrid<S> {
    /// Builds a grid; requires `t0 < t1` and at least one step.
    pub fn new(t0: S, t1: S, n_steps: usize) -> Result<Self> {
        if !(t0 < t1) {
            return Err(Error::InvalidModel(format!(
                "time grid needs t0 < t1, got [{}, {}]",
                t0.widen(),
                t1.widen()
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidModel("time grid needs n_steps >= 1".into()));
        }
        Ok(Self { t0, t1, n_steps })
    }

    /// Start of the grid.
    #[must_use]
    pub fn t0(&self) -> S {
        self.t0
    }

    /// End of the grid.
    #[must_use]
    pub fn t1(&self) -> S {
        self.t1
    }

    /// Number of steps (one less than the number of nodes).
    #[must_use]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes.
    #[must_use]
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    /// Uniform step size.
    #[must_use]
    pub fn dt(&self) -> S {
        (self.t1 - self.t0) / S::from_usize(self.n_steps).expect("step count fits")
    }

    /// The `k`-th node; node 0 is exactly `t0` and node `n_steps` exactly `t1`.
    #[must_use]
    pub fn node(&self, k: usize) -> S {
        debug_assert!(k <= self.n_steps);
        if k == 0 {
            self.t0
        } else if k == self.n_steps {
            self.t1
        } else {
            let frac = S::from_usize(k).expect("node index fits")
                / S::from_usize(self.n_steps).expect("step count fits");
            self.t0 + (self.t1 - self.t0) * frac
        }
    }

    /// The same interval with `factor`× as many steps.
    #[must_use]
    pub fn refined(&self, factor: usize) -> Self {
        assert!(factor >= 1, "refinement factor must be >= 1");
        Self {
            t0: self.t0,
            t1: self.t1,
            n_steps: self.n_steps * factor,
        }
    }
}

/// Linear interpolation of per-node vectors at an arbitrary time inside the grid.
///
/// `rows` holds one vector per node. Times outside `[t0, t1]` clamp to the ends; this
/// keeps the function total, which the sweep solvers rely on when evaluating stage
/// times like `t1 + dt/2` produced by the final Runge–Kutta step of a reversed pass.
pub fn interp_nodes<S: Scalar, R: AsRef<[S]>>(grid: &TimeGrid<S>, rows: &[R], t: S, out: &mut [S]) {
    debug_assert_eq!(rows.len(), grid.n_nodes(), "one row per grid node");
    let dt = grid.dt();
    let pos = (t - grid.t0()) / dt;
    let k = pos
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(grid.n_steps().saturating_sub(1));
    let left = rows[k].as_ref();
    let right = rows[k + 1].as_ref();
    let theta = ((t - grid.node(k)) / dt).max(S::zero()).min(S::one());
    for ((o, &a), &b) in out.iter_mut().zip(left).zip(right) {
        *o = a + (b - a) * theta;
    }
}

/// The result of integrating the forward equation: one distribution per grid node plus
/// bookkeeping about how much clip-and-renormalize correction was applied.
#[derive(Debug, Clone)]
pub struct KolmogorovFlow<S: Scalar> {
    /// The grid the flow lives on.
    pub grid: TimeGrid<S>,
    /// `π(t_k)` for every node, renormalized.
    pub probabilities: Vec<ProbabilityVector<S>>,
    /// Total ℓ¹ correction applied across all steps (clipping + renormalization).
    pub cumulative_drift: S,
    /// Worst raw mass defect `|Σ πᵢ − 1|` observed before renormalization.
    pub max_raw_mass_error: S,
    /// Most negative raw entry observed before clipping (0 if none went negative).
    pub min_raw_entry: S,
}

impl<S: Scalar> KolmogorovFlow<S> {
    /// Linear interpolation of the flow at time `t`.
    pub fn interp(&self, t: S, out: &mut [S]) {
        interp_nodes(&self.grid, &self.probabilities, t, out);
    }
}

// ─── Forward integration ─────────────────────────────────────────────────────────────

/// Integrates `dπ/dt = Q(t, π)ᵀ π` from `p0` over `grid` with classical RK4.
///
/// `rate_fn` is validated at every grid node (with the current distribution); a
/// violation aborts with the offending time. After each step the iterate is clipped at
/// zero and renormalized; the cumulative ℓ¹ correction is recorded on the returned flow
/// and the run aborts if it exceeds [`DRIFT_ABORT`] — a conservative generator keeps
/// the simplex invariant analytically, so drift of that size means the model function
/// is broken, not the integrator.
pub fn integrate_kolmogorov<S: Scalar>(
    rate_fn: impl Fn(S, &[S]) -> RateMatrix<S>,
    p0: &ProbabilityVector<S>,
    grid: TimeGrid<S>,
) -> Result<KolmogorovFlow<S>> {
    let m = p0.len();
    let dt = grid.dt();
    let half = dt * S::lit(0.5);
    let sixth = dt / S::lit(6.0);
    let two = S::lit(2.0);

    let mut probabilities = Vec::with_capacity(grid.n_nodes());
    probabilities.push(p0.clone());

    let mut p = p0.as_slice().to_vec();
    let mut stage = vec![S::zero(); m];
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![S::zero(); m],
        vec![S::zero(); m],
        vec![S::zero(); m],
        vec![S::zero(); m],
    );

    let mut cumulative_drift = S::zero();
    let mut max_raw_mass_error = S::zero();
    let mut min_raw_entry = S::zero();
    let drift_limit = DRIFT_ABORT
        .max(8.0 * (m * grid.n_steps()) as f64 * S::epsilon().widen());

    let rhs = |t: S, state: &[S], out: &mut [S]| {
        let q = rate_fn(t, state);
        debug_assert_eq!(q.dim(), m, "rate matrix dimension must match the state");
        q.apply_transpose(state, out);
    };

    for step in 0..grid.n_steps() {
        let t = grid.node(step);

        // Node-time validation: catches sign and conservation bugs where they happen.
        if let Err(violation) = rate_fn(t, &p).validate() {
            return Err(Error::RateAtTime {
                time: t.widen(),
                violation,
            });
        }

        rhs(t, &p, &mut k1);
        for i in 0..m {
            stage[i] = p[i] + half * k1[i];
        }
        rhs(t + half, &stage, &mut k2);
        for i in 0..m {
            stage[i] = p[i] + half * k2[i];
        }
        rhs(t + half, &stage, &mut k3);
        for i in 0..m {
            stage[i] = p[i] + dt * k3[i];
        }
        rhs(t + dt, &stage, &mut k4);
        for i in 0..m {
            p[i] += sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
        }

        // Clip-and-renormalize, with the correction logged.
        let mut raw_sum = S::zero();
        for &x in &p {
            raw_sum += x;
            if x < min_raw_entry {
                min_raw_entry = x;
            }
        }
        let mass_error = (raw_sum - S::one()).abs();
        if mass_error > max_raw_mass_error {
            max_raw_mass_error = mass_error;
        }
        let mut step_drift = S::zero();
        let mut clipped_sum = S::zero();
        for x in p.iter_mut() {
            if *x < S::zero() {
                step_drift += -*x;
                *x = S::zero();
            }
            clipped_sum += *x;
        }
        if !(clipped_sum > S::zero()) {
            return Err(Error::NonFinite {
                what: "probability mass after clipping".into(),
                value: clipped_sum.widen(),
                at: (t + dt).widen(),
            });
        }
        for x in p.iter_mut() {
            let renormed = *x / clipped_sum;
            step_drift += (renormed - *x).abs();
            *x = renormed;
        }
        cumulative_drift += step_drift;
        if cumulative_drift.widen() > drift_limit {
            return Err(Error::SimplexDrift {
                time: (t + dt).widen(),
                drift: cumulative_drift.widen(),
                limit: drift_limit,
            });
        }

        probabilities.push(ProbabilityVector(p.clone()));
    }

    // Validate the rate function at the final node too, so the whole grid is covered.
    if let Err(violation) = rate_fn(grid.t1(), &p).validate() {
        return Err(Error::RateAtTime {
            time: grid.t1().widen(),
            violation,
        });
    }

    Ok(KolmogorovFlow {
        grid,
        probabilities,
        cumulative_drift,
        max_raw_mass_error,
        min_raw_entry,
    })
}

// ─── Path simulation ─────────────────────────────────────────────────────────────────

/// One agent's trajectory: an initial state and the ordered jump record.
#[derive(Debug, Clone, PartialEq)]
pub struct CTMCPath<S: Scalar> {
    /// State at time 0.
    pub initial_state: usize,
    /// `(jump time, state entered)` pairs; times strictly increasing in `(0, horizon]`,
    /// consecutive states distinct.
    pub jumps: Vec<(S, usize)>,
    /// End of the observation window.
    pub horizon: S,
}

impl<S: Scalar> CTMCPath<S> {
    /// State occupied at time `t` (càdlàg: jumps take effect at their own time).
    #[must_use]
    pub fn state_at(&self, t: S) -> usize {
        let k = self.jumps.partition_point(|&(s, _)| s <= t);
        if k == 0 {
            self.initial_state
        } else {
            self.jumps[k - 1].1
        }
    }

    /// State just before time `t` (left limit).
    #[must_use]
    pub fn state_before(&self, t: S) -> usize {
        let k = self.jumps.partition_point(|&(s, _)| s < t);
        if k == 0 {
            self.initial_state
        } else {
            self.jumps[k - 1].1
        }
    }

    /// Checks the structural invariants (ordering, window, distinct consecutive states).
    pub fn validate(&self) -> Result<()> {
        let mut prev_t = S::zero();
        let mut prev_s = self.initial_state;
        for &(t, s) in &self.jumps {
            if !(t > prev_t) || t > self.horizon {
                return Err(Error::PathMismatch(format!(
                    "jump time {} not strictly increasing within (0, {}]",
                    t.widen(),
                    self.horizon.widen()
                )));
            }
            if s == prev_s {
                return Err(Error::PathMismatch(format!(
                    "jump at {} does not change the state ({s})",
                    t.widen()
                )));
            }
            prev_t = t;
            prev_s = s;
        }
        Ok(())
    }
}

/// Samples one trajectory of the chain with generator `rate_fn(t)` started from `p0`,
/// by uniformization: candidate times arrive as a Poisson stream at the dominating rate
/// `Λ = 1.05 × sup_t max_i Σ_{j≠i} q(t, i, j)` (supremum scanned on a fixed fine grid),
/// and each candidate realizes jump `i → j` with probability `q(t, i, j)/Λ`.
///
/// The same `seed` always yields the identical path. If a candidate time ever sees an
/// exit rate above `Λ` (a peak the scan missed), the simulation aborts with a
/// structural error instead of producing a silently biased path.
pub fn simulate_ctmc_path<S: Scalar>(
    rate_fn: impl Fn(S) -> RateMatrix<S>,
    p0: &ProbabilityVector<S>,
    horizon: S,
    seed: u64,
) -> Result<CTMCPath<S>> {
    if !(horizon > S::zero()) {
        return Err(Error::InvalidModel(format!(
            "simulation horizon must be positive, got {}",
            horizon.widen()
        )));
    }
    let m = p0.len();

    // Bound the exit rates over the horizon (and validate the generator while at it).
    let scan_denom = S::from_usize(DOMINATING_RATE_SCAN - 1).expect("scan count fits");
    let mut sup_exit = S::zero();
    for k in 0..DOMINATING_RATE_SCAN {
        let t = horizon * S::from_usize(k).expect("scan index fits") / scan_denom;
        let q = rate_fn(t);
        if let Err(violation) = q.validate() {
            return Err(Error::RateAtTime {
                time: t.widen(),
                violation,
            });
        }
        for i in 0..m {
            let e = q.exit_rate(i);
            if e > sup_exit {
                sup_exit = e;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Initial state by inverse-CDF on p0.
    let u0: f64 = rng.random();
    let target = S::lit(u0) * p0.as_slice().iter().fold(S::zero(), |a, &x| a + x);
    let mut acc = S::zero();
    let mut state = m - 1;
    for (i, &p) in p0.as_slice().iter().enumerate() {
        acc += p;
        if target < acc {
            state = i;
            break;
        }
    }

    let mut path = CTMCPath {
        initial_state: state,
        jumps: Vec::new(),
        horizon,
    };

    if sup_exit == S::zero() {
        return Ok(path); // Zero intensity everywhere: no jumps, and no Poisson stream to thin.
    }
    let lambda = sup_exit * S::lit(DOMINATING_RATE_HEADROOM);

    let mut t = S::zero();
    loop {
        // Exponential inter-arrival at rate Λ; 1−U ∈ (0, 1] keeps the log finite.
        let u: f64 = rng.random();
        t += S::lit(-(1.0 - u).ln()) / lambda;
        if t > horizon {
            break;
        }
        let q = rate_fn(t);
        let exit = q.exit_rate(state);
        if exit > lambda {
            return Err(Error::UnboundedRate {
                time: t.widen(),
                exit_rate: exit.widen(),
                bound: lambda.widen(),
            });
        }
        // Thinning: jump to j with probability q(state, j)/Λ, otherwise stay.
        let v = S::lit(rng.random::<f64>());
        let mut cum = S::zero();
        for j in 0..m {
            if j == state {
                continue;
            }
            cum += q.entry(state, j) / lambda;
            if v < cum {
                path.jumps.push((t, j));
                state = j;
                break;
            }
        }
    }
    Ok(path)
}

/// Samples `n_paths` independent trajectories; path `k` uses `base_seed ^ k`, so any
/// subset of the collection can be regenerated independently and in any order.
pub fn simulate_ctmc_paths<S: Scalar>(
    rate_fn: impl Fn(S) -> RateMatrix<S> + Sync,
    p0: &ProbabilityVector<S>,
    horizon: S,
    n_paths: usize,
    base_seed: u64,
) -> Result<Vec<CTMCPath<S>>> {
    (0..n_paths)
        .map(|k| simulate_ctmc_path(&rate_fn, p0, horizon, base_seed ^ (k as u64)))
        .collect()
}

/// The fraction of paths occupying each of `m` states at every grid node.
///
/// Rows sum to one exactly: the largest entry absorbs the (at most few-ulp) rounding
/// left over from the count-to-fraction divisions.
pub fn empirical_occupancy<S: Scalar>(
    paths: &[CTMCPath<S>],
    grid: TimeGrid<S>,
    m: usize,
) -> Result<Vec<ProbabilityVector<S>>> {
    if paths.is_empty() {
        return Err(Error::PathMismatch("occupancy needs at least one path".into()));
    }
    let horizon = paths[0].horizon;
    for p in paths {
        if p.horizon != horizon {
            return Err(Error::PathMismatch(format!(
                "paths disagree on the horizon: {} vs {}",
                p.horizon.widen(),
                horizon.widen()
            )));
        }
    }
    if grid.t1() > horizon {
        return Err(Error::PathMismatch(format!(
            "grid end {} exceeds the common path horizon {}",
            grid.t1().widen(),
            horizon.widen()
        )));
    }

    let n = S::from_usize(paths.len()).expect("path count fits");
    let mut rows = Vec::with_capacity(grid.n_nodes());
    let mut counts = vec![0usize; m];
    for k in 0..grid.n_nodes() {
        let t = grid.node(k);
        counts.iter_mut().for_each(|c| *c = 0);
        for path in paths {
            let s = path.state_at(t);
            assert!(s < m, "path visits state {s}, but occupancy was asked for {m} states");
            counts[s] += 1;
        }
        let mut row: Vec<S> = counts
            .iter()
            .map(|&c| S::from_usize(c).expect("count fits") / n)
            .collect();
        let sum = row.iter().fold(S::zero(), |a, &x| a + x);
        let argmax = (0..m).max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap();
        row[argmax] += S::one() - sum;
        rows.push(ProbabilityVector(row));
    }
    Ok(rows)
}

// ─── Seminorm ────────────────────────────────────────────────────────────────────────

/// The state-`i` seminorm of a vector: `√(Σ_{j≠i} |z_j − z_i|²)`.
///
/// It measures how much `z` varies away from its `i`-th coordinate, and vanishes
/// exactly on constant vectors; only differences `z_j − z_i` enter, so it is invariant
/// under adding a constant to every component.
#[must_use]
pub fn seminorm<S: Scalar>(z: &[S], i: usize) -> S {
    assert!(i < z.len(), "seminorm anchor {i} out of range for {} components", z.len());
    let zi = z[i];
    let mut sum = S::zero();
    for (j, &zj) in z.iter().enumerate() {
        if j != i {
            let d = zj - zi;
            sum += d * d;
        }
    }
    sum.sqrt()
}
