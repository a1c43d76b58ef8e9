//! Run configuration: a TOML file with one section per concern. Every key is optional
//! except the horizon `T`, and every default mirrors the library's, so `fieldgame
//! defaults > base.toml` gives a complete, diffable record of what a run will use.

use fieldgame::epidemic::EpidemicParams;
use fieldgame::lq::UtilitySpec;
use fieldgame::markov::ProbabilityVector;
use fieldgame::solver::SweepParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub contract: Contract,
    #[serde(default)]
    pub utility: Utility,
    #[serde(default)]
    pub compare: Compare,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            grid: Grid::default(),
            sweep: Sweep::default(),
            contract: Contract::default(),
            utility: Utility::default(),
            compare: Compare::default(),
        }
    }
}

impl Config {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn sweep_params(&self) -> SweepParams<f64> {
        SweepParams {
            n_steps: self.grid.n_steps,
            damping: self.sweep.damping,
            tol: self.sweep.tol,
            max_iters: self.sweep.max_iters,
            probe_multiplicity: self.sweep.probe_multiplicity,
        }
    }
}

// ─── [scenario] ──────────────────────────────────────────────────────────────────────

/// The two-city epidemic scenario. Keys mirror [`EpidemicParams`] one to one; `T` is
/// the only key without a default so an incomplete file fails loudly instead of
/// silently running someone else's horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default = "d_theta_a_plus")]
    pub theta_a_plus: f64,
    #[serde(default = "d_theta_a_minus")]
    pub theta_a_minus: f64,
    #[serde(default = "d_theta_b_plus")]
    pub theta_b_plus: f64,
    #[serde(default = "d_theta_b_minus")]
    pub theta_b_minus: f64,
    #[serde(default = "d_phi_a")]
    pub phi_a: f64,
    #[serde(default = "d_phi_b")]
    pub phi_b: f64,
    #[serde(default = "d_nu_i")]
    pub nu_i: f64,
    #[serde(default = "d_nu_h")]
    pub nu_h: f64,
    #[serde(default = "d_gamma_i")]
    pub gamma_i: f64,
    #[serde(default = "d_gamma_h")]
    pub gamma_h: f64,
    #[serde(default = "d_alpha_lo")]
    pub alpha_lo: f64,
    #[serde(default = "d_alpha_hi")]
    pub alpha_hi: f64,
    #[serde(default = "d_sigma_a")]
    pub sigma_a: f64,
    #[serde(default = "d_sigma_b")]
    pub sigma_b: f64,
    #[serde(default = "d_sigma_p")]
    pub sigma_p: f64,
    #[serde(default = "d_p0")]
    pub p0: [f64; 4],
    #[serde(default = "d_eps_floor")]
    pub eps_floor: f64,
}

fn base() -> EpidemicParams<f64> {
    EpidemicParams::default()
}
fn d_theta_a_plus() -> f64 {
    base().theta_a_plus
}
fn d_theta_a_minus() -> f64 {
    base().theta_a_minus
}
fn d_theta_b_plus() -> f64 {
    base().theta_b_plus
}
fn d_theta_b_minus() -> f64 {
    base().theta_b_minus
}
fn d_phi_a() -> f64 {
    base().phi_a
}
fn d_phi_b() -> f64 {
    base().phi_b
}
fn d_nu_i() -> f64 {
    base().nu_i
}
fn d_nu_h() -> f64 {
    base().nu_h
}
fn d_gamma_i() -> f64 {
    base().gamma_i
}
fn d_gamma_h() -> f64 {
    base().gamma_h
}
fn d_alpha_lo() -> f64 {
    base().alpha_lo
}
fn d_alpha_hi() -> f64 {
    base().alpha_hi
}
fn d_sigma_a() -> f64 {
    base().sigma_a
}
fn d_sigma_b() -> f64 {
    base().sigma_b
}
fn d_sigma_p() -> f64 {
    base().sigma_p
}
fn d_p0() -> [f64; 4] {
    let p = base().p0;
    [p[0], p[1], p[2], p[3]]
}
fn d_eps_floor() -> f64 {
    base().eps_floor
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            t: base().horizon,
            theta_a_plus: d_theta_a_plus(),
            theta_a_minus: d_theta_a_minus(),
            theta_b_plus: d_theta_b_plus(),
            theta_b_minus: d_theta_b_minus(),
            phi_a: d_phi_a(),
            phi_b: d_phi_b(),
            nu_i: d_nu_i(),
            nu_h: d_nu_h(),
            gamma_i: d_gamma_i(),
            gamma_h: d_gamma_h(),
            alpha_lo: d_alpha_lo(),
            alpha_hi: d_alpha_hi(),
            sigma_a: d_sigma_a(),
            sigma_b: d_sigma_b(),
            sigma_p: d_sigma_p(),
            p0: d_p0(),
            eps_floor: d_eps_floor(),
        }
    }
}

impl Scenario {
    pub fn to_params(&self) -> fieldgame::Result<EpidemicParams<f64>> {
        Ok(EpidemicParams {
            theta_a_plus: self.theta_a_plus,
            theta_a_minus: self.theta_a_minus,
            theta_b_plus: self.theta_b_plus,
            theta_b_minus: self.theta_b_minus,
            phi_a: self.phi_a,
            phi_b: self.phi_b,
            nu_i: self.nu_i,
            nu_h: self.nu_h,
            gamma_i: self.gamma_i,
            gamma_h: self.gamma_h,
            alpha_lo: self.alpha_lo,
            alpha_hi: self.alpha_hi,
            sigma_a: self.sigma_a,
            sigma_b: self.sigma_b,
            sigma_p: self.sigma_p,
            p0: ProbabilityVector::new(self.p0.to_vec())?,
            horizon: self.t,
            eps_floor: self.eps_floor,
        })
    }
}

// ─── [grid] / [sweep] ────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub n_steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n_steps: SweepParams::<f64>::default().n_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub probe_multiplicity: bool,
}

impl Default for Sweep {
    fn default() -> Self {
        let s = SweepParams::<f64>::default();
        Self {
            damping: s.damping,
            tol: s.tol,
            max_iters: s.max_iters,
            probe_multiplicity: s.probe_multiplicity,
        }
    }
}

// ─── [contract] / [utility] ──────────────────────────────────────────────────────────

/// Contract terms plus the Monte-Carlo audit knobs (`verify` is the only command that
/// consumes randomness, so the seed lives here). `kappa` deliberately has no default:
/// the reservation level is a modeling choice with no neutral value, so `verify`
/// refuses to run until it is set here or by `--kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Contract {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub payment_rate: f64,
    pub paths: usize,
    pub seed: u64,
}

impl Default for Contract {
    fn default() -> Self {
        Self {
            kappa: None,
            payment_rate: 0.0,
            paths: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Utility {
    /// One of `identity`, `scaled_sqrt`, `power`.
    pub kind: String,
    pub scale: f64,
    /// Only read by `power`.
    pub exponent: f64,
}

impl Default for Utility {
    fn default() -> Self {
        Self {
            kind: "identity".to_owned(),
            scale: 1.0,
            exponent: 0.5,
        }
    }
}

impl Utility {
    pub fn to_spec(&self) -> Result<UtilitySpec<f64>, String> {
        match self.kind.as_str() {
            "identity" => Ok(UtilitySpec::Identity),
            "scaled_sqrt" => Ok(UtilitySpec::ScaledSqrt { scale: self.scale }),
            "power" => Ok(UtilitySpec::Power {
                scale: self.scale,
                exponent: self.exponent,
            }),
            other => Err(format!(
                "unknown utility kind {other:?}; expected identity, scaled_sqrt, or power"
            )),
        }
    }
}

// ─── [compare] ───────────────────────────────────────────────────────────────────────

/// Extra planning weights for `compare`: each value gets its own intervention solve
/// next to the scenario's baseline `sigma_p` and the anarchy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Compare {
    pub planning: Vec<f64>,
}

impl Default for Compare {
    fn default() -> Self {
        Self {
            planning: vec![1.5],
        }
    }
}
