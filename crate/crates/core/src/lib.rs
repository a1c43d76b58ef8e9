//! Solvers for incentive design over a large population of finite-state agents.
//!
//! A principal offers a contract to a continuum of statistically identical agents,
//! each controlling the jump intensities of a continuous-time chain on `m` states.
//! In the linear-quadratic regime the agents' best responses collapse to closed
//! form, and the principal's problem reduces to a deterministic optimal-control
//! problem for the population distribution on the simplex. This crate implements
//! that pipeline end to end:
//!
//! * [`markov`] — simplex flows (forward equation, RK4) and exact path sampling,
//! * [`lq`] — the linear-quadratic model family and its Hamiltonians,
//! * [`solver`] — the forward–backward two-point boundary problem from the
//!   maximum principle, solved by damped fixed-point sweeps,
//! * [`anarchy`] — the self-interested (no-contract) population equilibrium and
//!   its exploitability certificate,
//! * [`contract`] — translating the solved flow into an implementable contract
//!   (payment rates plus a terminal transfer) and Monte-Carlo verification,
//! * [`epidemic`] — a worked two-region infection-control model exercising the
//!   whole stack,
//! * [`io`] — CSV artifacts for flows, paths and contracts.
//!
//! All numerics are generic over the scalar type through [`Scalar`] (any
//! IEEE float works; `f64` is the intended default, `f32` exists mainly to keep
//! the code honest about precision assumptions). The aliases below fix `f64`
//! for ordinary use.

mod scalar;

pub mod anarchy;
pub mod contract;
pub mod epidemic;
pub mod error;
pub mod io;
pub mod lq;
pub mod markov;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` model specification — the ordinary working type.
pub type Model = lq::LqModelSpec<f64>;
/// `f64` probability vector.
pub type Distribution = markov::ProbabilityVector<f64>;
/// `f64` uniform time grid.
pub type Grid = markov::TimeGrid<f64>;
/// `f64` sampled trajectory.
pub type Path = markov::CTMCPath<f64>;
/// `f64` planned-equilibrium solution.
pub type Solution = solver::FBODESolution<f64>;
/// `f64` sweep configuration.
pub type Sweep = solver::SweepParams<f64>;
/// `f64` anarchy solution.
pub type AnarchySolution = anarchy::AnarchySolution<f64>;
/// `f64` contract terms.
pub type Contract = contract::ContractSpec<f64>;
