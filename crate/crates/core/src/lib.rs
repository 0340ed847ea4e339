//! Radial nonlinear diffusion and Wasserstein contraction experiments.
//!
//! This crate is a numerical laboratory for the flow `∂u/∂t = Δf(u)` on balls
//! in `ℝᵈ`, restricted to radially symmetric densities. It provides:
//!
//! * [`nonlinearity`]: the nonlinearity `f`, its entropy density `U`
//!   (defined by `f(r) = r·U′(r) − U(r)`, `U(0) = U′(1) = 0`), and checkers
//!   for McCann's condition `(d−1)·f(r) ≤ d·r·f′(r)` in its differential,
//!   monotone, and convexity forms;
//! * [`radial`]: finite-volume radial measures with exact cumulative mass,
//!   quantiles, and pushforward under monotone radial maps;
//! * [`profiles`]: reference densities (self-similar spreading solutions,
//!   smoothed balls, Gaussian bumps);
//! * [`solver`]: mass-conservative finite-volume evolution with zero-flux
//!   boundaries, explicit or implicit (damped Newton) time stepping;
//! * [`transport`]: the quadratic Wasserstein distance via quantile
//!   couplings, the entropy functional `𝒰(u) = ∫U(u)`, the dissipation
//!   pairing `½·d/dt W₂²`, displacement interpolation, and geodesic
//!   convexity scans;
//! * [`counterexample`]: the construction that witnesses failure of
//!   contraction when McCann's condition fails: a piecewise radial
//!   displacement, its one-sided mollification, the mollified density pair,
//!   the dissipation integrals `I₁ᵉ + I₂ᵉ`, their `ε → 0` extrapolation, and
//!   the closed-form limit they converge to.
//!
//! Everything is deterministic: no randomness, no wall-clock input, and
//! construction-order-independent arithmetic, so identical inputs reproduce
//! identical bytes in downstream reports.

pub mod counterexample;
mod error;
pub mod interp;
pub mod nonlinearity;
pub mod profiles;
pub mod quad;
pub mod radial;
pub mod solver;
pub mod transport;

pub use error::{Error, Result};
pub use nonlinearity::Nonlinearity;
pub use radial::{RadialDensity, RadialGrid};
pub use solver::{Scheme, SolverConfig, SolverState};
pub use transport::{DissipationSample, QuantilePlan, RadialVelocityField, TraceRow};
