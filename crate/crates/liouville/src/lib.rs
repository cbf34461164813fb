//! Exact solutions of the 1+1-dimensional Liouville equation
//!
//!   (d^2_t - d^2_x) phi + (m^2/2) exp(phi) = 0,   m > 0,
//!
//! constructed from smooth Cauchy data (phi, pi) at t = 0 by the chiral
//! linear-ODE reduction, together with independent numerical verification:
//! finite-difference residuals, a leapfrog initial-value oracle, Wronskian
//! drift monitoring, slice round trips, continuity probes, and a tracker for
//! curves on which the assembled F vanishes.
//!
//! The pipeline maps data to solution in stages: (phi, pi) -> chiral
//! potentials (u, w) -> unit-Wronskian pairs psi_k, chi_k of
//! psi'' = u psi, chi'' = w chi -> F(t, x) = chi1(x+t) psi2(x-t) +
//! chi2(x+t) psi1(x-t) -> phi = -log[(m^2/16) F^2]. Restriction to t = 0
//! inverts it.
//!
//! All numerical kernels are generic over the scalar type ([`Scalar`]);
//! `f64` aliases are provided at the crate root and are what the CLI uses.

pub mod assembly;
pub mod chiral_ode;
pub mod cli;
pub mod expr;
pub mod initial_data;
pub mod pipeline;
pub mod potentials;
pub mod scalar;
pub mod spline;
pub mod verify;
pub mod zero_tracker;

pub use scalar::Scalar;

/// f64 lane, used by the CLI and the acceptance suite.
pub type Expr64 = expr::Expr<f64>;
pub type CauchyData64 = initial_data::CauchyData<f64>;
pub type PotentialPair64 = potentials::PotentialPair<f64>;
pub type WronskianPair64 = chiral_ode::WronskianPair<f64>;
pub type LiouvilleSolution64 = assembly::LiouvilleSolution<f64>;
pub type SpacetimeGrid64 = assembly::SpacetimeGrid<f64>;
pub type ZeroCurve64 = zero_tracker::ZeroCurve<f64>;
