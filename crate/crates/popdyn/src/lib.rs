//! Dynamics of predator-prey and competition population models.
//!
//! The crate provides four model families (a resource with `n` competing
//! consumers, a prey with two Holling-II predators, two competing prey with a
//! shared predator, and Bazykin's two-species model), together with the
//! machinery used to study them: adaptive integration, equilibrium location
//! and classification, invasion thresholds, Hopf / zero-Hopf bifurcation
//! analysis with first Lyapunov coefficients, averaging of the dynamics near
//! zero-Hopf points, center-manifold reduction, and chaos diagnostics
//! (Lyapunov-exponent regression, fractal dimensions, power spectra and the
//! 0-1 test).

pub mod averaging;
pub mod bifurcation;
pub mod chaos;
pub mod competition;
pub mod equilibria;
pub mod error;
pub mod growth;
pub mod integrate;
pub mod invasion;
pub mod model;
pub mod poly;

pub use error::{Error, Result};
