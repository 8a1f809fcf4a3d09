//! Discontinuous Galerkin schemes for periodic 1D hyperbolic conservation
//! laws, with a reconstruction-based a posteriori error estimator.
//!
//! The pipeline for one discretization level is
//!
//! 1. evolve `∂_t u_h = -f(u_h)` with an explicit integrator ([`time_integration`]),
//! 2. reconstruct the trajectory in time by Hermite interpolation ([`ode_recon`]),
//! 3. lift each time slice to a continuous piecewise polynomial of one degree
//!    higher ([`spacetime`]),
//! 4. integrate the space-time residual and assemble the relative-entropy
//!    bound ([`estimator`]).
//!
//! [`experiments`] drives convergence studies on top of these pieces.

pub mod dg;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod flux;
pub mod legendre;
pub mod linalg;
pub mod mesh;
pub mod ode_recon;
pub mod quadrature;
pub mod spacetime;
pub mod system;
pub mod time_integration;

pub use error::{Error, Result};
