//! Numerical laboratory for scalar conservation laws `u_t + f(x, u)_x = 0`
//! with a smooth, spatially heterogeneous flux that is uniformly convex in `u`.
//!
//! * [`flux`]: flux families, derivative evaluators and assumption checks
//! * [`solver`]: well-balanced Godunov finite-volume scheme
//! * [`characteristics`]: characteristic ODE integration
//! * [`shock`]: shock tracking and finite-time emergence of the simple shock
//! * [`stability`]: relative-entropy shift curves and L² contraction checks
//! * [`hj`]: Hamilton–Jacobi value function by dynamic programming
//! * [`experiments`]: canonical runs shared by the CLI and the acceptance suite

pub mod characteristics;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod flux;
pub mod hj;
pub mod quadrature;
pub mod shock;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
pub use exec::Exec;
pub use flux::{build_flux, FluxFamily, FluxModel};
