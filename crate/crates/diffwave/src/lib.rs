//! Numerical laboratory for the 1D compressible p-system with time-dependent
//! damping `-alpha/(1+t)^lambda * u` on the half-line `x >= 0`, under a
//! null-Dirichlet (`u(0,t)=0`) or null-Neumann (`u_x(0,t)=0`) boundary
//! condition.
//!
//! The crate builds the asymptotic targets of the system — nonlinear
//! diffusion waves obtained from Darcy's law plus the correction pair that
//! carries the far-field momentum `u_+ beta(t)` — time-integrates the full
//! hyperbolic system with a finite-volume scheme, and measures how fast the
//! solution converges to the wave, comparing fitted decay exponents against
//! the predicted piecewise-in-lambda rate tables (cut-off at lambda = 3/5
//! for Dirichlet, 1/7 for Neumann, none for the constant-wave case).

pub mod asymptotics;
pub mod cli;
pub mod correction;
pub mod error;
pub mod model;
pub mod quad;
pub mod solver;
pub mod waves;

pub use error::{DiffwaveError, Result};
pub use model::{DampingSchedule, FarFieldState, PressureLaw};
