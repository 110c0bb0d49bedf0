//! Brute-force cross-checks independent of the closed forms: polynomial roots,
//! Runge–Kutta integration and a finite-difference solver of the full system.

mod leapfrog;
mod rk4;
mod roots;

pub use leapfrog::{fd_leapfrog, FdRun, GridState, CFL};
pub use rk4::{rk4_integrate, rk4_trace};
pub use roots::{char_poly, match_roots, poly_roots, Quartic, MAX_ITERATIONS};
