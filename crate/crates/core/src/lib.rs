//! Exponential stability of two wave equations coupled through their velocities,
//!
//! ```text
//! u_tt - u_xx + alpha u_t + beta  v_t = 0
//! v_tt - v_xx + gamma u_t + eta   v_t = 0,   u = v = 0 on the boundary,
//! ```
//!
//! on `(0, pi)`. The crate classifies coupling matrices, reduces them to the
//! rotation / lower-triangular canonical forms, computes the per-mode spectrum
//! with its Jordan chains in closed form, simulates the dynamics exactly mode by
//! mode, and cross-checks everything against brute-force oracles (polynomial
//! roots, RK4, a finite-difference solver, and a resolvent sweep along the
//! imaginary axis).

pub mod cli;
pub mod coeffs;
pub mod error;
pub mod modal_sim;
pub mod oracle;
pub mod resolvent;
pub mod spectrum;

pub use coeffs::{
    change_of_variables, classify_stability, schur_canonicalize, transform_state, CanonicalForm,
    CoeffMatrix, FormKind, StabilityVerdict,
};
pub use error::{Error, Result};
pub use modal_sim::{EnergyTrace, ModalState, ModeBlock};
pub use spectrum::{CaseTag, DecayPrediction, JordanChain, ModeSpectrum};

pub use num_complex::Complex64;
