//! Exact unitary dephasing of a small system against a finite environment,
//! together with the closed-form early-time (copycat) expansions of the
//! reduced density matrix, its eigenvalues and eigenstates.
//!
//! Module map:
//!
//! * [`hilbert`]: world states, partial trace, density matrices.
//! * [`model`]: environment sampling, spectral Hamiltonians, branch moments.
//! * [`evolution`]: spectral and dense time evolution, reduced-state series.
//! * [`eigensolve`]: Hermitian eigensolvers and eigenstate tracking.
//! * [`qubit`]: closed-form two-level results.
//! * [`qutrit`]: closed-form three-level results.
//! * [`analysis`]: non-perturbative observables and einselection metrics.
//!
//! Units: `ħ = 1` everywhere.

pub mod analysis;
pub mod eigensolve;
pub mod error;
pub mod evolution;
pub mod hilbert;
pub mod model;
pub mod qubit;
pub mod qutrit;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
