//! Exactly solvable three-channel square well with a non-Hermitian
//! generalized parity.
//!
//! * [`model`]: couplings, channel matrices and their branch decomposition.
//! * [`secular`]: the secular oval, branch hyperbolas and the shift function.
//! * [`spectrum`]: real bound states, wavefunctions and reality classification.
//! * [`critical`]: the critical coupling from bracketing sweeps and a tangency oracle.
//! * [`verifier`]: finite-difference operators and the parity identities they obey.

pub mod critical;
pub mod model;
mod numeric;
pub mod secular;
pub mod spectrum;
pub mod verifier;

pub use model::{CouplingParams, Sigma, DEFAULT_TOL};
