//! Fermi-golden-rule electron transfer with exponential spin-orbit coupling.
//!
//! Two-state harmonic systems `H_g`, `H_e` coupled by `V·e^{iWᵀx}` are reduced to
//! normal modes, their golden-rule correlation functions are evaluated in
//! closed Gaussian form and integrated into rates, populations and spin
//! polarization. The [`oracle`] module provides brute-force Fock-basis checks.

pub mod error;
pub mod correlators;
pub mod dynamics;
pub mod model;
pub mod numerics;
pub mod oracle;

pub use error::{Error, Result};
