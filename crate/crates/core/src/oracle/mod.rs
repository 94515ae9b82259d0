//! Brute-force references in a truncated harmonic-oscillator number basis.
//!
//! Only practical for one or two modes; used to validate the closed forms.

mod exact;
mod fock;

pub use exact::{
    exact_eq_correlation, exact_neq_correlation, exact_populations, fgr_state_sum, ExactSystem, LEAK_TOLERANCE,
};
pub use fock::{build_operators, FockOperators, FockSpec, MAX_DIMENSION};
