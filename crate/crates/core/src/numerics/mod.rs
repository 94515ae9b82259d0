//! Dense complex linear algebra and harmonic propagator kernels.

mod branch;
mod kernels;
mod lu;
mod matrix;

pub use branch::{branch_continued_sqrt, sqrt_on_branch, PhaseTracker, MAX_PHASE_JUMP};
pub use kernels::{kernel_a, kernel_b, kernel_b_minus_a, kernel_b_plus_a, KernelSet};
pub use lu::{lu_factor, phased_det, wrap_phase, LuFactor, PhasedDeterminant, PIVOT_TOLERANCE};
pub use matrix::{congruence_diag, ComplexMatrix, Congruence, DiagonalSpectrum};
