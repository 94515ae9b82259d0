//! Quadratic two-state Hamiltonians, their normal-mode reduction and the
//! two-mode Langevin model with discretized Ohmic baths.

mod langevin;
mod transform;
mod vibronic;

pub use langevin::{
    assemble_langevin, beta_from_kelvin, discretize_bath, kelvin_from_beta, langevin_system,
    BathConfig, DiscreteBath, LangevinSpec, HARTREE_KELVIN,
};
pub use transform::{apply_point_transform, reflection, rotation};
pub use vibronic::{
    eigen_residual, orthogonality_defect, reduce_to_normal_modes, reduce_with_frames,
    DuschinskiiSystem, QuadraticVibronic, Reduction, EIGENVALUE_FLOOR,
};
