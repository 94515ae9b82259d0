//! Closed-form Gaussian evaluation of the golden-rule correlation functions.

mod continuation;
mod equilibrium;
mod nonequilibrium;
mod partition;

use num_complex::Complex64;

use crate::model::DuschinskiiSystem;

pub use continuation::{GaussianValue, MAX_BISECTIONS};
pub use equilibrium::{eq_correlation, eq_correlation_grid, eq_kernels, EqCorrelator, EqKernelSet};
pub use nonequilibrium::{
    neq_correlation, neq_correlation_grid, neq_kernels, NeqCorrelator, NeqKernelSet, SigmaForm,
};
pub use partition::log_partition_function;

/// Correlation samples on a one-dimensional lag grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Value at the point where the square-root branch was fixed.
    pub branch_anchor: Complex64,
}

/// Correlation samples `C(t′, t″)` on a square grid, row index `t′`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid2D {
    pub times: Vec<f64>,
    /// Row-major, `values[i * len + j] = C(times[i], times[j])`.
    pub values: Vec<Complex64>,
    pub branch_anchor: Complex64,
}

impl CorrelationGrid2D {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.times.len() + j]
    }

    /// `max |C(t′,t″) − C(t″,t′)*|` over the grid.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Time over which a correlation's phase changes by about one radian.
pub(crate) fn anchor_offset(sys: &DuschinskiiSystem) -> f64 {
    let w_max = sys.omega_g.max().max(sys.omega_e.max());
    let recoil = 0.5 * sys.w.norm_squared();
    1.0 / w_max.max(sys.reorganization_energy() + recoil)
}
