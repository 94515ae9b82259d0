//! Rates, populations and polarizations from time integrals of the correlation functions.

mod grid;
mod polarization;
mod population;
mod quadrature;
mod rate;
mod sweep;

use serde::{Deserialize, Serialize};

pub use grid::{TimeGrid, MAX_PHASE_PER_STEP};
pub use polarization::{polarization_of_system, polarization_run, PolarizationResult, CHI_FLOOR};
pub use population::{
    neq_population, neq_population_with, population_from_correlation, PhaseConvention, BREAKDOWN_POPULATION,
};
pub use quadrature::{cumulative_square_trapezoid, cumulative_trapezoid};
pub use rate::{
    curve_peak, eq_population, eq_rate, marcus_rate, rate_from_trace, EqRateCurve, RATE_TOLERANCE, RATE_WINDOW,
};
pub use sweep::{
    bath_convergence, sweep, sweep_axes, temp_sweep, Axis, AxisKind, BathPoint, Cell, Segment, SweepSurface,
};

/// Ground-state population on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub population: Vec<f64>,
}

impl PopulationTrace {
    pub fn final_value(&self) -> f64 {
        self.population.last().copied().unwrap_or(0.0)
    }
}
