use serde::{Deserialize, Serialize};

use super::population::{neq_population_with, PhaseConvention};
use super::{PopulationTrace, TimeGrid};
use crate::error::Result;
use crate::model::{langevin_system, DuschinskiiSystem, LangevinSpec};

/// Total population below which `χ` is reported as 0.
pub const CHI_FLOOR: f64 = 1e-12;

/// Spin-up (`+W`) and spin-down (`−W`) ground-state populations and their polarization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationResult {
    pub up: PopulationTrace,
    pub down: PopulationTrace,
    /// `(P⁺ − P⁻)/(P⁺ + P⁻)`
    pub chi: Vec<f64>,
    /// `(P⁺ + P⁻)/2`
    pub pg: Vec<f64>,
}

impl PolarizationResult {
    pub fn from_traces(up: PopulationTrace, down: PopulationTrace) -> Self {
        let (chi, pg) = up
            .population
            .iter()
            .zip(&down.population)
            .map(|(&p, &m)| {
                let sum = p + m;
                let chi = if sum > CHI_FLOOR { (p - m) / sum } else { 0.0 };
                (chi, 0.5 * sum)
            })
            .unzip();
        Self { up, down, chi, pg }
    }

    pub fn times(&self) -> &[f64] {
        &self.up.times
    }

    pub fn final_chi(&self) -> f64 {
        self.chi.last().copied().unwrap_or(0.0)
    }

    pub fn final_pg(&self) -> f64 {
        self.pg.last().copied().unwrap_or(0.0)
    }
}

pub fn polarization_of_system(
    sys: &DuschinskiiSystem,
    beta: f64,
    grid: &TimeGrid,
    convention: PhaseConvention,
) -> Result<PolarizationResult> {
    let up = neq_population_with(sys, beta, grid, convention)?;
    let down = neq_population_with(&sys.conjugate(), beta, grid, convention)?;
    Ok(PolarizationResult::from_traces(up, down))
}

pub fn polarization_run(spec: &LangevinSpec, grid: &TimeGrid) -> Result<PolarizationResult> {
    polarization_of_system(&langevin_system(spec)?, spec.beta, grid, PhaseConvention::Derived)
}
