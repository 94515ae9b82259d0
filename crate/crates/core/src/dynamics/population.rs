use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::cumulative_square_trapezoid;
use super::{PopulationTrace, TimeGrid, MAX_PHASE_PER_STEP};
use crate::correlators::{CorrelationGrid2D, NeqCorrelator};
use crate::error::{Error, Result};
use crate::model::DuschinskiiSystem;

/// Populations above this are outside the reach of second-order perturbation theory.
pub const BREAKDOWN_POPULATION: f64 = 0.5;

/// Sign of the driving-force phase attached to `C(t′,t″)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// `e^{−iΔG(t′−t″)}`, what the perturbative expansion of the propagator yields.
    #[default]
    Derived,
    /// `e^{−iΔG(t″−t′)}`
    Swapped,
}

/// `P_g(t) = |V|² ∫₀ᵗ∫₀ᵗ e^{∓iΔG(t′−t″)}C(t′,t″)` for every grid time.
pub fn population_from_correlation(
    c: &CorrelationGrid2D,
    coupling: Complex64,
    delta_g: f64,
    convention: PhaseConvention,
) -> Result<PopulationTrace> {
    let len = c.len();
    if len < 2 {
        return Err(Error::InvalidParameter("population needs at least two times".into()));
    }
    let dt = c.times[1] - c.times[0];
    let sign = match convention {
        PhaseConvention::Derived => -1.0,
        PhaseConvention::Swapped => 1.0,
    };
    let f: Vec<Complex64> = (0..len * len)
        .map(|k| {
            let (i, j) = (k / len, k % len);
            Complex64::from_polar(1.0, sign * delta_g * (c.times[i] - c.times[j])) * c.values[k]
        })
        .collect();
    let integral = cumulative_square_trapezoid(&f, len, dt);
    let scale = coupling.norm_sqr();
    let mut population = Vec::with_capacity(len);
    for (k, v) in integral.iter().enumerate() {
        let p = scale * v.re;
        if scale * v.im.abs() > 1e-6 * p.abs() && p != 0.0 {
            log::warn!("population has imaginary part {:e} at t = {}", scale * v.im, c.times[k]);
        }
        if p > BREAKDOWN_POPULATION {
            return Err(Error::PerturbationBreakdown {
                time: c.times[k],
                population: p,
            });
        }
        population.push(p);
    }
    Ok(PopulationTrace {
        times: c.times.clone(),
        population,
    })
}

/// Ground-state population after photoexcitation from the thermal ground state.
pub fn neq_population(sys: &DuschinskiiSystem, beta: f64, grid: &TimeGrid) -> Result<PopulationTrace> {
    neq_population_with(sys, beta, grid, PhaseConvention::Derived)
}

pub fn neq_population_with(
    sys: &DuschinskiiSystem,
    beta: f64,
    grid: &TimeGrid,
    convention: PhaseConvention,
) -> Result<PopulationTrace> {
    grid.check_resolution(sys.omega_g.max().max(sys.omega_e.max()))?;
    let drive = sys.delta_g.abs() * grid.dt();
    if drive > MAX_PHASE_PER_STEP {
        log::warn!("ΔG·dt = {drive:.3} rad per step; the population quadrature may be under-resolved");
    }
    let c = NeqCorrelator::new(sys, beta)?.grid(&grid.times())?;
    population_from_correlation(&c, sys.v, sys.delta_g, convention)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_correlation_grows_quadratically() {
        let sys = DuschinskiiSystem::shifted_oscillators(&[2e-4, 5e-4], &[0.0, 0.0], &[0.0, 0.0], 1e-4.into(), 0.0).unwrap();
        let grid = TimeGrid::new(2000.0, 40).unwrap();
        let trace = neq_population(&sys, 1000.0, &grid).unwrap();
        for (t, p) in trace.times.iter().zip(&trace.population) {
            assert!((p - 1e-8 * t * t).abs() < 1e-12 * (1.0 + t * t));
        }
    }

    #[test]
    fn breakdown_is_reported() {
        let sys = DuschinskiiSystem::shifted_oscillators(&[2e-4], &[0.0], &[0.0], 1e-3.into(), 0.0).unwrap();
        let grid = TimeGrid::new(2000.0, 40).unwrap();
        assert!(matches!(
            neq_population(&sys, 1000.0, &grid),
            Err(Error::PerturbationBreakdown { .. })
        ));
    }
}
