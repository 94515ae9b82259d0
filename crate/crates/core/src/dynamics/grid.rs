use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `dt·ω` accepted before kernels are considered under-resolved.
pub const MAX_PHASE_PER_STEP: f64 = 0.5;

/// Uniform time grid `0, dt, …, t_max` with `dt = t_max/steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_max: 25000.0,
            steps: 1000,
        }
    }
}

impl TimeGrid {
    pub const MIN_STEPS: usize = 16;

    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        let grid = Self { t_max, steps };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with spacing as close to `dt` as an integer step count allows.
    pub fn with_spacing(t_max: f64, dt: f64) -> Result<Self> {
        Self::new(t_max, (t_max / dt).round().max(1.0) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.steps < Self::MIN_STEPS {
            return Err(Error::InvalidParameter(format!(
                "steps must be at least {}, got {}",
                Self::MIN_STEPS,
                self.steps
            )));
        }
        Ok(())
    }

    /// Rejects grids too coarse for the fastest frequency.
    pub fn check_resolution(&self, omega_max: f64) -> Result<()> {
        self.validate()?;
        let phase = self.dt() * omega_max;
        if phase > MAX_PHASE_PER_STEP {
            return Err(Error::InvalidParameter(format!(
                "dt·ω_max = {phase:.3} exceeds {MAX_PHASE_PER_STEP}; use more steps"
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.steps).map(|k| k as f64 * dt).collect()
    }

    pub fn halved(&self) -> Self {
        Self {
            steps: 2 * self.steps,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = TimeGrid::default();
        assert_eq!(g.dt(), 25.0);
        assert_eq!(g.times().len(), 1001);
        assert_eq!(*g.times().last().unwrap(), 25000.0);
    }

    #[test]
    fn too_few_steps() {
        assert!(TimeGrid::new(100.0, 15).is_err());
        assert!(TimeGrid::new(100.0, 16).is_ok());
        assert!(TimeGrid::new(-1.0, 100).is_err());
    }

    #[test]
    fn resolution_bound() {
        let g = TimeGrid::new(25000.0, 1000).unwrap();
        assert!(g.check_resolution(4e-3).is_ok());
        assert!(g.check_resolution(0.03).is_err());
        assert!(g.halved().check_resolution(0.03).is_ok());
    }
}
