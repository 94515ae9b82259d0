use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::vibronic::{reduce_to_normal_modes, DuschinskiiSystem, QuadraticVibronic};
use crate::error::{Error, Result};

/// Discretization of each Ohmic bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    /// Modes per bath; the two primary coordinates each get their own bath.
    pub modes_per_bath: usize,
    pub cutoff: f64,
}

impl BathConfig {
    pub const DEFAULT_MODES: usize = 20;
    pub const CUTOFF_FACTOR: f64 = 10.0;

    /// Default bath for the given primary frequencies: cutoff at ten times the faster one.
    pub fn for_primary(omega1: f64, omega2: f64) -> Self {
        Self {
            modes_per_bath: Self::DEFAULT_MODES,
            cutoff: Self::CUTOFF_FACTOR * omega1.max(omega2),
        }
    }

    pub fn validate(&self, omega1: f64, omega2: f64) -> Result<()> {
        if self.modes_per_bath > 0 && !(self.cutoff > omega1.max(omega2)) {
            return Err(Error::InvalidParameter(format!(
                "bath cutoff {} must exceed the primary frequencies",
                self.cutoff
            )));
        }
        Ok(())
    }
}

/// Discretized bath modes and their couplings to one primary coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl DiscreteBath {
    /// `Σ c²/ω²`, the counter-term that keeps the primary well frequency unchanged.
    pub fn counter_term(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.couplings)
            .map(|(w, c)| c * c / (w * w))
            .sum()
    }
}

/// Midpoint grid on `(0, ω_C)` with couplings reproducing `J(ω) = γω`.
pub fn discretize_bath(cfg: &BathConfig, gamma: f64) -> Result<DiscreteBath> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
    }
    if cfg.modes_per_bath > 0 && !(cfg.cutoff > 0.0 && cfg.cutoff.is_finite()) {
        return Err(Error::InvalidParameter(format!("cutoff must be positive, got {}", cfg.cutoff)));
    }
    let m = cfg.modes_per_bath;
    let spacing = cfg.cutoff / m as f64;
    let rho = m as f64 / cfg.cutoff;
    let frequencies: Vec<f64> = (1..=m).map(|k| (k as f64 - 0.5) * spacing).collect();
    let couplings = frequencies
        .iter()
        .map(|w| ((2.0 / PI) * gamma * w * w / rho).sqrt())
        .collect();
    Ok(DiscreteBath {
        frequencies,
        couplings,
    })
}

/// Two primary modes `x`, `y`, each with an Ohmic bath.
///
/// The ground well is axis-aligned (`ω₂` along `x`, `ω₁` along `y`) and
/// displaced by `d` along angle `θ`; the excited well sits at the origin
/// rotated by `φ`; the spin-orbit gradient points along `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinSpec {
    pub omega1: f64,
    pub omega2: f64,
    pub gamma: f64,
    pub theta: f64,
    pub phi: f64,
    pub eta: f64,
    pub d_mag: f64,
    pub w_mag: f64,
    /// Gap between well minima including the bath.
    pub delta_g: f64,
    pub v: Complex64,
    pub beta: f64,
    pub bath: BathConfig,
}

impl Default for LangevinSpec {
    fn default() -> Self {
        let (omega1, omega2) = (2e-4, 4e-4);
        Self {
            omega1,
            omega2,
            gamma: 4e-4,
            theta: FRAC_PI_4,
            phi: 0.0,
            eta: FRAC_PI_2,
            d_mag: 884.0,
            w_mag: 0.05,
            delta_g: -0.01,
            v: Complex64::new(1e-4, 0.0),
            beta: 1000.0,
            bath: BathConfig::for_primary(omega1, omega2),
        }
    }
}

/// Conversion between `β` in inverse Hartree and temperature in kelvin.
pub const HARTREE_KELVIN: f64 = 315_775.024_804;

pub fn beta_from_kelvin(t: f64) -> f64 {
    HARTREE_KELVIN / t
}

pub fn kelvin_from_beta(beta: f64) -> f64 {
    HARTREE_KELVIN / beta
}

impl LangevinSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("gamma", self.gamma),
            ("beta", self.beta),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        for (name, value) in [
            ("theta", self.theta),
            ("phi", self.phi),
            ("eta", self.eta),
            ("d", self.d_mag),
            ("W", self.w_mag),
            ("deltaG", self.delta_g),
            ("V", self.v.re),
            ("V", self.v.im),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        self.bath.validate(self.omega1, self.omega2)
    }

    /// Number of coordinates: two primary modes plus both baths.
    pub fn dim(&self) -> usize {
        2 + 2 * self.bath.modes_per_bath
    }

    pub fn temperature_kelvin(&self) -> f64 {
        kelvin_from_beta(self.beta)
    }
}

/// Builds the raw quadratic Hamiltonian with `E_g` fixed so the reduced gap equals `spec.delta_g`.
pub fn assemble_langevin(spec: &LangevinSpec) -> Result<QuadraticVibronic> {
    spec.validate()?;
    let bath = discretize_bath(&spec.bath, spec.gamma)?;
    let m = spec.bath.modes_per_bath;
    let n = spec.dim();
    let (w1s, w2s) = (spec.omega1 * spec.omega1, spec.omega2 * spec.omega2);
    let counter = bath.counter_term();
    let (sp, cp) = spec.phi.sin_cos();

    let mut omega2_g = DMatrix::zeros(n, n);
    omega2_g[(0, 0)] = w2s + counter;
    omega2_g[(1, 1)] = w1s + counter;
    for k in 0..m {
        let c = bath.couplings[k];
        let w2 = bath.frequencies[k].powi(2);
        for (primary, slot) in [(0, 2 + k), (1, 2 + m + k)] {
            omega2_g[(primary, slot)] = c;
            omega2_g[(slot, primary)] = c;
            omega2_g[(slot, slot)] = w2;
        }
    }
    let mut omega2_e = omega2_g.clone();
    omega2_e[(0, 0)] = w1s * cp * cp + w2s * sp * sp + counter;
    omega2_e[(1, 1)] = w2s * cp * cp + w1s * sp * sp + counter;
    let off = -0.5 * (2.0 * spec.phi).sin() * (w2s - w1s);
    omega2_e[(0, 1)] = off;
    omega2_e[(1, 0)] = off;

    let mut lambda_g = DVector::zeros(n);
    lambda_g[0] = -spec.d_mag * w2s * spec.theta.cos();
    lambda_g[1] = -spec.d_mag * w1s * spec.theta.sin();
    let mut w = DVector::zeros(n);
    w[0] = spec.w_mag * spec.eta.cos();
    w[1] = spec.w_mag * spec.eta.sin();

    let mut h = QuadraticVibronic {
        omega2_g,
        omega2_e,
        lambda_g,
        lambda_e: DVector::zeros(n),
        e_g: 0.0,
        e_e: 0.0,
        v: spec.v,
        w,
    };
    let gap = reduce_to_normal_modes(&h)?.delta_g;
    h.e_g = spec.delta_g - gap;
    Ok(h)
}

/// Assembles and reduces in one step.
pub fn langevin_system(spec: &LangevinSpec) -> Result<DuschinskiiSystem> {
    let h = assemble_langevin(spec)?;
    let mut sys = reduce_to_normal_modes(&h)?;
    // the gap is linear in E_g, so this only removes round-off
    sys.delta_g = spec.delta_g;
    Ok(sys)
}
