use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::cumulative_trapezoid;
use super::{PopulationTrace, TimeGrid};
use crate::correlators::eq_correlation_grid;
use crate::error::{Error, Result};
use crate::model::DuschinskiiSystem;

/// Fraction of the trace used for the asymptotic slope.
pub const RATE_WINDOW: f64 = 0.2;
/// Allowed relative disagreement between the two halves of the window.
pub const RATE_TOLERANCE: f64 = 0.05;

/// Equilibrium correlation on a grid, reusable for any driving force.
#[derive(Debug, Clone)]
pub struct EqRateCurve {
    times: Vec<f64>,
    correlation: Vec<Complex64>,
    coupling2: f64,
    dt: f64,
}

impl EqRateCurve {
    pub fn new(sys: &DuschinskiiSystem, beta: f64, grid: &TimeGrid) -> Result<Self> {
        grid.check_resolution(sys.omega_g.max().max(sys.omega_e.max()))?;
        let times = grid.times();
        let c = eq_correlation_grid(sys, beta, &times)?;
        Ok(Self {
            times,
            correlation: c.values,
            coupling2: sys.v.norm_sqr(),
            dt: grid.dt(),
        })
    }

    pub fn correlation(&self) -> &[Complex64] {
        &self.correlation
    }

    fn integrand(&self, delta_g: f64) -> Vec<Complex64> {
        self.times
            .iter()
            .zip(&self.correlation)
            .map(|(&t, c)| Complex64::from_polar(1.0, -delta_g * t) * c)
            .collect()
    }

    /// `P_g(t) = 2|V|² Re ∫₀ᵗdt′∫₀^{t′}dτ e^{−iΔGτ}C(τ)`.
    pub fn population(&self, delta_g: f64) -> PopulationTrace {
        let inner = cumulative_trapezoid(&self.integrand(delta_g), self.dt);
        let outer = cumulative_trapezoid(&inner, self.dt);
        PopulationTrace {
            times: self.times.clone(),
            population: outer.iter().map(|p| 2.0 * self.coupling2 * p.re).collect(),
        }
    }

    pub fn rate(&self, delta_g: f64) -> Result<f64> {
        rate_from_trace(&self.population(delta_g))
    }

    /// Rate with `C(τ)` damped by `e^{−σ²τ²/2}`, i.e. every transition
    /// broadened by a normalized Gaussian of width `σ`.
    pub fn broadened_rate(&self, delta_g: f64, sigma: f64) -> f64 {
        let f: Vec<Complex64> = self
            .integrand(delta_g)
            .into_iter()
            .zip(&self.times)
            .map(|(f, &t)| f * (-0.5 * (sigma * t).powi(2)).exp())
            .collect();
        let total = cumulative_trapezoid(&f, self.dt).last().copied().unwrap_or_default();
        2.0 * self.coupling2 * total.re
    }
}

pub fn eq_population(sys: &DuschinskiiSystem, beta: f64, grid: &TimeGrid) -> Result<PopulationTrace> {
    Ok(EqRateCurve::new(sys, beta, grid)?.population(sys.delta_g))
}

pub fn eq_rate(sys: &DuschinskiiSystem, beta: f64, grid: &TimeGrid) -> Result<f64> {
    EqRateCurve::new(sys, beta, grid)?.rate(sys.delta_g)
}

fn slope(t: &[f64], p: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let pm = p.iter().sum::<f64>() / n;
    let (num, den) = t.iter().zip(p).fold((0.0, 0.0), |(num, den), (&t, &p)| {
        (num + (t - tm) * (p - pm), den + (t - tm) * (t - tm))
    });
    num / den
}

/// Least-squares slope over the final window; the two halves of the window must agree.
pub fn rate_from_trace(trace: &PopulationTrace) -> Result<f64> {
    let len = trace.times.len();
    let start = ((1.0 - RATE_WINDOW) * (len - 1) as f64).floor() as usize;
    if len < 5 || len - start < 5 {
        return Err(Error::InvalidParameter("trace too short for a rate window".into()));
    }
    let mid = start + (len - start) / 2;
    let t = &trace.times;
    let p = &trace.population;
    let first = slope(&t[start..=mid], &p[start..=mid]);
    let second = slope(&t[mid..], &p[mid..]);
    let scale = first.abs().max(second.abs());
    if (first - second).abs() > RATE_TOLERANCE * scale {
        return Err(Error::NonconvergedRate { first, second });
    }
    Ok(slope(&t[start..], &p[start..]))
}

/// Classical Marcus rate; `kt` is the thermal energy in Hartree.
pub fn marcus_rate(coupling: f64, reorganization: f64, delta_g: f64, kt: f64) -> f64 {
    let prefactor = 2.0 * PI * coupling * coupling / (4.0 * PI * reorganization * kt).sqrt();
    prefactor * (-(delta_g + reorganization).powi(2) / (4.0 * reorganization * kt)).exp()
}

/// Abscissa of the maximum, refined by a parabola through the neighbours.
pub fn curve_peak(x: &[f64], y: &[f64]) -> Option<f64> {
    let (k, _) = y
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if k == 0 || k + 1 >= x.len() || !y[k - 1].is_finite() || !y[k + 1].is_finite() {
        return Some(x[k]);
    }
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        Some(x1)
    } else {
        Some(x1 - 0.5 * num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_gives_zero() {
        let sys = DuschinskiiSystem::shifted_oscillators(&[2e-4], &[600.0], &[0.05], 0.0.into(), -0.01).unwrap();
        let grid = TimeGrid::new(2000.0, 100).unwrap();
        let trace = eq_population(&sys, 1000.0, &grid).unwrap();
        assert!(trace.population.iter().all(|&p| p == 0.0));
        assert_eq!(rate_from_trace(&trace).unwrap(), 0.0);
    }

    #[test]
    fn marcus_shape() {
        let (v, er, kt) = (1e-4, 0.04, 1e-3);
        let peak = marcus_rate(v, er, -er, kt);
        assert!((peak - 2.0 * PI * v * v / (4.0 * PI * er * kt).sqrt()).abs() < 1e-15 * peak);
        for x in [0.001, 0.01, 0.03] {
            let a = marcus_rate(v, er, -er + x, kt);
            let b = marcus_rate(v, er, -er - x, kt);
            assert!((a - b).abs() <= 1e-14 * a);
        }
        assert!((marcus_rate(2.0 * v, er, -0.01, kt) - 4.0 * marcus_rate(v, er, -0.01, kt)).abs() < 1e-25);
    }

    #[test]
    fn classical_sho_matches_marcus() {
        // kT ≫ ω: the short-time Gaussian decay of C is captured well before the first recurrence
        let (omega, d, beta) = (2e-4, 625.0, 100.0);
        let er = 0.5 * omega * omega * d * d;
        let sys = DuschinskiiSystem::shifted_oscillators(&[omega], &[d], &[0.0], 1e-4.into(), -er).unwrap();
        let grid = TimeGrid::new(3000.0, 600).unwrap();
        let k = eq_rate(&sys, beta, &grid).unwrap();
        let expected = marcus_rate(1e-4, er, -er, 1.0 / beta);
        assert!((k / expected - 1.0).abs() < 0.2, "{k} vs {expected}");
    }

    #[test]
    fn peak_of_a_parabola() {
        let x: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|x| -(x - 0.537_f64).powi(2)).collect();
        assert!((curve_peak(&x, &y).unwrap() - 0.537).abs() < 1e-12);
    }

    #[test]
    fn drifting_slope_is_rejected() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let population = times.iter().map(|t| t * t).collect();
        let trace = PopulationTrace { times, population };
        assert!(matches!(rate_from_trace(&trace), Err(Error::NonconvergedRate { .. })));
    }
}
