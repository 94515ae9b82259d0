use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::fock::{build_operators, FockOperators, FockSpec};
use crate::correlators::CorrelationGrid2D;
use crate::dynamics::{PopulationTrace, TimeGrid};
use crate::error::{Error, Result};

/// Probability allowed in the top tenth of any mode's levels.
pub const LEAK_TOLERANCE: f64 = 1e-8;
/// Thermal weights below this (relative) are dropped from traces.
const WEIGHT_FLOOR: f64 = 1e-15;
const UNITARITY_TOLERANCE: f64 = 1e-9;

/// Both Hamiltonians diagonalized in a truncated Fock basis.
#[derive(Debug, Clone)]
pub struct ExactSystem {
    spec: FockSpec,
    ops: FockOperators,
    /// ascending `H_g` eigenvalues
    eps: DVector<f64>,
    /// `H_g` eigenvectors as columns
    u_g: DMatrix<f64>,
    /// `U_gᵀ e^{iWᵀx}`, rows in the `H_g` eigenbasis, columns in the Fock basis
    b: DMatrix<Complex64>,
}

fn sorted_eigen(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_fn(order.len(), |i, _| eig.eigenvalues[order[i]]);
    let vecs = DMatrix::from_fn(order.len(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Boltzmann weights `e^{−β(E−E₀)}` and `ln Z`.
fn boltzmann(energies: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    (w.iter().map(|x| x / z).collect(), z.ln() - beta * e0)
}

impl ExactSystem {
    pub fn new(spec: FockSpec) -> Result<Self> {
        let ops = build_operators(&spec)?;
        let (eps, u_g) = sorted_eigen(ops.h_g.clone());
        let b = u_g.map(Complex64::from).transpose() * &ops.spin_orbit;
        Ok(Self { spec, ops, eps, u_g, b })
    }

    pub fn spec(&self) -> &FockSpec {
        &self.spec
    }

    pub fn operators(&self) -> &FockOperators {
        &self.ops
    }

    pub fn ground_levels(&self) -> &[f64] {
        self.eps.as_slice()
    }

    /// Probability the thermal states put in the top tenth of the levels of any mode.
    pub fn truncation_leak(&self, beta: f64) -> f64 {
        let spec = &self.spec;
        let cut = (0.9 * spec.levels() as f64).floor() as usize;
        let top = |i: usize| (0..spec.modes()).any(|m| spec.occupation(i, m) >= cut);
        let (pg, _) = boltzmann(self.eps.as_slice(), beta);
        let (pe, _) = boltzmann(self.ops.h_e.as_slice(), beta);
        let mut ground = 0.0;
        let mut excited = 0.0;
        for i in (0..spec.dim()).filter(|&i| top(i)) {
            excited += pe[i];
            ground += pg
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > WEIGHT_FLOOR)
                .map(|(k, p)| p * self.u_g[(i, k)].powi(2))
                .sum::<f64>();
        }
        ground.max(excited)
    }

    pub fn check_truncation(&self, beta: f64) -> Result<()> {
        let leak = self.truncation_leak(beta);
        if leak > LEAK_TOLERANCE {
            return Err(Error::TruncationError(format!(
                "thermal probability {leak:e} in the top 10% of {} levels",
                self.spec.levels()
            )));
        }
        Ok(())
    }

    /// `Tr[e^{−(β−iτ)H_e} e^{−iWᵀx} e^{−iH_gτ} e^{iWᵀx}] / Z_e`.
    pub fn eq_correlation(&self, tau: f64, beta: f64) -> Complex64 {
        let (pe, _) = boltzmann(self.ops.h_e.as_slice(), beta);
        let mut total = Complex64::new(0.0, 0.0);
        for (n, &p) in pe.iter().enumerate() {
            if p < WEIGHT_FLOOR {
                continue;
            }
            let inner: Complex64 = (0..self.eps.len())
                .map(|k| self.b[(k, n)].norm_sqr() * Complex64::from_polar(1.0, -self.eps[k] * tau))
                .sum();
            total += p * Complex64::from_polar(1.0, self.ops.h_e[n] * tau) * inner;
        }
        total
    }

    /// `M(t)_{jk} = Σ_n B_{jn} e^{−iE_n t} U_{nk}` for the thermally occupied `k`.
    fn half_propagator(&self, t: f64, occupied: &[usize]) -> DMatrix<Complex64> {
        let n = self.eps.len();
        let phases: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, -self.ops.h_e[i] * t)).collect();
        let right = DMatrix::from_fn(n, occupied.len(), |i, c| phases[i] * self.u_g[(i, occupied[c])]);
        &self.b * right
    }

    /// `Tr[e^{−βH_g} e^{iH_et′} e^{−iWᵀx} e^{−iH_g(t′−t″)} e^{iWᵀx} e^{−iH_et″}] / Z_g` on `times × times`.
    pub fn neq_correlation_grid(&self, times: &[f64], beta: f64) -> CorrelationGrid2D {
        let (pg, _) = boltzmann(self.eps.as_slice(), beta);
        let occupied: Vec<usize> = (0..pg.len()).filter(|&k| pg[k] > WEIGHT_FLOOR).collect();
        let halves: Vec<DMatrix<Complex64>> = times.iter().map(|&t| self.half_propagator(t, &occupied)).collect();
        let len = times.len();
        let mut values = vec![Complex64::new(0.0, 0.0); len * len];
        for i in 0..len {
            for j in 0..len {
                let tau = times[i] - times[j];
                let mut total = Complex64::new(0.0, 0.0);
                for (c, &k) in occupied.iter().enumerate() {
                    let col: Complex64 = (0..self.eps.len())
                        .map(|r| {
                            halves[i][(r, c)].conj() * Complex64::from_polar(1.0, -self.eps[r] * tau) * halves[j][(r, c)]
                        })
                        .sum();
                    total += pg[k] * col;
                }
                values[i * len + j] = total;
            }
        }
        CorrelationGrid2D {
            times: times.to_vec(),
            values,
            branch_anchor: Complex64::new(1.0, 0.0),
        }
    }

    pub fn neq_correlation(&self, t1: f64, t2: f64, beta: f64) -> Complex64 {
        self.neq_correlation_grid(&[t1, t2], beta).get(0, 1)
    }

    /// Exact two-state dynamics from `|e⟩⟨e| ⊗ e^{−βH_g}/Z_g` with coupling
    /// `⟨g|V̂|e⟩ = V e^{iWᵀx}`; returns the ground-state population on the grid.
    pub fn populations(&self, coupling: Complex64, delta_g: f64, beta: f64, grid: &TimeGrid) -> Result<PopulationTrace> {
        let n = self.eps.len();
        let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            h[(i, i)] = self.ops.h_e[i].into();
            for j in 0..n {
                h[(n + i, n + j)] = self.ops.h_g[(i, j)].into();
                h[(n + i, j)] = coupling * self.ops.spin_orbit[(i, j)];
                h[(j, n + i)] = (coupling * self.ops.spin_orbit[(i, j)]).conj();
            }
            h[(n + i, n + i)] += delta_g;
        }
        let eig = SymmetricEigen::new(h);
        let dt = grid.dt();
        let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * dt));
        let step = &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint();
        let defect = (step.adjoint() * &step - DMatrix::identity(2 * n, 2 * n)).camax();
        if defect > UNITARITY_TOLERANCE {
            return Err(Error::StepError { defect });
        }

        let (pg, _) = boltzmann(self.eps.as_slice(), beta);
        let occupied: Vec<usize> = (0..n).filter(|&k| pg[k] > WEIGHT_FLOOR).collect();
        let mut psi = DMatrix::<Complex64>::from_fn(2 * n, occupied.len(), |i, c| {
            if i < n {
                self.u_g[(i, occupied[c])].into()
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let weights: Vec<f64> = occupied.iter().map(|&k| pg[k]).collect();
        let kept: f64 = weights.iter().sum();
        let measure = |psi: &DMatrix<Complex64>| -> (f64, f64) {
            let mut ground = 0.0;
            let mut norm = 0.0;
            for (c, w) in weights.iter().enumerate() {
                let col = psi.column(c);
                let g: f64 = col.rows(n, n).iter().map(|z| z.norm_sqr()).sum();
                ground += w * g;
                norm += w * (col.rows(0, n).iter().map(|z| z.norm_sqr()).sum::<f64>() + g);
            }
            (ground, norm)
        };
        let mut population = Vec::with_capacity(grid.len());
        population.push(0.0);
        for _ in 0..grid.steps {
            psi = &step * psi;
            let (ground, norm) = measure(&psi);
            if (norm - kept).abs() > UNITARITY_TOLERANCE {
                return Err(Error::StepError {
                    defect: (norm - kept).abs(),
                });
            }
            population.push(ground / kept);
        }
        Ok(PopulationTrace {
            times: grid.times(),
            population,
        })
    }

    /// Mean spacing of the lower half of the `H_g` spectrum.
    pub fn mean_level_spacing(&self) -> f64 {
        let half = (self.eps.len() / 2).max(1);
        (self.eps[half] - self.eps[0]) / half as f64
    }

    /// `2π Σ P_n |⟨g,k|V̂|e,n⟩|² δ_σ(ε_k + ΔG − E_n)` from the thermal excited state.
    pub fn fgr_rate(&self, coupling: Complex64, delta_g: f64, beta: f64, sigma: f64) -> Result<f64> {
        let spacing = self.mean_level_spacing();
        if sigma <= spacing / 5.0 {
            return Err(Error::InvalidParameter(format!(
                "broadening {sigma:e} must exceed a fifth of the level spacing {spacing:e}"
            )));
        }
        let (pe, _) = boltzmann(self.ops.h_e.as_slice(), beta);
        let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
        let mut total = 0.0;
        for (n, &p) in pe.iter().enumerate() {
            if p < WEIGHT_FLOOR {
                continue;
            }
            for k in 0..self.eps.len() {
                let gap = self.eps[k] + delta_g - self.ops.h_e[n];
                total += p * self.b[(k, n)].norm_sqr() * norm * (-0.5 * (gap / sigma).powi(2)).exp();
            }
        }
        Ok(2.0 * PI * coupling.norm_sqr() * total)
    }
}

fn checked(spec: &FockSpec, beta: f64) -> Result<ExactSystem> {
    let exact = ExactSystem::new(spec.clone())?;
    exact.check_truncation(beta)?;
    Ok(exact)
}

pub fn exact_eq_correlation(spec: &FockSpec, tau: f64, beta: f64) -> Result<Complex64> {
    Ok(checked(spec, beta)?.eq_correlation(tau, beta))
}

pub fn exact_neq_correlation(spec: &FockSpec, t1: f64, t2: f64, beta: f64) -> Result<Complex64> {
    Ok(checked(spec, beta)?.neq_correlation(t1, t2, beta))
}

pub fn exact_populations(spec: &FockSpec, beta: f64, grid: &TimeGrid) -> Result<PopulationTrace> {
    let sys = spec.system();
    checked(spec, beta)?.populations(sys.v, sys.delta_g, beta, grid)
}

/// State-sum rate with `σ` defaulting to three mean level spacings.
pub fn fgr_state_sum(spec: &FockSpec, beta: f64, sigma: Option<f64>) -> Result<f64> {
    let exact = checked(spec, beta)?;
    let sigma = sigma.unwrap_or_else(|| 3.0 * exact.mean_level_spacing());
    let sys = spec.system();
    exact.fgr_rate(sys.v, sys.delta_g, beta, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DuschinskiiSystem;

    fn small(w: f64) -> FockSpec {
        let sys = DuschinskiiSystem::shifted_oscillators(&[1e-3], &[30.0], &[w], 1e-5.into(), -0.002).unwrap();
        FockSpec::new(sys, 40).unwrap()
    }

    #[test]
    fn trivial_system_gives_one() {
        let sys = DuschinskiiSystem::shifted_oscillators(&[1e-3, 2e-3], &[0.0, 0.0], &[0.0, 0.0], 1e-5.into(), 0.0).unwrap();
        let exact = ExactSystem::new(FockSpec::new(sys, 8).unwrap()).unwrap();
        assert!((exact.eq_correlation(700.0, 1000.0) - 1.0).norm() < 1e-12);
        assert!((exact.neq_correlation(700.0, 200.0, 1000.0) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn diagonal_is_one() {
        let exact = ExactSystem::new(small(0.02)).unwrap();
        assert!((exact.neq_correlation(450.0, 450.0, 1000.0) - 1.0).norm() < 1e-10);
    }

    #[test]
    fn truncation_is_detected() {
        let sys = DuschinskiiSystem::shifted_oscillators(&[1e-3], &[300.0], &[0.0], 1e-5.into(), 0.0).unwrap();
        let exact = ExactSystem::new(FockSpec::new(sys, 20).unwrap()).unwrap();
        assert!(matches!(exact.check_truncation(1000.0), Err(Error::TruncationError(_))));
        assert!(ExactSystem::new(small(0.02)).unwrap().check_truncation(1000.0).is_ok());
    }

    #[test]
    fn zero_coupling_never_transfers() {
        let exact = ExactSystem::new(small(0.02)).unwrap();
        let grid = TimeGrid::new(2000.0, 20).unwrap();
        let p = exact.populations(0.0.into(), -0.002, 1000.0, &grid).unwrap();
        assert!(p.population.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn state_sum_spin_independent_and_quadratic() {
        let up = ExactSystem::new(small(0.02)).unwrap();
        let down = ExactSystem::new(small(-0.02)).unwrap();
        let sigma = 3.0 * up.mean_level_spacing();
        let a = up.fgr_rate(1e-5.into(), -0.002, 1000.0, sigma).unwrap();
        let b = down.fgr_rate(1e-5.into(), -0.002, 1000.0, sigma).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let c = up.fgr_rate(2e-5.into(), -0.002, 1000.0, sigma).unwrap();
        assert!((c - 4.0 * a).abs() <= 1e-12 * c);
        assert!(up.fgr_rate(1e-5.into(), -0.002, 1000.0, 1e-6).is_err());
    }
}
