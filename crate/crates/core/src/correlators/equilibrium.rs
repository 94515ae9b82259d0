use num_complex::Complex64;

use super::continuation::{GaussianValue, PathWalker};
use super::{anchor_offset, log_partition_function, CorrelationGrid};
use crate::error::{Error, Result};
use crate::model::DuschinskiiSystem;
use crate::numerics::{
    kernel_a, kernel_b, kernel_b_minus_a, ComplexMatrix, Congruence, KernelSet, LuFactor,
    PhasedDeterminant,
};

/// The matrices entering the equilibrium correlation at one time lag.
#[derive(Debug, Clone)]
pub struct EqKernelSet {
    /// `a_e(−τ−iβ) + Sᵀa_g(τ)S`
    pub a: ComplexMatrix,
    /// `b_e(−τ−iβ) + Sᵀb_g(τ)S`
    pub b: ComplexMatrix,
    /// `b_e − a_e` at `−τ−iβ`
    pub e: ComplexMatrix,
    /// `b_g − a_g` at `τ`
    pub g: ComplexMatrix,
    pub tau: f64,
}

fn thermal_time(tau: f64, beta: f64) -> Complex64 {
    Complex64::new(-tau, -beta)
}

pub fn eq_kernels(sys: &DuschinskiiSystem, tau: f64, beta: f64) -> Result<EqKernelSet> {
    let cong = Congruence::new(&sys.s);
    let te = thermal_time(tau, beta);
    let t = Complex64::new(tau, 0.0);
    let mut a = cong.apply(&kernel_a(&sys.omega_g, t)?);
    a.add_diagonal(&kernel_a(&sys.omega_e, te)?);
    let mut b = cong.apply(&kernel_b(&sys.omega_g, t)?);
    b.add_diagonal(&kernel_b(&sys.omega_e, te)?);
    Ok(EqKernelSet {
        a,
        b,
        e: ComplexMatrix::from_diagonal(&kernel_b_minus_a(&sys.omega_e, te)?),
        g: ComplexMatrix::from_diagonal(&kernel_b_minus_a(&sys.omega_g, t)?),
        tau,
    })
}

/// Equilibrium correlation `C(τ)` of a fixed system and temperature.
///
/// The thermal state is `e^{−βH_e}/Z_e` and
/// `C(τ) = Tr[e^{−iH_e(−τ−iβ)} e^{−iWᵀx} e^{−iH_gτ} e^{iWᵀx}] / Z_e`.
#[derive(Debug, Clone)]
pub struct EqCorrelator {
    sys: DuschinskiiSystem,
    beta: f64,
    cong: Congruence,
    log_z: f64,
    /// `Sᵀd`
    sd: Vec<Complex64>,
    d: Vec<Complex64>,
    w: Vec<Complex64>,
    anchor: f64,
}

impl EqCorrelator {
    pub fn new(sys: &DuschinskiiSystem, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let cong = Congruence::new(&sys.s);
        let d: Vec<Complex64> = sys.d.iter().map(|&x| x.into()).collect();
        Ok(Self {
            sd: cong.mul_transpose(&d),
            d,
            w: sys.w.iter().map(|&x| x.into()).collect(),
            log_z: log_partition_function(&sys.omega_e, beta),
            anchor: 1e-9 * anchor_offset(sys),
            sys: sys.clone(),
            beta,
            cong,
        })
    }

    pub fn system(&self) -> &DuschinskiiSystem {
        &self.sys
    }

    /// Closed form at `τ > 0` with the square-root branch left open.
    pub fn raw(&self, tau: f64) -> Result<GaussianValue> {
        let te = thermal_time(tau, self.beta);
        let ke = KernelSet::new(&self.sys.omega_e, te)?;
        let kg = KernelSet::new(&self.sys.omega_g, Complex64::new(tau, 0.0))?;

        // B − A = E + SᵀGS and B + A = H_e + SᵀH_gS, both free of cancellation
        let mut bma = self.cong.apply(&kg.g);
        bma.add_diagonal(&ke.g);
        let mut bpa = self.cong.apply(&kg.h);
        bpa.add_diagonal(&ke.h);
        let lu_minus = LuFactor::new(bma)?;
        let lu_plus = LuFactor::new(bpa)?;

        let prefactor = PhasedDeterminant::product(&ke.a)
            * PhasedDeterminant::product(&kg.a)
            / lu_minus.phased_det()
            / lu_plus.phased_det();
        let prefactor = PhasedDeterminant {
            log_magnitude: prefactor.log_magnitude - 2.0 * self.log_z,
            ..prefactor
        };

        // dᵀ G S (B−A)⁻¹ E Sᵀd
        let rhs: Vec<Complex64> = ke.g.iter().zip(&self.sd).map(|(e, u)| e * u).collect();
        let y = self.cong.mul(&lu_minus.solve(&rhs)?);
        let shift: Complex64 = self.d.iter().zip(&kg.g).zip(&y).map(|((d, g), y)| d * g * y).sum();
        let coupling: Complex64 = self.w.iter().zip(lu_plus.solve(&self.w)?).map(|(w, x)| w * x).sum();

        Ok(GaussianValue {
            prefactor,
            exponent: Complex64::i() * (shift - coupling),
        })
    }

    /// Values at ascending non-negative lags, continued from `C(0) = 1`.
    pub fn grid(&self, times: &[f64]) -> Result<CorrelationGrid> {
        if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::InvalidParameter(
                "correlation lags must be non-negative and strictly increasing".into(),
            ));
        }
        let mut values = Vec::with_capacity(times.len());
        let positive = times.iter().position(|&t| t > 0.0).unwrap_or(times.len());
        values.extend(std::iter::repeat_n(Complex64::new(1.0, 0.0), positive));
        let mut anchor_value = Complex64::new(1.0, 0.0);
        if positive < times.len() {
            let first = times[positive];
            let anchor = self.anchor.min(0.5 * first);
            let mut walker = PathWalker::anchored_near_unity(|t| self.raw(t), anchor)?;
            anchor_value = walker.current();
            walker.ramp(0.0, first)?;
            for &t in &times[positive..] {
                values.push(walker.walk_to(t)?);
            }
        }
        Ok(CorrelationGrid {
            times: times.to_vec(),
            values,
            branch_anchor: anchor_value,
        })
    }

    /// Single lag; negative lags use `C(−τ) = C(τ)*`.
    pub fn at(&self, tau: f64) -> Result<Complex64> {
        if tau == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let c = *self.grid(&[tau.abs()])?.values.last().expect("one value");
        Ok(if tau < 0.0 { c.conj() } else { c })
    }
}

pub fn eq_correlation(sys: &DuschinskiiSystem, tau: f64, beta: f64) -> Result<Complex64> {
    EqCorrelator::new(sys, beta)?.at(tau)
}

pub fn eq_correlation_grid(sys: &DuschinskiiSystem, beta: f64, times: &[f64]) -> Result<CorrelationGrid> {
    EqCorrelator::new(sys, beta)?.grid(times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{langevin_system, BathConfig, LangevinSpec};
    use crate::numerics::lu_factor;

    fn trivial() -> DuschinskiiSystem {
        DuschinskiiSystem::shifted_oscillators(&[2e-4, 5e-4], &[0.0, 0.0], &[0.0, 0.0], 1e-4.into(), 0.0).unwrap()
    }

    fn small_langevin() -> DuschinskiiSystem {
        langevin_system(&LangevinSpec {
            phi: 0.4,
            bath: BathConfig {
                modes_per_bath: 3,
                cutoff: 4e-3,
            },
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn identical_diabats_give_unity() {
        let times: Vec<f64> = (0..50).map(|k| 37.0 * k as f64).collect();
        let grid = eq_correlation_grid(&trivial(), 1000.0, &times).unwrap();
        for c in grid.values {
            assert!((c - 1.0).norm() < 1e-10, "{c}");
        }
    }

    #[test]
    fn short_lag_limit_is_one() {
        let c = eq_correlation(&small_langevin(), 1e-6, 1000.0).unwrap();
        assert!((c - 1.0).norm() < 1e-6);
        let grid = eq_correlation_grid(&small_langevin(), 1000.0, &[10.0]).unwrap();
        assert!((grid.branch_anchor - 1.0).norm() < 1e-8);
    }

    #[test]
    fn bounded_and_conjugate_symmetric() {
        let corr = EqCorrelator::new(&small_langevin(), 1000.0).unwrap();
        let times: Vec<f64> = (0..=60).map(|k| 25.0 * k as f64).collect();
        let grid = corr.grid(&times).unwrap();
        for c in &grid.values {
            assert!(c.norm() <= 1.0 + 1e-6);
        }
        let neg = corr.at(-250.0).unwrap();
        assert!((neg - grid.values[10].conj()).norm() < 1e-12);
    }

    #[test]
    fn spin_orbit_sign_is_irrelevant() {
        let sys = small_langevin();
        let times: Vec<f64> = (0..=40).map(|k| 30.0 * k as f64).collect();
        let up = eq_correlation_grid(&sys, 1000.0, &times).unwrap();
        let down = eq_correlation_grid(&sys.conjugate(), 1000.0, &times).unwrap();
        for (a, b) in up.values.iter().zip(&down.values) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn kernel_assembly_without_rotation_is_diagonal() {
        let k = eq_kernels(&trivial(), 300.0, 1000.0).unwrap();
        assert!(k.a[(0, 1)].norm() == 0.0 && k.b[(1, 0)].norm() == 0.0);
        assert!(k.a.symmetry_defect() < 1e-10 && k.b.symmetry_defect() < 1e-10);
    }

    #[test]
    fn g_two_ways() {
        let sys = small_langevin();
        let tau = 321.0;
        let k = eq_kernels(&sys, tau, 1000.0).unwrap();
        let t = Complex64::new(tau, 0.0);
        let cong = Congruence::new(&sys.s);
        let b = kernel_b(&sys.omega_g, t).unwrap();
        let a = kernel_a(&sys.omega_g, t).unwrap();
        let diff: Vec<Complex64> = b.iter().zip(&a).map(|(b, a)| b - a).collect();
        let g_diag: Vec<Complex64> = (0..sys.dim()).map(|i| k.g[(i, i)]).collect();
        let lhs = cong.apply(&diff);
        let rhs = cong.apply(&g_diag);
        assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * rhs.max_abs());
    }

    #[test]
    fn block_inverse_identity() {
        // (B − AB⁻¹A)⁻¹ is the leading block of [[B, A], [A, B]]⁻¹, and
        // det B · det(B − AB⁻¹A) = det(B − A) · det(B + A)
        let sys = small_langevin();
        let k = eq_kernels(&sys, 410.0, 1000.0).unwrap();
        let n = sys.dim();
        let mut big = ComplexMatrix::zeros(2 * n, 2 * n);
        big.set_block(0, 0, &k.b);
        big.set_block(0, n, &k.a);
        big.set_block(n, 0, &k.a);
        big.set_block(n, n, &k.b);
        let direct = lu_factor(&big).unwrap().inverse().block(0, 0, n, n);

        let lu_b = lu_factor(&k.b).unwrap();
        let schur = k.b.sub(&k.a.matmul(&lu_b.solve_matrix(&k.a).unwrap()).unwrap()).unwrap();
        let lu_schur = lu_factor(&schur).unwrap();
        let blockwise = lu_schur.inverse();
        assert!(direct.sub(&blockwise).unwrap().max_abs() <= 1e-9 * direct.max_abs());

        let lhs = lu_b.phased_det() * lu_schur.phased_det();
        let rhs = lu_factor(&k.b.sub(&k.a).unwrap())
            .unwrap()
            .phased_det()
            * lu_factor(&k.b.add(&k.a).unwrap()).unwrap().phased_det();
        assert!((lhs.log_magnitude - rhs.log_magnitude).abs() < 1e-9);
        assert!(crate::numerics::wrap_phase(lhs.phase - rhs.phase).abs() < 1e-9);
    }

    #[test]
    fn stable_form_matches_literal_form() {
        // the evaluated exponent and prefactor against the literal A, B, E, G expression
        let sys = small_langevin();
        let (tau, beta) = (275.0, 1000.0);
        let corr = EqCorrelator::new(&sys, beta).unwrap();
        let raw = corr.raw(tau).unwrap();
        let k = eq_kernels(&sys, tau, beta).unwrap();
        let s = ComplexMatrix::from_real(&sys.s);
        let st = s.transpose();
        let d: Vec<Complex64> = sys.d.iter().map(|&x| x.into()).collect();
        let w: Vec<Complex64> = sys.w.iter().map(|&x| x.into()).collect();
        let bma = k.b.sub(&k.a).unwrap();
        let bpa = k.b.add(&k.a).unwrap();
        let inner = st.matvec(&d).unwrap();
        let inner = k.e.matvec(&inner).unwrap();
        let inner = lu_factor(&bma).unwrap().solve(&inner).unwrap();
        let inner = k.g.matmul(&s).unwrap().matvec(&inner).unwrap();
        let shift: Complex64 = d.iter().zip(&inner).map(|(a, b)| a * b).sum();
        let coupling: Complex64 = w.iter().zip(lu_factor(&bpa).unwrap().solve(&w).unwrap()).map(|(a, b)| a * b).sum();
        let expected = Complex64::i() * (shift - coupling);
        assert!((raw.exponent - expected).norm() < 1e-9 * expected.norm().max(1.0));
    }
}
