use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::DuschinskiiSystem;

/// Largest product basis accepted.
pub const MAX_DIMENSION: usize = 14400;

/// Truncated number basis of the excited-state oscillators for a 1- or 2-mode system.
#[derive(Debug, Clone)]
pub struct FockSpec {
    system: DuschinskiiSystem,
    levels: usize,
}

impl FockSpec {
    pub fn new(system: DuschinskiiSystem, levels: usize) -> Result<Self> {
        let n = system.dim();
        if !(1..=2).contains(&n) {
            return Err(Error::Dimension(format!("Fock oracle handles 1 or 2 modes, got {n}")));
        }
        if levels < 2 {
            return Err(Error::InvalidParameter("at least two levels per mode".into()));
        }
        match levels.checked_pow(n as u32) {
            Some(d) if d <= MAX_DIMENSION => Ok(Self { system, levels }),
            _ => Err(Error::InvalidParameter(format!(
                "{levels} levels on {n} modes exceeds the {MAX_DIMENSION}-state basis limit"
            ))),
        }
    }

    pub fn system(&self) -> &DuschinskiiSystem {
        &self.system
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn modes(&self) -> usize {
        self.system.dim()
    }

    pub fn dim(&self) -> usize {
        self.levels.pow(self.modes() as u32)
    }

    /// Same system with `levels` raised by the given fraction.
    pub fn enlarged(&self, fraction: f64) -> Result<Self> {
        let levels = ((self.levels as f64) * (1.0 + fraction)).ceil() as usize;
        Self::new(self.system.clone(), levels)
    }

    /// Occupation number of `mode` in basis state `index`.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        let stride = self.levels.pow((self.modes() - 1 - mode) as u32);
        (index / stride) % self.levels
    }
}

/// Dense operators in the truncated basis.
#[derive(Debug, Clone)]
pub struct FockOperators {
    /// `H_e` is diagonal in this basis.
    pub h_e: DVector<f64>,
    pub h_g: DMatrix<f64>,
    pub x: Vec<DMatrix<f64>>,
    /// `e^{iWᵀx}`
    pub spin_orbit: DMatrix<Complex64>,
}

/// Position and exact position-squared matrices of one mode.
fn mode_matrices(spec: &FockSpec, mode: usize, omega: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = spec.dim();
    let len = 1.0 / (2.0 * omega);
    let stride = spec.levels.pow((spec.modes() - 1 - mode) as u32);
    let mut x = DMatrix::zeros(n, n);
    let mut x2 = DMatrix::zeros(n, n);
    for i in 0..n {
        let k = spec.occupation(i, mode);
        x2[(i, i)] = (2 * k + 1) as f64 * len;
        if k + 1 < spec.levels {
            let j = i + stride;
            let v = (((k + 1) as f64) * len).sqrt();
            x[(i, j)] = v;
            x[(j, i)] = v;
        }
        if k + 2 < spec.levels {
            let j = i + 2 * stride;
            let v = (((k + 1) * (k + 2)) as f64).sqrt() * len;
            x2[(i, j)] = v;
            x2[(j, i)] = v;
        }
    }
    (x, x2)
}

pub fn build_operators(spec: &FockSpec) -> Result<FockOperators> {
    let sys = spec.system();
    let n = spec.dim();
    let m = spec.modes();
    let we = sys.omega_e.frequencies();
    let wg2: Vec<f64> = sys.omega_g.frequencies().iter().map(|w| w * w).collect();

    let h_e = DVector::from_fn(n, |i, _| (0..m).map(|k| we[k] * (spec.occupation(i, k) as f64 + 0.5)).sum());
    let (x, x2): (Vec<_>, Vec<_>) = (0..m).map(|k| mode_matrices(spec, k, we[k])).unzip();

    // H_g = H_e + ½xᵀ(SᵀΩ_g²S − Ω_e²)x + (SᵀΩ_g²d)ᵀx + ½dᵀΩ_g²d
    let s = &sys.s;
    let curvature = DMatrix::from_fn(m, m, |i, j| (0..m).map(|k| s[(k, i)] * wg2[k] * s[(k, j)]).sum::<f64>());
    let force: Vec<f64> = (0..m).map(|i| (0..m).map(|k| s[(k, i)] * wg2[k] * sys.d[k]).sum()).collect();
    let offset: f64 = 0.5 * (0..m).map(|k| wg2[k] * sys.d[k] * sys.d[k]).sum::<f64>();

    let mut h_g = DMatrix::from_diagonal(&h_e);
    for i in 0..m {
        h_g += &x2[i] * (0.5 * (curvature[(i, i)] - we[i] * we[i]));
        h_g += &x[i] * force[i];
        for j in 0..i {
            h_g += (&x[i] * &x[j]) * curvature[(i, j)];
        }
    }
    for i in 0..n {
        h_g[(i, i)] += offset;
    }

    let mut wx = DMatrix::zeros(n, n);
    for (k, xk) in x.iter().enumerate() {
        wx += xk * sys.w[k];
    }
    let eig = SymmetricEigen::new(wx);
    let phases = eig.eigenvalues.map(|xi| Complex64::from_polar(1.0, xi));
    let vecs = eig.eigenvectors.map(Complex64::from);
    let spin_orbit = &vecs * DMatrix::from_diagonal(&phases) * vecs.transpose();

    Ok(FockOperators { h_e, h_g, x, spin_orbit })
}
