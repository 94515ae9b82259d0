use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::DiagonalSpectrum;

/// Eigenvalues of a harmonic matrix at or below this are rejected.
pub const EIGENVALUE_FLOOR: f64 = 1e-16;
const SYMMETRY_TOL: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Two diabats `½qᵀΩ²q + λᵀq + E` coupled by `V·e^{iWᵀq}`, in arbitrary coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVibronic {
    pub omega2_g: DMatrix<f64>,
    pub omega2_e: DMatrix<f64>,
    pub lambda_g: DVector<f64>,
    pub lambda_e: DVector<f64>,
    pub e_g: f64,
    pub e_e: f64,
    pub v: Complex64,
    pub w: DVector<f64>,
}

impl QuadraticVibronic {
    pub fn dim(&self) -> usize {
        self.omega2_g.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let square = |m: &DMatrix<f64>| m.nrows() == n && m.ncols() == n;
        if n == 0
            || !square(&self.omega2_g)
            || !square(&self.omega2_e)
            || self.lambda_g.len() != n
            || self.lambda_e.len() != n
            || self.w.len() != n
        {
            return Err(Error::Dimension(format!(
                "quadratic vibronic system of dimension {n} has inconsistent blocks"
            )));
        }
        for (name, m) in [("omega2_g", &self.omega2_g), ("omega2_e", &self.omega2_e)] {
            let defect = (m - m.transpose()).amax();
            if defect > SYMMETRY_TOL * m.amax().max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidParameter(format!(
                    "{name} is not symmetric (defect {defect:e})"
                )));
            }
        }
        Ok(())
    }
}

/// A two-state system in excited-state normal coordinates `x`:
///
/// `H_e = p²/2 + ½xᵀΩ_e²x`, `H_g = p²/2 + ½(Sx+d)ᵀΩ_g²(Sx+d) + ΔG`,
/// coupled by `V·e^{iWᵀx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DuschinskiiSystem {
    pub omega_g: DiagonalSpectrum,
    pub omega_e: DiagonalSpectrum,
    pub s: DMatrix<f64>,
    pub d: DVector<f64>,
    pub w: DVector<f64>,
    pub v: Complex64,
    pub delta_g: f64,
}

/// Orthogonality defect `‖SᵀS − I‖_max`.
pub fn orthogonality_defect(s: &DMatrix<f64>) -> f64 {
    (s.transpose() * s - DMatrix::identity(s.ncols(), s.ncols())).amax()
}

impl DuschinskiiSystem {
    pub fn new(
        omega_g: DiagonalSpectrum,
        omega_e: DiagonalSpectrum,
        s: DMatrix<f64>,
        d: DVector<f64>,
        w: DVector<f64>,
        v: Complex64,
        delta_g: f64,
    ) -> Result<Self> {
        let n = omega_e.len();
        if omega_g.len() != n || s.nrows() != n || s.ncols() != n || d.len() != n || w.len() != n {
            return Err(Error::Dimension(format!(
                "Duschinskii system of dimension {n} has inconsistent parts"
            )));
        }
        let defect = orthogonality_defect(&s);
        if defect > ORTHOGONALITY_TOL || (s.determinant().abs() - 1.0).abs() > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { defect });
        }
        if !(delta_g.is_finite() && v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite ΔG or V".into()));
        }
        Ok(Self {
            omega_g,
            omega_e,
            s,
            d,
            w,
            v,
            delta_g,
        })
    }

    /// Displaced oscillators with identical frequencies (`S = I`).
    pub fn shifted_oscillators(
        omega: &[f64],
        d: &[f64],
        w: &[f64],
        v: Complex64,
        delta_g: f64,
    ) -> Result<Self> {
        let spectrum = DiagonalSpectrum::new(omega.to_vec())?;
        let n = spectrum.len();
        Self::new(
            spectrum.clone(),
            spectrum,
            DMatrix::identity(n, n),
            DVector::from_column_slice(d),
            DVector::from_column_slice(w),
            v,
            delta_g,
        )
    }

    pub fn dim(&self) -> usize {
        self.omega_e.len()
    }

    /// The same system with `W → −W` (the complex-conjugate Hamiltonian).
    pub fn conjugate(&self) -> Self {
        Self {
            w: -&self.w,
            ..self.clone()
        }
    }

    pub fn with_w(&self, w: DVector<f64>) -> Self {
        assert_eq!(w.len(), self.dim());
        Self { w, ..self.clone() }
    }

    pub fn with_delta_g(&self, delta_g: f64) -> Self {
        Self {
            delta_g,
            ..self.clone()
        }
    }

    pub fn with_coupling(&self, v: Complex64) -> Self {
        Self { v, ..self.clone() }
    }

    /// Classical reorganization energy `½dᵀΩ_g²d`: the ground-diabat energy at the excited minimum.
    pub fn reorganization_energy(&self) -> f64 {
        self.d
            .iter()
            .zip(self.omega_g.frequencies())
            .map(|(d, w)| 0.5 * w * w * d * d)
            .sum()
    }
}

/// Orthonormal eigenbasis of a symmetric matrix with ascending eigenvalues and
/// each column's largest-magnitude component made positive.
fn canonical_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[i];
        if !(lambda > EIGENVALUE_FLOOR) {
            return Err(Error::NotPositiveDefinite { eigenvalue: lambda });
        }
        let col = eig.eigenvectors.column(i);
        let pivot = col.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(k, &(col * sign));
        values.push(lambda);
    }
    Ok((values, vectors))
}

/// Normal-mode frames of both diabats, kept alongside the reduced system.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub system: DuschinskiiSystem,
    /// Columns are ground-state normal modes in the original coordinates.
    pub s_g: DMatrix<f64>,
    pub s_e: DMatrix<f64>,
}

pub fn reduce_to_normal_modes(h: &QuadraticVibronic) -> Result<DuschinskiiSystem> {
    Ok(reduce_with_frames(h)?.system)
}

pub fn reduce_with_frames(h: &QuadraticVibronic) -> Result<Reduction> {
    h.validate()?;
    let (eig_g, s_g) = canonical_eigen(&h.omega2_g)?;
    let (eig_e, s_e) = canonical_eigen(&h.omega2_e)?;

    // Ω⁻²λ through the eigenbasis: S diag(1/Δ²) Sᵀ λ
    let inv_apply = |s: &DMatrix<f64>, eig: &[f64], v: &DVector<f64>| -> DVector<f64> {
        let mut y = s.transpose() * v;
        for (yi, e) in y.iter_mut().zip(eig) {
            *yi /= e;
        }
        s * y
    };
    let min_g = inv_apply(&s_g, &eig_g, &h.lambda_g);
    let min_e = inv_apply(&s_e, &eig_e, &h.lambda_e);

    let s = s_g.transpose() * &s_e;
    let d = s_g.transpose() * (&min_g - &min_e);
    let w = s_e.transpose() * &h.w;
    let delta_g = h.e_g - h.e_e + 0.5 * (h.lambda_e.dot(&min_e) - h.lambda_g.dot(&min_g));

    let omega_g = DiagonalSpectrum::new(eig_g.iter().map(|x| x.sqrt()).collect())?;
    let omega_e = DiagonalSpectrum::new(eig_e.iter().map(|x| x.sqrt()).collect())?;
    let system = DuschinskiiSystem::new(omega_g, omega_e, s, d, w, h.v, delta_g)?;
    Ok(Reduction { system, s_g, s_e })
}

/// `‖Ω² − S diag(Δ²) Sᵀ‖_max` for one diabat.
pub fn eigen_residual(omega2: &DMatrix<f64>, frame: &DMatrix<f64>, spectrum: &DiagonalSpectrum) -> f64 {
    let diag = DVector::from_iterator(spectrum.len(), spectrum.frequencies().iter().map(|w| w * w));
    (omega2 - frame * DMatrix::from_diagonal(&diag) * frame.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn trivial(omega2_g: DMatrix<f64>, omega2_e: DMatrix<f64>, lambda_g: Vec<f64>, e_g: f64) -> QuadraticVibronic {
        let n = omega2_g.nrows();
        QuadraticVibronic {
            omega2_g,
            omega2_e,
            lambda_g: DVector::from_vec(lambda_g),
            lambda_e: DVector::zeros(n),
            e_g,
            e_e: 0.25,
            v: Complex64::new(1e-4, 0.0),
            w: DVector::zeros(n),
        }
    }

    #[test]
    fn identical_diabats() {
        let h = trivial(diag(&[1.0, 4.0]), diag(&[1.0, 4.0]), vec![0.0, 0.0], 1.5);
        let sys = reduce_to_normal_modes(&h).unwrap();
        assert!((&sys.s - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!(sys.d.amax() < 1e-14);
        assert!((sys.delta_g - 1.25).abs() < 1e-14);
        assert_eq!(sys.omega_g.frequencies(), &[1.0, 2.0]);
    }

    #[test]
    fn shifted_oscillator_shift_and_gap() {
        let (w, d0) = (2e-4, 625.0);
        let h = trivial(diag(&[w * w]), diag(&[w * w]), vec![-w * w * d0], 0.1);
        let sys = reduce_to_normal_modes(&h).unwrap();
        assert!((sys.s[(0, 0)] - 1.0).abs() < 1e-15);
        // ground well sits at x = +d0, so Sx + d vanishes there
        assert!((sys.d[0] + d0).abs() < 1e-9);
        let expected = 0.1 - 0.25 - 0.5 * w * w * d0 * d0;
        assert!((sys.delta_g - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_unbound_mode() {
        let h = trivial(diag(&[1.0, 0.0]), diag(&[1.0, 1.0]), vec![0.0, 0.0], 0.0);
        assert!(matches!(
            reduce_to_normal_modes(&h),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let mut m = diag(&[1.0, 2.0]);
        m[(0, 1)] = 0.1;
        let h = trivial(m, diag(&[1.0, 1.0]), vec![0.0, 0.0], 0.0);
        assert!(matches!(reduce_to_normal_modes(&h), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn eigenvector_signs_are_canonical() {
        let mut m = diag(&[2.0, 2.0]);
        m[(0, 1)] = -1.0;
        m[(1, 0)] = -1.0;
        let (values, vectors) = canonical_eigen(&m).unwrap();
        assert!((values[0] - 1.0).abs() < 1e-14 && (values[1] - 3.0).abs() < 1e-14);
        for j in 0..2 {
            let col = vectors.column(j);
            let big = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn non_orthogonal_rotation_is_rejected() {
        let spec = DiagonalSpectrum::new(vec![1.0, 2.0]).unwrap();
        let err = DuschinskiiSystem::new(
            spec.clone(),
            spec,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            DVector::zeros(2),
            DVector::zeros(2),
            Complex64::new(0.0, 0.0),
            0.0,
        );
        assert!(matches!(err, Err(Error::NotOrthogonal { .. })));
    }
}
