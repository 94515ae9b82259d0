use nalgebra::{DMatrix, Matrix2};

use super::vibronic::{orthogonality_defect, QuadraticVibronic};
use crate::error::{Error, Result};

const TOL: f64 = 1e-10;

/// Rotation of the primary plane by `angle`.
pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Mirror across the line through the origin at `angle`.
pub fn reflection(angle: f64) -> Matrix2<f64> {
    let (s, c) = (2.0 * angle).sin_cos();
    Matrix2::new(c, s, s, -c)
}

/// Moves both wells and the spin-orbit vector by the orthogonal map `q`
/// acting on the two primary coordinates (bath coordinates untouched).
pub fn apply_point_transform(h: &QuadraticVibronic, q: &Matrix2<f64>) -> Result<QuadraticVibronic> {
    let n = h.dim();
    if n < 2 {
        return Err(Error::Dimension("point transforms need two primary coordinates".into()));
    }
    let mut full = DMatrix::identity(n, n);
    full.view_mut((0, 0), (2, 2)).copy_from(q);
    let defect = orthogonality_defect(&full);
    if defect > TOL {
        return Err(Error::NotOrthogonal { defect });
    }
    let qt = full.transpose();
    Ok(QuadraticVibronic {
        omega2_g: &full * &h.omega2_g * &qt,
        omega2_e: &full * &h.omega2_e * &qt,
        lambda_g: &full * &h.lambda_g,
        lambda_e: &full * &h.lambda_e,
        w: &full * &h.w,
        ..h.clone()
    })
}
