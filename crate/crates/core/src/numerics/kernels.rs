//! Complex-time harmonic propagator kernels.
//!
//! For a diagonal frequency matrix `Ω` the position-space propagator of
//! `p²/2 + ½xᵀΩ²x` is built from
//!
//! * `a(t) = Ω / sin(Ωt)`
//! * `b(t) = Ω / tan(Ωt)`
//!
//! and the correlation formulas also need the combinations
//! `b − a = −Ω tan(Ωt/2)` and `b + a = Ω cot(Ωt/2)`, which are evaluated
//! directly because the subtraction cancels catastrophically for small `Ωt`.
//!
//! Arguments may be complex (`t = −τ − iβ` for thermal factors). When
//! `|Im(Ωt)|` is large the hyperbolic growth is factored out analytically so
//! that `βω` well beyond the overflow point of `cosh` stays finite.

use num_complex::Complex64;

use super::DiagonalSpectrum;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Beyond this `|Im z|` the exponential form is used.
const DIRECT_LIMIT: f64 = 20.0;
const SINGULAR_TOL: f64 = 1e-300;

#[derive(Debug, Clone, Copy)]
enum Trig {
    /// 1/sin z
    Csc,
    /// cos z / sin z
    Cot,
    /// tan z
    Tan,
}

/// Evaluates csc, cot or tan of a complex argument without overflow.
fn trig(kind: Trig, z: Complex64) -> Option<Complex64> {
    if z.im.abs() < DIRECT_LIMIT {
        let (s, c) = (z.sin(), z.cos());
        return match kind {
            Trig::Csc | Trig::Cot if s.norm() < SINGULAR_TOL => None,
            Trig::Tan if c.norm() < SINGULAR_TOL => None,
            Trig::Csc => Some(s.inv()),
            Trig::Cot => Some(c / s),
            Trig::Tan => Some(s / c),
        };
    }
    // r = e^{±2iz} with |r| <= 1; sin and cos are both dominated by e^{|Im z|}.
    if z.im > 0.0 {
        let r = (2.0 * I * z).exp();
        Some(match kind {
            Trig::Csc => 2.0 * I * (I * z).exp() / (r - ONE),
            Trig::Cot => I * (r + ONE) / (r - ONE),
            Trig::Tan => -I * (r - ONE) / (r + ONE),
        })
    } else {
        let r = (-2.0 * I * z).exp();
        Some(match kind {
            Trig::Csc => 2.0 * I * (-I * z).exp() / (ONE - r),
            Trig::Cot => I * (ONE + r) / (ONE - r),
            Trig::Tan => -I * (ONE - r) / (ONE + r),
        })
    }
}

fn map_kernel(
    omega: &DiagonalSpectrum,
    t: Complex64,
    scale: f64,
    kind: Trig,
    sign: f64,
) -> Result<Vec<Complex64>> {
    omega
        .frequencies()
        .iter()
        .map(|&w| {
            trig(kind, w * scale * t)
                .map(|v| sign * w * v)
                .ok_or(Error::SingularKernel {
                    omega: w,
                    t_re: t.re,
                    t_im: t.im,
                })
        })
        .collect()
}

/// Diagonal of `a(t) = Ω [sin(Ωt)]⁻¹`.
pub fn kernel_a(omega: &DiagonalSpectrum, t: Complex64) -> Result<Vec<Complex64>> {
    map_kernel(omega, t, 1.0, Trig::Csc, 1.0)
}

/// Diagonal of `b(t) = Ω [tan(Ωt)]⁻¹`.
pub fn kernel_b(omega: &DiagonalSpectrum, t: Complex64) -> Result<Vec<Complex64>> {
    map_kernel(omega, t, 1.0, Trig::Cot, 1.0)
}

/// Diagonal of `b(t) − a(t) = −Ω tan(Ωt/2)`.
pub fn kernel_b_minus_a(omega: &DiagonalSpectrum, t: Complex64) -> Result<Vec<Complex64>> {
    map_kernel(omega, t, 0.5, Trig::Tan, -1.0)
}

/// Diagonal of `b(t) + a(t) = Ω cot(Ωt/2)`.
pub fn kernel_b_plus_a(omega: &DiagonalSpectrum, t: Complex64) -> Result<Vec<Complex64>> {
    map_kernel(omega, t, 0.5, Trig::Cot, 1.0)
}

/// All four kernels at one time argument.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// `b − a`
    pub g: Vec<Complex64>,
    /// `b + a`
    pub h: Vec<Complex64>,
}

impl KernelSet {
    pub fn new(omega: &DiagonalSpectrum, t: Complex64) -> Result<Self> {
        Ok(Self {
            a: kernel_a(omega, t)?,
            b: kernel_b(omega, t)?,
            g: kernel_b_minus_a(omega, t)?,
            h: kernel_b_plus_a(omega, t)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn spec(w: &[f64]) -> DiagonalSpectrum {
        DiagonalSpectrum::sorted(w.to_vec()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn a_at_quarter_period_is_one() {
        let a = kernel_a(&spec(&[1.0]), c(PI / 2.0, 0.0)).unwrap();
        assert!((a[0] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn b_at_eighth_period_is_one() {
        let b = kernel_b(&spec(&[1.0]), c(PI / 4.0, 0.0)).unwrap();
        assert!((b[0] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn imaginary_time_values() {
        // 2e-4 / sin(-0.2i) = 2e-4 i / sinh(0.2)
        let a = kernel_a(&spec(&[2e-4]), c(0.0, -1000.0)).unwrap();
        let expected = c(0.0, 2e-4 / 0.2f64.sinh());
        assert!((a[0] - expected).norm() < 1e-15 * expected.norm().max(1.0) + 1e-18);
        assert!((a[0].im - 9.933_5e-4).abs() < 1e-7);

        let b = kernel_b(&spec(&[3e-4]), c(0.0, -2000.0)).unwrap();
        let expected = c(0.0, 3e-4 / 0.6f64.tanh());
        assert!((b[0] - expected).norm() < 1e-18);
        // quoted to four digits as 5.589e-4; the exact value is 5.5861e-4
        assert!((b[0].im - 5.589e-4).abs() < 1e-3 * 5.589e-4);
    }

    #[test]
    fn zero_time_is_singular() {
        assert!(matches!(
            kernel_a(&spec(&[1.0]), c(0.0, 0.0)),
            Err(Error::SingularKernel { .. })
        ));
        assert!(matches!(
            kernel_b(&spec(&[1.0]), c(0.0, 0.0)),
            Err(Error::SingularKernel { .. })
        ));
    }

    #[test]
    fn huge_imaginary_argument_stays_finite() {
        // beta*omega = 5000 would overflow cosh
        let w = spec(&[5.0]);
        let t = c(-3.0, -1000.0);
        let a = kernel_a(&w, t).unwrap();
        let b = kernel_b(&w, t).unwrap();
        assert!(a[0].norm() < 1e-300);
        assert!((b[0] - c(0.0, 5.0)).norm() < 1e-12);
        let g = kernel_b_minus_a(&w, t).unwrap();
        let h = kernel_b_plus_a(&w, t).unwrap();
        assert!((g[0] - c(0.0, 5.0)).norm() < 1e-12);
        assert!((h[0] - c(0.0, 5.0)).norm() < 1e-12);
    }

    #[test]
    fn exponential_branch_matches_direct_branch() {
        // |Im z| just above the switch point, where both forms are accurate
        for &(re, im) in &[(0.3, 21.0), (-1.7, 25.0), (2.0, -22.0), (-0.1, -30.0)] {
            let z = c(re, im);
            let direct_csc = z.sin().inv();
            let direct_cot = z.cos() / z.sin();
            let direct_tan = z.sin() / z.cos();
            let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm();
            assert!(rel(trig(Trig::Csc, z).unwrap(), direct_csc) < 1e-12);
            assert!(rel(trig(Trig::Cot, z).unwrap(), direct_cot) < 1e-12);
            assert!(rel(trig(Trig::Tan, z).unwrap(), direct_tan) < 1e-12);
        }
    }

    #[test]
    fn half_angle_identity_unit_frequency() {
        let w = spec(&[1.0]);
        let t = c(0.7, -0.3);
        let a = kernel_a(&w, t).unwrap()[0];
        let b = kernel_b(&w, t).unwrap()[0];
        assert!(((b - a) + (t / 2.0).tan()).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn b_minus_a_matches_half_angle_form(
            w in 1e-4f64..1e-2,
            re in -5e4f64..5e4,
            im in -3e3f64..3e3,
        ) {
            let spec = spec(&[w]);
            let t = c(re, im);
            prop_assume!((w * t).sin().norm() > 1e-6);
            prop_assume!((w * t / 2.0).cos().norm() > 1e-6);
            let a = kernel_a(&spec, t).unwrap()[0];
            let b = kernel_b(&spec, t).unwrap()[0];
            let g = kernel_b_minus_a(&spec, t).unwrap()[0];
            let h = kernel_b_plus_a(&spec, t).unwrap()[0];
            let scale = a.norm().max(b.norm()).max(g.norm());
            prop_assert!(((b - a) - g).norm() <= 1e-12 * scale);
            prop_assert!(((b + a) - h).norm() <= 1e-12 * a.norm().max(b.norm()).max(h.norm()));
        }

        #[test]
        fn kernels_are_odd(
            w in 1e-4f64..1e-2,
            re in -5e4f64..5e4,
            im in -3e3f64..3e3,
        ) {
            let spec = spec(&[w]);
            let t = c(re, im);
            prop_assume!((w * t).sin().norm() > 1e-6);
            let a = kernel_a(&spec, t).unwrap()[0];
            let am = kernel_a(&spec, -t).unwrap()[0];
            let b = kernel_b(&spec, t).unwrap()[0];
            let bm = kernel_b(&spec, -t).unwrap()[0];
            prop_assert!((a + am).norm() <= 1e-12 * a.norm());
            prop_assert!((b + bm).norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }
}
