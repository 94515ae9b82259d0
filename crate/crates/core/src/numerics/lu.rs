use std::f64::consts::PI;
use std::ops::{Div, Mul};

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the largest row norm are treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// A complex number held as `exp(log_magnitude) · exp(i·phase)`.
///
/// Determinants of the kernel matrices overflow `f64` long before the
/// correlation functions they feed into do, so they are only ever combined in
/// this form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasedDeterminant {
    pub log_magnitude: f64,
    /// Wrapped to `(−π, π]`.
    pub phase: f64,
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

impl PhasedDeterminant {
    pub const ONE: Self = Self {
        log_magnitude: 0.0,
        phase: 0.0,
    };

    pub fn new(log_magnitude: f64, phase: f64) -> Self {
        Self {
            log_magnitude,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::new(z.norm().ln(), z.arg())
    }

    /// Product of the entries, accumulated in the log domain.
    pub fn product(values: &[Complex64]) -> Self {
        let (mut log_mag, mut phase) = (0.0, 0.0);
        for z in values {
            log_mag += z.norm().ln();
            phase += z.arg();
        }
        Self::new(log_mag, phase)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.log_magnitude.exp(), self.phase)
    }
}

impl Mul for PhasedDeterminant {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(self.log_magnitude + rhs.log_magnitude, self.phase + rhs.phase)
    }
}

impl Div for PhasedDeterminant {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        Self::new(self.log_magnitude - rhs.log_magnitude, self.phase - rhs.phase)
    }
}

/// Partial-pivoted LU factorization `P·M = L·U` of a square complex matrix.
#[derive(Debug, Clone)]
pub struct LuFactor {
    /// L (unit diagonal, strictly lower part) and U packed together.
    lu: ComplexMatrix,
    /// `perm[i]` is the original row now at position `i`.
    perm: Vec<usize>,
    swaps: usize,
}

pub fn lu_factor(m: &ComplexMatrix) -> Result<LuFactor> {
    LuFactor::new(m.clone())
}

impl LuFactor {
    /// Factorizes `m` in place.
    pub fn new(mut m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let tolerance = PIVOT_TOLERANCE * m.max_row_norm();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let data = m.as_mut_slice();

        for k in 0..n {
            let (mut p, mut best) = (k, data[k * n + k].norm_sqr());
            for i in k + 1..n {
                let v = data[i * n + k].norm_sqr();
                if v > best {
                    p = i;
                    best = v;
                }
            }
            let pivot_norm = best.sqrt();
            if !(pivot_norm >= tolerance) || pivot_norm == 0.0 {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: pivot_norm,
                    tolerance,
                });
            }
            if p != k {
                for j in 0..n {
                    data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let (head, tail) = data.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..(k + 1) * n];
            let inv = pivot_row[k].inv();
            for row in tail.chunks_exact_mut(n) {
                let f = row[k] * inv;
                row[k] = f;
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= f * u;
                }
            }
        }
        Ok(Self { lu: m, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension(format!(
                "right-hand side of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_permuted_in_place(&mut x);
        Ok(x)
    }

    fn solve_permuted_in_place(&self, x: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: Complex64 = row[..i].iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: Complex64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = (x[i] - s) / row[i];
        }
    }

    /// Solves for every column of `b`.
    pub fn solve_matrix(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::Dimension(format!(
                "right-hand side with {} rows for a {n}x{n} system",
                b.rows()
            )));
        }
        let mut out = ComplexMatrix::zeros(n, b.cols());
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(self.perm[i], j)];
            }
            self.solve_permuted_in_place(&mut col);
            for (i, c) in col.iter().enumerate() {
                out[(i, j)] = *c;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.dim();
        self.solve_matrix(&ComplexMatrix::identity(n))
            .expect("identity has matching dimension")
    }

    pub fn phased_det(&self) -> PhasedDeterminant {
        let n = self.dim();
        let (mut log_mag, mut phase) = (0.0, 0.0);
        for i in 0..n {
            let u = self.lu[(i, i)];
            log_mag += u.norm().ln();
            phase += u.arg();
        }
        if self.swaps % 2 == 1 {
            phase += PI;
        }
        PhasedDeterminant::new(log_mag, phase)
    }

    /// Plain complex determinant; may overflow for large matrices.
    pub fn det(&self) -> Complex64 {
        self.phased_det().to_complex()
    }
}

pub fn phased_det(m: &ComplexMatrix) -> Result<PhasedDeterminant> {
    Ok(lu_factor(m)?.phased_det())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = ComplexMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        // diagonal shift keeps the random draws well conditioned
        m.add_diagonal(&vec![c(n as f64 / 2.0, 0.0); n]);
        m
    }

    #[test]
    fn identity_det_and_solve() {
        let lu = lu_factor(&ComplexMatrix::identity(3)).unwrap();
        assert!((lu.det() - 1.0).norm() < 1e-15);
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0)];
        let x = lu.solve(&b).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).norm() < 1e-15);
        }
    }

    #[test]
    fn diagonal_det() {
        let m = ComplexMatrix::from_diagonal(&[c(0.0, 2.0), c(3.0, 0.0)]);
        assert!((lu_factor(&m).unwrap().det() - c(0.0, 6.0)).norm() < 1e-14);
    }

    #[test]
    fn negative_identity_has_zero_phase() {
        let m = ComplexMatrix::from_diagonal(&[c(-1.0, 0.0), c(-1.0, 0.0)]);
        let d = phased_det(&m).unwrap();
        assert!(d.log_magnitude.abs() < 1e-15);
        assert!(wrap_phase(d.phase).abs() < 1e-15);
    }

    #[test]
    fn log_domain_does_not_overflow() {
        let big = 400f64.exp();
        let m = ComplexMatrix::from_diagonal(&[c(big, 0.0), c(big, 0.0)]);
        let d = phased_det(&m).unwrap();
        assert!((d.log_magnitude - 800.0).abs() < 1e-10);
        assert!(d.phase.abs() < 1e-15);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let m = ComplexMatrix::from_row_major(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let lu = lu_factor(&m).unwrap();
        assert!((lu.det() + 1.0).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = ComplexMatrix::from_row_major(2, 2, vec![c(1.0, 1.0), c(2.0, 2.0), c(1.0, 1.0), c(2.0, 2.0)]).unwrap();
        assert!(matches!(lu_factor(&m), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(matches!(
            lu_factor(&ComplexMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn random_inverse_8() {
        let m = random_matrix(8, 7);
        let inv = lu_factor(&m).unwrap().inverse();
        let prod = m.matmul(&inv).unwrap();
        let defect = prod.sub(&ComplexMatrix::identity(8)).unwrap().max_abs();
        assert!(defect < 1e-12, "defect {defect}");
    }

    #[test]
    fn random_inverse_up_to_200() {
        for (n, seed) in [(17, 1), (64, 2), (200, 3)] {
            let m = random_matrix(n, seed);
            let inv = lu_factor(&m).unwrap().inverse();
            let defect = m.matmul(&inv).unwrap().sub(&ComplexMatrix::identity(n)).unwrap().max_abs();
            assert!(defect < 1e-10, "n={n} defect {defect}");
        }
    }

    #[test]
    fn det_matches_eigenvalue_product() {
        // independent route: Schur eigenvalues from nalgebra
        let n = 40;
        let m = random_matrix(n, 11);
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
        let eig = na.eigenvalues().expect("complex Schur converges");
        let expected = PhasedDeterminant::product(eig.as_slice());
        let got = phased_det(&m).unwrap();
        assert!((got.log_magnitude - expected.log_magnitude).abs() < 1e-8 * expected.log_magnitude.abs().max(1.0));
        assert!(wrap_phase(got.phase - expected.phase).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn det_of_product_adds(seed_a in 0u64..1000, seed_b in 0u64..1000, n in 2usize..12) {
            let a = random_matrix(n, seed_a);
            let b = random_matrix(n, seed_b + 5000);
            let ab = a.matmul(&b).unwrap();
            let da = phased_det(&a).unwrap();
            let db = phased_det(&b).unwrap();
            let dab = phased_det(&ab).unwrap();
            prop_assert!((dab.log_magnitude - da.log_magnitude - db.log_magnitude).abs() < 1e-8);
            prop_assert!(wrap_phase(dab.phase - da.phase - db.phase).abs() < 1e-8);
        }
    }
}
