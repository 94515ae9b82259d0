use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Embeds a real matrix.
    pub fn from_real(m: &nalgebra::DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &ComplexMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    /// Adds `diag` onto the main diagonal in place.
    pub fn add_diagonal(&mut self, diag: &[Complex64]) {
        assert_eq!(diag.len(), self.rows.min(self.cols));
        for (i, &d) in diag.iter().enumerate() {
            self[(i, i)] += d;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest row 1-norm (the matrix infinity norm).
    pub fn max_row_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |m_ij - m_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).norm());
            }
        }
        worst
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(i));
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> ComplexMatrix {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Strictly positive frequencies in ascending order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiagonalSpectrum {
    frequencies: Vec<f64>,
}

impl DiagonalSpectrum {
    /// Validates positivity and ascending order; use [`DiagonalSpectrum::sorted`] to sort first.
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidParameter("empty frequency spectrum".into()));
        }
        if let Some(&bad) = frequencies.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "frequencies must be positive and finite, got {bad}"
            )));
        }
        if frequencies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "frequencies must be in ascending order".into(),
            ));
        }
        Ok(Self { frequencies })
    }

    pub fn sorted(mut frequencies: Vec<f64>) -> Result<Self> {
        frequencies.sort_by(|a, b| a.total_cmp(b));
        Self::new(frequencies)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn max(&self) -> f64 {
        *self.frequencies.last().unwrap()
    }
}

/// A real square matrix `S` prepared for repeated `Sᵀ diag(c) S` products.
#[derive(Debug, Clone)]
pub struct Congruence {
    n: usize,
    /// row-major copy of S
    rows: Vec<f64>,
}

impl Congruence {
    pub fn new(s: &nalgebra::DMatrix<f64>) -> Self {
        assert!(s.is_square());
        let n = s.nrows();
        let rows = (0..n).flat_map(|k| (0..n).map(move |j| (k, j))).map(|(k, j)| s[(k, j)]).collect();
        Self { n, rows }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Sᵀ diag(c) S`, complex symmetric.
    pub fn apply(&self, diag: &[Complex64]) -> ComplexMatrix {
        let n = self.n;
        assert_eq!(diag.len(), n);
        let mut out = ComplexMatrix::zeros(n, n);
        let data = out.as_mut_slice();
        for (k, &c) in diag.iter().enumerate() {
            let row = &self.rows[k * n..(k + 1) * n];
            for i in 0..n {
                let ski = row[i] * c;
                if ski.re == 0.0 && ski.im == 0.0 {
                    continue;
                }
                for (o, &skj) in data[i * n + i..(i + 1) * n].iter_mut().zip(&row[i..]) {
                    *o += ski * skj;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                data[i * n + j] = data[j * n + i];
            }
        }
        out
    }

    /// `S v`
    pub fn mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|k| self.rows[k * n..(k + 1) * n].iter().zip(v).map(|(s, x)| x * s).sum())
            .collect()
    }

    /// `Sᵀ v`
    pub fn mul_transpose(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, &x) in v.iter().enumerate() {
            for (o, &s) in out.iter_mut().zip(&self.rows[k * n..(k + 1) * n]) {
                *o += x * s;
            }
        }
        out
    }
}

/// `Sᵀ diag(c) S` for a real `S`, returned as a complex symmetric matrix.
pub fn congruence_diag(s: &nalgebra::DMatrix<f64>, diag: &[Complex64]) -> ComplexMatrix {
    Congruence::new(s).apply(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn congruence_matches_dense_product() {
        let s = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) as f64).sin());
        let diag: Vec<Complex64> = (0..5).map(|k| Complex64::new(k as f64 - 1.5, 0.3 * k as f64)).collect();
        let got = congruence_diag(&s, &diag);
        let sc = ComplexMatrix::from_real(&s);
        let expected = sc.transpose().matmul(&ComplexMatrix::from_diagonal(&diag)).unwrap().matmul(&sc).unwrap();
        assert!(got.sub(&expected).unwrap().max_abs() < 1e-13);
        let v: Vec<Complex64> = (0..5).map(|k| Complex64::new(1.0, k as f64)).collect();
        let c = Congruence::new(&s);
        let sv = sc.matvec(&v).unwrap();
        let stv = sc.transpose().matvec(&v).unwrap();
        for k in 0..5 {
            assert!((c.mul(&v)[k] - sv[k]).norm() < 1e-13);
            assert!((c.mul_transpose(&v)[k] - stv[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn spectrum_validation() {
        assert!(DiagonalSpectrum::new(vec![1.0, 2.0]).is_ok());
        assert!(DiagonalSpectrum::new(vec![2.0, 1.0]).is_err());
        assert!(DiagonalSpectrum::new(vec![0.0]).is_err());
        assert!(DiagonalSpectrum::new(vec![]).is_err());
        assert_eq!(DiagonalSpectrum::sorted(vec![3.0, 1.0]).unwrap().frequencies(), &[1.0, 3.0]);
    }

    #[test]
    fn block_round_trip() {
        let mut m = ComplexMatrix::zeros(4, 4);
        let b = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64, j as f64));
        m.set_block(1, 2, &b);
        assert_eq!(m.block(1, 2, 2, 2), b);
        assert_eq!(m[(0, 0)], Complex64::new(0.0, 0.0));
    }
}
