use num_complex::Complex64;

/// Running trapezoid integral of uniformly spaced samples, starting at 0.
pub fn cumulative_trapezoid(values: &[Complex64], dt: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = Complex64::new(0.0, 0.0);
    if let Some(&first) = values.first() {
        out.push(acc);
        let mut prev = first;
        for &v in &values[1..] {
            acc += 0.5 * dt * (prev + v);
            out.push(acc);
            prev = v;
        }
    }
    out
}

/// `∫₀^{t_k}∫₀^{t_k} f(t_i, t_j)` for every `k` by the product trapezoid rule.
///
/// `f` is given row-major on the square grid.
pub fn cumulative_square_trapezoid(f: &[Complex64], len: usize, dt: f64) -> Vec<Complex64> {
    assert_eq!(f.len(), len * len, "square grid expected");
    if len == 0 {
        return Vec::new();
    }
    // rows[i] holds the running trapezoid of row i over its columns
    let mut rows = vec![Complex64::new(0.0, 0.0); len];
    let mut out = Vec::with_capacity(len);
    out.push(Complex64::new(0.0, 0.0));
    for k in 1..len {
        for (i, row) in rows.iter_mut().enumerate() {
            *row += 0.5 * dt * (f[i * len + k - 1] + f[i * len + k]);
        }
        let inner: Complex64 = rows[..=k].iter().sum();
        out.push(dt * (inner - 0.5 * rows[0] - 0.5 * rows[k]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_is_exact() {
        let dt = 0.1;
        let v: Vec<Complex64> = (0..11).map(|k| Complex64::new(k as f64 * dt, 1.0)).collect();
        let c = cumulative_trapezoid(&v, dt);
        assert!((c[10] - Complex64::new(0.5, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn constant_square_gives_t_squared() {
        let len = 21;
        let dt = 0.5;
        let f = vec![Complex64::new(1.0, 0.0); len * len];
        let c = cumulative_square_trapezoid(&f, len, dt);
        for (k, v) in c.iter().enumerate() {
            let t = k as f64 * dt;
            assert!((v.re - t * t).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn separable_square_is_product_of_lines(a in proptest::collection::vec(-2.0f64..2.0, 2..30)) {
            // f(t_i, t_j) = a_i a_j, so the square integral is the square of the line integral
            let len = a.len();
            let dt = 0.3;
            let line: Vec<Complex64> = a.iter().map(|&x| x.into()).collect();
            let f: Vec<Complex64> = (0..len * len).map(|k| (a[k / len] * a[k % len]).into()).collect();
            let sq = cumulative_square_trapezoid(&f, len, dt);
            let ln = cumulative_trapezoid(&line, dt);
            for k in 0..len {
                prop_assert!((sq[k] - ln[k] * ln[k]).norm() < 1e-10);
            }
        }
    }
}
