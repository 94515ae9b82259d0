use crate::numerics::DiagonalSpectrum;

/// `log Z = −Σ log(2 sinh(βω/2))`, the harmonic trace including zero-point energy.
pub fn log_partition_function(omega: &DiagonalSpectrum, beta: f64) -> f64 {
    omega
        .frequencies()
        .iter()
        .map(|&w| {
            let x = 0.5 * beta * w;
            // 2 sinh x = e^x (1 − e^{−2x})
            -(x + (-(-2.0 * x).exp()).ln_1p())
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(w: &[f64]) -> DiagonalSpectrum {
        DiagonalSpectrum::sorted(w.to_vec()).unwrap()
    }

    #[test]
    fn single_mode_value() {
        let z = log_partition_function(&spec(&[2e-4]), 1000.0).exp();
        assert!((z - 1.0 / (2.0 * 0.1f64.sinh())).abs() < 1e-12);
        // the commonly quoted 4.99166 is mis-rounded (exact 4.9916764)
        assert!((z - 4.99166).abs() < 1e-4);
    }

    #[test]
    fn low_temperature_limit() {
        let beta = 1e5;
        let log_z = log_partition_function(&spec(&[1.0]), beta);
        assert!((log_z + beta / 2.0).abs() < 1e-12);
    }

    #[test]
    fn separable_modes_multiply() {
        let beta = 700.0;
        let both = log_partition_function(&spec(&[3e-4, 1e-3]), beta);
        let a = log_partition_function(&spec(&[3e-4]), beta);
        let b = log_partition_function(&spec(&[1e-3]), beta);
        assert!((both - a - b).abs() < 1e-14);
    }
}
