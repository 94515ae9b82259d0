use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::lu::{wrap_phase, PhasedDeterminant};
use crate::error::{Error, Result};

/// Largest phase step between consecutive values that is still unambiguous.
pub const MAX_PHASE_JUMP: f64 = FRAC_PI_2;

/// Unwraps the phase of a sequence so that square roots stay on one branch.
#[derive(Debug, Clone)]
pub struct PhaseTracker {
    unwrapped: f64,
    index: usize,
}

impl PhaseTracker {
    /// Starts from an already unwrapped phase.
    pub fn new(initial_phase: f64) -> Self {
        Self {
            unwrapped: initial_phase,
            index: 0,
        }
    }

    /// Starts on the branch whose square root is closest to `anchor_root`.
    pub fn anchored(first_phase: f64, anchor_root: Complex64) -> Self {
        let half = first_phase / 2.0;
        let target = anchor_root.arg();
        let unwrapped = if wrap_phase(half - target).abs() <= FRAC_PI_2 {
            first_phase
        } else {
            first_phase + 2.0 * PI
        };
        Self::new(unwrapped)
    }

    pub fn phase(&self) -> f64 {
        self.unwrapped
    }

    /// Checks a step without committing it.
    pub fn step(&self, wrapped_phase: f64) -> Result<f64> {
        let jump = wrap_phase(wrapped_phase - self.unwrapped);
        if jump.abs() >= MAX_PHASE_JUMP {
            return Err(Error::BranchAmbiguity {
                index: self.index + 1,
                jump,
            });
        }
        Ok(self.unwrapped + jump)
    }

    /// Advances to the next value, returning its unwrapped phase.
    pub fn advance(&mut self, wrapped_phase: f64) -> Result<f64> {
        self.unwrapped = self.step(wrapped_phase)?;
        self.index += 1;
        Ok(self.unwrapped)
    }

    /// Moves to a phase that was validated elsewhere, e.g. by a refined sub-grid.
    pub fn commit(&mut self, unwrapped_phase: f64) {
        self.unwrapped = unwrapped_phase;
        self.index += 1;
    }
}

/// Square root of a log-domain value on the branch with the given unwrapped phase.
pub fn sqrt_on_branch(value: PhasedDeterminant, unwrapped_phase: f64) -> Complex64 {
    Complex64::from_polar((0.5 * value.log_magnitude).exp(), 0.5 * unwrapped_phase)
}

/// Square roots of `values`, starting at the root of `values[0]` nearest `anchor`
/// and continuing each subsequent root from its predecessor.
pub fn branch_continued_sqrt(values: &[Complex64], anchor: Complex64) -> Result<Vec<Complex64>> {
    let Some(first) = values.first() else {
        return Ok(Vec::new());
    };
    let mut tracker = PhaseTracker::anchored(first.arg(), anchor);
    let mut out = Vec::with_capacity(values.len());
    out.push(Complex64::from_polar(first.norm().sqrt(), 0.5 * tracker.phase()));
    for v in &values[1..] {
        let phase = tracker.advance(v.arg())?;
        out.push(Complex64::from_polar(v.norm().sqrt(), 0.5 * phase));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_sequence() {
        let roots = branch_continued_sqrt(&[c(1.0, 0.0); 3], c(1.0, 0.0)).unwrap();
        for r in roots {
            assert!((r - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn full_winding_lands_on_minus_one() {
        let values: Vec<_> = (0..=16)
            .map(|k| Complex64::from_polar(1.0, k as f64 * PI / 8.0))
            .collect();
        let roots = branch_continued_sqrt(&values, c(1.0, 0.0)).unwrap();
        assert!((roots.last().unwrap() + 1.0).norm() < 1e-14);
    }

    #[test]
    fn anchor_selects_negative_root() {
        let roots = branch_continued_sqrt(&[c(4.0, 0.0), c(4.0, 0.1)], c(-1.0, 0.0)).unwrap();
        assert!((roots[0] + 2.0).norm() < 1e-15);
        assert!(roots[1].re < 0.0);
    }

    #[test]
    fn coarse_jump_is_ambiguous() {
        let values = [c(1.0, 0.0), Complex64::from_polar(1.0, 2.0)];
        assert!(matches!(
            branch_continued_sqrt(&values, c(1.0, 0.0)),
            Err(Error::BranchAmbiguity { index: 1, .. })
        ));
    }

    #[test]
    fn empty_input() {
        assert!(branch_continued_sqrt(&[], c(1.0, 0.0)).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn roots_square_back(steps in proptest::collection::vec((0.1f64..10.0, -1.4f64..1.4), 1..40)) {
            let mut phase = 0.0;
            let values: Vec<_> = steps.iter().map(|&(m, dp)| {
                phase += dp;
                Complex64::from_polar(m, phase)
            }).collect();
            let roots = branch_continued_sqrt(&values, c(1.0, 0.0)).unwrap();
            for (r, v) in roots.iter().zip(&values) {
                prop_assert!((r * r - v).norm() <= 1e-13 * v.norm());
            }
        }
    }
}
