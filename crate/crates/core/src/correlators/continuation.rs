use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{PhaseTracker, PhasedDeterminant};

/// Bisections attempted on one interval before a branch ambiguity is reported.
pub const MAX_BISECTIONS: usize = 6;

/// A correlation value `sqrt(q)·e^{exponent}` whose square-root branch is not yet fixed.
#[derive(Debug, Clone, Copy)]
pub struct GaussianValue {
    pub prefactor: PhasedDeterminant,
    pub exponent: Complex64,
}

impl GaussianValue {
    /// Value on the branch where `q` has the given unwrapped phase.
    pub fn on_branch(&self, phase: f64) -> Complex64 {
        Complex64::from_polar(
            (0.5 * self.prefactor.log_magnitude + self.exponent.re).exp(),
            0.5 * phase + self.exponent.im,
        )
    }

    /// Square root of `q` that makes the whole value closest to 1.
    fn unit_anchor(&self) -> Complex64 {
        Complex64::from_polar(1.0, -self.exponent.im)
    }
}

/// Retries an evaluation slightly off a kernel pole.
pub(crate) fn eval_off_pole<F>(f: &mut F, s: f64) -> Result<GaussianValue>
where
    F: FnMut(f64) -> Result<GaussianValue>,
{
    let mut last = None;
    for k in 0..4 {
        let shifted = s + k as f64 * 1e-7 * s.abs().max(1.0);
        match f(shifted) {
            Err(e @ (Error::SingularKernel { .. } | Error::SingularMatrix { .. })) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Follows one square-root branch along a path parameter.
pub(crate) struct PathWalker<F> {
    f: F,
    position: f64,
    tracker: PhaseTracker,
    value: Complex64,
}

impl<F> PathWalker<F>
where
    F: FnMut(f64) -> Result<GaussianValue>,
{
    /// Anchors at a point where the correlation is known to be close to 1.
    pub fn anchored_near_unity(mut f: F, anchor: f64) -> Result<Self> {
        let v = eval_off_pole(&mut f, anchor)?;
        let tracker = PhaseTracker::anchored(v.prefactor.phase, v.unit_anchor());
        Ok(Self {
            f,
            position: anchor,
            value: v.on_branch(tracker.phase()),
            tracker,
        })
    }

    /// Value at the last point reached.
    pub fn current(&self) -> Complex64 {
        self.value
    }

    /// Steps to `target`, refining the interval if the phase jumps too far.
    pub fn walk_to(&mut self, target: f64) -> Result<Complex64> {
        self.walk(target, 0)
    }

    fn walk(&mut self, target: f64, depth: usize) -> Result<Complex64> {
        let v = eval_off_pole(&mut self.f, target)?;
        match self.tracker.step(v.prefactor.phase) {
            Ok(phase) => {
                self.tracker.commit(phase);
                self.position = target;
                self.value = v.on_branch(phase);
                Ok(self.value)
            }
            Err(e) if depth >= MAX_BISECTIONS => Err(e),
            Err(_) => {
                let mid = 0.5 * (self.position + target);
                self.walk(mid, depth + 1)?;
                self.walk(target, depth + 1)
            }
        }
    }

    /// Moves away from `reference` towards `target`, doubling the distance
    /// each step; intermediate values are discarded.
    pub fn ramp(&mut self, reference: f64, target: f64) -> Result<()> {
        let total = (target - reference).abs();
        let dir = (target - reference).signum();
        let mut dist = 2.0 * (self.position - reference).abs();
        if dist == 0.0 {
            return Err(Error::InvalidParameter("ramp must start away from its reference".into()));
        }
        while dist < total {
            self.walk(reference + dir * dist, 0)?;
            dist *= 2.0;
        }
        Ok(())
    }
}
