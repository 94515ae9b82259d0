use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A kernel `Ω/sin(Ωt)` or `Ω/tan(Ωt)` was evaluated on (or numerically at) a pole.
    #[error("singular kernel at t = {t_re} + {t_im}i (frequency {omega})")]
    SingularKernel { omega: f64, t_re: f64, t_im: f64 },

    #[error("singular matrix: pivot {pivot:e} below tolerance {tolerance:e} at column {column}")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("square-root branch ambiguous: phase jump {jump:.4} rad at index {index}; refine the grid")]
    BranchAmbiguity { index: usize, jump: f64 },

    #[error("harmonic matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("matrix is not orthogonal (defect {defect:e})")]
    NotOrthogonal { defect: f64 },

    #[error("rate did not converge: window slopes {first:e} and {second:e} differ by more than 5%")]
    NonconvergedRate { first: f64, second: f64 },

    #[error("perturbation theory broke down: P_g = {population} exceeds 0.5 at t = {time}")]
    PerturbationBreakdown { time: f64, population: f64 },

    #[error("Fock-basis truncation not converged: {0}")]
    TruncationError(String),

    #[error("propagation step lost unitarity (defect {defect:e})")]
    StepError { defect: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
