use thiserror::Error;

/// Errors raised by model construction, calibration and propagation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("embed dimension: operator is {op}x{op} but subsystem {slot} has dimension {expected}")]
    EmbedDimension { slot: usize, op: usize, expected: usize },

    #[error("not hermitian: max |H - H^dagger| = {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("eigensolve failed: {0}")]
    EigensolveFailed(String),

    #[error("degenerate computational projection (smallest singular value {singular:.3e})")]
    DegenerateProjection { singular: f64 },

    #[error("charge basis must be symmetric: n_q = {0} is even")]
    ChargeBasisNotSymmetric(usize),

    #[error("model not calibrated: {0:?} model requires fitted curves")]
    ModelNotCalibrated(String),

    #[error("assignment ambiguous at flux {phi}: best overlap {overlap:.3} for {label}")]
    AssignmentAmbiguous { phi: f64, overlap: f64, label: String },

    #[error("insufficient flux coverage: {0}")]
    InsufficientFluxCoverage(String),

    #[error("surrogate fit failed: {0}")]
    SurrogateFitFailed(String),

    #[error("phase undefined at step {step}: |c_{label}| = {magnitude:.3e}")]
    PhaseUndefined { step: usize, label: &'static str, magnitude: f64 },

    #[error("no conditional interaction at target flux: |zeta| = {zeta:.3e} GHz")]
    NoConditionalInteraction { zeta: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("propagation failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),

    #[error("calibration artifact rejected: {0}")]
    ArtifactRejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;
