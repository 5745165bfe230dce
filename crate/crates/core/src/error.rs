use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("duplicate subsystem `{0}`")]
    DuplicateSubsystem(String),
    #[error("invalid register layout: {0}")]
    InvalidLayout(String),
    #[error("subsystem `{name}` has no value assigned")]
    Unassigned { name: String },
    #[error("value {value} out of range for subsystem `{name}` (dim {dim})")]
    ValueOutOfRange { name: String, value: usize, dim: usize },
    #[error("amplitude vector has length {actual}, layout requires {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("gate `{name}` is not unitary (|UU^dag - I|_F = {deviation:e})")]
    NonUnitary { name: String, deviation: f64 },
    #[error("gate `{name}` has dimension {actual}, targets require {expected}")]
    GateDimension { name: String, expected: usize, actual: usize },
    #[error("gate `{0}` has no targets")]
    NoTargets(String),
    #[error("empty keep set for partial trace")]
    EmptyKeep,
    #[error("layouts do not match")]
    LayoutMismatch,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("operator is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("sampled a zero-probability branch on `{0}`")]
    ZeroProbabilityBranch(String),
    #[error("record register `{0}` is not blank")]
    RecordNotBlank(String),
    #[error("subsystem `{name}` must be a qubit for this operation (dim {dim})")]
    NotQubit { name: String, dim: usize },
    #[error("angle `{name}` = {value} is outside (0, pi)")]
    AngleOutOfRange { name: &'static str, value: f64 },
    #[error("script has no reversible steps")]
    NothingToReverse,
    #[error("no step labelled `{0}` in script")]
    UnknownStep(String),
    #[error("norm drift after step `{step}`: squared norm {norm_sqr}")]
    NormDrift { step: String, norm_sqr: f64 },
    #[error("reports are not comparable: {0}")]
    ReportMismatch(String),
    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of a numerical invariant (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NormDrift { .. } | Error::NotPositive(_) | Error::ZeroProbabilityBranch(_)
        )
    }
}
