use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be positive, got {value}")]
    NonPositiveScale { name: &'static str, value: f64 },
    #[error("gamma must lie in [0, 1), got {0}")]
    GammaOutOfRange(f64),
    #[error("position {q} lies outside [-{l}, {l}]")]
    PositionOutOfBox { q: f64, l: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cannot combine coefficient and grid representations")]
    MixedRepresentation,
    #[error("states live in different bases or configurations")]
    BasisMismatch,
    #[error("gamma = 0 requires the periodic kernel")]
    PeriodicGammaNotAllowed,
    #[error("gamma = {0} is below the conditioning guard of the closed-form kernel")]
    ConditioningError(f64),
    #[error("zero-momentum mode present in basis; p is not invertible")]
    ZeroModePresent,
    #[error("quadrature needs {requested} kernel evaluations, budget is {budget}")]
    QuadratureBudgetExceeded { requested: usize, budget: usize },
    #[error("non-smooth input: {0}")]
    NonSmoothInput(String),
    #[error("index {0} is outside the basis")]
    IndexOutOfBasis(i64),
    #[error("state vanishes after projection onto the constraint hyperplane")]
    ZeroStateAfterProjection,
    #[error("state violates the domain constraint (residual {0:e})")]
    UnprojectedState(f64),
    #[error("matrix {label} is not Hermitian (defect {defect:e})")]
    NonHermitianInput { label: String, defect: f64 },
    #[error("state is not normalized (norm^2 = {0})")]
    UnnormalizedState(f64),
    #[error("energy moment not resolved at this truncation (edge fraction {0:e})")]
    DivergentMoment(f64),
    #[error("{0}")]
    ParseError(String),
    #[error("{0}")]
    ValidationError(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name, used in machine-readable CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveScale { .. } => "NonPositiveScale",
            Error::GammaOutOfRange(_) => "GammaOutOfRange",
            Error::PositionOutOfBox { .. } => "PositionOutOfBox",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::MixedRepresentation => "MixedRepresentation",
            Error::BasisMismatch => "BasisMismatch",
            Error::PeriodicGammaNotAllowed => "PeriodicGammaNotAllowed",
            Error::ConditioningError(_) => "ConditioningError",
            Error::ZeroModePresent => "ZeroModePresent",
            Error::QuadratureBudgetExceeded { .. } => "QuadratureBudgetExceeded",
            Error::NonSmoothInput(_) => "NonSmoothInput",
            Error::IndexOutOfBasis(_) => "IndexOutOfBasis",
            Error::ZeroStateAfterProjection => "ZeroStateAfterProjection",
            Error::UnprojectedState(_) => "UnprojectedState",
            Error::NonHermitianInput { .. } => "NonHermitianInput",
            Error::UnnormalizedState(_) => "UnnormalizedState",
            Error::DivergentMoment(_) => "DivergentMoment",
            Error::ParseError(_) => "ParseError",
            Error::ValidationError(_) => "ValidationError",
            Error::UnknownKey(_) => "UnknownKey",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
