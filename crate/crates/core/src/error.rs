use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // measures
    #[error("similitude system needs at least two maps, got {0}")]
    DegenerateSystem(usize),
    #[error("contraction ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),
    #[error("rotation is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),
    #[error("similarity dimension {dim} exceeds ambient dimension {ambient}")]
    DimensionExceedsAmbient { dim: f64, ambient: usize },
    #[error("{requested} atoms exceed the atom budget of {budget}")]
    AtomBudget { requested: u128, budget: usize },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("finite-difference gradient norm {observed} exceeds the Lipschitz estimate {estimate}")]
    LipschitzBound { observed: f64, estimate: f64 },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario `{scenario}` is missing parameter `{param}`")]
    MissingParameter { scenario: String, param: String },
    #[error("invalid parameter `{param}`: {reason}")]
    InvalidParameter { param: String, reason: String },
    #[error("ambient dimension mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("radius {radius:e} is below the resolution floor {floor:e}")]
    Resolution { radius: f64, floor: f64 },
    #[error("density has {got} values but the measure has {expected} atoms")]
    DensityLength { expected: usize, got: usize },

    // orlicz
    #[error("Young function argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("exponential Young function saturates at argument {0}")]
    Saturation(f64),

    // coeffs
    #[error("dimension must be positive, got {0}")]
    NonpositiveDimension(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("basis is not orthonormal (Gram deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("no asymptotic prediction for non-integer dimension {0}")]
    PredictionUnavailable(f64),

    // operators
    #[error("matrix of order {requested} exceeds the budget {budget}")]
    MatrixBudget { requested: usize, budget: usize },
    #[error("support extent {extent} exceeds half the torus period {half_period}")]
    SupportTooLarge { extent: f64, half_period: f64 },
    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),
    #[error("negative density at atom {0}: the log potential needs V >= 0, use the sign-framed log kernel instead")]
    NegativeDensity(usize),
    #[error("kernel {kernel} requires ambient dimension {required}, got {got}")]
    KernelDimension {
        kernel: &'static str,
        required: usize,
        got: usize,
    },
    #[error("atom {index} is not on the unit circle (|X| = {norm})")]
    NotOnUnitCircle { index: usize, norm: f64 },

    // spectral
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("counting threshold must be positive, got {0}")]
    NonpositiveThreshold(f64),
    #[error("need at least {needed} eigenvalues, have {have}")]
    TooFewEigenvalues { needed: usize, have: usize },
    #[error("empty index window [{0}, {1}]")]
    EmptyWindow(usize, usize),
    #[error("empty sequence")]
    EmptySequence,

    // experiment plumbing
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by the input definition rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::UnknownScenario(_)
                | Error::MissingParameter { .. }
                | Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::MatrixBudget { .. }
                | Error::AtomBudget { .. }
        )
    }
}
