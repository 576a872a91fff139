use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report. Each variant carries a stable
/// machine-readable code (see [`Error::code`]) used by the CLI error records.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("principal symbol vanishes at xi = {xi:?}")]
    EllipticityViolation { xi: Vec<f64> },
    #[error("potential V = {value} is not positive at x = {at:?}")]
    NonpositivePotential { at: Vec<f64>, value: f64 },
    #[error("dimension {0} is not supported (only 1 and 2)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("point {0:?} lies outside the domain")]
    OutOfDomain(Vec<f64>),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("basis family {family} cannot be used with order m = {order}")]
    BasisOrderMismatch { family: String, order: usize },
    #[error("quadrature needs {needed} nodes per dimension, budget is {budget}")]
    QuadratureUnderflow { needed: usize, budget: usize },
    #[error("invalid basis size {0} (need at least one function per dimension)")]
    BasisTooSmall(usize),
    #[error("matrix {name} asymmetry {asymmetry:e} exceeds {limit:e}")]
    AsymmetryExceeded { name: String, asymmetry: f64, limit: f64 },
    #[error("matrix {0} is not positive definite")]
    NotPositiveDefinite(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("matrix is singular")]
    Singular,
    #[error("eigenvalue {0:e} is below the zero floor")]
    ZeroEigenvalue(f64),
    #[error("degenerate eigenvector pairing: first block norm {0:e}")]
    DegenerateState(f64),
    #[error("vector is not an eigenvector: residual {0:e}")]
    NotAnEigenvector(f64),
    #[error("Jordan chain is empty")]
    EmptyChain,
    #[error("rank decision ambiguous: singular value ratio {ratio:e} within a factor 10 of {threshold:e}")]
    RankAmbiguous { ratio: f64, threshold: f64 },
    #[error("Jordan chain residual {residual:e} exceeds {limit:e}")]
    ChainResidual { residual: f64, limit: f64 },
    #[error("lambda = {re}{im:+}i is within {rel:e} (relative) of the spectrum")]
    NearSpectrum { re: f64, im: f64, rel: f64 },
    #[error("|f| drops below the floor on the contour |lambda| = {radius}")]
    ContourNearZero { radius: f64 },
    #[error("phase could not be resolved on |lambda| = {radius} with {points} points")]
    PhaseUnresolved { radius: f64, points: usize },
    #[error("only {0} radii fall inside the resolved counting window (need 3)")]
    InsufficientResolvedRange(usize),
    #[error("potential leaves the positive cone at s = {s} (V = {value})")]
    PotentialLeavesCone { s: f64, value: f64 },
    #[error("argument out of supported range: {0}")]
    RangeExceeded(String),
    #[error("no sign change of the matching determinant in the requested range")]
    NoSignChange,
    #[error("contrast V = {0:e} is too small; the matching determinant degenerates")]
    DegenerateContrast(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable identifier for machine consumption.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EllipticityViolation { .. } => "ellipticity_violation",
            Error::NonpositivePotential { .. } => "nonpositive_potential",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::OutOfDomain(_) => "out_of_domain",
            Error::InvalidOperator(_) => "invalid_operator",
            Error::InvalidPotential(_) => "invalid_potential",
            Error::BasisOrderMismatch { .. } => "basis_order_mismatch",
            Error::QuadratureUnderflow { .. } => "quadrature_underflow",
            Error::BasisTooSmall(_) => "basis_too_small",
            Error::AsymmetryExceeded { .. } => "asymmetry_exceeded",
            Error::NotPositiveDefinite(_) => "not_positive_definite",
            Error::NoConvergence(_) => "no_convergence",
            Error::Singular => "singular",
            Error::ZeroEigenvalue(_) => "zero_eigenvalue",
            Error::DegenerateState(_) => "degenerate_state",
            Error::NotAnEigenvector(_) => "not_an_eigenvector",
            Error::EmptyChain => "empty_chain",
            Error::RankAmbiguous { .. } => "rank_ambiguous",
            Error::ChainResidual { .. } => "chain_residual",
            Error::NearSpectrum { .. } => "near_spectrum",
            Error::ContourNearZero { .. } => "contour_near_zero",
            Error::PhaseUnresolved { .. } => "phase_unresolved",
            Error::InsufficientResolvedRange(_) => "insufficient_resolved_range",
            Error::PotentialLeavesCone { .. } => "potential_leaves_cone",
            Error::RangeExceeded(_) => "range_exceeded",
            Error::NoSignChange => "no_sign_change",
            Error::DegenerateContrast(_) => "degenerate_contrast",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}
