use thiserror::Error;

/// Every failure mode surfaced by the toolkit.
///
/// Chamber-level diagnostics (`UnmatchedWall`, `UnsupportedChamber`,
/// `GenerationOverflow`, ...) are kept distinct from hard errors so the CLI
/// can map them to a separate exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate zeros: {0}")]
    DegenerateZeros(String),
    #[error("point {0} lies on a branch cut")]
    OnCut(String),
    #[error("quadrature failed: error estimate {estimate:e} exceeds tolerance {tol:e}")]
    QuadratureFailure { estimate: f64, tol: f64 },
    #[error("unknown wall: {0}")]
    UnknownWall(String),
    #[error("network did not stabilise within {0} generations")]
    GenerationOverflow(usize),
    #[error("marked points clash: {0}")]
    LabelClash(String),
    #[error("wall at theta = {0} matches no candidate period")]
    UnmatchedWall(f64),
    #[error("unsupported chamber: {0}")]
    UnsupportedChamber(String),
    #[error("case mismatch: {0}")]
    CaseMismatch(String),
    #[error("vertex {0} is frozen")]
    FrozenVertex(String),
    #[error("orientation ambiguous: {0}")]
    OrientationAmbiguous(String),
    #[error("unbalanced coordinate expression for {0}")]
    UnbalancedExpr(String),
    #[error("class oracle mismatch: {0}")]
    OracleMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("point {0} outside the asymptotic sector")]
    SectorViolation(String),
    #[error("integration path blocked: {0}")]
    PathBlocked(String),
    #[error("integrator failure: {0}")]
    IntegratorFailure(String),
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("class identification ambiguous: {0}")]
    Ambiguous(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for errors that describe the chamber rather than a malfunction.
    pub fn is_chamber_diagnostic(&self) -> bool {
        matches!(
            self,
            Error::UnmatchedWall(_)
                | Error::UnsupportedChamber(_)
                | Error::GenerationOverflow(_)
                | Error::LabelClash(_)
                | Error::DegenerateFrame(_)
                | Error::OracleMismatch(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
