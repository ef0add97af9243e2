//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("coefficient table is not Hermitian: conj(e(-x)) != e(x) at x = {site:?} (residual {residual:.3e})")]
    NonHermitian { site: [i64; 2], residual: f64 },

    #[error("unsupported lattice dimension {dim} (must be 1 or 2)")]
    UnsupportedDimension { dim: usize },

    #[error("degenerate extremum at p = {point:?}: |det Hess| = {det:.3e} < 1e-10")]
    DegenerateExtremum { point: [f64; 2], det: f64 },

    #[error("extrema not certified (nondegenerate = {nondegenerate}, unique = {unique}); band-edge evaluation refused")]
    UncertifiedExtrema { nondegenerate: bool, unique: bool },

    #[error("spectral parameter z = {z} lies inside the band [{e_min}, {e_max}]")]
    ZInsideBand { z: f64, e_min: f64, e_max: f64 },

    #[error("quadrature tolerance not reached: best estimate {best:.17e}, estimated error {est_error:.3e}")]
    Accuracy { best: f64, est_error: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("potential is identically zero")]
    ZeroPotential,

    #[error("kappa integral diverges: kappa0 = {kappa0:.3e} != 0")]
    KappaDiverges { kappa0: f64 },

    #[error("asymptotic-constant extraction failed to converge: residual {residual:.3e}")]
    ExtractionFailure { residual: f64 },

    #[error("Birman–Schwinger spectrum not real: max imaginary residual {max_imag:.3e} (scale {scale:.3e})")]
    RealnessViolation { max_imag: f64, scale: f64 },

    #[error("trace identity violated: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    IdentityViolation { residual: f64, tol: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("oracle eigensolver failure: {0}")]
    Oracle(String),

    #[error("root solver stagnation: {0}")]
    SolverStagnation(String),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Exit code mapping for the CLI: validation 2, numerics 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Parameter(_) | Error::UnsupportedDimension { .. } => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
