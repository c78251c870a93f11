use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no root: band {band} has no dispersion root below {ceiling_ghz} GHz")]
    NoRoot { band: usize, ceiling_ghz: f64 },
    #[error("momentum {k} rad/m outside the first Brillouin zone (|k| <= {k_max})")]
    InvalidMomentum { k: f64, k_max: f64 },
    #[error("quadratic band-edge fit residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    PoorFit { residual: f64, tol: f64 },
    #[error("quadrature failed to reach tolerance {tol:.3e} (best estimate error {err:.3e})")]
    QuadratureFailure { tol: f64, err: f64 },
    #[error("hopping coefficient J_{range} has imaginary residue {imag:.3e}")]
    NonRealHopping { range: usize, imag: f64 },
    #[error("basis was built from a different model (expected {expected} sites, got {got})")]
    BasisMismatch { expected: usize, got: usize },
    #[error("driven photon cutoff {cutoff} too small for requested analysis")]
    CutoffTooSmall { cutoff: usize },
    #[error("steady-state system is singular at drive {omega_d} GHz (real eigenvalue {eigenvalue} GHz)")]
    SingularSystem { omega_d: f64, eigenvalue: f64 },
    #[error("no in-gap peak found (max/floor ratio {ratio:.2} below 3)")]
    NoPeak { ratio: f64 },
    #[error("ambiguous eigenstate selection for ladder level {level}: projections {first:.6e} and {second:.6e} tie within 1e-6")]
    AmbiguousSelection { level: usize, first: f64, second: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("negative two-photon exchange window (delta_k^2 = {dk2:.3e}) at distance {distance}")]
    NegativeWindow { dk2: f64, distance: usize },
    #[error("optimum pinned at bracket edge for {parameter}: {value} (bracket {lo}..{hi})")]
    OutOfBracket {
        parameter: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("fit failed to converge for {parameter} after {iterations} iterations")]
    NoConvergence { parameter: String, iterations: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("linear algebra backend error: {0}")]
    Linalg(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
