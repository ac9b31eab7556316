//! Error taxonomy shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular lattice basis: |det| = {det:.3e} is below the threshold {threshold:.3e}")]
    SingularBasis { det: f64, threshold: f64 },

    #[error("unsupported dimension {0}: solvers cover d in {{1, 2}}")]
    UnsupportedDimension(usize),

    #[error("energy must be positive, got {0}")]
    NonpositiveEnergy(f64),

    #[error("plane-wave cutoff {cutoff} too small: band {band} changed by {change:.3e} under refinement")]
    CutoffTooSmall {
        cutoff: i32,
        band: usize,
        change: f64,
    },

    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),

    #[error("integration step too large: energy drift {drift:.3e} exceeds bound {bound:.3e}")]
    StepTooLarge { drift: f64, bound: f64 },

    #[error("empty energy shell: no acceptance after {0} proposals")]
    EmptyShell(usize),

    #[error("energy {energy} is at or below the separatrix threshold {threshold}")]
    EnergyBelowSeparatrix { energy: f64, threshold: f64 },

    #[error("small divisor breakdown at mode {mode:?}: |<omega,m>| = {divisor:.3e} under floor {floor:.3e}")]
    SmallDivisorBreakdown {
        mode: Vec<i32>,
        divisor: f64,
        floor: f64,
    },

    #[error("no convergence after {iterations} iterations; last residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate torus Jacobian: min |det| = {0:.3e}")]
    DegenerateJacobian(f64),

    #[error("synthesis grid too coarse: doubling the grid changed coefficients by {0:.3e}")]
    GridTooCoarse(f64),

    #[error("spectral window unresolved at cutoff {cutoff}: {detail}")]
    WindowUnresolved { cutoff: i32, detail: String },

    #[error("empty overlap between measure supports and the test panel")]
    EmptyOverlap,

    #[error("config error: {0}")]
    Config(String),

    #[error("potential file error: {0}")]
    PotentialFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 1 for
    /// domain errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
