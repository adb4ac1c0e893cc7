use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate distribution: squeezing intensity is zero, use the single delta sample")]
    DegenerateDistribution,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("time grid too coarse: resolves up to {resolved:.3} a.u., needs {required:.3} a.u.")]
    InsufficientResolution { resolved: f64, required: f64 },

    #[error("records do not share one grid and driver configuration")]
    MixedGrids,

    #[error("harmonic window [{lo:.4}, {hi:.4}] a.u. exceeds the spectral grid (max {max:.4})")]
    WindowOutOfRange { lo: f64, hi: f64, max: f64 },

    #[error("undefined reference: phase-squeezed intensity vanishes at harmonic {0}")]
    UndefinedReference(u32),

    #[error("no run found for squeezing angle {0}")]
    MissingRun(f64),

    #[error("dark harmonic {0}: total intensity is zero")]
    DarkHarmonic(u32),

    #[error("angle grid is not uniform over one period")]
    NonUniformGrid,

    #[error(
        "quadrature did not converge: estimate {estimate:e}, error {error:e} after {intervals} intervals"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        intervals: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
