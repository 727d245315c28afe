//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least {min} points per axis, got {got}")]
    GridTooSmall { got: usize, min: usize },

    #[error(
        "mode {mode} is not resolved: fewer than 4 points per wavelength \
         (highest resolvable index on this grid is {limit})"
    )]
    Resolution { mode: usize, limit: usize },

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("initial density must have unit mass: |mass - 1| = {defect:.3e}")]
    MassDefect { defect: f64 },

    #[error("initial density has a negative value (min = {min:.3e})")]
    NegativeDensity { min: f64 },

    #[error("perturbation must have zero mean, got {mean:.3e}")]
    NonzeroMean { mean: f64 },

    #[error("field not resolved by the basis: projection residual {residual:.3e}")]
    BasisTruncation { residual: f64 },

    #[error("Picard iteration did not converge in {iters} iterations (last residual {residual:.3e})")]
    Diverged { iters: usize, residual: f64 },

    #[error("mass drift {drift:.3e} exceeds tolerance {tol:.3e}")]
    MassDrift { drift: f64, tol: f64 },

    #[error("probing modes require index i >= 1 (mode 0 is the constant)")]
    ConstantModeProbe,

    #[error("exponent {0:.1} too large for double-precision probe evaluation")]
    ProbeOverflow(f64),

    #[error("no sign change in the bracket [{lo:.3e}, {hi:.3e}]; widen it")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("coefficient from m-record ({c_from_m:.6e}) disagrees with u-record ({c_from_u:.6e})")]
    InconsistentData { c_from_m: f64, c_from_u: f64 },

    #[error("sensitivity matrix is ill-conditioned (cond = {cond:.3e}); add probe scenarios or lower the mode cut")]
    IllPosedTruncation { cond: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
