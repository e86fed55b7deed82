use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate in input vector")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular value decomposition did not converge for a {side}x{side} matrix")]
    SvdFailed { side: usize, matrix: Vec<Complex64> },
    #[error("non-finite function value at theta = {theta}")]
    Evaluation { theta: f64 },
    #[error("custom norm is not absolutely homogeneous (relative defect {defect:e})")]
    NotHomogeneous { defect: f64 },
    #[error("no feasible sample found for the constraint set")]
    Infeasible,
    #[error("modulus vanishes on the grid (eps = {eps}); no finite power constant")]
    NotUniformlyConvex { eps: f64 },
    #[error("function fails the sub-mean inequality at the probed point (phi estimate {value:e})")]
    NotPlurisubharmonic { value: f64 },
    #[error("no admissible (point, direction) pair found in the region")]
    RegionTooThin,
    #[error("point is not interior to the domain (rho = {rho:e})")]
    NotInterior { rho: f64 },
    #[error("ray from the interior witness never leaves the bounding box")]
    RayNeverExits,
    #[error("defining function has vanishing gradient at the boundary point")]
    DegenerateGradient,
    #[error("defining function is not differentiable at the point (one-sided derivatives differ by {defect:e})")]
    NonSmoothPoint { defect: f64 },
    #[error("every sampled boundary point was non-smooth")]
    NoData,
    #[error("mollifier radius {delta} is below two grid spacings ({spacing})")]
    Resolution { delta: f64, spacing: f64 },
    #[error("grid axis {axis} has {points} points; the mollifier needs at least {needed}")]
    GridTooSmall { axis: usize, points: usize, needed: usize },
    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(&'static str),
    #[error("witness re-evaluation gives {found:e}, report says {expected:e}")]
    ReplayMismatch { expected: f64, found: f64 },
    #[error("report carries no replayable witness")]
    NoWitness,
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
