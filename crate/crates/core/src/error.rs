use thiserror::Error;

/// Errors raised across grid construction, coefficient certification,
/// assembly, solving and free-boundary analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: expected 1, 2 or 3")]
    Dimension(usize),

    #[error("{nodes} nodes per axis is too coarse (need at least {min})")]
    TooCoarse { nodes: usize, min: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("ellipticity violated: smallest eigenvalue {min_eigenvalue:.6} at node {node}")]
    Ellipticity { node: usize, min_eigenvalue: f64 },

    #[error("ellipticity violated: |{name}| = {value} exceeds the admissible bound {bound}")]
    EllipticityBound {
        name: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("right-hand side must be positive: f = {value:.6} at node {node}")]
    NonPositiveForcing { node: usize, value: f64 },

    #[error("boundary data must be nonnegative: psi = {value:.6e} at node {node}")]
    NegativeBoundary { node: usize, value: f64 },

    #[error("variable off-diagonal coefficients are not supported by the stencil")]
    VariableOffDiagonal,

    #[error("radius {radius} below the resolvable minimum {min} for this grid")]
    Unresolvable { radius: f64, min: f64 },

    #[error("field does not match grid: expected {expected} values, found {found}")]
    FieldSize { expected: usize, found: usize },

    #[error("{method} did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged {
        method: crate::solver::Method,
        iterations: usize,
        residual: f64,
        partial: Box<crate::solver::SolveResult>,
    },

    #[error("point {0:?} is not a free-boundary node")]
    NotOnFreeBoundary(Vec<f64>),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("degenerate plane fit: {found} points, need at least {needed}")]
    DegenerateFit { found: usize, needed: usize },

    #[error("cannot fit a blowup profile to a zero field")]
    ZeroField,

    #[error("region leaves the computational box")]
    OutsideBox,

    #[error("malformed field file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
