use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A scalar argument was NaN or infinite.
    Domain(&'static str),
    /// An argument lies outside the supported range.
    InvalidParameter(&'static str),
    /// Bessel order above the supported cap of 64.
    OrderTooLarge { order: u32 },
    /// Bessel zero bracketing or refinement failed.
    ZeroSearch { order: u32, index: usize },
    /// Two fields do not share a grid, or a vector has the wrong length.
    Shape { expected: usize, found: usize },
    GridMismatch,
    OrderMismatch { expected: u32, found: u32 },
    /// Fixed-point iteration hit its cap.
    NonConvergence { iterations: usize, residual: f64 },
    /// The sphere target is carried symbolically but not solved.
    UnsupportedTarget,
    /// NaN guard; `node` is the first offending grid index.
    NonFinite { what: &'static str, node: usize },
    SingularSystem { row: usize },
    /// Frame lost Minkowski orthonormality between projections.
    FrameDrift { node: usize, drift: f64 },
    /// Map sample off the hyperboloid.
    InvalidMap { node: usize, deviation: f64 },
    /// Map not close to k̂ at the outer edge of the grid.
    NotAsymptotic { distance: f64 },
    InsufficientData { needed: usize, found: usize },
    /// A sink refused a record; the sink holds the cause.
    Sink(&'static str),
    /// A unitary substep changed the mass; the linear solve broke down.
    Unstable { what: &'static str, drift: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "non-finite argument: {what}"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::OrderTooLarge { order } => {
                write!(f, "Bessel order {order} exceeds the supported maximum 64")
            }
            Error::ZeroSearch { order, index } => {
                write!(f, "failed to locate Bessel zero j_{{{order},{index}}}")
            }
            Error::Shape { expected, found } => {
                write!(f, "shape mismatch: expected {expected} samples, found {found}")
            }
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::OrderMismatch { expected, found } => {
                write!(f, "angular order mismatch: expected {expected}, found {found}")
            }
            Error::NonConvergence { iterations, residual } => write!(
                f,
                "fixed-point iteration did not converge after {iterations} iterations (last change {residual:e})"
            ),
            Error::UnsupportedTarget => {
                write!(f, "only the hyperbolic target (mu = -1) is supported")
            }
            Error::NonFinite { what, node } => {
                write!(f, "non-finite value in {what} at node {node}")
            }
            Error::SingularSystem { row } => {
                write!(f, "singular linear system (zero pivot at row {row})")
            }
            Error::FrameDrift { node, drift } => write!(
                f,
                "frame orthonormality drift {drift:e} at node {node}; refine the grid"
            ),
            Error::InvalidMap { node, deviation } => {
                write!(f, "map leaves the hyperboloid at node {node} (deviation {deviation:e})")
            }
            Error::NotAsymptotic { distance } => write!(
                f,
                "map is not close to k at the outer radius (distance {distance:e})"
            ),
            Error::InsufficientData { needed, found } => {
                write!(f, "need at least {needed} records, found {found}")
            }
            Error::Sink(what) => write!(f, "sink failed: {what}"),
            Error::Unstable { what, drift } => {
                write!(f, "free substep of {what} changed the mass by {drift:e} (relative); reduce dt")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
