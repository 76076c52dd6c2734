use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bounds on axis {axis}: lo = {lo}, hi = {hi}")]
    InvalidBounds { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis} has resolution {resolution}, at least 8 points are required")]
    ResolutionTooSmall { axis: usize, resolution: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("scheme {scheme} is not supported on axis {axis}")]
    SchemeUnsupported { scheme: &'static str, axis: usize },
    #[error("fields live on different charts")]
    ChartMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite sample at node {node}")]
    NonFinite { node: usize },
    #[error("matrix is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },
    #[error("interpolated metric lost its signature at node {node}")]
    SignatureLost { node: usize },
    #[error("component {component}: inertia {found} differs from declared {expected} at node {node} {coords:?}")]
    InertiaMismatch {
        component: usize,
        node: usize,
        coords: Vec<f64>,
        expected: String,
        found: String,
    },
    #[error("sample points span only {rank} of {dim} dimensions")]
    DegenerateBody { rank: usize, dim: usize },
    #[error("metric is singular at node {node} (condition {condition:e})")]
    SingularMetric { node: usize, condition: f64 },
    #[error("map sends node {node} outside the target chart")]
    MapsOutsideChart { node: usize },
    #[error("jacobian is singular at node {node}")]
    SingularJacobian { node: usize },
    #[error("operation requires a fully periodic chart")]
    NonPeriodicChart,
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverNonconvergence { iterations: usize, residual: f64 },
    #[error("point {position:?} lies outside the chart")]
    OutsideChart { position: Vec<f64> },
    #[error("energy drift {drift:e} exceeds the step tolerance")]
    StepTooLarge { drift: f64 },
    #[error("euler form requires an even dimension, got {0}")]
    OddDimension(usize),
    #[error("truncation degree {degree} exceeds form dimension {dim}")]
    TruncationTooHigh { degree: usize, dim: usize },
    #[error("eigensolve failed: {0}")]
    EigensolveFailure(String),
    #[error("smallest nonzero eigenvalue {smallest:e} is within 10x of the kernel tolerance {tol:e}")]
    KernelGapTooSmall { smallest: f64, tol: f64 },
    #[error("potential is not coercive at the interval ends (|phi| = {value} < {bound})")]
    PotentialNotCoercive { value: f64, bound: f64 },
    #[error("grid graph is disconnected")]
    DisconnectedGraph,
    #[error("no distance samples")]
    EmptySamples,
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
