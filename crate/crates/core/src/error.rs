use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("log chart exceeded: {0}")]
    LogChartExceeded(String),

    #[error("basis is linearly dependent (rank {rank} < {expected})")]
    LinearlyDependent { rank: usize, expected: usize },

    #[error("not a subalgebra: bracket closure residual {residual:.3e} exceeds {tol:.1e}")]
    NotSubalgebra { residual: f64, tol: f64 },

    #[error("element is not in the subalgebra (off-subalgebra component {residual:.3e})")]
    NotInSubalgebra { residual: f64 },

    #[error("element is not in the ambient span (residual {residual:.3e})")]
    NotInSpan { residual: f64 },

    #[error("complement is not transverse: rank {rank} of {expected}")]
    NotTransverse { rank: usize, expected: usize },

    #[error("newton did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("singular jacobian at iteration {iteration} (residual {residual:.3e})")]
    SingularJacobian { iteration: usize, residual: f64 },

    #[error("slide failed: shrink radius ({0})")]
    SlideFailed(String),

    #[error("slice radius validation failed down to the floor {floor:.1e}: {reason}")]
    RadiusFloor { floor: f64, reason: String },

    #[error("insufficient stencil: {0}")]
    InsufficientStencil(String),

    #[error("elements are not composable (distance {distance:.3e})")]
    NotComposable { distance: f64 },

    #[error("integration left the domain at {location:?} (t = {time})")]
    Escaped { location: Vec<f64>, time: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("invalid foliation: {0}")]
    InvalidFoliation(String),

    #[error("invalid slice: {0}")]
    InvalidSlice(String),

    #[error("path endpoint mismatch: distance {distance:.3e}")]
    EndpointMismatch { distance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
