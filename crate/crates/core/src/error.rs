use thiserror::Error;

/// Errors raised by the geometry, deformation and surgery layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: [f64; 4] },
    #[error("profile argument {x} outside domain [{lo}, {hi}]")]
    ProfileDomain { x: f64, lo: f64, hi: f64 },
    #[error("metric not positive definite at {point:?} (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { point: [f64; 4], min_eig: f64 },
    #[error("warping function must be positive, got {value:e} at r = {r}")]
    NonPositiveWarp { r: f64, value: f64 },
    #[error("finite-difference stencil leaves the domain at {point:?} (mesh {mesh:e})")]
    StencilOutside { point: [f64; 4], mesh: f64 },
    #[error("raw grid has no node at {point:?}")]
    NotOnGrid { point: [f64; 4] },
    #[error("no analytic curvature route for the '{0}' structure")]
    NoAnalyticRoute(&'static str),
    #[error("curvature input violates its invariants: {0}")]
    CorruptBlocks(String),
    #[error("reciprocal operand drops below its certified bound {bound:e} (value {value:e} at {x})")]
    ReciprocalBound { x: f64, value: f64, bound: f64 },
    #[error("chart domains do not match")]
    DomainMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("construction infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("certification failed in stage {stage}: {detail}")]
    StageFailure { stage: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, GeomError>;
