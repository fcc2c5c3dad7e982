//! Curvature computation, PIC classification and isotopy certification for
//! structured Riemannian 4-metrics.

pub mod closeness;
pub mod conditions;
pub mod curvature;
pub mod deform;
pub mod error;
pub mod harness;
pub mod jet;
pub mod linalg;
pub mod metric;
pub mod profile;
pub mod surgery;

pub use conditions::{classify_curvature, conformal_scalar_sigma, ConditionReport};
pub use curvature::{curvature_analytic, curvature_conformal, curvature_fd, curvature_jet, curvature_warped, CurvatureBlocks};
pub use error::{GeomError, Result};
pub use metric::{ChartDomain, ChartMetric, Structure};
pub use profile::{Profile1D, ProfileExpr, StepShape, D2};
