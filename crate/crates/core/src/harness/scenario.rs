use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::closeness::{angle_lattice, default_angles, SpatialSpec};
use crate::deform::certify::{CertifyConfig, Condition};
use crate::harness::HarnessError;
use crate::metric::standard::{h_std, round_s4, s2xs2};
use crate::metric::ChartMetric;
use crate::profile::ProfileExpr;
use crate::surgery::Prop51Options;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Where a metric comes from: `builtin:<name>`, a document path relative to
/// the scenario, or an inline table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSource {
    Named(String),
    Inline(Box<ChartMetric>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Analytic,
    Fd,
}

fn default_mesh() -> f64 {
    1e-3
}
fn default_c() -> f64 {
    0.1
}
fn default_q() -> f64 {
    20.0
}
fn default_sharpness() -> f64 {
    0.6
}
fn one() -> f64 {
    1.0
}
fn default_mw_samples() -> usize {
    10_000
}

/// The operation a scenario runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    /// Curvature package at explicit points.
    Curvature {
        metric: MetricSource,
        points: Vec<[f64; 4]>,
        #[serde(default)]
        backend: Backend,
        #[serde(default = "default_mesh")]
        mesh: f64,
        #[serde(default)]
        expect_eigenvalues: Option<[f64; 6]>,
    },
    /// Grid certification of a single metric.
    CertifyMetric { metric: MetricSource },
    /// `(1 − μ + μu)²·g`.
    StarPath { metric: MetricSource, u: ProfileExpr },
    WarpedFlatten {
        metric: MetricSource,
        /// End bands `fixed_from < |r|` are kept fixed.
        fixed_from: f64,
        #[serde(default)]
        symmetric: bool,
        #[serde(default)]
        periodic: bool,
        #[serde(default = "one")]
        end_radius: f64,
    },
    MwProfile {
        k1: f64,
        r1: f64,
        rho: f64,
        #[serde(default = "default_mw_samples")]
        samples: usize,
    },
    VerifyProp51 {
        metric: MetricSource,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default)]
        options: Prop51Options,
    },
    CapPath {
        metric: MetricSource,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default = "default_sharpness")]
        cap_sharpness: f64,
    },
    DoubleIsotopy {
        metric: MetricSource,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default = "default_sharpness")]
        cap_sharpness: f64,
    },
}

impl Operation {
    pub fn kind(&self) -> &'static str {
        match self {
            Operation::Curvature { .. } => "curvature",
            Operation::CertifyMetric { .. } => "certify_metric",
            Operation::StarPath { .. } => "star_path",
            Operation::WarpedFlatten { .. } => "warped_flatten",
            Operation::MwProfile { .. } => "mw_profile",
            Operation::VerifyProp51 { .. } => "verify_prop51",
            Operation::CapPath { .. } => "cap_path",
            Operation::DoubleIsotopy { .. } => "double_isotopy",
        }
    }

    fn metric(&self) -> Option<&MetricSource> {
        match self {
            Operation::MwProfile { .. } => None,
            Operation::Curvature { metric, .. }
            | Operation::CertifyMetric { metric }
            | Operation::StarPath { metric, .. }
            | Operation::WarpedFlatten { metric, .. }
            | Operation::VerifyProp51 { metric, .. }
            | Operation::CapPath { metric, .. }
            | Operation::DoubleIsotopy { metric, .. } => Some(metric),
        }
    }
}

fn default_mu() -> usize {
    10
}
fn default_axis0() -> usize {
    100
}
fn default_conditions() -> Vec<Condition> {
    vec![Condition::Pic]
}

/// Sampling grid of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_mu")]
    pub mu_samples: usize,
    #[serde(default = "default_axis0")]
    pub axis0: usize,
    /// Number of fiber angle triples; 1 uses the fixed default triple.
    #[serde(default = "one_usize")]
    pub angles: usize,
    #[serde(default)]
    pub range: Option<[f64; 2]>,
    #[serde(default = "default_conditions")]
    pub conditions: Vec<Condition>,
    /// Random isotropic frames sampled at the argmin of a metric certification.
    #[serde(default)]
    pub frames: usize,
}

fn one_usize() -> usize {
    1
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { mu_samples: default_mu(), axis0: default_axis0(), angles: 1, range: None, conditions: default_conditions(), frames: 0 }
    }
}

impl GridSpec {
    pub fn spatial(&self) -> SpatialSpec {
        let angles = if self.angles <= 1 { default_angles() } else { angle_lattice(self.angles) };
        SpatialSpec { axis0: self.axis0, angles, range: self.range }
    }

    pub fn certify_config(&self, threshold: f64) -> CertifyConfig {
        CertifyConfig { mu_samples: self.mu_samples, spatial: self.spatial(), conditions: self.conditions.clone(), threshold }
    }
}

fn default_tolerance() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// A condition passes when its minimum margin exceeds this.
    #[serde(default)]
    pub margin: f64,
    /// Allowed deviation from `expect_eigenvalues`.
    #[serde(default = "default_tolerance")]
    pub eigen_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { margin: 0.0, eigen_tolerance: default_tolerance() }
    }
}

/// Output files, relative to the scenario document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub report: Option<String>,
    #[serde(default)]
    pub table: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub operation: Operation,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A parsed scenario with its metric resolved and its paths made absolute.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub metric: Option<ChartMetric>,
    pub report_path: Option<PathBuf>,
    pub table_path: Option<PathBuf>,
}

fn schema(msg: impl Into<String>) -> HarnessError {
    HarnessError::Schema(msg.into())
}

fn builtin(name: &str) -> Option<ChartMetric> {
    match name {
        "h_std" => Some(h_std(-4.0, 4.0)),
        "round_s4" => Some(round_s4()),
        "s2xs2" => Some(s2xs2(1.0, 1.0)),
        _ => None,
    }
}

/// Resolve a metric reference against `base`.
pub fn resolve_metric(source: &MetricSource, base: &Path) -> Result<ChartMetric, HarnessError> {
    let metric = match source {
        MetricSource::Named(name) => {
            if let Some(b) = name.strip_prefix("builtin:") {
                builtin(b).ok_or_else(|| schema(format!("unknown builtin metric '{b}'")))?
            } else {
                let path = base.join(name);
                let text = std::fs::read_to_string(&path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
                ChartMetric::from_document(&text).map_err(|e| schema(format!("{}: {e}", path.display())))?
            }
        }
        MetricSource::Inline(m) => {
            if m.schema_version != crate::metric::SCHEMA_VERSION {
                return Err(schema(format!("unsupported metric schema_version {}", m.schema_version)));
            }
            (**m).clone()
        }
    };
    metric.validate().map_err(|e| schema(format!("metric '{}' is invalid: {e}", metric.name)))?;
    Ok(metric)
}

fn positive(name: &str, v: f64) -> Result<(), HarnessError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(schema(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Parse and validate a scenario document; nothing is executed or written.
pub fn prepare(text: &str, base: &Path) -> Result<Prepared, HarnessError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| schema(e.to_string()))?;
    if scenario.schema_version != SCENARIO_SCHEMA_VERSION {
        return Err(schema(format!("unsupported schema_version {}", scenario.schema_version)));
    }
    if scenario.name.is_empty() {
        return Err(schema("scenario name is empty"));
    }
    let metric = scenario.operation.metric().map(|m| resolve_metric(m, base)).transpose()?;
    let g = &scenario.grid;
    if g.conditions.is_empty() {
        return Err(schema("grid.conditions is empty"));
    }
    if let Some([lo, hi]) = g.range {
        if !(lo < hi) {
            return Err(schema(format!("grid.range [{lo}, {hi}] is empty")));
        }
    }
    match &scenario.operation {
        Operation::Curvature { points, mesh, .. } => {
            positive("mesh", *mesh)?;
            let m = metric.as_ref().expect("resolved");
            if points.is_empty() {
                return Err(schema("curvature needs at least one point"));
            }
            for p in points {
                if !m.domain.contains(*p) {
                    return Err(schema(format!("point {p:?} lies outside the chart domain")));
                }
            }
        }
        Operation::WarpedFlatten { fixed_from, end_radius, .. } => {
            positive("end_radius", *end_radius)?;
            if !(*fixed_from >= 0.0) {
                return Err(schema("fixed_from must be nonnegative"));
            }
        }
        Operation::MwProfile { k1, r1, rho, samples } => {
            positive("k1", *k1)?;
            positive("r1", *r1)?;
            positive("rho", *rho)?;
            if *samples < 2 {
                return Err(schema("mw_profile needs at least two samples"));
            }
        }
        Operation::VerifyProp51 { c, q, .. } => {
            positive("c", *c)?;
            positive("q", *q)?;
        }
        Operation::CapPath { c, q, cap_sharpness, .. } | Operation::DoubleIsotopy { c, q, cap_sharpness, .. } => {
            positive("c", *c)?;
            positive("q", *q)?;
            positive("cap_sharpness", *cap_sharpness)?;
        }
        Operation::CertifyMetric { .. } | Operation::StarPath { .. } => {}
    }
    let out = |p: &Option<String>| p.as_ref().map(|p| base.join(p));
    Ok(Prepared {
        report_path: out(&scenario.outputs.report),
        table_path: out(&scenario.outputs.table),
        scenario,
        metric,
    })
}
