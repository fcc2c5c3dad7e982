//! Grid certification of curvature conditions along paths.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closeness::SpatialSpec;
use crate::conditions::{classify_curvature, ConditionReport};
use crate::curvature::curvature_analytic;
use crate::deform::path::{Atlas, IsotopyPath};
use crate::error::{GeomError, Result};

/// A curvature condition whose margin is certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Condition {
    Pic,
    Pco,
    Psc,
    Pinching { lambda: f64 },
}

impl Condition {
    pub fn name(&self) -> String {
        match self {
            Condition::Pic => "pic".into(),
            Condition::Pco => "pco".into(),
            Condition::Psc => "psc".into(),
            Condition::Pinching { lambda } => format!("pinching({lambda})"),
        }
    }

    pub fn margin(&self, r: &ConditionReport) -> f64 {
        match self {
            Condition::Pic => r.pic_margin,
            Condition::Pco => r.pco_margin,
            Condition::Psc => r.psc_margin,
            Condition::Pinching { .. } => r.pinching_margin(),
        }
    }

    fn lambda(&self) -> f64 {
        match self {
            Condition::Pinching { lambda } => *lambda,
            _ => 1.0,
        }
    }
}

/// Grid and thresholds of a certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub mu_samples: usize,
    pub spatial: SpatialSpec,
    pub conditions: Vec<Condition>,
    #[serde(default)]
    pub threshold: f64,
}

impl CertifyConfig {
    pub fn pic(mu_samples: usize, axis0: usize) -> Self {
        CertifyConfig { mu_samples, spatial: SpatialSpec::new(axis0), conditions: vec![Condition::Pic], threshold: 0.0 }
    }

    pub fn with_conditions(mut self, conditions: Vec<Condition>) -> Self {
        self.conditions = conditions;
        self
    }

    pub fn with_angles(mut self, angles: Vec<[f64; 3]>) -> Self {
        self.spatial.angles = angles;
        self
    }

    pub fn mu_values(&self) -> Vec<f64> {
        match self.mu_samples {
            0 => Vec::new(),
            1 => vec![0.0],
            n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Minimum of one condition over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub min_margin: f64,
    pub argmin_mu: f64,
    pub argmin_chart: usize,
    pub argmin_point: [f64; 4],
    pub pass: bool,
}

/// Minimum of the first condition at one μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRow {
    pub mu: f64,
    pub min_margin: f64,
    pub argmin_chart: usize,
    pub argmin_point: [f64; 4],
    /// Per-condition minima in the order of the config.
    pub margins: Vec<f64>,
    /// Per-chart minima of the first condition.
    pub chart_minima: Vec<f64>,
}

/// Sampled minima of condition margins over a (μ × space) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub label: String,
    pub mu_samples: usize,
    pub spatial: SpatialSpec,
    pub points_per_mu: usize,
    pub threshold: f64,
    pub conditions: Vec<ConditionSummary>,
    pub rows: Vec<MuRow>,
    pub pass: bool,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
    /// Wall time in seconds; not part of emitted documents.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl CertificationReport {
    /// Summary of the first condition.
    pub fn primary(&self) -> Option<&ConditionSummary> {
        self.conditions.first()
    }

    pub fn min_margin(&self) -> f64 {
        self.primary().map_or(f64::INFINITY, |c| c.min_margin)
    }

    /// An empty report with the grid metadata filled in.
    pub fn empty(label: &str, config: &CertifyConfig) -> Self {
        CertificationReport {
            label: label.to_string(),
            mu_samples: config.mu_samples,
            spatial: config.spatial.clone(),
            points_per_mu: 0,
            threshold: config.threshold,
            conditions: Vec::new(),
            rows: Vec::new(),
            pass: true,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    /// Recompute the pass flag from the summaries.
    pub fn finalize(&mut self) {
        for c in &mut self.conditions {
            c.pass = c.min_margin > self.threshold;
        }
        self.pass = self.conditions.iter().all(|c| c.pass);
    }

    /// Fold another report (same conditions) into this one as further μ rows.
    pub fn absorb(&mut self, other: &CertificationReport, mu_offset: f64, mu_scale: f64) {
        for (mine, theirs) in self.conditions.iter_mut().zip(&other.conditions) {
            if theirs.min_margin < mine.min_margin {
                mine.min_margin = theirs.min_margin;
                mine.argmin_mu = mu_offset + mu_scale * theirs.argmin_mu;
                mine.argmin_chart = theirs.argmin_chart;
                mine.argmin_point = theirs.argmin_point;
            }
        }
        if self.conditions.is_empty() {
            self.conditions = other
                .conditions
                .iter()
                .map(|c| ConditionSummary { argmin_mu: mu_offset + mu_scale * c.argmin_mu, ..c.clone() })
                .collect();
        }
        for r in &other.rows {
            self.rows.push(MuRow { mu: mu_offset + mu_scale * r.mu, ..r.clone() });
        }
        self.mu_samples = self.rows.len();
        self.points_per_mu = self.points_per_mu.max(other.points_per_mu);
        self.wall_time_s += other.wall_time_s;
        self.finalize();
    }
}

struct MuResult {
    margins: Vec<(f64, usize, [f64; 4])>,
    chart_minima: Vec<f64>,
    points: usize,
}

fn evaluate_atlas(atlas: &Atlas, config: &CertifyConfig) -> Result<MuResult> {
    let nc = config.conditions.len();
    let mut margins = vec![(f64::INFINITY, 0usize, [f64::NAN; 4]); nc];
    let mut chart_minima = vec![f64::INFINITY; atlas.charts.len()];
    let lambda = config.conditions.iter().map(|c| c.lambda()).next().unwrap_or(1.0);
    let mut points = 0;
    for (ci, chart) in atlas.charts.iter().enumerate() {
        let [lo, hi] = chart.certify_range;
        let spec = SpatialSpec { range: None, ..config.spatial.clone() };
        for x in spec.points(lo, hi) {
            points += 1;
            let blocks = curvature_analytic(&chart.metric, x)?;
            let report = classify_curvature(&blocks, lambda)?;
            for (k, cond) in config.conditions.iter().enumerate() {
                let m = match cond {
                    Condition::Pinching { lambda: l } if *l != lambda => classify_curvature(&blocks, *l)?.pinching_margin(),
                    _ => cond.margin(&report),
                };
                if m.is_nan() {
                    return Err(GeomError::Numeric(format!("NaN margin at {x:?} in chart {ci}")));
                }
                // strict `<` keeps the first point in scan order on ties
                if m < margins[k].0 {
                    margins[k] = (m, ci, x);
                }
                if k == 0 && m < chart_minima[ci] {
                    chart_minima[ci] = m;
                }
            }
        }
    }
    Ok(MuResult { margins, chart_minima, points })
}

/// Certify a single atlas (a constant path).
pub fn certify_atlas(label: &str, atlas: &Atlas, config: &CertifyConfig) -> Result<CertificationReport> {
    certify_members(label, config, |_| Ok(atlas.clone()))
}

/// Evaluate every requested condition at every (μ, point) sample.
pub fn certify_path(path: &IsotopyPath, config: &CertifyConfig) -> Result<CertificationReport> {
    certify_members(&path.label, config, |mu| path.member(mu))
}

fn certify_members<F>(label: &str, config: &CertifyConfig, member: F) -> Result<CertificationReport>
where
    F: Fn(f64) -> Result<Atlas> + Sync,
{
    let start = Instant::now();
    let mus = config.mu_values();
    let results: Vec<Result<MuResult>> = mus.par_iter().map(|&mu| evaluate_atlas(&member(mu)?, config)).collect();
    let mut report = CertificationReport::empty(label, config);
    let nc = config.conditions.len();
    let mut summaries: Vec<ConditionSummary> = config
        .conditions
        .iter()
        .map(|c| ConditionSummary {
            condition: c.name(),
            min_margin: f64::INFINITY,
            argmin_mu: f64::NAN,
            argmin_chart: 0,
            argmin_point: [f64::NAN; 4],
            pass: false,
        })
        .collect();
    for (mu, res) in mus.iter().zip(results) {
        let res = res.map_err(|e| match e {
            GeomError::NotPositiveDefinite { point, min_eig } => GeomError::NotPositiveDefinite { point, min_eig },
            other => GeomError::Numeric(format!("at μ = {mu}: {other}")),
        })?;
        report.points_per_mu = res.points;
        for k in 0..nc {
            if res.margins[k].0 < summaries[k].min_margin {
                summaries[k].min_margin = res.margins[k].0;
                summaries[k].argmin_mu = *mu;
                summaries[k].argmin_chart = res.margins[k].1;
                summaries[k].argmin_point = res.margins[k].2;
            }
        }
        if nc > 0 {
            report.rows.push(MuRow {
                mu: *mu,
                min_margin: res.margins[0].0,
                argmin_chart: res.margins[0].1,
                argmin_point: res.margins[0].2,
                margins: res.margins.iter().map(|m| m.0).collect(),
                chart_minima: res.chart_minima,
            });
        }
    }
    report.conditions = summaries;
    report.finalize();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
