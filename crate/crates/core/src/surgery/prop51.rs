use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closeness::{ck_distance_relative, SpatialSpec};
use crate::conditions::classify_curvature;
use crate::curvature::curvature_analytic;
use crate::deform::certify::{certify_atlas, CertificationReport, CertifyConfig, Condition};
use crate::deform::path::{Atlas, AtlasChart};
use crate::error::{GeomError, Result};
use crate::metric::{ChartMetric, Structure};
use crate::metric::standard::h_std_structure;
use crate::surgery::profile::{apply_surgery, SurgeryProfile};

/// Thresholds of [`verify_prop51`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop51Options {
    /// Closeness bound in relative `C^order`.
    pub eps: f64,
    pub order: usize,
    pub mesh: f64,
    /// Accept `pco_margin(h) ≥ −1e-12` instead of `> 0` (the exact cylinder).
    pub allow_boundary: bool,
    pub pinching_lambda: f64,
    /// Required fraction of samples whose observed margin dominates the predicted bound.
    pub dominance: f64,
}

impl Default for Prop51Options {
    fn default() -> Self {
        Prop51Options { eps: 0.02, order: 2, mesh: 1e-3, allow_boundary: false, pinching_lambda: 1.5, dominance: 0.99 }
    }
}

/// One grid sample of the comparison with the proof's bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop51Sample {
    pub point: [f64; 4],
    pub f: f64,
    /// Smallest curvature-operator eigenvalue of `h`.
    pub lambda: f64,
    /// `λ + q²f/(2s⁴)`
    pub predicted: f64,
    /// `pco_margin(ĥ)` in the orthonormal frame of `ĥ`.
    pub observed_raw: f64,
    /// `e^{−2f}·pco_margin(ĥ)`: the same eigenvalue in the frame of `h`.
    pub observed_rescaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop51Report {
    pub certification: CertificationReport,
    pub closeness: f64,
    pub min_operator_h: f64,
    pub samples: Vec<Prop51Sample>,
    pub dominated_raw: f64,
    pub dominated_rescaled: f64,
    /// Sample indices with `observed_rescaled < predicted`.
    pub flagged: Vec<usize>,
    /// Samples where `h` is pinched but `ĥ` is not.
    pub pinching_violations: Vec<usize>,
    pub pass: bool,
}

const TIE: f64 = 1e-12;

/// Check that `e^{−2f}h` has positive curvature operator on the grid, and
/// compare every sample with the proof's lower bound `λ + q²f/(2s⁴)`.
pub fn verify_prop51(h: &ChartMetric, profile: &SurgeryProfile, grid: &SpatialSpec, opts: &Prop51Options) -> Result<Prop51Report> {
    let reference = ChartMetric { structure: h_std_structure(), name: "h_std".into(), ..h.clone() };
    let ck = ck_distance_relative(h, &reference, opts.order, grid, opts.mesh)?;
    if !(ck.value < opts.eps) {
        return Err(GeomError::Precondition(format!(
            "closeness fails: relative C^{} distance to h_std is {:e} ≥ {} (order {} at {:?})",
            opts.order, ck.value, opts.eps, ck.worst_order, ck.worst_point
        )));
    }
    let hat = apply_surgery(h, profile)?;
    let [lo, hi] = grid.range.unwrap_or([h.domain.lo[0], h.domain.hi[0]]);
    let points = grid.points(lo, hi);
    let lambda = opts.pinching_lambda;
    let evaluated: Vec<Result<(Prop51Sample, bool, bool)>> = points
        .par_iter()
        .map(|&x| {
            let rh = classify_curvature(&curvature_analytic(h, x)?, lambda)?;
            let rhat = classify_curvature(&curvature_analytic(&hat, x)?, lambda)?;
            let f = profile.value(x[0]);
            let predicted = rh.pco_margin + profile.predicted_gain(x[0]);
            let s = Prop51Sample {
                point: x,
                f,
                lambda: rh.pco_margin,
                predicted,
                observed_raw: rhat.pco_margin,
                observed_rescaled: (-2.0 * f).exp() * rhat.pco_margin,
            };
            let pinch_h = rh.pinching_margin() >= -TIE;
            let pinch_hat = rhat.pinching_margin() >= -TIE;
            Ok((s, pinch_h, pinch_hat))
        })
        .collect();
    let mut samples = Vec::with_capacity(points.len());
    let mut pinching_violations = Vec::new();
    for (k, r) in evaluated.into_iter().enumerate() {
        let (s, ph, phat) = r?;
        if ph && !phat {
            pinching_violations.push(k);
        }
        samples.push(s);
    }
    let min_operator_h = samples.iter().map(|s| s.lambda).fold(f64::INFINITY, f64::min);
    let positive = if opts.allow_boundary { min_operator_h >= -TIE } else { min_operator_h > 0.0 };
    if !positive {
        let worst = samples.iter().min_by(|a, b| a.lambda.total_cmp(&b.lambda)).expect("non-empty grid");
        return Err(GeomError::Precondition(format!(
            "positivity fails: curvature operator of h has eigenvalue {:e} at {:?}",
            worst.lambda, worst.point
        )));
    }
    let below = |obs: f64, pred: f64| obs < pred - TIE * (1.0 + pred.abs());
    let flagged: Vec<usize> = (0..samples.len()).filter(|&k| below(samples[k].observed_rescaled, samples[k].predicted)).collect();
    let n = samples.len().max(1) as f64;
    let raw_below = samples.iter().filter(|s| below(s.observed_raw, s.predicted)).count();
    let dominated_raw = 1.0 - raw_below as f64 / n;
    let dominated_rescaled = 1.0 - flagged.len() as f64 / n;

    let atlas = Atlas { charts: vec![AtlasChart::new(hat, [lo, hi])], overlaps: Vec::new() };
    let cfg = CertifyConfig { mu_samples: 1, spatial: SpatialSpec { range: None, ..grid.clone() }, conditions: vec![Condition::Pco, Condition::Pic], threshold: 0.0 };
    let mut certification = certify_atlas("prop51", &atlas, &cfg)?;
    certification.diagnostics.insert("closeness".into(), ck.value);
    certification.diagnostics.insert("dominated_raw".into(), dominated_raw);
    certification.diagnostics.insert("dominated_rescaled".into(), dominated_rescaled);
    certification.diagnostics.insert("flagged".into(), flagged.len() as f64);
    let pass = certification.pass && dominated_rescaled >= opts.dominance && pinching_violations.is_empty();
    Ok(Prop51Report {
        certification,
        closeness: ck.value,
        min_operator_h,
        samples,
        dominated_raw,
        dominated_rescaled,
        flagged,
        pinching_violations,
        pass,
    })
}

/// Whether `structure` is literally the scalar-curvature-1 cylinder.
pub(crate) fn is_h_std(structure: &Structure) -> bool {
    *structure == h_std_structure()
}
