//! Canonical metrics: a principal round S⁴ with round and cylinder quotients
//! attached along a tree of M-W connected sums.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::closeness::default_angles;
use crate::deform::certify::{certify_atlas, CertificationReport, CertifyConfig};
use crate::deform::mw::{mw_connect, Attachment, ConnectOptions, MWProfile};
use crate::deform::path::{Atlas, AtlasChart, CoordMap, Overlap};
use crate::error::{GeomError, Result};
use crate::metric::standard::h_std_structure;
use crate::metric::{ChartDomain, ChartMetric, Structure};
use crate::profile::ProfileExpr;

/// Radius of the S³ factor of `h_std`.
const STD_RADIUS: f64 = 2.449_489_742_783_178;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PieceKind {
    /// Unit round `S⁴/Γ`.
    Round,
    /// `h_std` on `S³/Γ × S¹` with circle length `period`.
    Cylinder { period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub name: String,
    #[serde(flatten)]
    pub kind: PieceKind,
    /// Γ label, metadata only.
    #[serde(default = "trivial")]
    pub gamma: String,
}

fn trivial() -> String {
    "trivial".into()
}

fn identity() -> String {
    "identity".into()
}

impl Piece {
    pub fn round(name: &str) -> Self {
        Piece { name: name.into(), kind: PieceKind::Round, gamma: trivial() }
    }

    pub fn cylinder(name: &str, period: f64) -> Self {
        Piece { name: name.into(), kind: PieceKind::Cylinder { period }, gamma: trivial() }
    }

    pub fn with_gamma(mut self, gamma: &str) -> Self {
        self.gamma = gamma.into();
        self
    }
}

/// A connected sum between nodes `a` and `b`; node 0 is the principal sphere
/// and node `k + 1` is piece `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoinSpec {
    pub a: usize,
    pub b: usize,
    pub profile: MWProfile,
    #[serde(default = "identity")]
    pub fiber_isometry: String,
}

/// Where one join sits in the assembled atlas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeckRecord {
    pub join: usize,
    pub neck_chart: usize,
    /// Local outer charts of the `a` and `b` side.
    pub outer_charts: [usize; 2],
    /// Attachment points in the main charts of `a` and `b`.
    pub points: [[f64; 4]; 2],
    pub k1_estimates: Vec<f64>,
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalAssembly {
    pub principal: Piece,
    pub pieces: Vec<Piece>,
    pub joins: Vec<JoinSpec>,
    pub atlas: Atlas,
    /// Main chart of each node.
    pub main_charts: Vec<usize>,
    pub necks: Vec<NeckRecord>,
    pub certification: CertificationReport,
}

impl CanonicalAssembly {
    pub fn per_neck_margins(&self) -> Vec<f64> {
        self.necks.iter().map(|n| n.min_margin).collect()
    }

    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("assembly serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyOptions {
    pub connect: ConnectOptions,
    pub certify_axis0: usize,
    pub angles: Vec<[f64; 3]>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { connect: ConnectOptions::default(), certify_axis0: 200, angles: vec![[1.1, 1.3, 0.4], [0.6, 2.2, -1.7]] }
    }
}

/// Check that the joins form a tree on `nodes` vertices rooted at node 0.
fn check_tree(nodes: usize, joins: &[JoinSpec]) -> Result<()> {
    let bad = |m: String| Err(GeomError::InvalidParameter(format!("join graph: {m}")));
    if joins.len() + 1 != nodes {
        return bad(format!("{} joins for {} pieces; a tree needs exactly one join per piece", joins.len(), nodes - 1));
    }
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (k, j) in joins.iter().enumerate() {
        if j.a >= nodes || j.b >= nodes {
            return bad(format!("join {k} refers to a missing node"));
        }
        if j.a == j.b {
            let what = if j.a == 0 { "the principal sphere" } else { "a piece" };
            return bad(format!("join {k} is a self-join of {what}"));
        }
        let (ra, rb) = (root(&mut parent, j.a), root(&mut parent, j.b));
        if ra == rb {
            return bad(format!("join {k} closes a cycle"));
        }
        parent[ra] = rb;
    }
    Ok(())
}

struct Layout {
    main: ChartMetric,
    /// Per attachment: point in main coordinates, local chart, map into the main chart.
    points: Vec<([f64; 4], ChartMetric, CoordMap)>,
}

fn layout(piece: &Piece, profiles: &[&MWProfile]) -> Result<Layout> {
    let n = profiles.len();
    let reach = profiles.iter().fold(0.0f64, |m, p| m.max(p.r1)) * 1.25;
    let (base, domain, circle) = match piece.kind {
        PieceKind::Round => (Structure::RoundSpherePolar { radius: 1.0 }, ChartDomain::fibered(0.0, PI), 2.0 * PI),
        PieceKind::Cylinder { period } => {
            if !(period > 0.0) {
                return Err(GeomError::InvalidParameter(format!("cylinder period {period} must be positive")));
            }
            (h_std_structure(), ChartDomain::fibered(-0.5 * period, 0.5 * period + 0.5), period)
        }
    };
    if n > 0 && circle / n as f64 <= 2.0 * reach {
        return Err(GeomError::InvalidParameter(format!(
            "{} attachments on '{}' do not fit: spacing {} needs to exceed {}",
            n,
            piece.name,
            circle / n as f64,
            2.0 * reach
        )));
    }
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let local_domain = ChartDomain::fibered(0.0, reach);
        let item = match piece.kind {
            PieceKind::Round => {
                let theta = 0.5 * PI + 2.0 * PI * k as f64 / n as f64;
                let theta = theta.rem_euclid(2.0 * PI);
                let c = if theta <= PI { [theta, 0.0, 0.0, 0.0] } else { [2.0 * PI - theta, PI, 0.0, 0.0] };
                let local = ChartMetric::new(&format!("{}_at{k}", piece.name), local_domain, Structure::RoundSpherePolar { radius: 1.0 });
                (c, local, CoordMap::SphereRotation { angle: theta })
            }
            PieceKind::Cylinder { period } => {
                let s = -0.5 * period + period * (k as f64 + 0.5) / n as f64;
                let local = ChartMetric::new(&format!("{}_at{k}", piece.name), local_domain, Structure::CylinderPolar { radius: STD_RADIUS });
                ([s, 0.0, 0.0, 0.0], local, CoordMap::CylinderPolarToProduct { center: s, radius: STD_RADIUS })
            }
        };
        points.push((item.0, item.1.with_gamma(&piece.gamma), item.2));
    }
    let structure = if n == 0 {
        base
    } else {
        Structure::PointConformal {
            base: Box::new(base),
            centers: points.iter().map(|p| p.0).collect(),
            profiles: profiles.iter().map(|p| p.f.clone()).collect::<Vec<ProfileExpr>>(),
        }
    };
    let main = ChartMetric::new(&piece.name, domain, structure).with_gamma(&piece.gamma);
    Ok(Layout { main, points })
}

/// Assemble the principal sphere and the pieces along the joins, certifying
/// the whole atlas for PIC.
pub fn canonical_assembly(principal: &Piece, pieces: &[Piece], joins: &[JoinSpec], opts: &AssemblyOptions) -> Result<CanonicalAssembly> {
    if principal.kind != PieceKind::Round || principal.gamma != "trivial" {
        return Err(GeomError::InvalidParameter("the principal component must be the round S⁴".into()));
    }
    let nodes: Vec<&Piece> = std::iter::once(principal).chain(pieces).collect();
    check_tree(nodes.len(), joins)?;
    // attachments of each node in join order: (join, side)
    let mut slots: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes.len()];
    for (k, j) in joins.iter().enumerate() {
        slots[j.a].push((k, 0));
        slots[j.b].push((k, 1));
    }
    let mut atlas = Atlas { charts: Vec::new(), overlaps: Vec::new() };
    let mut layouts = Vec::with_capacity(nodes.len());
    let mut main_charts = Vec::with_capacity(nodes.len());
    for (i, piece) in nodes.iter().enumerate() {
        let profiles: Vec<&MWProfile> = slots[i].iter().map(|&(k, _)| &joins[k].profile).collect();
        let l = layout(piece, &profiles)?;
        if let PieceKind::Cylinder { period } = piece.kind {
            let me = atlas.charts.len();
            atlas.overlaps.push(Overlap {
                from: me,
                to: me,
                map: CoordMap::Axis0 { map: ProfileExpr::affine(1.0, -period) },
                range: [0.5 * period, 0.5 * period + 0.5],
            });
        }
        let hi = match piece.kind {
            PieceKind::Round => PI,
            PieceKind::Cylinder { period } => 0.5 * period,
        };
        main_charts.push(atlas.charts.len());
        atlas.charts.push(AtlasChart::new(l.main.clone(), [l.main.domain.lo[0], hi]));
        layouts.push(l);
    }
    let slot_of = |node: usize, join: usize| slots[node].iter().position(|&(k, _)| k == join).expect("slot recorded");
    let mut necks = Vec::with_capacity(joins.len());
    for (k, j) in joins.iter().enumerate() {
        let (sa, sb) = (slot_of(j.a, k), slot_of(j.b, k));
        let (pa, la, ma) = &layouts[j.a].points[sa];
        let (pb, lb, mb) = &layouts[j.b].points[sb];
        let join = mw_connect(
            &Attachment::new(la.clone()),
            &Attachment::new(lb.clone()),
            &j.profile,
            &j.profile,
            &j.fiber_isometry,
            &opts.connect,
        )?;
        let off = atlas.charts.len();
        for c in &join.atlas.charts {
            atlas.charts.push(c.clone());
        }
        for ov in &join.atlas.overlaps {
            atlas.overlaps.push(Overlap { from: ov.from + off, to: ov.to + off, ..ov.clone() });
        }
        let outer = [join.outer[0] + off, join.outer[1] + off];
        for (side, map, node) in [(0, ma, j.a), (1, mb, j.b)] {
            let p = &j.profile;
            atlas.overlaps.push(Overlap { from: outer[side], to: main_charts[node], map: map.clone(), range: [0.5 * p.r1_star, p.r1] });
        }
        necks.push(NeckRecord {
            join: k,
            neck_chart: join.neck + off,
            outer_charts: outer,
            points: [*pa, *pb],
            k1_estimates: join.k1_estimates.clone(),
            min_margin: f64::NAN,
        });
    }
    let cfg = CertifyConfig::pic(1, opts.certify_axis0).with_angles(if opts.angles.is_empty() { default_angles() } else { opts.angles.clone() });
    let certification = certify_atlas("canonical-assembly", &atlas, &cfg)?;
    let minima = &certification.rows[0].chart_minima;
    for n in &mut necks {
        n.min_margin = [n.neck_chart, n.outer_charts[0], n.outer_charts[1]].iter().fold(f64::INFINITY, |m, &c| m.min(minima[c]));
    }
    if !certification.pass {
        let s = &certification.conditions[0];
        return Err(GeomError::Precondition(format!(
            "assembled metric is not PIC: margin {:e} in chart {} at {:?}",
            s.min_margin, s.argmin_chart, s.argmin_point
        )));
    }
    Ok(CanonicalAssembly {
        principal: principal.clone(),
        pieces: pieces.to_vec(),
        joins: joins.to_vec(),
        atlas,
        main_charts,
        necks,
        certification,
    })
}
