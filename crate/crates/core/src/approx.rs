//! Polygonal approximation of smooth curves and point chains.
//!
//! Geodesic polygons take side lengths and turning angles from the
//! Riemannian log of the surface; line polygons use chord lengths and the
//! tangent-plane projections of neighbor differences, so they also work for
//! points that only approximately lie on a surface.

use std::f64::consts::TAU;

use crate::curve::{ArcLengthTable, ParamCurve};
use crate::error::{Error, Result};
use crate::geometry::{project_along, signed_angle, Frame, SurfacePoint, Vec3};
use crate::surfaces::SurfaceHandle;
use crate::tensor::{polygon_components, transport_angles, PolygonData, SmoothCurveData, TransportMode};

const MIN_GAP: f64 = 1e-12;
const NORMAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    /// Points and normals are exact surface data.
    OnSurface,
    /// Points approximate a surface at resolution `h`.
    Approximate(f64),
}

/// A closed chain of points with per-point unit normals.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyChain {
    points: Vec<Vec3>,
    normals: Vec<Vec3>,
    provenance: Provenance,
}

impl PolyChain {
    pub fn new(points: Vec<Vec3>, normals: Vec<Vec3>, provenance: Provenance) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if normals.len() != points.len() {
            return Err(Error::InvalidInput(format!("{} normals for {} points", normals.len(), points.len())));
        }
        for i in 0..points.len() {
            let gap = (points[(i + 1) % points.len()] - points[i]).norm();
            if !(gap > MIN_GAP) {
                return Err(Error::InvalidInput(format!("points {i} and {} coincide", (i + 1) % points.len())));
            }
            if (normals[i].norm() - 1.0).abs() > NORMAL_TOL {
                return Err(Error::InvalidInput(format!("normal {i} is not unit length")));
            }
        }
        Ok(PolyChain { points, normals, provenance })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The same chain traversed in the opposite direction, starting at point 0.
    pub fn reversed(&self) -> PolyChain {
        let order = std::iter::once(0).chain((1..self.len()).rev());
        let (points, normals) = order.map(|i| (self.points[i], self.normals[i])).unzip();
        PolyChain { points, normals, provenance: self.provenance }
    }

    /// Chord lengths `|x_{i+1} - x_i|` with circular indexing.
    pub fn chord_lengths(&self) -> Vec<f64> {
        let q = self.len();
        (0..q).map(|i| (self.points[(i + 1) % q] - self.points[i]).norm()).collect()
    }

    pub fn mean_spacing(&self) -> f64 {
        self.chord_lengths().iter().sum::<f64>() / self.len() as f64
    }
}

/// `q` points at equal arc-length spacing starting from arc length 0.
pub fn sample_curve(table: &ArcLengthTable<'_>, q: usize) -> Result<PolyChain> {
    if q < 3 {
        return Err(Error::TooFewPoints(q));
    }
    let curve = table.curve();
    let mut points = Vec::with_capacity(q);
    let mut normals = Vec::with_capacity(q);
    for i in 0..q {
        let t = table.param_at_arc(table.length() * i as f64 / q as f64);
        points.push(curve.point(t));
        normals.push(curve.normal(t));
    }
    PolyChain::new(points, normals, Provenance::OnSurface)
}

/// Geodesic polygon through the chain's points.
pub fn build_geodesic_polygon(chain: &PolyChain, surface: &SurfaceHandle) -> Result<PolygonData> {
    if surface.is_mesh() {
        return Err(Error::UnsupportedOnMesh("build_geodesic_polygon"));
    }
    if chain.provenance() != Provenance::OnSurface {
        return Err(Error::InvalidInput("geodesic polygons need points on the surface".into()));
    }
    let q = chain.len();
    let points: Vec<_> = chain.points().iter().map(|x| surface.point(*x)).collect::<Result<_>>()?;
    let mut forward = vec![Vec3::zeros(); q];
    let mut backward = vec![Vec3::zeros(); q];
    for i in 0..q {
        let j = (i + 1) % q;
        let (f, b) = surface.geodesic_log_pair(&points[i], &points[j])?;
        forward[i] = f.vec;
        backward[j] = b.vec;
    }
    polygon_from_logs(&points, &forward, &backward)
}

/// Geodesic polygon whose sides continue the given initial side vectors.
///
/// `previous[i]` is the log of side `i` of a nearby polygon; each side is
/// found by shooting from it. Returns the polygon and its side vectors for
/// the next step of a continuation.
pub fn continue_geodesic_polygon(
    chain: &PolyChain,
    surface: &SurfaceHandle,
    previous: &[Vec3],
) -> Result<(PolygonData, Vec<Vec3>)> {
    if surface.is_mesh() {
        return Err(Error::UnsupportedOnMesh("continue_geodesic_polygon"));
    }
    let q = chain.len();
    if previous.len() != q {
        return Err(Error::InvalidInput(format!("{} side vectors for {q} points", previous.len())));
    }
    let points: Vec<_> = chain.points().iter().map(|x| surface.point(*x)).collect::<Result<_>>()?;
    let mut forward = vec![Vec3::zeros(); q];
    let mut backward = vec![Vec3::zeros(); q];
    for i in 0..q {
        let j = (i + 1) % q;
        let guess = project_along(previous[i], &points[i].normal);
        let (f, b) = surface.geodesic_log_near(&points[i], &points[j], &guess)?;
        forward[i] = f.vec;
        backward[j] = b.vec;
    }
    Ok((polygon_from_logs(&points, &forward, &backward)?, forward))
}

/// Side vectors `log_{x_i}(x_{i+1})` of the geodesic polygon through the chain.
pub fn geodesic_sides(chain: &PolyChain, surface: &SurfaceHandle) -> Result<Vec<Vec3>> {
    let q = chain.len();
    let points: Vec<_> = chain.points().iter().map(|x| surface.point(*x)).collect::<Result<_>>()?;
    (0..q).map(|i| surface.geodesic_log_pair(&points[i], &points[(i + 1) % q]).map(|(f, _)| f.vec)).collect()
}

fn polygon_from_logs(points: &[SurfacePoint], forward: &[Vec3], backward: &[Vec3]) -> Result<PolygonData> {
    let q = points.len();
    let lengths: Vec<f64> = forward.iter().map(|v| v.norm()).collect();
    let angles: Vec<f64> = (0..q).map(|i| signed_angle(&-backward[i], &forward[i], &points[i].normal)).collect();
    let frame = Frame::from_direction(points[0].position, forward[0], points[0].normal)
        .ok_or_else(|| Error::InvalidInput("degenerate first side".into()))?;
    let data = PolygonData::new(angles, lengths)?.with_frame(frame);
    data.check_admissible()?;
    Ok(data)
}

/// Line polygon: chord lengths and angles between projected neighbor differences.
pub fn build_line_polygon(chain: &PolyChain) -> Result<PolygonData> {
    let q = chain.len();
    let x = chain.points();
    let n = chain.normals();
    let mut angles = Vec::with_capacity(q);
    let mut first_direction = Vec3::zeros();
    for i in 0..q {
        let to_prev = x[(i + q - 1) % q] - x[i];
        let to_next = x[(i + 1) % q] - x[i];
        for d in [&to_prev, &to_next] {
            if d.dot(&n[i]).powi(2) > 0.5 * d.norm_squared() {
                return Err(Error::DegenerateProjection { vertex: i });
            }
        }
        let v1 = project_along(to_prev, &n[i]);
        let v2 = project_along(to_next, &n[i]);
        angles.push(signed_angle(&-v1, &v2, &n[i]));
        if i == 0 {
            first_direction = v2;
        }
    }
    let frame = Frame::from_direction(x[0], first_direction, n[0])
        .ok_or_else(|| Error::InvalidInput("degenerate first side".into()))?;
    let data = PolygonData::new(angles, chain.chord_lengths())?.with_frame(frame);
    data.check_admissible()?;
    Ok(data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Geodesic,
    Line,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geodesic" => Ok(Scheme::Geodesic),
            "line" => Ok(Scheme::Line),
            other => Err(Error::InvalidInput(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Errors of one refinement level; `eoc_*` are relative to the previous level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    pub q: usize,
    pub err_length: f64,
    pub err_curvature: f64,
    pub err_f: Option<f64>,
    pub err_g: f64,
    pub eoc_length: Option<f64>,
    pub eoc_curvature: Option<f64>,
    pub eoc_f: Option<f64>,
    pub eoc_g: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub scheme: Scheme,
    pub rank: u32,
    pub reference_length: f64,
    pub reference_curvature: f64,
    /// Normalized reference components `g / L`.
    pub reference_g: [f64; 2],
    /// Difference between reference components on the full and half grid.
    pub reference_error: f64,
    pub levels: Vec<LevelRecord>,
}

/// `log(e_prev / e) / log(q / q_prev)`.
pub fn eoc(e_prev: f64, e: f64, q_prev: f64, q: f64) -> f64 {
    (e_prev / e).ln() / (q / q_prev).ln()
}

/// Reference quantities of a smooth curve, shared by all levels of a study.
pub struct Reference<'a> {
    pub table: ArcLengthTable<'a>,
    pub smooth: SmoothCurveData,
    /// Defect-corrected transport angle at each grid node `0..=N`.
    pub f: Vec<f64>,
}

impl<'a> Reference<'a> {
    pub fn new(curve: &'a dyn ParamCurve) -> Result<Self> {
        let table = ArcLengthTable::new(curve, ArcLengthTable::DEFAULT_SAMPLES)?;
        let smooth = SmoothCurveData::from_curve(&table, SmoothCurveData::REFERENCE_SAMPLES, 0.0)?;
        let f = smooth.transport_angles(TransportMode::DefectCorrected)?;
        Ok(Reference { table, smooth, f })
    }

    /// Largest `|f(s) - f_i|` over grid nodes `s` on side `i`, for a
    /// polygon whose vertices sit at `s_i = i L / q`.
    pub fn f_error(&self, polygon: &PolygonData) -> Result<f64> {
        let (fq, _) = transport_angles(polygon, TransportMode::DefectCorrected)?;
        let q = fq.len();
        let n = self.smooth.samples();
        let mut worst = 0.0f64;
        for (k, f) in self.f.iter().enumerate().take(n) {
            let side = (k * q / n).min(q - 1);
            worst = worst.max((f - fq[side]).abs());
        }
        Ok(worst)
    }
}

/// Errors of the polygonal approximations at each `q` in `levels`.
pub fn convergence_study(
    curve: &dyn ParamCurve,
    surface: &SurfaceHandle,
    scheme: Scheme,
    levels: &[usize],
    p: u32,
) -> Result<ConsistencyReport> {
    let reference = Reference::new(curve)?;
    let records = levels
        .iter()
        .map(|&q| level_errors(&reference, surface, scheme, q, p))
        .collect::<Result<Vec<_>>>()?;
    assemble_report(&reference, scheme, p, records)
}

/// Errors at a single level, with the eoc fields left empty.
pub fn level_errors(reference: &Reference<'_>, surface: &SurfaceHandle, scheme: Scheme, q: usize, p: u32) -> Result<LevelRecord> {
    let chain = sample_curve(&reference.table, q)?;
    let polygon = match scheme {
        Scheme::Geodesic => build_geodesic_polygon(&chain, surface)?,
        Scheme::Line => build_line_polygon(&chain)?,
    };
    let g_ref = crate::tensor::smooth_components(&reference.smooth, p)?.normalized();
    let g = polygon_components(&polygon, p)?.normalized();
    Ok(LevelRecord {
        q,
        err_length: (reference.smooth.length - polygon.length()).abs(),
        err_curvature: (reference.smooth.total_curvature() - polygon.total_turning()).abs(),
        err_f: match scheme {
            Scheme::Geodesic => Some(reference.f_error(&polygon)?),
            Scheme::Line => None,
        },
        err_g: (g[0] - g_ref[0]).hypot(g[1] - g_ref[1]),
        eoc_length: None,
        eoc_curvature: None,
        eoc_f: None,
        eoc_g: None,
    })
}

/// Fills in the eoc columns and reference data.
pub fn assemble_report(reference: &Reference<'_>, scheme: Scheme, p: u32, mut records: Vec<LevelRecord>) -> Result<ConsistencyReport> {
    for i in 1..records.len() {
        let (q0, q1) = (records[i - 1].q as f64, records[i].q as f64);
        let prev = records[i - 1].clone();
        let rec = &mut records[i];
        rec.eoc_length = Some(eoc(prev.err_length, rec.err_length, q0, q1));
        rec.eoc_curvature = Some(eoc(prev.err_curvature, rec.err_curvature, q0, q1));
        rec.eoc_f = match (prev.err_f, rec.err_f) {
            (Some(a), Some(b)) => Some(eoc(a, b, q0, q1)),
            _ => None,
        };
        rec.eoc_g = Some(eoc(prev.err_g, rec.err_g, q0, q1));
    }
    let mt = crate::tensor::smooth_components(&reference.smooth, p)?;
    Ok(ConsistencyReport {
        scheme,
        rank: p,
        reference_length: reference.smooth.length,
        reference_curvature: reference.smooth.total_curvature(),
        reference_g: mt.normalized(),
        reference_error: reference.smooth.quadrature_error_estimate(p, TransportMode::DefectCorrected)?,
        levels: records,
    })
}

/// Cleans a measured contour: drops repeated points, then replaces every
/// point by the mean of itself and its two neighbors `smoothing_passes` times.
pub fn ingest_contour(points: &[Vec3], normals: &[Vec3], smoothing_passes: usize) -> Result<PolyChain> {
    if points.len() != normals.len() {
        return Err(Error::InvalidInput(format!("{} normals for {} points", normals.len(), points.len())));
    }
    let mut pts: Vec<Vec3> = Vec::with_capacity(points.len());
    let mut nrm: Vec<Vec3> = Vec::with_capacity(points.len());
    for (x, n) in points.iter().zip(normals) {
        if pts.last().is_some_and(|p| (p - x).norm() <= MIN_GAP) {
            continue;
        }
        let len = n.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidInput("contour normal has zero length".into()));
        }
        pts.push(*x);
        nrm.push(n / len);
    }
    while pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= MIN_GAP {
        pts.pop();
        nrm.pop();
    }
    if pts.len() < 3 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    let q = pts.len();
    for _ in 0..smoothing_passes {
        pts = (0..q).map(|i| (pts[(i + q - 1) % q] + pts[i] + pts[(i + 1) % q]) / 3.0).collect();
    }
    let h = (0..q).map(|i| (pts[(i + 1) % q] - pts[i]).norm()).sum::<f64>() / q as f64;
    PolyChain::new(pts, nrm, Provenance::Approximate(h))
}

/// `q` equidistributed points on the circle of polar angle `polar` around
/// the north pole of a sphere (or of radius `polar` in the plane),
/// counter-clockwise about the outer normal.
pub fn regular_sphere_chain(surface: &SurfaceHandle, q: usize, polar: f64) -> Result<PolyChain> {
    let r = match surface {
        SurfaceHandle::Sphere { radius } => *radius,
        SurfaceHandle::Plane => {
            let points: Vec<Vec3> =
                (0..q).map(|i| Vec3::new(polar * (TAU * i as f64 / q as f64).cos(), polar * (TAU * i as f64 / q as f64).sin(), 0.0)).collect();
            return PolyChain::new(points, vec![Vec3::z(); q], Provenance::OnSurface);
        }
        _ => return Err(Error::InvalidInput("regular chains are defined on spheres and planes".into())),
    };
    let points: Vec<Vec3> = (0..q)
        .map(|i| {
            let phi = TAU * i as f64 / q as f64;
            Vec3::new(polar.sin() * phi.cos(), polar.sin() * phi.sin(), polar.cos()) * r
        })
        .collect();
    let normals = points.iter().map(|x| x / r).collect();
    PolyChain::new(points, normals, Provenance::OnSurface)
}
