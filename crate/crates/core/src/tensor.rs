//! Irreducible surface Minkowski tensors.
//!
//! A closed curve is reduced to the angle `f` of its transported co-normal
//! relative to the co-normal at a fiducial point. With defect-corrected
//! transport the angle is the accumulated geodesic curvature rescaled so a
//! full loop maps to `2 pi`; with plain parallel transport it is the
//! accumulated curvature itself. The rank-`p` irreducible tensor is encoded
//! by its two independent components `(int cos(p f) ds, int sin(p f) ds)`.

use std::f64::consts::{PI, TAU};

use crate::curve::{geodesic_curvature_at, ArcLengthTable};
use crate::error::{Error, Result};
use crate::geometry::{Frame, TangentVector, Vec3};
use crate::surfaces::SurfaceHandle;

/// Total turning (or total geodesic curvature) must exceed this, in radians.
pub const ADMISSIBILITY_FLOOR: f64 = 1e-6;
/// Eigen-directions are undefined when `lambda <= DIRECTION_FLOOR * L`.
pub const DIRECTION_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransportMode {
    Parallel,
    DefectCorrected,
}

/// A closed polygon described by its signed turning angles and side lengths.
///
/// `turning_angles[i]` is the turning angle at vertex `i`, and
/// `lengths[i]` is the length of the side from vertex `i` to vertex `i + 1`.
/// The fiducial point sits on side 0 at distance `fiducial_offset` from
/// vertex 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonData {
    pub turning_angles: Vec<f64>,
    pub lengths: Vec<f64>,
    pub frame: Option<Frame>,
    pub fiducial_offset: f64,
}

impl PolygonData {
    pub fn new(turning_angles: Vec<f64>, lengths: Vec<f64>) -> Result<Self> {
        if turning_angles.len() != lengths.len() {
            return Err(Error::InvalidInput(format!(
                "{} turning angles but {} side lengths",
                turning_angles.len(),
                lengths.len()
            )));
        }
        if lengths.len() < 3 {
            return Err(Error::TooFewPoints(lengths.len()));
        }
        if let Some(l) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput(format!("side lengths must be positive, got {l}")));
        }
        if turning_angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("turning angles must be finite".into()));
        }
        Ok(PolygonData { turning_angles, lengths, frame: None, fiducial_offset: 0.0 })
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = Some(frame);
        self
    }

    pub fn with_fiducial_offset(mut self, offset: f64) -> Result<Self> {
        if !(0.0..self.lengths[0]).contains(&offset) {
            return Err(Error::InvalidInput(format!("fiducial offset {offset} outside the first side")));
        }
        self.fiducial_offset = offset;
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.lengths.len()
    }

    pub fn length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn total_turning(&self) -> f64 {
        self.turning_angles.iter().sum()
    }

    /// Returns the total turning angle, or an error below the admissibility floor.
    pub fn check_admissible(&self) -> Result<f64> {
        let sum = self.total_turning();
        if sum > ADMISSIBILITY_FLOOR {
            Ok(sum)
        } else {
            Err(Error::InadmissibleTotalAngle { sum })
        }
    }
}

/// The defect-corrected angles `f_i` of each side: `f_0 = 0` and
/// `f_i = 2 pi / sum(alpha) * (alpha_1 + ... + alpha_i)`.
pub fn polygon_f_angles(data: &PolygonData) -> Result<Vec<f64>> {
    Ok(transport_angles(data, TransportMode::DefectCorrected)?.0)
}

/// Angle of the transported co-normal on each side, relative to side 0,
/// together with the angle reached after one full loop.
pub fn transport_angles(data: &PolygonData, mode: TransportMode) -> Result<(Vec<f64>, f64)> {
    let scale = match mode {
        TransportMode::DefectCorrected => TAU / data.check_admissible()?,
        TransportMode::Parallel => 1.0,
    };
    let mut acc = 0.0;
    let mut angles = Vec::with_capacity(data.q());
    angles.push(0.0);
    for alpha in &data.turning_angles[1..] {
        acc += alpha;
        angles.push(scale * acc);
    }
    let closure = match mode {
        TransportMode::DefectCorrected => TAU,
        TransportMode::Parallel => data.total_turning(),
    };
    Ok((angles, closure))
}

/// The co-normal of side `segment` transported back to the fiducial frame.
pub fn transport_conormal(data: &PolygonData, mode: TransportMode, segment: usize) -> Result<TangentVector> {
    let frame = data.frame.ok_or_else(|| Error::InvalidInput("polygon has no fiducial frame".into()))?;
    let (angles, closure) = transport_angles(data, mode)?;
    let angle = if segment == data.q() { closure } else { angles[segment] };
    Ok(TangentVector { base: frame.point(), vec: frame.direction(angle) })
}

/// Independent components of the rank-`p` irreducible tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IrreducibleMT {
    pub rank: u32,
    pub components: [f64; 2],
    /// Curve length, equal to `lambda_0`.
    pub length: f64,
    pub frame: Option<Frame>,
}

impl IrreducibleMT {
    pub fn lambda(&self) -> f64 {
        self.components[0].hypot(self.components[1])
    }

    pub fn mu(&self) -> f64 {
        (self.lambda() / self.length).min(1.0)
    }

    /// Components divided by the curve length.
    pub fn normalized(&self) -> [f64; 2] {
        [self.components[0] / self.length, self.components[1] / self.length]
    }
}

pub fn polygon_components(data: &PolygonData, p: u32) -> Result<IrreducibleMT> {
    polygon_components_with(data, p, TransportMode::DefectCorrected)
}

/// `g = sum_i l_i (cos(p f_i), sin(p f_i))`; with a fiducial offset `t`,
/// the part of side 0 before the fiducial point carries the closure angle.
pub fn polygon_components_with(data: &PolygonData, p: u32, mode: TransportMode) -> Result<IrreducibleMT> {
    if p == 0 {
        return Err(Error::InvalidInput("rank must be at least 1".into()));
    }
    let (angles, closure) = transport_angles(data, mode)?;
    let pf = p as f64;
    let mut g = [0.0, 0.0];
    for (i, (l, f)) in data.lengths.iter().zip(&angles).enumerate() {
        let weight = if i == 0 { l - data.fiducial_offset } else { *l };
        let (s, c) = (pf * f).sin_cos();
        g[0] += weight * c;
        g[1] += weight * s;
    }
    if data.fiducial_offset > 0.0 {
        let (s, c) = (pf * closure).sin_cos();
        g[0] += data.fiducial_offset * c;
        g[1] += data.fiducial_offset * s;
    }
    Ok(IrreducibleMT { rank: p, components: g, length: data.length(), frame: data.frame })
}

/// Eigen-decomposition of an irreducible tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSpectrum {
    pub rank: u32,
    pub lambda: f64,
    pub mu: f64,
    /// False when `lambda` is at noise level and the angles carry no information.
    pub direction_defined: bool,
    /// Angles of the eigenvectors for `+lambda`, in `[0, 2 pi)`, spaced `2 pi / p`.
    pub theta_plus: Vec<f64>,
    /// Angles of the eigenvectors for `-lambda`, offset by `pi / p`.
    pub theta_minus: Vec<f64>,
    pub eigenvectors_plus: Vec<Vec3>,
    pub eigenvectors_minus: Vec<Vec3>,
}

pub fn eigen_spectrum(mt: &IrreducibleMT) -> ShapeSpectrum {
    let p = mt.rank.max(1) as f64;
    let lambda = mt.lambda();
    let phase = mt.components[1].atan2(mt.components[0]).rem_euclid(TAU);
    let step = TAU / p;
    let base_plus = (phase / p).rem_euclid(step);
    let base_minus = ((PI + phase) / p).rem_euclid(step);
    let theta_plus: Vec<f64> = (0..mt.rank).map(|n| base_plus + step * n as f64).collect();
    let theta_minus: Vec<f64> = (0..mt.rank).map(|n| base_minus + step * n as f64).collect();
    let (eigenvectors_plus, eigenvectors_minus) = match &mt.frame {
        Some(frame) => (
            theta_plus.iter().map(|t| frame.direction(*t)).collect(),
            theta_minus.iter().map(|t| frame.direction(*t)).collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    let direction_defined = lambda > DIRECTION_FLOOR * mt.length;
    ShapeSpectrum {
        rank: mt.rank,
        lambda,
        mu: if direction_defined { mt.mu() } else { 0.0 },
        direction_defined,
        theta_plus,
        theta_minus,
        eigenvectors_plus,
        eigenvectors_minus,
    }
}

/// Geodesic curvature sampled on a uniform arc-length grid of a closed curve.
///
/// Sample `k` sits at arc length `start_arc + k L / N` of the underlying
/// curve; the fiducial point is sample 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothCurveData {
    pub length: f64,
    pub start_arc: f64,
    pub curvature: Vec<f64>,
    pub frame: Option<Frame>,
}

impl SmoothCurveData {
    pub const REFERENCE_SAMPLES: usize = 8192;

    pub fn from_samples(length: f64, curvature: Vec<f64>) -> Result<Self> {
        if curvature.len() < 16 {
            return Err(Error::InvalidInput(format!("need at least 16 samples, got {}", curvature.len())));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidInput(format!("curve length must be positive, got {length}")));
        }
        Ok(SmoothCurveData { length, start_arc: 0.0, curvature, frame: None })
    }

    /// Samples `n` points of the tabulated curve starting at arc length `start_arc`.
    pub fn from_curve(table: &ArcLengthTable<'_>, n: usize, start_arc: f64) -> Result<Self> {
        let length = table.length();
        let curve = table.curve();
        let mut curvature = Vec::with_capacity(n);
        for k in 0..n {
            let t = table.param_at_arc(start_arc + length * k as f64 / n as f64);
            curvature.push(geodesic_curvature_at(curve, t)?);
        }
        let mut data = SmoothCurveData::from_samples(length, curvature)?;
        data.start_arc = start_arc.rem_euclid(length);
        data.frame = Some(curve.frame(table.param_at_arc(start_arc))?);
        Ok(data)
    }

    pub fn samples(&self) -> usize {
        self.curvature.len()
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.samples() as f64
    }

    /// `int_C k_g ds` by the periodic trapezoid rule.
    pub fn total_curvature(&self) -> f64 {
        self.spacing() * self.curvature.iter().sum::<f64>()
    }

    pub fn check_admissible(&self) -> Result<f64> {
        let sum = self.total_curvature();
        if sum > ADMISSIBILITY_FLOOR {
            Ok(sum)
        } else {
            Err(Error::InadmissibleTotalAngle { sum })
        }
    }

    /// `int_0^{s_k} k_g ds` at every node plus the closing node `k = N`:
    /// cumulative trapezoid with the Euler-Maclaurin end correction.
    pub fn cumulative_curvature(&self) -> Vec<f64> {
        let n = self.samples();
        let h = self.spacing();
        let g = &self.curvature;
        let at = |k: isize| g[k.rem_euclid(n as isize) as usize];
        let slope = |k: isize| (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h);
        let slope0 = slope(0);
        let mut out = Vec::with_capacity(n + 1);
        let mut trap = 0.0;
        out.push(0.0);
        for k in 1..=n {
            trap += 0.5 * h * (at(k as isize - 1) + at(k as isize));
            out.push(trap - h * h / 12.0 * (slope(k as isize) - slope0));
        }
        out
    }

    /// Transport angle at every node `0..=N` for the given mode.
    pub fn transport_angles(&self, mode: TransportMode) -> Result<Vec<f64>> {
        let cumulative = self.cumulative_curvature();
        Ok(match mode {
            TransportMode::Parallel => cumulative,
            TransportMode::DefectCorrected => {
                let scale = TAU / self.check_admissible()?;
                let total = cumulative[self.samples()];
                let mut f: Vec<f64> = cumulative.iter().map(|c| c * scale).collect();
                // closing node normalized to exactly 2 pi
                let n = self.samples();
                let fix = TAU - total * scale;
                for (k, v) in f.iter_mut().enumerate() {
                    *v += fix * k as f64 / n as f64;
                }
                f
            }
        })
    }

    fn components_from(&self, angles: &[f64], p: u32, stride: usize) -> [f64; 2] {
        let pf = p as f64;
        let n = self.samples();
        let h = self.spacing() * stride as f64;
        let mut g = [0.0, 0.0];
        for k in (0..=n).step_by(stride) {
            let w = if k == 0 || k == n { 0.5 * h } else { h };
            let (s, c) = (pf * angles[k]).sin_cos();
            g[0] += w * c;
            g[1] += w * s;
        }
        g
    }

    /// Difference between the full-grid and half-grid component quadratures.
    pub fn quadrature_error_estimate(&self, p: u32, mode: TransportMode) -> Result<f64> {
        let angles = self.transport_angles(mode)?;
        let fine = self.components_from(&angles, p, 1);
        let coarse = self.components_from(&angles, p, 2);
        Ok((fine[0] - coarse[0]).hypot(fine[1] - coarse[1]))
    }
}

/// `f(s, t)` for the fiducial point `t` at sample 0 and `s` in `[0, L]`
/// measured from it.
pub fn smooth_f(data: &SmoothCurveData, s: f64) -> Result<f64> {
    smooth_transport_angle(data, s, TransportMode::DefectCorrected)
}

pub fn smooth_transport_angle(data: &SmoothCurveData, s: f64, mode: TransportMode) -> Result<f64> {
    if !(0.0..=data.length * (1.0 + 1e-14)).contains(&s) {
        return Err(Error::InvalidInput(format!("arc parameter {s} outside [0, {}]", data.length)));
    }
    let angles = data.transport_angles(mode)?;
    let n = data.samples();
    let h = data.spacing();
    let k = ((s / h).floor() as usize).min(n - 1);
    let ds = s - k as f64 * h;
    let (g0, g1) = (data.curvature[k], data.curvature[(k + 1) % n]);
    let partial = ds * g0 + 0.5 * ds * ds * (g1 - g0) / h;
    let scale = match mode {
        TransportMode::Parallel => 1.0,
        TransportMode::DefectCorrected => (angles[n] - angles[0]) / data.total_curvature(),
    };
    Ok(angles[k] + scale * partial)
}

pub fn smooth_components(data: &SmoothCurveData, p: u32) -> Result<IrreducibleMT> {
    smooth_components_with(data, p, TransportMode::DefectCorrected)
}

/// `(int_0^L cos(p f) ds, int_0^L sin(p f) ds)` by the trapezoid rule on the arc grid.
pub fn smooth_components_with(data: &SmoothCurveData, p: u32, mode: TransportMode) -> Result<IrreducibleMT> {
    if p == 0 {
        return Err(Error::InvalidInput("rank must be at least 1".into()));
    }
    let angles = data.transport_angles(mode)?;
    Ok(IrreducibleMT { rank: p, components: data.components_from(&angles, p, 1), length: data.length, frame: data.frame })
}

/// Area `W0`, length `W1` and total geodesic curvature `W2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinkowskiFunctionals {
    pub w0: Option<f64>,
    pub w1: f64,
    pub w2: f64,
}

impl MinkowskiFunctionals {
    pub fn area(&self) -> Result<f64> {
        self.w0.ok_or(Error::W0Unavailable)
    }
}

fn area_from_gauss_bonnet(surface: Option<&SurfaceHandle>, w2: f64) -> Option<f64> {
    match surface {
        Some(SurfaceHandle::Sphere { radius }) => Some((TAU - w2) * radius * radius),
        Some(SurfaceHandle::Plane) => None,
        _ => None,
    }
}

/// Functionals of a polygon; `W0` is recovered through Gauss-Bonnet on spheres.
pub fn polygon_functionals(data: &PolygonData, surface: Option<&SurfaceHandle>) -> MinkowskiFunctionals {
    let w2 = data.total_turning();
    MinkowskiFunctionals { w0: area_from_gauss_bonnet(surface, w2), w1: data.length(), w2 }
}

pub fn smooth_functionals(data: &SmoothCurveData, surface: Option<&SurfaceHandle>) -> MinkowskiFunctionals {
    let w2 = data.total_curvature();
    MinkowskiFunctionals { w0: area_from_gauss_bonnet(surface, w2), w1: data.length, w2 }
}

/// Inserts a vertex into side `k`, splitting it into sides of lengths
/// `split_lengths`. `betas` are the turning angles of the small triangle
/// spanned by vertex `k`, the new vertex and vertex `k + 1`; they tend to
/// `(pi, 0, pi)` for a vanishing bump outside the polygon and to
/// `(-pi, 0, -pi)` for one inside.
pub fn perturb_polygon(
    data: &PolygonData,
    k: usize,
    betas: (f64, f64, f64),
    split_lengths: (f64, f64),
    inside: bool,
) -> Result<PolygonData> {
    let q = data.q();
    if k >= q {
        return Err(Error::InvalidInput(format!("side index {k} out of range for {q} sides")));
    }
    let shift = if inside { PI } else { -PI };
    let mut angles = data.turning_angles.clone();
    let mut lengths = data.lengths.clone();
    angles[k] += betas.0 + shift;
    let next = (k + 1) % q;
    angles[next] += betas.2 + shift;
    angles.insert(k + 1, betas.1);
    lengths[k] = split_lengths.0;
    lengths.insert(k + 1, split_lengths.1);
    let mut out = PolygonData::new(angles, lengths)?;
    out.frame = data.frame;
    if data.fiducial_offset > 0.0 {
        out = out.with_fiducial_offset(data.fiducial_offset)?;
    }
    out.check_admissible()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn octant() -> PolygonData {
        PolygonData::new(vec![PI / 2.0; 3], vec![PI / 2.0; 3]).unwrap()
    }

    fn regular(q: usize) -> PolygonData {
        PolygonData::new(vec![TAU / q as f64; q], vec![1.0; q]).unwrap()
    }

    #[test]
    fn f_angles_examples() {
        let f = polygon_f_angles(&regular(3)).unwrap();
        assert_abs_diff_eq!(f[..], [0.0, TAU / 3.0, 2.0 * TAU / 3.0][..], epsilon = 1e-15);
        let rect = PolygonData::new(vec![PI / 2.0; 4], vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        let f = polygon_f_angles(&rect).unwrap();
        assert_abs_diff_eq!(f[..], [0.0, PI / 2.0, PI, 1.5 * PI][..], epsilon = 1e-15);
        // octant: sum of angles 3 pi / 2, rescaled to 2 pi
        let f = polygon_f_angles(&octant()).unwrap();
        assert_abs_diff_eq!(f[..], [0.0, TAU / 3.0, 2.0 * TAU / 3.0][..], epsilon = 1e-15);
    }

    #[test]
    fn inadmissible_polygons_are_rejected() {
        let flat_loop = PolygonData::new(vec![0.0, 0.0, 0.0], vec![1.0; 3]).unwrap();
        assert!(matches!(polygon_f_angles(&flat_loop), Err(Error::InadmissibleTotalAngle { .. })));
        let clockwise = PolygonData::new(vec![-TAU / 3.0; 3], vec![1.0; 3]).unwrap();
        assert!(polygon_components(&clockwise, 2).is_err());
        // parallel transport has no admissibility requirement
        assert!(polygon_components_with(&flat_loop, 2, TransportMode::Parallel).is_ok());
    }

    #[test]
    fn polygon_data_validation() {
        assert!(PolygonData::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(PolygonData::new(vec![1.0; 3], vec![1.0, 0.0, 1.0]).is_err());
        assert!(PolygonData::new(vec![1.0; 3], vec![1.0; 4]).is_err());
        assert!(octant().with_fiducial_offset(PI).is_err());
    }

    #[test]
    fn octant_components() {
        let mt = polygon_components(&octant(), 3).unwrap();
        assert_abs_diff_eq!(mt.components[0], 1.5 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(mt.components[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mt.mu(), 1.0, epsilon = 1e-12);
        let mt = polygon_components(&octant(), 4).unwrap();
        assert!(mt.mu() < 1e-12);
    }

    #[test]
    fn rectangle_rank_two() {
        let rect = PolygonData::new(vec![PI / 2.0; 4], vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        let mt = polygon_components(&rect, 2).unwrap();
        assert_abs_diff_eq!(mt.components[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mt.components[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mt.mu(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_spectrum_examples() {
        let s = eigen_spectrum(&IrreducibleMT { rank: 3, components: [2.0, 0.0], length: 2.0, frame: None });
        assert_eq!(s.mu, 1.0);
        assert_eq!(s.theta_plus[0], 0.0);
        assert!(s.direction_defined);

        let s = eigen_spectrum(&IrreducibleMT { rank: 4, components: [0.0, 0.0], length: 2.0, frame: None });
        assert_eq!(s.mu, 0.0);
        assert!(!s.direction_defined);

        let s = eigen_spectrum(&IrreducibleMT { rank: 2, components: [-2.0, 0.0], length: 6.0, frame: None });
        assert_abs_diff_eq!(s.mu, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.theta_plus[0], PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.theta_minus[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eigenvectors_live_in_the_fiducial_frame() {
        let frame = Frame::from_direction(Vec3::x(), Vec3::y(), Vec3::x()).unwrap();
        let data = octant().with_frame(frame);
        let s = eigen_spectrum(&polygon_components(&data, 3).unwrap());
        assert_eq!(s.eigenvectors_plus.len(), 3);
        for v in s.eigenvectors_plus.iter().chain(&s.eigenvectors_minus) {
            assert!(v.dot(&frame.normal).abs() < 1e-15);
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(s.eigenvectors_plus[0], frame.conormal, epsilon = 1e-12);
    }

    #[test]
    fn transport_closure() {
        let frame = Frame::from_direction(Vec3::x(), Vec3::y(), Vec3::x()).unwrap();
        let data = octant().with_frame(frame);
        let closed = transport_conormal(&data, TransportMode::DefectCorrected, 3).unwrap();
        assert_abs_diff_eq!(closed.vec, frame.conormal, epsilon = 1e-15);
        let (_, closure) = transport_angles(&data, TransportMode::Parallel).unwrap();
        // holonomy: rotated by -(enclosed curvature) = -pi/2 relative to a full turn
        assert_abs_diff_eq!(closure - TAU, -PI / 2.0, epsilon = 1e-15);
        // flat polygons: both transports coincide
        let sq = regular(4);
        assert_eq!(
            transport_angles(&sq, TransportMode::Parallel).unwrap(),
            transport_angles(&sq, TransportMode::DefectCorrected).unwrap()
        );
    }

    #[test]
    fn parallel_transport_octant_depends_on_fiducial_point() {
        let l = PI / 2.0;
        for t in [0.0, 0.1, 0.5 * l, 0.9 * l] {
            let data = octant().with_fiducial_offset(t).unwrap();
            let mu3 = polygon_components_with(&data, 3, TransportMode::Parallel).unwrap().mu();
            let expected = (t * t + (l - t) * (l - t)).sqrt() / (3.0 * l);
            assert_abs_diff_eq!(mu3, expected, epsilon = 1e-12);
            assert!(mu3 > 0.23 && mu3 < 0.34);
            let mu4 = polygon_components_with(&data, 4, TransportMode::Parallel).unwrap().mu();
            assert_abs_diff_eq!(mu4, 1.0, epsilon = 1e-12);
            // defect-corrected values do not depend on the fiducial point
            assert_abs_diff_eq!(polygon_components(&data, 3).unwrap().mu(), 1.0, epsilon = 1e-12);
        }
    }

    // Flat Minkowski tensor oracle: build sum_i l_i nu_i^{(x) p} explicitly as a
    // dense 2^p array and contract it with the null vector (1, i).
    fn flat_oracle(vertices: &[[f64; 2]], p: u32) -> (f64, f64) {
        let q = vertices.len();
        let dim = 1usize << p;
        let mut tensor = vec![0.0; dim];
        let mut total = 0.0;
        for i in 0..q {
            let (a, b) = (vertices[i], vertices[(i + 1) % q]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let l = d[0].hypot(d[1]);
            let nu = [d[1] / l, -d[0] / l];
            total += l;
            for (idx, entry) in tensor.iter_mut().enumerate() {
                let mut prod = l;
                for bit in 0..p {
                    prod *= nu[(idx >> bit) & 1];
                }
                *entry += prod;
            }
        }
        let (mut re, mut im) = (0.0, 0.0);
        for (idx, entry) in tensor.iter().enumerate() {
            // (1, i) contracted p times: factor i^{number of y indices}
            let ny = (idx as u32).count_ones() % 4;
            let (cr, ci) = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][ny as usize];
            re += entry * cr;
            im += entry * ci;
        }
        (re.hypot(im) / total, im.atan2(re))
    }

    fn planar_polygon(vertices: &[[f64; 2]]) -> PolygonData {
        let q = vertices.len();
        let mut angles = Vec::new();
        let mut lengths = Vec::new();
        for i in 0..q {
            let (prev, cur, next) = (vertices[(i + q - 1) % q], vertices[i], vertices[(i + 1) % q]);
            let din = Vec3::new(cur[0] - prev[0], cur[1] - prev[1], 0.0);
            let dout = Vec3::new(next[0] - cur[0], next[1] - cur[1], 0.0);
            angles.push(crate::geometry::signed_angle(&din, &dout, &Vec3::z()));
            lengths.push(dout.norm());
        }
        let frame = Frame::from_direction(
            Vec3::new(vertices[0][0], vertices[0][1], 0.0),
            Vec3::new(vertices[1][0] - vertices[0][0], vertices[1][1] - vertices[0][1], 0.0),
            Vec3::z(),
        )
        .unwrap();
        PolygonData::new(angles, lengths).unwrap().with_frame(frame)
    }

    #[test]
    fn flat_oracle_agrees_on_irregular_polygon() {
        let verts = [[0.0, 0.0], [2.0, 0.3], [2.5, 1.7], [0.8, 2.4], [-0.6, 1.1]];
        let data = planar_polygon(&verts);
        for p in 1..=8 {
            let mt = polygon_components(&data, p).unwrap();
            let (mu, phase) = flat_oracle(&verts, p);
            assert_abs_diff_eq!(mt.mu(), mu, epsilon = 1e-10);
            if mu > 1e-8 {
                // phases differ by p times the angle of the first co-normal
                let nu0 = data.frame.unwrap().conormal;
                let shift = p as f64 * nu0.y.atan2(nu0.x);
                let own = mt.components[1].atan2(mt.components[0]);
                let diff = (own + shift - phase).rem_euclid(TAU);
                assert!(diff.min(TAU - diff) < 1e-9);
            }
        }
    }

    #[test]
    fn smooth_planar_circle() {
        let data = SmoothCurveData::from_samples(TAU, vec![1.0; 256]).unwrap();
        for s in [0.0, 1.0, 3.3, TAU] {
            assert_abs_diff_eq!(smooth_f(&data, s).unwrap(), s, epsilon = 1e-12);
        }
        for p in 1..6 {
            let mt = smooth_components(&data, p).unwrap();
            assert!(mt.mu() < 1e-12);
        }
        let w = smooth_functionals(&data, Some(&SurfaceHandle::Plane));
        assert_abs_diff_eq!(w.w1, TAU, epsilon = 1e-15);
        assert_abs_diff_eq!(w.w2, TAU, epsilon = 1e-12);
        assert!(matches!(w.area(), Err(Error::W0Unavailable)));
    }

    #[test]
    fn smooth_constant_curvature_on_sphere() {
        // geodesic circle of polar radius 0.8 on the unit sphere
        let theta0: f64 = 0.8;
        let length = TAU * theta0.sin();
        let data = SmoothCurveData::from_samples(length, vec![1.0 / theta0.tan(); 128]).unwrap();
        assert_abs_diff_eq!(smooth_f(&data, 0.25 * length).unwrap(), PI / 2.0, epsilon = 1e-12);
        assert!(smooth_components(&data, 3).unwrap().mu() < 1e-12);
        let w = smooth_functionals(&data, Some(&SurfaceHandle::Sphere { radius: 1.0 }));
        // cap area 2 pi (1 - cos theta0)
        assert_abs_diff_eq!(w.area().unwrap(), TAU * (1.0 - theta0.cos()), epsilon = 1e-12);
    }

    #[test]
    fn smooth_rejects_zero_total_curvature() {
        let data = SmoothCurveData::from_samples(TAU, vec![0.0; 64]).unwrap();
        assert!(matches!(smooth_components(&data, 2), Err(Error::InadmissibleTotalAngle { .. })));
        assert!(SmoothCurveData::from_samples(1.0, vec![1.0; 8]).is_err());
    }

    #[test]
    fn octant_functionals() {
        let w = polygon_functionals(&octant(), Some(&SurfaceHandle::Sphere { radius: 1.0 }));
        assert_abs_diff_eq!(w.w2, 1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(w.area().unwrap(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.w1, 1.5 * PI, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_insertion_leaves_components_unchanged() {
        let base = octant();
        let l = PI / 2.0;
        let outside = perturb_polygon(&base, 1, (PI, 0.0, PI), (0.3 * l, 0.7 * l), false).unwrap();
        let inside = perturb_polygon(&base, 2, (-PI, 0.0, -PI), (0.5 * l, 0.5 * l), true).unwrap();
        for p in 1..7 {
            let g = polygon_components(&base, p).unwrap().components;
            for perturbed in [&outside, &inside] {
                let h = polygon_components(perturbed, p).unwrap().components;
                assert_abs_diff_eq!(g[..], h[..], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn flat_collinear_split() {
        let verts = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]];
        let base = planar_polygon(&verts);
        let split = planar_polygon(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]);
        let via_perturb = perturb_polygon(&base, 0, (PI, 0.0, PI), (1.0, 1.0), false).unwrap();
        for p in 1..7 {
            let g = polygon_components(&base, p).unwrap().components;
            assert_abs_diff_eq!(g[..], polygon_components(&split, p).unwrap().components[..], epsilon = 1e-12);
            assert_abs_diff_eq!(g[..], polygon_components(&via_perturb, p).unwrap().components[..], epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn mu_is_a_fraction(
            angles in proptest::collection::vec(0.05f64..1.5, 3..12),
            lengths in proptest::collection::vec(0.01f64..3.0, 12),
            p in 1u32..13,
        ) {
            let q = angles.len();
            let data = PolygonData::new(angles, lengths[..q].to_vec()).unwrap();
            let mt = polygon_components(&data, p).unwrap();
            prop_assert!(mt.mu() >= 0.0 && mt.mu() <= 1.0);
            prop_assert!(mt.lambda() <= mt.length * (1.0 + 1e-12));
            let s = eigen_spectrum(&mt);
            for w in s.theta_plus.windows(2) {
                prop_assert!((w[1] - w[0] - TAU / p as f64).abs() < 1e-12);
            }
            prop_assert!(s.theta_plus.iter().chain(&s.theta_minus).all(|t| (0.0..TAU).contains(t)));
        }

        #[test]
        fn regular_polygon_pattern(q in 3usize..13, p in 1u32..13) {
            let mu = polygon_components(&regular(q), p).unwrap().mu();
            if p as usize % q == 0 {
                prop_assert!((mu - 1.0).abs() < 1e-10);
            } else {
                prop_assert!(mu < 1e-10);
            }
        }
    }
}
