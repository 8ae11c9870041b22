//! Closed parametrized curves on surfaces, arc-length tables and geodesic curvature.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Frame, SurfacePoint, Vec3};
use crate::surfaces::SurfaceHandle;

/// A closed curve `t -> gamma(t)`, `t` in `[0, period]`, not necessarily unit speed.
pub trait ParamCurve: Sync {
    fn period(&self) -> f64;
    fn point(&self, t: f64) -> Vec3;
    fn velocity(&self, t: f64) -> Vec3;
    fn acceleration(&self, t: f64) -> Vec3;
    /// Unit outer surface normal at `gamma(t)`.
    fn normal(&self, t: f64) -> Vec3;

    fn surface_point(&self, t: f64) -> SurfacePoint {
        SurfacePoint::new(self.point(t), self.normal(t))
    }

    /// Moving frame `(conormal, tangent, normal)` at `gamma(t)`.
    fn frame(&self, t: f64) -> Result<Frame> {
        Frame::from_direction(self.point(t), self.velocity(t), self.normal(t)).ok_or(Error::DegenerateVelocity(t))
    }
}

/// Geodesic curvature at parameter `t`: `-<gamma'', nu>` after unit-speed
/// reparametrization, i.e. `-<a, v x n> / |v|^3`.
pub fn geodesic_curvature_at(curve: &dyn ParamCurve, t: f64) -> Result<f64> {
    let v = curve.velocity(t);
    let speed = v.norm();
    if speed < 1e-10 {
        return Err(Error::DegenerateVelocity(t));
    }
    let a = curve.acceleration(t);
    let n = curve.normal(t);
    Ok(-a.dot(&v.cross(&n)) / (speed * speed * speed))
}

/// A closed path in the chart domain of a parametrized surface.
pub trait ChartPath: Sync + Send {
    fn period(&self) -> f64;
    /// Chart coordinates with first and second parameter derivatives.
    fn jet(&self, t: f64) -> [[f64; 2]; 3];
}

/// The flower curve `r(t) = r0 - a sin(omega t)` around a chart center:
/// `(u, v) = center + r(t) (cos t, sin t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowerPath {
    pub r0: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub center: [f64; 2],
}

impl FlowerPath {
    /// Default center `(pi/2, pi/4)` in `(theta, phi)` coordinates.
    pub fn new(r0: f64, amplitude: f64, frequency: f64) -> Self {
        FlowerPath { r0, amplitude, frequency, center: [PI / 2.0, PI / 4.0] }
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }
}

impl ChartPath for FlowerPath {
    fn period(&self) -> f64 {
        2.0 * PI
    }

    fn jet(&self, t: f64) -> [[f64; 2]; 3] {
        let (sw, cw) = (self.frequency * t).sin_cos();
        let r = self.r0 - self.amplitude * sw;
        let dr = -self.amplitude * self.frequency * cw;
        let ddr = self.amplitude * self.frequency * self.frequency * sw;
        let (s, c) = t.sin_cos();
        [
            [self.center[0] + r * c, self.center[1] + r * s],
            [dr * c - r * s, dr * s + r * c],
            [ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s],
        ]
    }
}

/// The coordinate circle `u = const`, `v = t` (a latitude circle on the sphere chart).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatitudeCircle {
    pub u: f64,
}

impl ChartPath for LatitudeCircle {
    fn period(&self) -> f64 {
        2.0 * PI
    }

    fn jet(&self, t: f64) -> [[f64; 2]; 3] {
        [[self.u, t], [0.0, 1.0], [0.0, 0.0]]
    }
}

/// A chart path lifted onto a parametrized surface.
pub struct ChartCurve<P> {
    pub surface: SurfaceHandle,
    pub path: P,
}

impl<P: ChartPath> ChartCurve<P> {
    pub fn new(surface: SurfaceHandle, path: P) -> Result<Self> {
        // fails early for meshes
        surface.chart(0.0, 0.0)?;
        Ok(ChartCurve { surface, path })
    }

    fn lift(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let [uv, duv, dduv] = self.path.jet(t);
        let j = self.surface.chart(uv[0], uv[1]).expect("chart checked at construction");
        let vel = j.xu * duv[0] + j.xv * duv[1];
        let acc = j.xuu * (duv[0] * duv[0])
            + j.xuv * (2.0 * duv[0] * duv[1])
            + j.xvv * (duv[1] * duv[1])
            + j.xu * dduv[0]
            + j.xv * dduv[1];
        (j.x, vel, acc)
    }
}

impl<P: ChartPath> ParamCurve for ChartCurve<P> {
    fn period(&self) -> f64 {
        self.path.period()
    }

    fn point(&self, t: f64) -> Vec3 {
        self.lift(t).0
    }

    fn velocity(&self, t: f64) -> Vec3 {
        self.lift(t).1
    }

    fn acceleration(&self, t: f64) -> Vec3 {
        self.lift(t).2
    }

    fn normal(&self, t: f64) -> Vec3 {
        self.surface.normal(&self.point(t)).expect("chart checked at construction")
    }

    fn surface_point(&self, t: f64) -> SurfacePoint {
        let uv = self.path.jet(t)[0];
        SurfacePoint::new(self.point(t), self.normal(t)).with_chart(uv)
    }
}

// 4-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL_WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

fn gauss_legendre(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL_NODES.iter().zip(GL_WEIGHTS.iter()).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Cumulative arc length and geodesic curvature of a closed curve, tabulated
/// on a uniform parameter grid with per-cell Gauss-Legendre quadrature.
pub struct ArcLengthTable<'a> {
    curve: &'a dyn ParamCurve,
    params: Vec<f64>,
    arc: Vec<f64>,
    curvature: Vec<f64>,
}

impl<'a> ArcLengthTable<'a> {
    pub const DEFAULT_SAMPLES: usize = 8192;

    pub fn new(curve: &'a dyn ParamCurve, samples: usize) -> Result<Self> {
        let samples = samples.max(16);
        let period = curve.period();
        let params: Vec<f64> = (0..=samples).map(|k| period * k as f64 / samples as f64).collect();
        let mut arc = Vec::with_capacity(samples + 1);
        let mut curvature = Vec::with_capacity(samples + 1);
        arc.push(0.0);
        curvature.push(0.0);
        for w in params.windows(2) {
            let ds = gauss_legendre(w[0], w[1], |t| curve.velocity(t).norm());
            let dk = cell_curvature(curve, w[0], w[1])?;
            arc.push(arc.last().unwrap() + ds);
            curvature.push(curvature.last().unwrap() + dk);
        }
        for (k, t) in params.iter().enumerate().step_by(64) {
            if curve.velocity(*t).norm() < 1e-10 {
                return Err(Error::DegenerateVelocity(params[k]));
            }
        }
        Ok(ArcLengthTable { curve, params, arc, curvature })
    }

    pub fn curve(&self) -> &'a dyn ParamCurve {
        self.curve
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    /// Total geodesic curvature `int_C k_g ds`.
    pub fn total_curvature(&self) -> f64 {
        *self.curvature.last().unwrap()
    }

    fn cell(&self, t: f64) -> usize {
        let period = self.curve.period();
        let n = self.params.len() - 1;
        ((t / period * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    /// Arc length from `t = 0` to `t`, `t` in `[0, period]`.
    pub fn arc_at(&self, t: f64) -> f64 {
        let k = self.cell(t);
        self.arc[k] + gauss_legendre(self.params[k], t, |x| self.curve.velocity(x).norm())
    }

    /// `int_0^t k_g ds`.
    pub fn curvature_at(&self, t: f64) -> Result<f64> {
        let k = self.cell(t);
        Ok(self.curvature[k] + cell_curvature(self.curve, self.params[k], t)?)
    }

    /// Curve parameter at which the arc length from the start equals `s`.
    pub fn param_at_arc(&self, s: f64) -> f64 {
        let length = self.length();
        let s = s.rem_euclid(length);
        let k = match self.arc.binary_search_by(|a| a.total_cmp(&s)) {
            Ok(k) => return self.params[k],
            Err(k) => k.saturating_sub(1).min(self.params.len() - 2),
        };
        let (a0, a1) = (self.arc[k], self.arc[k + 1]);
        let (t0, t1) = (self.params[k], self.params[k + 1]);
        let mut t = t0 + (t1 - t0) * (s - a0) / (a1 - a0);
        for _ in 0..20 {
            let f = self.arc[k] + gauss_legendre(t0, t, |x| self.curve.velocity(x).norm()) - s;
            let step = f / self.curve.velocity(t).norm();
            t = (t - step).clamp(t0, t1);
            if step.abs() < 1e-15 * self.curve.period() {
                break;
            }
        }
        t
    }

    /// Geodesic curvature at arc length `s`.
    pub fn geodesic_curvature(&self, s: f64) -> Result<f64> {
        geodesic_curvature_at(self.curve, self.param_at_arc(s))
    }
}

fn cell_curvature(curve: &dyn ParamCurve, a: f64, b: f64) -> Result<f64> {
    let mut failure = None;
    let value = gauss_legendre(a, b, |t| match geodesic_curvature_at(curve, t) {
        Ok(k) => k * curve.velocity(t).norm(),
        Err(e) => {
            failure = Some(e);
            0.0
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flower_path_derivatives() {
        let p = FlowerPath::new(0.7, 0.2, 3.0);
        let h = 1e-5;
        for t in [0.0, 0.4, 2.0, 5.5] {
            let [_, d, dd] = p.jet(t);
            let (a, b) = (p.jet(t + h), p.jet(t - h));
            for i in 0..2 {
                assert_abs_diff_eq!((a[0][i] - b[0][i]) / (2.0 * h), d[i], epsilon = 1e-8);
                assert_abs_diff_eq!((a[1][i] - b[1][i]) / (2.0 * h), dd[i], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn geodesic_circle_curvature_is_cot() {
        let sphere = SurfaceHandle::sphere(1.0).unwrap();
        for theta0 in [0.3, PI / 3.0, 1.2] {
            let c = ChartCurve::new(sphere.clone(), LatitudeCircle { u: theta0 }).unwrap();
            for t in [0.0, 1.0, 4.0] {
                assert_abs_diff_eq!(geodesic_curvature_at(&c, t).unwrap(), 1.0 / theta0.tan(), epsilon = 1e-13);
            }
        }
        let equator = ChartCurve::new(sphere, LatitudeCircle { u: PI / 2.0 }).unwrap();
        assert_abs_diff_eq!(geodesic_curvature_at(&equator, 1.3).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn planar_circle_curvature() {
        let c = ChartCurve::new(SurfaceHandle::Plane, FlowerPath::new(2.5, 0.0, 1.0).with_center([0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(geodesic_curvature_at(&c, 0.7).unwrap(), 0.4, epsilon = 1e-14);
        let table = ArcLengthTable::new(&c, 256).unwrap();
        assert_abs_diff_eq!(table.length(), 5.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(table.total_curvature(), 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(table.param_at_arc(2.5), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn curvature_matches_finite_difference_oracle() {
        // second-order finite differences of the embedded curve at arc length s
        let e = SurfaceHandle::ellipsoid(1.6, 1.3, 1.0).unwrap();
        let c = ChartCurve::new(e, FlowerPath::new(0.7, 0.2, 3.0)).unwrap();
        let table = ArcLengthTable::new(&c, 8192).unwrap();
        let h = 1e-4;
        for s in [0.1, 1.0, 2.2, 3.7] {
            let p = |s: f64| c.point(table.param_at_arc(s));
            let acc = (p(s + h) - p(s) * 2.0 + p(s - h)) / (h * h);
            let tau = (p(s + h) - p(s - h)).normalize();
            let n = c.normal(table.param_at_arc(s));
            let fd = -acc.dot(&tau.cross(&n));
            assert!((fd - table.geodesic_curvature(s).unwrap()).abs() < 1e-4);
        }
    }

    #[test]
    fn frame_along_curve_is_right_handed() {
        let e = SurfaceHandle::ellipsoid(1.6, 1.3, 1.0).unwrap();
        let c = ChartCurve::new(e, FlowerPath::new(0.7, 0.2, 3.0)).unwrap();
        for k in 0..64 {
            let f = c.frame(k as f64 * 0.098).unwrap();
            assert!((f.handedness() - 1.0).abs() < 1e-10);
        }
    }
}
