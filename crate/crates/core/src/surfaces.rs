//! Surface backends: analytic plane, sphere, ellipsoid and torus, plus
//! triangulated meshes.
//!
//! Analytic kinds are described by an implicit function `F(x) = 0` with
//! `grad F` pointing outwards. Geodesics are integrated in the embedding:
//! a unit-speed curve is a geodesic iff its acceleration is normal to the
//! surface, which for an implicit surface gives
//! `x'' = -(v^T Hess F v) / |grad F|^2 grad F`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{project_along, tangent_basis, SurfacePoint, TangentVector, Vec3};
use crate::levelset::TriMesh;

/// Shooting stops once the endpoint residual drops below this (relative to the surface scale).
const SHOOTING_TOL: f64 = 1e-10;
const SHOOTING_MAX_ITER: usize = 50;
const MULTI_START_MAX_ITER: usize = 25;
/// Target step length of the geodesic integrator.
const ODE_STEP: f64 = 0.01;
const ODE_MIN_STEPS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceHandle {
    /// The plane `z = 0` with normal `+z`.
    Plane,
    Sphere { radius: f64 },
    Ellipsoid { axes: [f64; 3] },
    /// Torus of revolution about the z-axis, `major > minor > 0`.
    Torus { major: f64, minor: f64 },
    Mesh(Arc<TriMesh>),
}

/// Position and first/second partial derivatives of a chart map `X(u, v)`.
#[derive(Clone, Copy, Debug)]
pub struct ChartJet {
    pub x: Vec3,
    pub xu: Vec3,
    pub xv: Vec3,
    pub xuu: Vec3,
    pub xuv: Vec3,
    pub xvv: Vec3,
}

impl SurfaceHandle {
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(SurfaceHandle::Sphere { radius })
    }

    pub fn ellipsoid(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        if [a1, a2, a3].iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput(format!("ellipsoid axes must be positive, got ({a1}, {a2}, {a3})")));
        }
        Ok(SurfaceHandle::Ellipsoid { axes: [a1, a2, a3] })
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && major > minor && major.is_finite()) {
            return Err(Error::InvalidInput(format!("torus needs R > r > 0, got R={major}, r={minor}")));
        }
        Ok(SurfaceHandle::Torus { major, minor })
    }

    pub fn mesh(mesh: TriMesh) -> Self {
        SurfaceHandle::Mesh(Arc::new(mesh))
    }

    pub fn is_mesh(&self) -> bool {
        matches!(self, SurfaceHandle::Mesh(_))
    }

    /// Characteristic length used to scale tolerances.
    pub fn scale(&self) -> f64 {
        match self {
            SurfaceHandle::Plane => 1.0,
            SurfaceHandle::Sphere { radius } => *radius,
            SurfaceHandle::Ellipsoid { axes } => axes.iter().cloned().fold(0.0, f64::max),
            SurfaceHandle::Torus { major, .. } => *major,
            SurfaceHandle::Mesh(m) => m.bounding_radius().max(1e-300),
        }
    }

    /// Conservative lower bound on the injectivity radius.
    pub fn injectivity_guard(&self) -> f64 {
        match self {
            SurfaceHandle::Plane => f64::INFINITY,
            SurfaceHandle::Sphere { radius } => PI * radius,
            SurfaceHandle::Ellipsoid { axes } => PI * axes.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0,
            SurfaceHandle::Torus { minor, .. } => PI * minor / 2.0,
            SurfaceHandle::Mesh(_) => 0.0,
        }
    }

    // Implicit description: value, gradient, Hessian.
    fn implicit(&self, x: &Vec3) -> Result<(f64, Vec3, Matrix3<f64>)> {
        Ok(match self {
            SurfaceHandle::Plane => (x.z, Vec3::z(), Matrix3::zeros()),
            SurfaceHandle::Sphere { radius } => {
                (0.5 * (x.norm_squared() - radius * radius), *x, Matrix3::identity())
            }
            SurfaceHandle::Ellipsoid { axes } => {
                let inv = Vec3::new(1.0 / (axes[0] * axes[0]), 1.0 / (axes[1] * axes[1]), 1.0 / (axes[2] * axes[2]));
                let value = 0.5 * (x.component_mul(x).dot(&inv) - 1.0);
                (value, x.component_mul(&inv), Matrix3::from_diagonal(&inv))
            }
            SurfaceHandle::Torus { major, minor } => {
                let rho = x.x.hypot(x.y);
                let d = rho - major;
                let value = d * d + x.z * x.z - minor * minor;
                let grad = Vec3::new(2.0 * d * x.x / rho, 2.0 * d * x.y / rho, 2.0 * x.z);
                let rho3 = rho * rho * rho;
                let hxx = 2.0 * x.x * x.x / (rho * rho) + 2.0 * d * x.y * x.y / rho3;
                let hyy = 2.0 * x.y * x.y / (rho * rho) + 2.0 * d * x.x * x.x / rho3;
                let hxy = 2.0 * x.x * x.y / (rho * rho) - 2.0 * d * x.x * x.y / rho3;
                let h = Matrix3::new(hxx, hxy, 0.0, hxy, hyy, 0.0, 0.0, 0.0, 2.0);
                (value, grad, h)
            }
            SurfaceHandle::Mesh(_) => return Err(Error::UnsupportedOnMesh("implicit")),
        })
    }

    /// Normalized residual of the implicit equation (zero on the surface).
    pub fn residual(&self, x: &Vec3) -> Result<f64> {
        let (value, grad, _) = self.implicit(x)?;
        Ok(value.abs() / grad.norm().max(f64::MIN_POSITIVE))
    }

    /// Unit outer normal at a point on (or very near) the surface.
    pub fn normal(&self, x: &Vec3) -> Result<Vec3> {
        let (_, grad, _) = self.implicit(x)?;
        Ok(grad.normalize())
    }

    /// Closest-point style projection onto the surface.
    pub fn project(&self, x: &Vec3) -> Result<Vec3> {
        Ok(match self {
            SurfaceHandle::Plane => Vec3::new(x.x, x.y, 0.0),
            SurfaceHandle::Sphere { radius } => x * (radius / x.norm()),
            SurfaceHandle::Torus { major, minor } => {
                let rho = x.x.hypot(x.y);
                let c = Vec3::new(x.x, x.y, 0.0) * (major / rho);
                c + (x - c) * (minor / (x - c).norm())
            }
            SurfaceHandle::Ellipsoid { .. } => {
                // Newton along the gradient on the implicit equation.
                let mut y = *x;
                for _ in 0..50 {
                    let (value, grad, _) = self.implicit(&y)?;
                    let step = grad * (value / grad.norm_squared());
                    y -= step;
                    if step.norm() < 1e-16 * self.scale() {
                        break;
                    }
                }
                y
            }
            SurfaceHandle::Mesh(_) => return Err(Error::UnsupportedOnMesh("project")),
        })
    }

    pub fn point(&self, x: Vec3) -> Result<SurfacePoint> {
        Ok(SurfacePoint::new(x, self.normal(&x)?))
    }

    /// Chart map with derivatives. Charts are positively oriented with
    /// respect to the outer normal (`X_u x X_v` points outwards):
    /// sphere/ellipsoid use `(theta, phi)` (polar, azimuth), the torus uses
    /// `(phi, theta)` (toroidal, poloidal), the plane uses `(x, y)`.
    pub fn chart(&self, u: f64, v: f64) -> Result<ChartJet> {
        Ok(match self {
            SurfaceHandle::Plane => ChartJet {
                x: Vec3::new(u, v, 0.0),
                xu: Vec3::x(),
                xv: Vec3::y(),
                xuu: Vec3::zeros(),
                xuv: Vec3::zeros(),
                xvv: Vec3::zeros(),
            },
            SurfaceHandle::Sphere { radius } => ellipsoid_jet([*radius; 3], u, v),
            SurfaceHandle::Ellipsoid { axes } => ellipsoid_jet(*axes, u, v),
            SurfaceHandle::Torus { major, minor } => {
                let (sp, cp) = u.sin_cos();
                let (st, ct) = v.sin_cos();
                let w = major + minor * ct;
                ChartJet {
                    x: Vec3::new(w * cp, w * sp, minor * st),
                    xu: Vec3::new(-w * sp, w * cp, 0.0),
                    xv: Vec3::new(-minor * st * cp, -minor * st * sp, minor * ct),
                    xuu: Vec3::new(-w * cp, -w * sp, 0.0),
                    xuv: Vec3::new(minor * st * sp, -minor * st * cp, 0.0),
                    xvv: Vec3::new(-minor * ct * cp, -minor * ct * sp, -minor * st),
                }
            }
            SurfaceHandle::Mesh(_) => return Err(Error::UnsupportedOnMesh("chart")),
        })
    }

    pub fn chart_point(&self, u: f64, v: f64) -> Result<SurfacePoint> {
        let x = self.chart(u, v)?.x;
        Ok(self.point(x)?.with_chart([u, v]))
    }

    fn geodesic_acceleration(&self, x: &Vec3, v: &Vec3) -> Result<Vec3> {
        let (_, grad, hess) = self.implicit(x)?;
        Ok(-grad * ((hess * v).dot(v) / grad.norm_squared()))
    }

    /// Exponential map: follows the geodesic from `x` with unit initial
    /// direction `direction` for the given arc length.
    pub fn solve_geodesic(&self, x: &SurfacePoint, direction: &Vec3, length: f64) -> Result<SurfacePoint> {
        if !(length >= 0.0) {
            return Err(Error::InvalidInput(format!("negative geodesic length {length}")));
        }
        if (direction.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput("geodesic direction must be a unit vector".into()));
        }
        match self {
            SurfaceHandle::Mesh(_) => Err(Error::UnsupportedOnMesh("solve_geodesic")),
            SurfaceHandle::Plane => self.point(x.position + direction * length),
            SurfaceHandle::Sphere { radius } => {
                let a = length / radius;
                let y = x.position * a.cos() + direction * (radius * a.sin());
                self.point(y * (radius / y.norm()))
            }
            _ => {
                let (end, _) = self.integrate_geodesic(&x.position, direction, length)?;
                self.point(end)
            }
        }
    }

    /// Classical RK4 on `(x, v)` with projection of `x` back to the surface
    /// and of `v` to the unit tangent circle after every step.
    fn integrate_geodesic(&self, x0: &Vec3, v0: &Vec3, length: f64) -> Result<(Vec3, Vec3)> {
        let steps = ODE_MIN_STEPS.max((length / ODE_STEP).ceil() as usize);
        let h = length / steps as f64;
        let mut x = *x0;
        let mut v = project_along(*v0, &self.normal(x0)?).normalize();
        for _ in 0..steps {
            let a1 = self.geodesic_acceleration(&x, &v)?;
            let (x2, v2) = (x + v * (0.5 * h), v + a1 * (0.5 * h));
            let a2 = self.geodesic_acceleration(&x2, &v2)?;
            let (x3, v3) = (x + v2 * (0.5 * h), v + a2 * (0.5 * h));
            let a3 = self.geodesic_acceleration(&x3, &v3)?;
            let (x4, v4) = (x + v3 * h, v + a3 * h);
            let a4 = self.geodesic_acceleration(&x4, &v4)?;
            x += (v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0);
            v += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
            x = self.project(&x)?;
            let n = self.normal(&x)?;
            v = project_along(v, &n);
            let speed = v.norm();
            if !speed.is_finite() || speed < 1e-8 {
                return Err(Error::StepFailure(format!("velocity collapsed to {speed:e}")));
            }
            v /= speed;
        }
        Ok((x, v))
    }

    /// Exponential map of an arbitrary tangent vector.
    pub fn exp(&self, x: &SurfacePoint, v: &Vec3) -> Result<SurfacePoint> {
        let len = v.norm();
        if len == 0.0 {
            return Ok(*x);
        }
        self.solve_geodesic(x, &(v / len), len)
    }

    /// Riemannian logarithm `log_x(y)`.
    ///
    /// Analytic on the plane and sphere. On ellipsoid and torus the initial
    /// vector is found by Newton shooting; pairs farther apart than half the
    /// injectivity guard get a multi-start search keeping the shortest geodesic.
    pub fn geodesic_log(&self, x: &SurfacePoint, y: &SurfacePoint) -> Result<TangentVector> {
        let vec = match self {
            SurfaceHandle::Mesh(_) => return Err(Error::UnsupportedOnMesh("geodesic_log")),
            SurfaceHandle::Plane => project_along(y.position - x.position, &Vec3::z()),
            SurfaceHandle::Sphere { radius } => {
                let (a, b) = (x.position / *radius, y.position / *radius);
                let cross = a.cross(&b);
                let angle = cross.norm().atan2(a.dot(&b));
                if angle > PI - 1e-9 {
                    return Err(Error::CutLocus("antipodal points on the sphere".into()));
                }
                match project_along(b - a, &a).try_normalize(0.0) {
                    Some(dir) => dir * (angle * radius),
                    None => Vec3::zeros(),
                }
            }
            _ => self.shooting_log(&x.position, &y.position)?,
        };
        Ok(TangentVector { base: *x, vec })
    }

    /// Both logarithms `(log_x(y), log_y(x))` of one minimizing geodesic.
    ///
    /// On shooting surfaces each direction is solved; the shorter result is
    /// kept and the other vector is read off its end velocity.
    pub fn geodesic_log_pair(&self, x: &SurfacePoint, y: &SurfacePoint) -> Result<(TangentVector, TangentVector)> {
        if !matches!(self, SurfaceHandle::Ellipsoid { .. } | SurfaceHandle::Torus { .. }) {
            return Ok((self.geodesic_log(x, y)?, self.geodesic_log(y, x)?));
        }
        let forward = self.shooting_log(&x.position, &y.position);
        let backward = self.shooting_log(&y.position, &x.position);
        let (fwd, bwd) = match (forward, backward) {
            (Ok(f), Ok(b)) if (f.norm() - b.norm()).abs() <= 1e-8 * (1.0 + f.norm()) => (f, b),
            (Ok(f), Ok(b)) if b.norm() < f.norm() => (self.reverse_from(y, &b)?, b),
            (Ok(f), _) => (f, self.reverse_from(x, &f)?),
            (Err(_), Ok(b)) => (self.reverse_from(y, &b)?, b),
            (Err(e), Err(_)) => return Err(e),
        };
        Ok((TangentVector { base: *x, vec: fwd }, TangentVector { base: *y, vec: bwd }))
    }

    /// Log pair of the geodesic reached by Newton shooting from `guess`.
    ///
    /// No search for shorter geodesics is made, so following a family of
    /// endpoint pairs with the previous result as guess stays on one branch.
    pub fn geodesic_log_near(
        &self,
        x: &SurfacePoint,
        y: &SurfacePoint,
        guess: &Vec3,
    ) -> Result<(TangentVector, TangentVector)> {
        if !matches!(self, SurfaceHandle::Ellipsoid { .. } | SurfaceHandle::Torus { .. }) {
            return self.geodesic_log_pair(x, y);
        }
        let basis = tangent_basis(&self.normal(&x.position)?);
        let (w, _) =
            self.newton_shoot(&x.position, &y.position, &basis, to_coords(&basis, guess), f64::INFINITY, SHOOTING_MAX_ITER)?;
        let fwd = from_coords(&basis, &w);
        let bwd = self.reverse_from(x, &fwd)?;
        Ok((TangentVector { base: *x, vec: fwd }, TangentVector { base: *y, vec: bwd }))
    }

    fn reverse_from(&self, base: &SurfacePoint, w: &Vec3) -> Result<Vec3> {
        let len = w.norm();
        if len == 0.0 {
            return Ok(Vec3::zeros());
        }
        let (_, v) = self.integrate_geodesic(&base.position, &(w / len), len)?;
        Ok(-v * len)
    }

    pub fn geodesic_distance(&self, x: &SurfacePoint, y: &SurfacePoint) -> Result<f64> {
        Ok(self.geodesic_log(x, y)?.norm())
    }

    fn shooting_log(&self, x: &Vec3, y: &Vec3) -> Result<Vec3> {
        let chord = y - x;
        let scale = self.scale();
        if chord.norm() <= 1e-14 * scale {
            return Ok(Vec3::zeros());
        }
        let nx = self.normal(x)?;
        let basis = tangent_basis(&nx);
        let guess_dir = project_along(chord, &nx).try_normalize(0.0).unwrap_or(basis.0);
        let guess = to_coords(&basis, &(guess_dir * chord.norm()));

        if chord.norm() <= 0.5 * self.injectivity_guard() {
            let (w, _) = self.newton_shoot(x, y, &basis, guess, f64::INFINITY, SHOOTING_MAX_ITER)?;
            return Ok(from_coords(&basis, &w));
        }

        // Long range: multi-start, keep the shortest converged geodesic.
        let mut starts = self.chart_guesses(x, y, &basis);
        starts.push(guess);
        let base_angle = guess.y.atan2(guess.x);
        for k in 1..8 {
            let a = base_angle + k as f64 * PI / 4.0;
            let r = chord.norm() * 1.2;
            starts.push(Vector2::new(r * a.cos(), r * a.sin()));
        }
        starts.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let mut candidates: Vec<Vector2<f64>> = Vec::new();
        let mut last_err = None;
        let mut bound = 4.0 * chord.norm() + PI * scale;
        for start in starts {
            if start.norm() > bound {
                continue;
            }
            match self.newton_shoot(x, y, &basis, start, bound, MULTI_START_MAX_ITER) {
                Ok((w, _)) => {
                    bound = bound.min(1.5 * w.norm());
                    candidates.push(w);
                }
                Err(e) => last_err = Some(e),
            }
        }
        if candidates.is_empty() {
            return Err(last_err.unwrap_or(Error::NoConvergence { residual: f64::NAN, iterations: 0 }));
        }
        candidates.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let best = candidates[0];
        for other in &candidates[1..] {
            let same_length = (other.norm() - best.norm()).abs() <= 1e-9 * best.norm();
            let angle = (best.x * other.y - best.y * other.x).atan2(best.dot(other)).abs();
            if same_length && angle > 1e-3 {
                return Err(Error::CutLocus(format!(
                    "two minimizing geodesics of length {:.12} found",
                    best.norm()
                )));
            }
        }
        Ok(from_coords(&basis, &best))
    }

    // Initial vectors following straight chart lines to `y` in the
    // neighboring homotopy classes (torus only).
    fn chart_guesses(&self, x: &Vec3, y: &Vec3, basis: &(Vec3, Vec3)) -> Vec<Vector2<f64>> {
        let SurfaceHandle::Torus { major, minor } = self else {
            return Vec::new();
        };
        let angles = |p: &Vec3| {
            let phi = p.y.atan2(p.x);
            let theta = p.z.atan2(p.x.hypot(p.y) - major);
            (phi, theta)
        };
        let (p0, t0) = angles(x);
        let (p1, t1) = angles(y);
        let wrap = |d: f64| (d + PI).rem_euclid(2.0 * PI) - PI;
        let (dp, dt) = (wrap(p1 - p0), wrap(t1 - t0));
        let Ok(jet) = self.chart(p0, t0) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for kp in [-1.0, 0.0, 1.0] {
            for kt in [-1.0, 0.0, 1.0] {
                let (a, b) = (dp + 2.0 * PI * kp, dt + 2.0 * PI * kt);
                let v = jet.xu * a + jet.xv * b;
                // rough length of the chart line, averaging the metric along it
                let len = (0..=8)
                    .map(|i| {
                        let s = i as f64 / 8.0;
                        let rho = major + minor * (t0 + s * b).cos();
                        (rho * a).hypot(minor * b)
                    })
                    .sum::<f64>()
                    / 9.0;
                if let Some(dir) = v.try_normalize(0.0) {
                    out.push(to_coords(basis, &(dir * len)));
                }
            }
        }
        out
    }

    fn newton_shoot(
        &self,
        x: &Vec3,
        y: &Vec3,
        basis: &(Vec3, Vec3),
        mut w: Vector2<f64>,
        max_len: f64,
        max_iter: usize,
    ) -> Result<(Vector2<f64>, f64)> {
        let scale = self.scale();
        let ny = self.normal(y)?;
        let target_basis = tangent_basis(&ny);
        let start = self.point(*x)?;
        let residual = |w: &Vector2<f64>| -> Result<(Vector2<f64>, f64)> {
            if w.norm() > max_len {
                return Err(Error::NoConvergence { residual: f64::INFINITY, iterations: 0 });
            }
            let end = self.exp(&start, &from_coords(basis, w))?.position;
            let d = end - y;
            Ok((Vector2::new(d.dot(&target_basis.0), d.dot(&target_basis.1)), d.norm()))
        };
        let (mut r, mut err) = residual(&w)?;
        let mut previous = f64::INFINITY;
        for iteration in 0..max_iter {
            if err <= 1e-15 * scale || (err <= SHOOTING_TOL * scale && err > 0.5 * previous) {
                return Ok((w, err));
            }
            let eps = 1e-7 * w.norm().max(1e-3 * scale);
            let mut jac = Matrix2::zeros();
            for k in 0..2 {
                let mut wk = w;
                wk[k] += eps;
                let (rk, _) = residual(&wk)?;
                jac.set_column(k, &((rk - r) / eps));
            }
            let Some(step) = jac.lu().solve(&(-r)) else {
                return Err(Error::NoConvergence { residual: err, iterations: iteration });
            };
            let mut t = 1.0;
            loop {
                let trial = w + step * t;
                match residual(&trial) {
                    Ok((rt, et)) if et < err || t < 1.0 / 64.0 => {
                        previous = err;
                        w = trial;
                        r = rt;
                        err = et;
                        break;
                    }
                    Err(e) if t < 1.0 / 64.0 => return Err(e),
                    _ => t *= 0.5,
                }
            }
        }
        if err <= SHOOTING_TOL * scale {
            Ok((w, err))
        } else {
            Err(Error::NoConvergence { residual: err, iterations: max_iter })
        }
    }
}

fn to_coords(basis: &(Vec3, Vec3), v: &Vec3) -> Vector2<f64> {
    Vector2::new(v.dot(&basis.0), v.dot(&basis.1))
}

fn from_coords(basis: &(Vec3, Vec3), w: &Vector2<f64>) -> Vec3 {
    basis.0 * w.x + basis.1 * w.y
}

fn ellipsoid_jet(a: [f64; 3], theta: f64, phi: f64) -> ChartJet {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    ChartJet {
        x: Vec3::new(a[0] * st * cp, a[1] * st * sp, a[2] * ct),
        xu: Vec3::new(a[0] * ct * cp, a[1] * ct * sp, -a[2] * st),
        xv: Vec3::new(-a[0] * st * sp, a[1] * st * cp, 0.0),
        xuu: Vec3::new(-a[0] * st * cp, -a[1] * st * sp, -a[2] * ct),
        xuv: Vec3::new(-a[0] * ct * sp, a[1] * ct * cp, 0.0),
        xvv: Vec3::new(-a[0] * st * cp, -a[1] * st * sp, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_sphere() -> SurfaceHandle {
        SurfaceHandle::sphere(1.0).unwrap()
    }

    #[test]
    fn constructors_validate() {
        assert!(SurfaceHandle::sphere(0.0).is_err());
        assert!(SurfaceHandle::ellipsoid(1.0, -1.0, 1.0).is_err());
        assert!(SurfaceHandle::torus(1.0, 1.0).is_err());
        assert!(SurfaceHandle::torus(2.0, 1.375).is_ok());
    }

    #[test]
    fn sphere_log_quarter_circle() {
        let s = unit_sphere();
        let x = s.point(Vec3::x()).unwrap();
        let y = s.point(Vec3::y()).unwrap();
        let log = s.geodesic_log(&x, &y).unwrap();
        assert_abs_diff_eq!(log.vec, Vec3::new(0.0, PI / 2.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s.geodesic_distance(&x, &y).unwrap(), PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn plane_log_and_distance() {
        let p = SurfaceHandle::Plane;
        let o = p.point(Vec3::zeros()).unwrap();
        let y = p.point(Vec3::new(3.0, 4.0, 0.0)).unwrap();
        assert_eq!(p.geodesic_log(&o, &y).unwrap().vec, Vec3::new(3.0, 4.0, 0.0));
        assert_eq!(p.geodesic_distance(&o, &y).unwrap(), 5.0);
        let z = p.point(Vec3::new(1.0, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p.geodesic_distance(&o, &z).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_ellipsoid_matches_sphere_log() {
        let e = SurfaceHandle::ellipsoid(1.0, 1.0, 1.0).unwrap();
        let s = unit_sphere();
        let pairs = [
            (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.6, 0.8, 0.0)),
            (Vec3::new(0.0, 0.6, 0.8), Vec3::new(0.36, 0.48, 0.8)),
            (Vec3::new(0.5, 0.5, 0.5f64.sqrt()), Vec3::new(-0.2, 0.4, 0.8).normalize()),
        ];
        for (a, b) in pairs {
            let (xa, xb) = (s.point(a).unwrap(), s.point(b).unwrap());
            let exact = s.geodesic_log(&xa, &xb).unwrap().vec;
            let shot = e.geodesic_log(&xa, &xb).unwrap().vec;
            assert_abs_diff_eq!(exact, shot, epsilon = 1e-8);
        }
    }

    #[test]
    fn torus_outer_equator_distance() {
        let (major, minor) = (2.0, 1.375);
        let t = SurfaceHandle::torus(major, minor).unwrap();
        let a = t.chart_point(0.0, 0.0).unwrap();
        let b = t.chart_point(0.1, 0.0).unwrap();
        assert_abs_diff_eq!(t.geodesic_distance(&a, &b).unwrap(), (major + minor) * 0.1, epsilon = 1e-6);
    }

    #[test]
    fn exp_examples() {
        let s = unit_sphere();
        let x = s.point(Vec3::x()).unwrap();
        let y = s.solve_geodesic(&x, &Vec3::y(), PI / 2.0).unwrap();
        assert_abs_diff_eq!(y.position, Vec3::y(), epsilon = 1e-9);

        let p = SurfaceHandle::Plane;
        let y = p.solve_geodesic(&p.point(Vec3::zeros()).unwrap(), &Vec3::x(), 2.0).unwrap();
        assert_abs_diff_eq!(y.position, Vec3::new(2.0, 0.0, 0.0), epsilon = 1e-15);

        let (major, minor) = (2.0, 1.375);
        let t = SurfaceHandle::torus(major, minor).unwrap();
        let start = t.chart_point(0.0, 0.0).unwrap();
        let end = t.solve_geodesic(&start, &Vec3::y(), 2.0 * PI * (major + minor)).unwrap();
        assert_abs_diff_eq!(end.position, start.position, epsilon = 1e-6);
        assert!(t.residual(&end.position).unwrap() < 1e-9);
    }

    #[test]
    fn exp_rejects_bad_direction() {
        let s = unit_sphere();
        let x = s.point(Vec3::x()).unwrap();
        assert!(s.solve_geodesic(&x, &Vec3::new(0.0, 2.0, 0.0), 1.0).is_err());
        assert!(s.solve_geodesic(&x, &Vec3::y(), -1.0).is_err());
    }

    #[test]
    fn ellipsoid_exp_stays_on_surface() {
        let e = SurfaceHandle::ellipsoid(1.6, 1.3, 1.0).unwrap();
        let x = e.chart_point(1.2, 0.7).unwrap();
        let jet = e.chart(1.2, 0.7).unwrap();
        let dir = (jet.xu + jet.xv).normalize();
        let y = e.solve_geodesic(&x, &dir, 1.3).unwrap();
        assert!(e.residual(&y.position).unwrap() < 1e-9);
        assert_abs_diff_eq!(y.normal.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mesh_geodesics_unsupported() {
        let m = SurfaceHandle::mesh(crate::levelset::make_sphere_mesh(0));
        let p = SurfacePoint::new(Vec3::x(), Vec3::x());
        assert!(matches!(m.geodesic_log(&p, &p), Err(Error::UnsupportedOnMesh(_))));
        assert!(matches!(m.solve_geodesic(&p, &Vec3::y(), 1.0), Err(Error::UnsupportedOnMesh(_))));
    }

    #[test]
    fn charts_are_outward_oriented() {
        let surfaces = [
            SurfaceHandle::sphere(2.0).unwrap(),
            SurfaceHandle::ellipsoid(1.6, 1.3, 1.0).unwrap(),
            SurfaceHandle::torus(2.0, 1.375).unwrap(),
        ];
        for s in &surfaces {
            for (u, v) in [(0.7, 0.3), (1.9, 2.5), (0.3, 4.0)] {
                let jet = s.chart(u, v).unwrap();
                let n = s.normal(&jet.x).unwrap();
                assert!(jet.xu.cross(&jet.xv).dot(&n) > 0.0);
                assert!(s.residual(&jet.x).unwrap() < 1e-12);
                // second derivatives against central differences
                let h = 1e-5;
                let fd = (s.chart(u + h, v).unwrap().xu - s.chart(u - h, v).unwrap().xu) / (2.0 * h);
                assert_abs_diff_eq!(fd, jet.xuu, epsilon = 1e-8);
                let fd = (s.chart(u, v + h).unwrap().xu - s.chart(u, v - h).unwrap().xu) / (2.0 * h);
                assert_abs_diff_eq!(fd, jet.xuv, epsilon = 1e-8);
                let fd = (s.chart(u, v + h).unwrap().xv - s.chart(u, v - h).unwrap().xv) / (2.0 * h);
                assert_abs_diff_eq!(fd, jet.xvv, epsilon = 1e-8);
            }
        }
    }
}
