//! Points, tangent vectors and moving frames on embedded surfaces.

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// A point on a surface together with its unit outer normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    /// Chart coordinates, when the point came from a parametrized surface.
    pub chart: Option<[f64; 2]>,
    pub normal: Vec3,
}

impl SurfacePoint {
    pub fn new(position: Vec3, normal: Vec3) -> Self {
        SurfacePoint { position, chart: None, normal }
    }

    pub fn with_chart(mut self, uv: [f64; 2]) -> Self {
        self.chart = Some(uv);
        self
    }
}

/// A vector in the tangent plane at `base`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: SurfacePoint,
    pub vec: Vec3,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    /// True if the vector lies in the tangent plane within `1e-10 * |vec|`.
    pub fn is_tangent(&self) -> bool {
        self.vec.dot(&self.base.normal).abs() <= 1e-10 * self.vec.norm().max(f64::MIN_POSITIVE)
    }
}

/// Removes the normal component: `v - <v, n> n`.
pub fn project_to_tangent(v: Vec3, at: &SurfacePoint) -> TangentVector {
    TangentVector { base: *at, vec: project_along(v, &at.normal) }
}

pub(crate) fn project_along(v: Vec3, n: &Vec3) -> Vec3 {
    v - n * v.dot(n)
}

/// Right-handed moving frame `(conormal, tangent, normal)` at a curve point.
///
/// The co-normal is `tangent x normal`, so that `conormal x tangent = normal`
/// and the co-normal points out of the region to the left of the traversal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: Vec3,
    pub conormal: Vec3,
    pub tangent: Vec3,
    pub normal: Vec3,
}

impl Frame {
    /// Builds the frame from a (not necessarily unit, not necessarily tangent)
    /// direction of traversal and the surface normal.
    pub fn from_direction(origin: Vec3, direction: Vec3, normal: Vec3) -> Option<Self> {
        let normal = normal.try_normalize(0.0)?;
        let tangent = project_along(direction, &normal).try_normalize(1e-300)?;
        Some(Frame { origin, conormal: tangent.cross(&normal), tangent, normal })
    }

    /// Unit vector at angle `theta` measured from the co-normal towards the tangent.
    pub fn direction(&self, theta: f64) -> Vec3 {
        self.conormal * theta.cos() + self.tangent * theta.sin()
    }

    /// Angle of a tangent vector relative to the co-normal, in (-pi, pi].
    pub fn angle_of(&self, v: &Vec3) -> f64 {
        v.dot(&self.tangent).atan2(v.dot(&self.conormal))
    }

    /// `<conormal x tangent, normal>`, equal to 1 for a right-handed orthonormal frame.
    pub fn handedness(&self) -> f64 {
        self.conormal.cross(&self.tangent).dot(&self.normal)
    }

    pub fn point(&self) -> SurfacePoint {
        SurfacePoint::new(self.origin, self.normal)
    }
}

/// Signed angle from `from` to `to` about the axis `normal`, in (-pi, pi].
pub fn signed_angle(from: &Vec3, to: &Vec3, normal: &Vec3) -> f64 {
    from.cross(to).dot(normal).atan2(from.dot(to))
}

/// An orthonormal basis of the plane orthogonal to the unit vector `n`.
pub(crate) fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.6 { Vec3::x() } else if n.y.abs() < 0.6 { Vec3::y() } else { Vec3::z() };
    let e1 = project_along(helper, n).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_point(x: f64, y: f64, z: f64) -> SurfacePoint {
        let p = Vec3::new(x, y, z);
        SurfacePoint::new(p, p.normalize())
    }

    #[test]
    fn projection_examples() {
        let at = sphere_point(1.0, 0.0, 0.0);
        assert_eq!(project_to_tangent(Vec3::new(0.0, 0.0, 1.0), &at).vec, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(project_to_tangent(Vec3::new(1.0, 0.0, 0.0), &at).vec, Vec3::zeros());
        assert_eq!(project_to_tangent(Vec3::new(1.0, 1.0, 0.0), &at).vec, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(project_to_tangent(Vec3::zeros(), &at).vec, Vec3::zeros());
    }

    #[test]
    fn frame_is_right_handed() {
        let f = Frame::from_direction(Vec3::zeros(), Vec3::new(0.3, 1.0, 0.2), Vec3::z()).unwrap();
        assert!((f.handedness() - 1.0).abs() < 1e-14);
        assert!(f.conormal.dot(&f.tangent).abs() < 1e-15);
        // counter-clockwise traversal of a planar circle: co-normal points outwards
        let f = Frame::from_direction(Vec3::new(1.0, 0.0, 0.0), Vec3::y(), Vec3::z()).unwrap();
        assert!((f.conormal - Vec3::x()).norm() < 1e-15);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        for n in [Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(1.0, 2.0, -3.0).normalize()] {
            let (a, b) = tangent_basis(&n);
            assert!(a.dot(&n).abs() < 1e-15 && b.dot(&n).abs() < 1e-15 && a.dot(&b).abs() < 1e-15);
            assert!((a.cross(&b).dot(&n) - 1.0).abs() < 1e-14);
        }
    }
}
