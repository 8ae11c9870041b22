//! Triangulated surfaces, piecewise-linear levelset fields and zero-levelset
//! extraction.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::approx::{PolyChain, Provenance};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// An oriented triangle mesh.
///
/// Closed meshes (every edge shared by exactly two consistently oriented
/// triangles) are built with [`TriMesh::new`]; [`TriMesh::with_boundary`]
/// additionally admits boundary edges, for planar test patches.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    vertex_normals: Vec<Vec3>,
    h: f64,
    closed: bool,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, triangles, None, true)
    }

    /// Closed mesh with prescribed per-vertex normals (normalized on input).
    pub fn with_normals(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, normals: Vec<Vec3>) -> Result<Self> {
        Self::build(vertices, triangles, Some(normals), true)
    }

    pub fn with_boundary(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, triangles, None, false)
    }

    fn build(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, normals: Option<Vec<Vec3>>, closed: bool) -> Result<Self> {
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput("vertex coordinates must be finite".into()));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &triangles {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidInput(format!("triangle {tri:?} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0] {
                return Err(Error::InvalidInput(format!("degenerate triangle {tri:?}")));
            }
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
        for (&(a, b), &n) in &directed {
            if n > 1 {
                // same directed edge twice: inconsistent orientation or a fin
                let total = n + directed.get(&(b, a)).copied().unwrap_or(0);
                let (a, b) = edge_key(a, b);
                return Err(Error::NonManifold(a, b, total));
            }
            *undirected.entry(edge_key(a, b)).or_default() += n;
        }
        if closed {
            let mut bad: Vec<_> = undirected.iter().filter(|(_, &n)| n != 2).collect();
            bad.sort();
            if let Some((&(a, b), &n)) = bad.first() {
                return Err(Error::NonManifold(a, b, n));
            }
        }
        let h = undirected.keys().map(|&(a, b)| (vertices[a] - vertices[b]).norm()).fold(0.0, f64::max);
        let mut mesh = TriMesh { vertices, triangles, vertex_normals: Vec::new(), h, closed };
        mesh.vertex_normals = match normals {
            Some(n) => {
                if n.len() != mesh.vertices.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} normals for {} vertices",
                        n.len(),
                        mesh.vertices.len()
                    )));
                }
                n.iter()
                    .map(|v| {
                        let len = v.norm();
                        if len > 0.0 && len.is_finite() {
                            Ok(v / len)
                        } else {
                            Err(Error::InvalidInput("zero vertex normal".into()))
                        }
                    })
                    .collect::<Result<_>>()?
            }
            None => mesh.area_weighted_normals(),
        };
        Ok(mesh)
    }

    /// Average of incident face normals weighted by face area.
    pub fn area_weighted_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.vertices[i]);
            let w = (b - a).cross(&(c - a));
            for &i in tri {
                acc[i] += w;
            }
        }
        acc.into_iter().map(|n| n.try_normalize(0.0).unwrap_or_else(Vec3::zeros)).collect()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.vertex_normals
    }

    /// Maximal edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn face_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.face_area(t)).sum()
    }

    pub fn bounding_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Octahedron refined `level` times by 1-to-4 midpoint subdivision, with
/// every vertex projected to the unit sphere.
pub fn make_sphere_mesh(level: usize) -> TriMesh {
    let mut vertices = vec![Vec3::x(), Vec3::y(), -Vec3::x(), -Vec3::y(), Vec3::z(), -Vec3::z()];
    let mut triangles = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5]];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            *midpoints.entry(edge_key(a, b)).or_insert_with(|| {
                vertices.push((vertices[a] + vertices[b]).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(4 * triangles.len());
        for [a, b, c] in triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        triangles = next;
    }
    TriMesh::new(vertices, triangles).expect("subdivided octahedron is a closed manifold")
}

/// Planar `n x n` grid on `[-half, half]^2` in the plane `z = 0`, normals `+z`.
pub fn make_planar_mesh(n: usize, half: f64) -> Result<TriMesh> {
    if n == 0 || !(half > 0.0) {
        return Err(Error::InvalidInput("grid needs at least one cell and positive extent".into()));
    }
    let step = 2.0 * half / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec3::new(-half + i as f64 * step, -half + j as f64 * step, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::with_boundary(vertices, triangles)
}

/// Per-vertex values of a piecewise-linear scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelsetField {
    values: Vec<f64>,
}

impl LevelsetField {
    /// Values with `|rho| < 1e-12 * max|rho|` are moved to `+1e-12 * max|rho|`
    /// so no vertex lies exactly on the zero set.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("levelset values must be finite".into()));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let eps = 1e-12 * if scale > 0.0 { scale } else { 1.0 };
        for v in &mut values {
            if v.abs() < eps {
                *v = eps;
            }
        }
        Ok(LevelsetField { values })
    }

    pub fn from_fn(mesh: &TriMesh, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        Self::new(mesh.vertices().iter().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Chart angles around the center `(polar, azimuth)` of the flower field.
fn flower_chart(x: &Vec3, center: [f64; 2]) -> (f64, f64) {
    let theta = (x.z / x.norm()).clamp(-1.0, 1.0).acos() - center[0];
    let phi = x.y.atan2(x.x) - center[1];
    (theta, phi)
}

pub fn flower_rho(x: &Vec3, r0: f64, a: f64, omega: f64, center: [f64; 2]) -> f64 {
    let (theta, phi) = flower_chart(x, center);
    let t = phi.atan2(theta) + PI;
    theta.hypot(phi) - (r0 - a * (omega * t).sin())
}

/// `rho(x) = sqrt(theta^2 + phi^2) - r(t)` with `r(t) = r0 - a sin(omega t)`
/// and `t = atan2(phi, theta) + pi`, in chart angles around `center`.
/// The default center is `(pi / 2, pi / 4)`.
pub fn flower_levelset(mesh: &TriMesh, r0: f64, a: f64, omega: f64, center: Option<[f64; 2]>) -> Result<LevelsetField> {
    if !(r0 > a.abs()) {
        return Err(Error::InvalidInput(format!("flower radius {r0} must exceed |amplitude| {a}")));
    }
    let center = center.unwrap_or([FRAC_PI_2, FRAC_PI_4]);
    let values: Vec<f64> = mesh.vertices().iter().map(|x| flower_rho(x, r0, a, omega, center)).collect();
    let field = LevelsetField::new(values)?;
    for tri in mesh.triangles() {
        let signs = tri.map(|i| field.values[i] < 0.0);
        if signs[0] == signs[1] && signs[1] == signs[2] {
            continue;
        }
        for &i in tri {
            let x = mesh.vertices()[i];
            if x.x.hypot(x.y) <= 1e-8 * x.norm() {
                return Err(Error::ChartSingularity(i));
            }
        }
    }
    Ok(field)
}

fn cut_point(mesh: &TriMesh, rho: &[f64], a: usize, b: usize) -> (Vec3, Vec3) {
    let (ra, rb) = (rho[a], rho[b]);
    let w = rb / (rb - ra);
    let x = mesh.vertices()[a] * w + mesh.vertices()[b] * (1.0 - w);
    let n = mesh.vertex_normals()[a] * w + mesh.vertex_normals()[b] * (1.0 - w);
    (x, n.normalize())
}

/// Chains the edge cuts of the zero levelset into one closed loop with the
/// negative region on the left (with respect to the surface normal).
pub fn extract_zero_levelset(mesh: &TriMesh, field: &LevelsetField) -> Result<PolyChain> {
    let rho = field.values();
    if rho.len() != mesh.vertices().len() {
        return Err(Error::InvalidInput(format!("{} field values for {} vertices", rho.len(), mesh.vertices().len())));
    }
    // each crossed triangle contributes one segment, entering through the
    // edge going - to + and leaving through the edge going + to -
    let mut next: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for tri in mesh.triangles() {
        let mut enter = None;
        let mut leave = None;
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            match (rho[a] < 0.0, rho[b] < 0.0) {
                (true, false) => enter = Some(edge_key(a, b)),
                (false, true) => leave = Some(edge_key(a, b)),
                _ => {}
            }
        }
        if let (Some(e), Some(l)) = (enter, leave) {
            next.insert(e, l);
        }
    }
    if next.is_empty() {
        return Err(Error::InvalidInput("field has no zero crossing".into()));
    }
    let mut start = *next.keys().min().expect("non-empty");
    let mut loops = 0;
    let mut chain_edges = Vec::new();
    let mut remaining = next.clone();
    while !remaining.is_empty() {
        if loops > 0 {
            start = *remaining.keys().min().expect("non-empty");
        }
        let mut edge = start;
        let mut edges = Vec::new();
        loop {
            edges.push(edge);
            edge = remaining.remove(&edge).ok_or(Error::OpenChain)?;
            if edge == start {
                break;
            }
        }
        loops += 1;
        if loops == 1 {
            chain_edges = edges;
        }
    }
    if loops > 1 {
        return Err(Error::MultipleComponents(loops));
    }
    let mut points: Vec<Vec3> = Vec::with_capacity(chain_edges.len());
    let mut normals: Vec<Vec3> = Vec::with_capacity(chain_edges.len());
    for (a, b) in chain_edges {
        let (x, n) = cut_point(mesh, rho, a, b);
        if points.last().is_some_and(|p| (p - x).norm() <= 1e-12) {
            continue;
        }
        points.push(x);
        normals.push(n);
    }
    while points.len() > 1 && (points[0] - points[points.len() - 1]).norm() <= 1e-12 {
        points.pop();
        normals.pop();
    }
    PolyChain::new(points, normals, Provenance::Approximate(mesh.h()))
}

/// Area of the region `rho < 0` on the piecewise-linear mesh.
pub fn clipped_area(mesh: &TriMesh, field: &LevelsetField) -> Result<f64> {
    let rho = field.values();
    if rho.len() != mesh.vertices().len() {
        return Err(Error::InvalidInput(format!("{} field values for {} vertices", rho.len(), mesh.vertices().len())));
    }
    let mut area = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let inside = tri.map(|i| rho[i] < 0.0);
        if inside.iter().all(|&s| s) {
            area += mesh.face_area(t);
            continue;
        }
        if !inside.iter().any(|&s| s) {
            continue;
        }
        let mut poly = Vec::with_capacity(4);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if inside[k] {
                poly.push(mesh.vertices()[a]);
            }
            if inside[k] != inside[(k + 1) % 3] {
                poly.push(cut_point(mesh, rho, a, b).0);
            }
        }
        for k in 1..poly.len() - 1 {
            area += 0.5 * (poly[k] - poly[0]).cross(&(poly[k + 1] - poly[0])).norm();
        }
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn sphere_mesh_counts() {
        let m0 = make_sphere_mesh(0);
        assert_eq!((m0.vertices().len(), m0.triangles().len()), (6, 8));
        assert_abs_diff_eq!(m0.h(), 2f64.sqrt(), epsilon = 1e-15);
        let m2 = make_sphere_mesh(2);
        assert_eq!((m2.vertices().len(), m2.triangles().len()), (66, 128));
        for v in m2.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
        for t in 0..m2.triangles().len() {
            let [a, b, c] = m2.triangles()[t].map(|i| m2.vertices()[i]);
            assert!(m2.face_normal(t).dot(&(a + b + c)) > 0.0);
        }
    }

    #[test]
    fn h_roughly_halves() {
        let hs: Vec<f64> = (0..6).map(|l| make_sphere_mesh(l).h()).collect();
        // the first round only shrinks h by sqrt(2)
        assert_abs_diff_eq!(hs[0] / hs[1], 2f64.sqrt(), epsilon = 1e-12);
        for w in hs[1..].windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 1.6 && ratio < 2.4, "{ratio}");
        }
    }

    #[test]
    fn rejects_open_and_inconsistent_meshes() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        assert!(matches!(TriMesh::new(v.clone(), vec![[0, 1, 2]]), Err(Error::NonManifold(..))));
        let flipped = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        assert!(TriMesh::new(v.clone(), flipped).is_ok());
        let broken = vec![[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        assert!(matches!(TriMesh::new(v, broken), Err(Error::NonManifold(..))));
    }

    #[test]
    fn octahedron_normals_point_to_vertices() {
        let m = make_sphere_mesh(0);
        for (v, n) in m.vertices().iter().zip(m.vertex_normals()) {
            assert_abs_diff_eq!(*v, *n, epsilon = 1e-15);
        }
    }

    #[test]
    fn vertex_normals_converge() {
        let errors: Vec<(f64, f64)> = (2..7)
            .map(|l| {
                let m = make_sphere_mesh(l);
                let e: Vec<f64> = m.vertices().iter().zip(m.vertex_normals()).map(|(v, n)| (v - n).norm()).collect();
                (e.iter().cloned().fold(0.0, f64::max), e.iter().sum::<f64>() / e.len() as f64)
            })
            .collect();
        for w in errors.windows(2) {
            // worst case sits on the creases of the base octahedron
            assert!(w[0].0 / w[1].0 > 1.9, "{errors:?}");
            assert!(w[0].1 / w[1].1 > 2.0, "{errors:?}");
        }
        assert!(errors[4].1 / errors[3].1 < 0.3);
    }

    #[test]
    fn single_triangle_has_two_cuts() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        let m = TriMesh::with_boundary(v, vec![[0, 1, 2]]).unwrap();
        let field = LevelsetField::new(vec![-1.0, 1.0, 1.0]).unwrap();
        // open patch: the one segment cannot close
        assert!(matches!(extract_zero_levelset(&m, &field), Err(Error::OpenChain)));
        assert_abs_diff_eq!(clipped_area(&m, &field).unwrap(), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn planar_circle_extraction() {
        let mut prev = f64::INFINITY;
        for n in [16, 32, 64, 128] {
            let m = make_planar_mesh(n, 1.5).unwrap();
            let field = LevelsetField::from_fn(&m, |x| x.x * x.x + x.y * x.y - 1.0).unwrap();
            let chain = extract_zero_levelset(&m, &field).unwrap();
            let len: f64 = (0..chain.len()).map(|i| (chain.points()[(i + 1) % chain.len()] - chain.points()[i]).norm()).sum();
            let err = (len - TAU).abs();
            assert!(err < prev / 3.0 || err < 1e-12);
            prev = err;
            let area = clipped_area(&m, &field).unwrap();
            assert!((area - PI).abs() < 10.0 * m.h() * m.h());
            // counter-clockwise about +z
            let p = chain.points();
            let signed: f64 = (0..p.len()).map(|i| p[i].cross(&p[(i + 1) % p.len()]).z).sum();
            assert!(signed > 0.0);
            for (x, nrm) in p.iter().zip(chain.normals()) {
                assert!(x.z.abs() < 1e-15);
                assert_abs_diff_eq!(*nrm, Vec3::z(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn cut_points_interpolate_to_zero() {
        let m = make_sphere_mesh(3);
        let field = flower_levelset(&m, 0.5, 0.1, 4.0, None).unwrap();
        let chain = extract_zero_levelset(&m, &field).unwrap();
        for x in chain.points() {
            // point lies on some mesh edge with interpolated value zero
            let on_edge = m.triangles().iter().any(|tri| {
                (0..3).any(|k| {
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    let (va, vb) = (m.vertices()[a], m.vertices()[b]);
                    let s = (x - va).dot(&(vb - va)) / (vb - va).norm_squared();
                    let resid = (va + (vb - va) * s - x).norm();
                    let value = field.values()[a] * (1.0 - s) + field.values()[b] * s;
                    (0.0..=1.0).contains(&s) && resid < 1e-12 && value.abs() < 1e-12
                })
            });
            assert!(on_edge);
        }
    }

    #[test]
    fn flower_field_sign_at_center() {
        let v = Vec3::new(FRAC_PI_4.cos(), FRAC_PI_4.sin(), 0.0);
        let rho = flower_rho(&v, 0.5, 0.1, 4.0, [FRAC_PI_2, FRAC_PI_4]);
        assert!(rho < 0.0 && rho > -0.6);
        // far side of the sphere is outside
        assert!(flower_rho(&-v, 0.5, 0.1, 4.0, [FRAC_PI_2, FRAC_PI_4]) > 0.0);
    }

    #[test]
    fn hemisphere_area() {
        let mut prev = f64::INFINITY;
        for level in 2..6 {
            let m = make_sphere_mesh(level);
            let field = LevelsetField::from_fn(&m, |x| x.z).unwrap();
            let err = (clipped_area(&m, &field).unwrap() - TAU).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 0.01);
        let m = make_sphere_mesh(2);
        let all_inside = LevelsetField::new(vec![-1.0; m.vertices().len()]).unwrap();
        assert_abs_diff_eq!(clipped_area(&m, &all_inside).unwrap(), m.area(), epsilon = 1e-12);
    }

    #[test]
    fn two_components_are_reported() {
        let m = make_sphere_mesh(3);
        let field = LevelsetField::from_fn(&m, |x| 0.5 - x.z * x.z).unwrap();
        assert!(matches!(extract_zero_levelset(&m, &field), Err(Error::MultipleComponents(2))));
    }
}
