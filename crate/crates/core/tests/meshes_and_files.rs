use std::f64::consts::PI;

use proptest::prelude::*;
use surfmink_core::io::{load_contour, load_mesh, save_contour, save_off};
use surfmink_core::{extract_zero_levelset, make_sphere_mesh, LevelsetField, TriMesh, Vec3};
use tempfile::tempdir;

#[test]
fn latitude_contour_length_converges() {
    let height: f64 = 0.35;
    let exact = 2.0 * PI * (1.0 - height * height).sqrt();
    let mut errors = Vec::new();
    for level in 3..=7 {
        let mesh = make_sphere_mesh(level);
        let field = LevelsetField::from_fn(&mesh, |x| x.z - height).unwrap();
        let chain = extract_zero_levelset(&mesh, &field).unwrap();
        for x in chain.points() {
            // cuts interpolate mesh vertices, so they sit just inside the sphere
            assert!((x.z - height).abs() < 1e-12);
            assert!(x.norm() <= 1.0 + 1e-12);
        }
        let length: f64 = chain.chord_lengths().iter().sum();
        errors.push((mesh.h(), (length - exact).abs()));
    }
    for w in errors.windows(2) {
        let rate = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        assert!(rate > 1.5, "{errors:?}");
    }
}

#[test]
fn contour_orientation_follows_the_normal() {
    // negative region (the cap z > h) must lie to the left of the tangent
    let mesh = make_sphere_mesh(4);
    let field = LevelsetField::from_fn(&mesh, |x| 0.2 - x.z).unwrap();
    let chain = extract_zero_levelset(&mesh, &field).unwrap();
    let q = chain.len();
    for i in 0..q {
        let x = chain.points()[i];
        let t = chain.points()[(i + 1) % q] - x;
        let left = chain.normals()[i].cross(&t);
        assert!(left.z > 0.0);
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3f64..1e3, -1e-6f64..1e-6, Just(0.1), Just(1.0 / 3.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn off_round_trip_is_exact(level in 0usize..3, shift in prop::array::uniform3(finite()), scale in 0.01f64..100.0) {
        let base = make_sphere_mesh(level);
        let vertices: Vec<Vec3> = base.vertices().iter().map(|v| v * scale + Vec3::from(shift)).collect();
        let mesh = TriMesh::new(vertices, base.triangles().to_vec()).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.off");
        save_off(&mesh, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.triangles(), mesh.triangles());
    }

    #[test]
    fn contour_round_trip_is_exact(raw in prop::collection::vec((prop::array::uniform3(finite()), prop::array::uniform3(0.1f64..1.0)), 3..40)) {
        let points: Vec<Vec3> = raw.iter().map(|(p, _)| Vec3::from(*p)).collect();
        let normals: Vec<Vec3> = raw.iter().map(|(_, n)| Vec3::from(*n).normalize()).collect();
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.csv");
        save_contour(&path, &points, &normals).unwrap();
        let (p2, n2) = load_contour(&path).unwrap();
        prop_assert_eq!(p2, points);
        for (a, b) in n2.iter().zip(&normals) {
            prop_assert!((a - b).norm() < 1e-15);
        }
    }
}
