//! Randomized invariance suites with reproducible per-instance seeds.

use std::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfmink_core::io::ResultTable;
use surfmink_core::{
    build_geodesic_polygon, eigen_spectrum, perturb_polygon, polygon_components, smooth_components, ArcLengthTable,
    ChartCurve, FlowerPath, ParamCurve, PolyChain, PolygonData, Provenance, SmoothCurveData, SurfaceHandle, Vec3,
};

use crate::{par_map, CliError, CliResult};

const RANKS: [u32; 5] = [2, 3, 4, 5, 6];

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Largest deviation seen, in the units of `tolerance`.
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Check = fn(&mut ChaCha8Rng) -> surfmink_core::Result<f64>;

const SUITES: [(&str, f64, Check); 6] = [
    ("point_independence", 1e-8, point_independence),
    ("rotation_invariance", 1e-10, rotation_invariance),
    ("scaling_invariance", 1e-10, scaling_invariance),
    ("perturbation_continuity", 1.0, perturbation_continuity),
    ("frame_orthonormality", 1e-10, frame_orthonormality),
    ("exp_log_roundtrip", 1e-8, exp_log_roundtrip),
];

/// Runs every suite on `instances` random inputs. An instance fails when its
/// deviation exceeds the suite tolerance or its computation errors.
pub fn run_property_suites(seed: u64, instances: usize, workers: usize) -> Vec<SuiteOutcome> {
    SUITES
        .iter()
        .enumerate()
        .map(|(k, (name, tolerance, check))| {
            let ids: Vec<u64> = (0..instances as u64).collect();
            let deviations = par_map(workers, &ids, |i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((k as u64) << 32) | i);
                check(&mut rng).unwrap_or(f64::INFINITY)
            });
            SuiteOutcome {
                name,
                instances,
                failures: deviations.iter().filter(|d| !(**d <= *tolerance)).count(),
                max_deviation: deviations.iter().cloned().fold(0.0, f64::max),
                tolerance: *tolerance,
            }
        })
        .collect()
}

pub fn cmd_properties(seed: u64, instances: usize, workers: usize) -> CliResult<ResultTable> {
    if instances == 0 {
        return Err(CliError::Usage("property suites need at least one instance".into()));
    }
    let mut table = ResultTable::new(["suite", "instances", "failures", "max_deviation", "tolerance"]);
    for s in run_property_suites(seed, instances, workers) {
        table
            .push(vec![s.name.into(), s.instances.into(), s.failures.into(), s.max_deviation.into(), s.tolerance.into()])
            .expect("row width");
    }
    Ok(table.with_meta("seed", seed.to_string()))
}

fn random_flower(rng: &mut impl Rng) -> FlowerPath {
    let r0 = rng.gen_range(0.25..0.55);
    let a = rng.gen_range(0.0..0.3) * r0;
    let omega = rng.gen_range(2..=7) as f64;
    FlowerPath::new(r0, a, omega).with_center([PI / 2.0 + rng.gen_range(-0.3..0.3), rng.gen_range(PI / 8.0..3.0 * PI / 8.0)])
}

fn random_surface(rng: &mut impl Rng) -> SurfaceHandle {
    match rng.gen_range(0..3) {
        0 => SurfaceHandle::sphere(1.0),
        1 => SurfaceHandle::ellipsoid(1.6, 1.3, 1.0),
        _ => SurfaceHandle::torus(2.0, 1.375),
    }
    .expect("valid surface")
}

fn smooth_mus(curve: &dyn ParamCurve, start_fraction: f64) -> surfmink_core::Result<Vec<f64>> {
    let table = ArcLengthTable::new(curve, ArcLengthTable::DEFAULT_SAMPLES)?;
    let data = SmoothCurveData::from_curve(&table, SmoothCurveData::REFERENCE_SAMPLES, start_fraction * table.length())?;
    RANKS.iter().map(|&p| smooth_components(&data, p).map(|mt| eigen_spectrum(&mt).mu)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn polygon_mus(polygon: &PolygonData) -> surfmink_core::Result<Vec<f64>> {
    RANKS.iter().map(|&p| polygon_components(polygon, p).map(|mt| eigen_spectrum(&mt).mu)).collect()
}

/// Random polygon data with positive turning angles summing to `2 pi`.
fn random_flat_polygon(rng: &mut impl Rng) -> PolygonData {
    let q = rng.gen_range(3..=8);
    let weights: Vec<f64> = (0..q).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let angles = weights.iter().map(|w| TAU * w / total).collect();
    let lengths = (0..q).map(|_| rng.gen_range(0.5..2.0)).collect();
    PolygonData::new(angles, lengths).expect("valid polygon")
}

/// Smooth spectra from fiducial points at `0, L/7, L/3, L/2`, and polygon
/// spectra under cyclic relabeling and a moved fiducial point.
fn point_independence(rng: &mut ChaCha8Rng) -> surfmink_core::Result<f64> {
    let surface = random_surface(rng);
    let curve = ChartCurve::new(surface, random_flower(rng))?;
    let base = smooth_mus(&curve, 0.0)?;
    let mut worst = 0.0f64;
    for fraction in [1.0 / 7.0, 1.0 / 3.0, 0.5] {
        worst = worst.max(max_diff(&base, &smooth_mus(&curve, fraction)?));
    }
    let polygon = random_flat_polygon(rng);
    let q = polygon.q();
    let shift = rng.gen_range(1..q);
    let mut rotated = polygon.clone();
    rotated.turning_angles.rotate_left(shift);
    rotated.lengths.rotate_left(shift);
    let offset = rng.gen_range(0.0..1.0) * rotated.lengths[0];
    let rotated = rotated.with_fiducial_offset(offset)?;
    worst = worst.max(max_diff(&polygon_mus(&polygon)?, &polygon_mus(&rotated)?));
    Ok(worst)
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if (0.1..1.0).contains(&v.norm()) {
            return v.normalize();
        }
    }
}

/// Star-shaped geodesic polygon around a random center on the sphere of radius `r`.
fn random_sphere_polygon(rng: &mut impl Rng, r: f64) -> Vec<Vec3> {
    let c = random_unit(rng);
    let e1 = c.cross(&random_unit(rng)).normalize();
    let e2 = c.cross(&e1);
    let q = rng.gen_range(3..=7);
    let mut phis: Vec<f64> = (0..q).map(|k| (k as f64 + rng.gen_range(0.3..0.7)) * TAU / q as f64).collect();
    phis.sort_by(f64::total_cmp);
    phis.iter()
        .map(|phi| {
            let rho: f64 = rng.gen_range(0.2..0.6);
            (c * rho.cos() + (e1 * phi.cos() + e2 * phi.sin()) * rho.sin()) * r
        })
        .collect()
}

fn sphere_polygon(points: &[Vec3], surface: &SurfaceHandle) -> surfmink_core::Result<PolygonData> {
    let normals = points.iter().map(|x| x.normalize()).collect();
    build_geodesic_polygon(&PolyChain::new(points.to_vec(), normals, Provenance::OnSurface)?, surface)
}

/// Rotated sphere polygons (spectra and eigenvectors) and torus flowers
/// shifted along the symmetry axis.
fn rotation_invariance(rng: &mut ChaCha8Rng) -> surfmink_core::Result<f64> {
    let sphere = SurfaceHandle::sphere(1.0)?;
    let points = random_sphere_polygon(rng, 1.0);
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(random_unit(rng)), rng.gen_range(0.0..TAU));
    let turned: Vec<Vec3> = points.iter().map(|x| rot * x).collect();
    let a = sphere_polygon(&points, &sphere)?;
    let b = sphere_polygon(&turned, &sphere)?;
    let mut worst = 0.0f64;
    for p in RANKS {
        let sa = eigen_spectrum(&polygon_components(&a, p)?);
        let sb = eigen_spectrum(&polygon_components(&b, p)?);
        worst = worst.max((sa.mu - sb.mu).abs());
        if sa.mu > 1e-3 {
            // eigen-angle noise scales like 1 / lambda
            let e = (rot * sa.eigenvectors_plus[0] - sb.eigenvectors_plus[0]).norm() * sa.mu;
            worst = worst.max(e);
        }
    }
    let torus = SurfaceHandle::torus(2.0, 1.375)?;
    let flower = random_flower(rng);
    let delta = rng.gen_range(0.0..TAU);
    let shifted = flower.with_center([flower.center[0] + delta, flower.center[1]]);
    let m1 = smooth_mus(&ChartCurve::new(torus.clone(), flower)?, 0.0)?;
    let m2 = smooth_mus(&ChartCurve::new(torus, shifted)?, 0.0)?;
    Ok(worst.max(max_diff(&m1, &m2)))
}

/// Ellipsoid flowers and sphere polygons under scalings by 0.5, 2 and 10.
fn scaling_invariance(rng: &mut ChaCha8Rng) -> surfmink_core::Result<f64> {
    let flower = random_flower(rng);
    let points = random_sphere_polygon(rng, 1.0);
    let base_smooth = smooth_mus(&ChartCurve::new(SurfaceHandle::ellipsoid(1.6, 1.3, 1.0)?, flower)?, 0.0)?;
    let base_polygon = polygon_mus(&sphere_polygon(&points, &SurfaceHandle::sphere(1.0)?)?)?;
    let mut worst = 0.0f64;
    for s in [0.5, 2.0, 10.0] {
        let e = SurfaceHandle::ellipsoid(1.6 * s, 1.3 * s, s)?;
        worst = worst.max(max_diff(&base_smooth, &smooth_mus(&ChartCurve::new(e, flower)?, 0.0)?));
        let scaled: Vec<Vec3> = points.iter().map(|x| x * s).collect();
        worst = worst.max(max_diff(&base_polygon, &polygon_mus(&sphere_polygon(&scaled, &SurfaceHandle::sphere(s)?)?)?));
    }
    Ok(worst)
}

/// A kink of angle `eps` inserted into a side moves the components by at
/// most `p m eps L` and vanishes at least linearly. Returns the larger of
/// the two normalized ratios, which must stay below 1.
fn perturbation_continuity(rng: &mut ChaCha8Rng) -> surfmink_core::Result<f64> {
    let polygon = random_flat_polygon(rng);
    let k = rng.gen_range(0..polygon.q());
    let split = rng.gen_range(0.2..0.8) * polygon.lengths[k];
    let m = TAU / polygon.total_turning();
    let length = polygon.length();
    let mut worst = 0.0f64;
    for p in RANKS {
        let g = polygon_components(&polygon, p)?.components;
        let shift = |eps: f64| -> surfmink_core::Result<f64> {
            let bumped = perturb_polygon(&polygon, k, (PI - eps, eps, PI), (split, polygon.lengths[k] - split), false)?;
            let h = polygon_components(&bumped, p)?.components;
            Ok((h[0] - g[0]).hypot(h[1] - g[1]))
        };
        let (d1, d2) = (shift(1e-2)?, shift(1e-3)?);
        worst = worst.max(d1 / (p as f64 * m * 1e-2 * length));
        if d1 > 0.0 {
            worst = worst.max((d2 / d1) / 0.15);
        }
    }
    Ok(worst)
}

fn frame_orthonormality(rng: &mut ChaCha8Rng) -> surfmink_core::Result<f64> {
    let curve = ChartCurve::new(random_surface(rng), random_flower(rng))?;
    let mut worst = 0.0f64;
    for _ in 0..16 {
        let f = curve.frame(rng.gen_range(0.0..curve.period()))?;
        let checks = [
            f.conormal.norm() - 1.0,
            f.tangent.norm() - 1.0,
            f.normal.norm() - 1.0,
            f.conormal.dot(&f.tangent),
            f.conormal.dot(&f.normal),
            f.tangent.dot(&f.normal),
            f.handedness() - 1.0,
        ];
        worst = checks.iter().fold(worst, |w, c| w.max(c.abs()));
    }
    Ok(worst)
}

/// `exp_x(log_x y) = y` and `d(x, y) = d(y, x)` for pairs closer than 0.3
/// times the injectivity guard.
fn exp_log_roundtrip(rng: &mut ChaCha8Rng) -> surfmink_core::Result<f64> {
    let surface = random_surface(rng);
    let (u, v) = match surface {
        SurfaceHandle::Torus { .. } => (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)),
        _ => (rng.gen_range(0.3..PI - 0.3), rng.gen_range(0.0..TAU)),
    };
    let x = surface.chart_point(u, v)?;
    let e1 = surface.chart(u, v)?.xu.normalize();
    let e2 = x.normal.cross(&e1);
    let angle = rng.gen_range(0.0..TAU);
    let len = rng.gen_range(0.05..0.3) * surface.injectivity_guard();
    let y = surface.exp(&x, &((e1 * angle.cos() + e2 * angle.sin()) * len))?;
    let w = surface.geodesic_log(&x, &y)?;
    let back = surface.exp(&x, &w.vec)?;
    let asym = (surface.geodesic_distance(&x, &y)? - surface.geodesic_distance(&y, &x)?).abs();
    Ok((back.position - y.position).norm().max(asym))
}
