//! One function per experiment.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::str::FromStr;

use surfmink_core::approx::{assemble_report, level_errors, regular_sphere_chain, Reference};
use surfmink_core::io::{load_contour, Cell, ResultTable, Series};
use surfmink_core::tensor::transport_angles;
use surfmink_core::{
    build_geodesic_polygon, build_line_polygon, continue_geodesic_polygon, eigen_spectrum, extract_zero_levelset,
    flower_levelset, geodesic_sides, ingest_contour, make_sphere_mesh, polygon_components, polygon_components_with,
    smooth_components, ArcLengthTable, ChartCurve, PolyChain, PolygonData, Provenance, Scheme, SmoothCurveData,
    SurfaceHandle, TransportMode, Vec3,
};

use crate::{par_map, CliError, CliResult, During, FlowerParams};

pub const TORUS_MAJOR: f64 = 2.0;
pub const TORUS_MINOR: f64 = 1.375;
/// The sweep starts near the inner ring and moves the apex over the outside of the tube.
pub const SWEEP_START: f64 = 0.9 * PI;
pub const SWEEP_END: f64 = -0.8 * PI;
const CONTINUATION_STEP: f64 = 0.01 * PI;

fn mu_columns(ranks: &[u32]) -> Vec<String> {
    ranks.iter().map(|p| format!("mu_{p}")).collect()
}

fn check_ranks(ranks: &[u32]) -> CliResult<()> {
    if ranks.is_empty() || ranks.iter().any(|p| !(1..=16).contains(p)) {
        return Err(CliError::Usage(format!("ranks must be in 1..=16, got {ranks:?}")));
    }
    Ok(())
}

fn polygon_mus(polygon: &PolygonData, ranks: &[u32], op: &'static str, input: &str) -> CliResult<Vec<f64>> {
    ranks.iter().map(|&p| polygon_components(polygon, p).map(|mt| eigen_spectrum(&mt).mu).during(op, input)).collect()
}

/// `mu_p` of geodesic regular polygons for every `(q, p)` pair.
pub fn cmd_regular_polygons(qs: &[usize], ranks: &[u32], surface: &SurfaceHandle, polar: f64) -> CliResult<ResultTable> {
    check_ranks(ranks)?;
    if let Some(q) = qs.iter().find(|q| !(3..=12).contains(*q)) {
        return Err(CliError::Usage(format!("polygon size {q} outside 3..=12")));
    }
    let mut table = ResultTable::new(["q", "p", "mu"]);
    for &q in qs {
        let input = format!("regular {q}-gon at polar {polar}");
        let chain = regular_sphere_chain(surface, q, polar).during("regular_polygons", &input)?;
        let polygon = build_geodesic_polygon(&chain, surface).during("regular_polygons", &input)?;
        for (p, mu) in ranks.iter().zip(polygon_mus(&polygon, ranks, "regular_polygons", &input)?) {
            table.push(vec![q.into(), (*p).into(), mu.into()]).expect("row width");
        }
    }
    Ok(table.with_meta("polar", polar.to_string()))
}

/// The triangle `(0, pi), (1.55, theta2), (3.1, pi)` in `(phi, theta)` torus coordinates.
pub fn torus_triangle(surface: &SurfaceHandle, theta2: f64) -> CliResult<PolyChain> {
    let input = format!("theta2 = {theta2}");
    let points = [(0.0, PI), (1.55, theta2), (3.1, PI)]
        .iter()
        .map(|&(u, v)| surface.chart_point(u, v))
        .collect::<surfmink_core::Result<Vec<_>>>()
        .during("torus_triangle", &input)?;
    PolyChain::new(points.iter().map(|x| x.position).collect(), points.iter().map(|x| x.normal).collect(), Provenance::OnSurface)
        .during("torus_triangle", &input)
}

/// Geodesic triangles on the torus with the apex moved from `from` to `to`.
///
/// Sides are followed by continuation from the triangle at `SWEEP_START`,
/// so each side keeps its homotopy class while the apex travels around the tube.
pub fn cmd_torus_sweep(from: f64, to: f64, steps: usize, ranks: &[u32]) -> CliResult<ResultTable> {
    check_ranks(ranks)?;
    let tol = 1e-12;
    for t in [from, to] {
        if !(SWEEP_END - tol..=SWEEP_START + tol).contains(&t) {
            return Err(CliError::Usage(format!("theta2 = {t} outside [-0.8 pi, 0.9 pi]")));
        }
    }
    if steps == 0 {
        return Err(CliError::Usage("torus sweep needs at least one step".into()));
    }
    let surface = SurfaceHandle::torus(TORUS_MAJOR, TORUS_MINOR).during("torus_sweep", "torus")?;
    let samples: Vec<f64> = (0..=steps).map(|k| from + (to - from) * k as f64 / steps as f64).collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|a, b| samples[*b].total_cmp(&samples[*a]));

    let mut theta = SWEEP_START;
    let start = torus_triangle(&surface, theta)?;
    let sides = geodesic_sides(&start, &surface).during("torus_sweep", "theta2 = 0.9 pi")?;
    let (mut current, mut sides) = continue_geodesic_polygon(&start, &surface, &sides).during("torus_sweep", "theta2 = 0.9 pi")?;
    let mut results: Vec<Option<PolygonData>> = vec![None; samples.len()];
    for &i in &order {
        while theta > samples[i] {
            theta = (theta - CONTINUATION_STEP).max(samples[i]);
            let chain = torus_triangle(&surface, theta)?;
            (current, sides) =
                continue_geodesic_polygon(&chain, &surface, &sides).during("torus_sweep", format!("theta2 = {theta}"))?;
        }
        results[i] = Some(current.clone());
    }

    let mut columns = vec!["theta2".to_string(), "theta2_over_pi".to_string()];
    columns.extend(mu_columns(ranks));
    columns.extend(["angle_spread", "edge_spread", "angle_sum"].map(String::from));
    let mut table = ResultTable::new(columns);
    for (theta2, polygon) in samples.iter().zip(results) {
        let polygon = polygon.expect("every sample visited");
        let input = format!("theta2 = {theta2}");
        let mut row: Vec<Cell> = vec![(*theta2).into(), (theta2 / PI).into()];
        row.extend(polygon_mus(&polygon, ranks, "torus_sweep", &input)?.into_iter().map(Cell::from));
        let a = &polygon.turning_angles;
        let l = &polygon.lengths;
        let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
        row.push((spread(a) / polygon.total_turning()).into());
        row.push(spread(l).into());
        row.push(polygon.total_turning().into());
        table.push(row).expect("row width");
    }
    Ok(table.with_meta("torus", format!("R={TORUS_MAJOR} r={TORUS_MINOR}")))
}

/// Error table of a polygonal approximation study, one row per `q`.
pub fn cmd_convergence(
    scheme: Scheme,
    surface: &SurfaceHandle,
    flower: FlowerParams,
    levels: &[usize],
    p: u32,
    workers: usize,
) -> CliResult<ResultTable> {
    check_ranks(&[p])?;
    if levels.is_empty() {
        return Err(CliError::Usage("convergence study needs at least one level".into()));
    }
    let input = flower.describe();
    let curve = ChartCurve::new(surface.clone(), flower.path()).during("convergence", &input)?;
    let reference = Reference::new(&curve).during("convergence", &input)?;
    let records = par_map(workers, levels, |&q| level_errors(&reference, surface, scheme, q, p))
        .into_iter()
        .collect::<surfmink_core::Result<Vec<_>>>()
        .during("convergence", &input)?;
    let report = assemble_report(&reference, scheme, p, records).during("convergence", &input)?;

    let geodesic = scheme == Scheme::Geodesic;
    let mut columns = vec!["q", "err_L", "eoc_L", "err_kappa", "eoc_kappa"];
    if geodesic {
        columns.extend(["err_f", "eoc_f"]);
    }
    columns.extend(["err_g", "eoc_g"]);
    let mut table = ResultTable::new(columns);
    for r in &report.levels {
        let mut row: Vec<Cell> =
            vec![r.q.into(), r.err_length.into(), r.eoc_length.into(), r.err_curvature.into(), r.eoc_curvature.into()];
        if geodesic {
            row.extend([r.err_f.into(), r.eoc_f.into()]);
        }
        row.extend([r.err_g.into(), r.eoc_g.into()]);
        table.push(row).expect("row width");
    }
    Ok(table
        .with_meta("scheme", if geodesic { "geodesic" } else { "line" })
        .with_meta("rank", p.to_string())
        .with_meta("curve", input)
        .with_meta("reference_length", format!("{:?}", report.reference_length))
        .with_meta("reference_curvature", format!("{:?}", report.reference_curvature))
        .with_meta("reference_error", format!("{:?}", report.reference_error)))
}

pub struct LevelsetStudy {
    pub table: ResultTable,
    /// `(h, |mu_h - mu|)` per rank, for plotting.
    pub series: Vec<Series>,
    /// Least-squares log-log slope per rank.
    pub slopes: Vec<(u32, f64)>,
}

/// Least-squares slope of `ln y` against `ln x`, skipping non-positive values.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Flower zero-levelsets on refined unit-sphere meshes against the smooth curve.
pub fn cmd_levelset_study(levels: &[usize], flower: FlowerParams, ranks: &[u32], workers: usize) -> CliResult<LevelsetStudy> {
    check_ranks(ranks)?;
    if levels.len() < 3 {
        return Err(CliError::Usage(format!("levelset study needs at least 3 levels, got {}", levels.len())));
    }
    if let Some(l) = levels.iter().find(|l| **l > 9) {
        return Err(CliError::Usage(format!("mesh level {l} is too fine (at most 9)")));
    }
    let input = flower.describe();
    let sphere = SurfaceHandle::sphere(1.0).during("levelset_study", "unit sphere")?;
    let curve = ChartCurve::new(sphere, flower.path()).during("levelset_study", &input)?;
    let table_ref = ArcLengthTable::new(&curve, ArcLengthTable::DEFAULT_SAMPLES).during("levelset_study", &input)?;
    let smooth = SmoothCurveData::from_curve(&table_ref, SmoothCurveData::REFERENCE_SAMPLES, 0.0).during("levelset_study", &input)?;
    let reference: Vec<f64> = ranks
        .iter()
        .map(|&p| smooth_components(&smooth, p).map(|mt| eigen_spectrum(&mt).mu))
        .collect::<surfmink_core::Result<_>>()
        .during("levelset_study", &input)?;

    let per_level = par_map(workers, levels, |&level| -> CliResult<(f64, usize, Vec<f64>)> {
        let at = format!("{input} on mesh level {level}");
        let mesh = make_sphere_mesh(level);
        let field = flower_levelset(&mesh, flower.r0, flower.amplitude, flower.frequency, Some(flower.center))
            .during("levelset_study", &at)?;
        let chain = extract_zero_levelset(&mesh, &field).during("levelset_study", &at)?;
        let polygon = build_line_polygon(&chain).during("levelset_study", &at)?;
        Ok((mesh.h(), chain.len(), polygon_mus(&polygon, ranks, "levelset_study", &at)?))
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;

    let mut columns = vec!["level".to_string(), "h".to_string(), "points".to_string()];
    for p in ranks {
        columns.push(format!("mu_{p}"));
        columns.push(format!("err_{p}"));
    }
    let mut table = ResultTable::new(columns);
    let mut series: Vec<Series> = ranks.iter().map(|p| Series { label: format!("p = {p}"), points: Vec::new() }).collect();
    for (level, (h, points, mus)) in levels.iter().zip(&per_level) {
        let mut row: Vec<Cell> = vec![(*level).into(), (*h).into(), (*points).into()];
        for (k, mu) in mus.iter().enumerate() {
            let err = (mu - reference[k]).abs();
            row.extend([(*mu).into(), err.into()]);
            series[k].points.push((*h, err));
        }
        table.push(row).expect("row width");
    }
    let mut slopes = Vec::new();
    let mut table = table.with_meta("curve", input);
    for (k, p) in ranks.iter().enumerate() {
        let slope = loglog_slope(&series[k].points).unwrap_or(f64::NAN);
        slopes.push((*p, slope));
        table = table.with_meta(&format!("reference_mu_{p}"), format!("{:?}", reference[k]));
        table = table.with_meta(&format!("slope_{p}"), format!("{slope:?}"));
    }
    Ok(LevelsetStudy { table, series, slopes })
}

/// Which flower parameter a sweep varies; the others stay at
/// `r0 = 0.4, a = 0.1, omega = 5, y0 = pi/4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Amplitude,
    Radius,
    Frequency,
    Position,
}

impl FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "amplitude" | "a" => Ok(SweepParam::Amplitude),
            "radius" | "r0" => Ok(SweepParam::Radius),
            "frequency" | "omega" => Ok(SweepParam::Frequency),
            "position" | "y0" => Ok(SweepParam::Position),
            other => Err(CliError::Usage(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Amplitude => "amplitude",
            SweepParam::Radius => "radius",
            SweepParam::Frequency => "frequency",
            SweepParam::Position => "position",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::Amplitude => vec![0.0, 0.05, 0.1, 0.15, 0.2],
            SweepParam::Radius => vec![0.3, 0.4, 0.5, 0.6],
            SweepParam::Frequency => vec![3.0, 4.0, 5.0, 6.0, 7.0],
            SweepParam::Position => vec![3.0 * PI / 8.0, PI / 4.0, PI / 8.0],
        }
    }

    pub fn flower(self, value: f64) -> FlowerParams {
        let mut f = FlowerParams::new(0.4, 0.1, 5.0);
        match self {
            SweepParam::Amplitude => f.amplitude = value,
            SweepParam::Radius => f.r0 = value,
            SweepParam::Frequency => f.frequency = value,
            SweepParam::Position => f.center[1] = value,
        }
        f
    }
}

pub const SWEEP_ELLIPSOID: [f64; 3] = [1.6, 1.3, 1.0];

/// Smooth `mu_p` of a flower curve on a surface.
pub fn flower_mus(surface: &SurfaceHandle, flower: FlowerParams, ranks: &[u32]) -> CliResult<Vec<f64>> {
    let input = flower.describe();
    let curve = ChartCurve::new(surface.clone(), flower.path()).during("flower", &input)?;
    let table = ArcLengthTable::new(&curve, ArcLengthTable::DEFAULT_SAMPLES).during("flower", &input)?;
    let smooth = SmoothCurveData::from_curve(&table, SmoothCurveData::REFERENCE_SAMPLES, 0.0).during("flower", &input)?;
    ranks.iter().map(|&p| smooth_components(&smooth, p).map(|mt| eigen_spectrum(&mt).mu).during("flower", &input)).collect()
}

/// `mu_p` of flower curves on `E(1.6, 1.3, 1.0)` while one parameter varies.
pub fn cmd_flower_sweep(which: SweepParam, values: &[f64], ranks: &[u32], workers: usize) -> CliResult<ResultTable> {
    check_ranks(ranks)?;
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("sweep value {v} is not finite")));
    }
    if which == SweepParam::Frequency {
        if let Some(v) = values.iter().find(|v| v.fract() != 0.0) {
            return Err(CliError::Usage(format!("frequency {v} does not close the curve")));
        }
    }
    let [a1, a2, a3] = SWEEP_ELLIPSOID;
    let surface = SurfaceHandle::ellipsoid(a1, a2, a3).during("flower_sweep", "ellipsoid")?;
    let rows = par_map(workers, values, |&v| flower_mus(&surface, which.flower(v), ranks))
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    let mut columns = vec!["value".to_string()];
    columns.extend(mu_columns(ranks));
    let mut table = ResultTable::new(columns);
    for (v, mus) in values.iter().zip(rows) {
        let mut row: Vec<Cell> = vec![(*v).into()];
        row.extend(mus.into_iter().map(Cell::from));
        table.push(row).expect("row width");
    }
    Ok(table.with_meta("sweep", which.name()).with_meta("surface", format!("ellipsoid {a1},{a2},{a3}")))
}

/// `mu_p` and the first `-lambda` eigen-angle of measured contours.
pub fn cmd_contour(paths: &[PathBuf], passes: usize, ranks: &[u32]) -> CliResult<ResultTable> {
    check_ranks(ranks)?;
    if paths.is_empty() {
        return Err(CliError::Usage("no contour files given".into()));
    }
    let mut table = ResultTable::new(["contour", "points", "p", "mu", "theta_minus", "direction_defined"]);
    for path in paths {
        let input = path.display().to_string();
        let (points, normals) = load_contour(path).during("contour", &input)?;
        let chain = ingest_contour(&points, &normals, passes).during("contour", &input)?;
        let polygon = build_line_polygon(&chain).during("contour", &input)?;
        for &p in ranks {
            let spectrum = eigen_spectrum(&polygon_components(&polygon, p).during("contour", &input)?);
            let theta: Cell = if spectrum.direction_defined { spectrum.theta_minus[0].into() } else { Cell::Empty };
            table
                .push(vec![
                    input.as_str().into(),
                    chain.len().into(),
                    p.into(),
                    spectrum.mu.into(),
                    theta,
                    Cell::Int(spectrum.direction_defined as i64),
                ])
                .expect("row width");
        }
    }
    Ok(table.with_meta("smoothing_passes", passes.to_string()))
}

/// The geodesic triangle with one vertex on each positive axis of a sphere.
pub fn octant_chain(radius: f64) -> CliResult<PolyChain> {
    let points = vec![Vec3::x() * radius, Vec3::y() * radius, Vec3::z() * radius];
    let normals = vec![Vec3::x(), Vec3::y(), Vec3::z()];
    PolyChain::new(points, normals, Provenance::OnSurface).during("octant_chain", format!("radius {radius}"))
}

/// Parallel against defect-corrected transport around a geodesic polygon.
///
/// `closure_angle` is the angle between the transported and the initial
/// co-normal after one loop, in `(-pi, pi]`.
pub fn cmd_transport_demo(surface: &SurfaceHandle, chain: &PolyChain, ranks: &[u32]) -> CliResult<ResultTable> {
    check_ranks(ranks)?;
    let input = format!("{}-gon", chain.len());
    let polygon = build_geodesic_polygon(chain, surface).during("transport_demo", &input)?;
    let mut columns = vec!["transport".to_string(), "closure_angle".to_string()];
    columns.extend(mu_columns(ranks));
    let mut table = ResultTable::new(columns);
    for (name, mode) in [("defect_corrected", TransportMode::DefectCorrected), ("parallel", TransportMode::Parallel)] {
        let (_, closure) = transport_angles(&polygon, mode).during("transport_demo", &input)?;
        let defect = (closure - TAU + PI).rem_euclid(TAU) - PI;
        let mut row: Vec<Cell> = vec![name.into(), defect.into()];
        for &p in ranks {
            let mt = polygon_components_with(&polygon, p, mode).during("transport_demo", &input)?;
            row.push(eigen_spectrum(&mt).mu.into());
        }
        table.push(row).expect("row width");
    }
    Ok(table)
}
