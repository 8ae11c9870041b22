use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use surfmink::{
    cmd_contour, cmd_convergence, cmd_flower_sweep, cmd_levelset_study, cmd_properties, cmd_regular_polygons, cmd_torus_sweep,
    cmd_transport_demo, octant_chain, parse_floats, parse_surface, CliError, FlowerParams, SweepParam, SWEEP_END, SWEEP_START,
};
use surfmink_core::approx::regular_sphere_chain;
use surfmink_core::io::{emit_svg_plot, emit_table, ExperimentConfig, ResultTable};
use surfmink_core::Scheme;

/// Surface Minkowski tensor experiments. Results are written as CSV (and SVG)
/// into the output directory and the CSV is echoed to stdout.
#[derive(Parser, Debug)]
#[command(name = "surfmink", version)]
struct Cli {
    /// Flat `key = value` experiment config; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overridden by SURFMINK_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Ranks, e.g. `2,4,6` or `2..6`.
    #[arg(long, global = true)]
    p: Option<String>,
    /// Refinement levels (segment counts or mesh levels), e.g. `4,16,64`.
    #[arg(long, global = true)]
    levels: Option<String>,
    #[arg(long, global = true, value_parser = ["geodesic", "line"])]
    scheme: Option<String>,
    /// Contour smoothing passes.
    #[arg(long, global = true)]
    passes: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// mu_p of regular geodesic polygons (config: surface, q, polar).
    RegularPolygons,
    /// Geodesic triangles on the torus (config: theta_range in units of pi, steps).
    TorusSweep,
    /// Polygon approximation errors of a flower curve (config: surface, curve).
    Convergence,
    /// Flower zero-levelsets on refined sphere meshes (config: curve).
    Levelset,
    /// Flower parameter sweep on E(1.6, 1.3, 1.0) (config: values).
    FlowerSweep {
        /// amplitude, radius, frequency or position
        #[arg(default_value = "frequency")]
        which: String,
    },
    /// mu_p and eigen-angles of contour CSV files (x,y,z,nx,ny,nz).
    Contour { paths: Vec<PathBuf> },
    /// Parallel against defect-corrected transport (config: surface, polygon).
    TransportDemo,
    /// Randomized invariance suites (config: instances).
    Properties,
}

fn parse_ranks(spec: &str) -> anyhow::Result<Vec<u32>> {
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u32, u32) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse::<u32>().with_context(|| format!("bad rank `{s}`"))).collect()
}

fn parse_usizes(spec: &str) -> anyhow::Result<Vec<usize>> {
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse::<usize>().with_context(|| format!("bad level `{s}`"))).collect()
}

/// Settings after merging defaults, config file and flags.
struct Settings {
    cfg: ExperimentConfig,
    workers: usize,
    passes: usize,
    out: PathBuf,
}

impl Settings {
    fn extra(&self, key: &str) -> Option<&str> {
        self.cfg.extra.get(key).map(String::as_str)
    }

    fn ranks_or(&self, default: &[u32]) -> Vec<u32> {
        if self.cfg.ranks.is_empty() { default.to_vec() } else { self.cfg.ranks.clone() }
    }

    fn levels_or(&self, default: &[usize]) -> Vec<usize> {
        if self.cfg.levels.is_empty() { default.to_vec() } else { self.cfg.levels.clone() }
    }

    fn surface_or(&self, default: &str) -> String {
        if self.cfg.surface.is_empty() { default.to_string() } else { self.cfg.surface.clone() }
    }

    fn curve_or(&self, default: &str) -> String {
        if self.cfg.curve.is_empty() { default.to_string() } else { self.cfg.curve.clone() }
    }

    /// Stamps the effective settings into the table and writes it.
    fn emit(&self, command: &str, table: ResultTable, file: &str) -> anyhow::Result<PathBuf> {
        let mut cfg = self.cfg.clone();
        if cfg.id.is_empty() {
            cfg.id = command.to_string();
        }
        let table = table.with_meta("command", command).with_meta("config_hash", cfg.hash());
        let path = self.out.join(file);
        emit_table(&table, &path).with_context(|| format!("writing {}", path.display()))?;
        print!("{}", table.to_csv()?);
        eprintln!("wrote {}", path.display());
        Ok(path)
    }
}

fn settings(cli: &Cli) -> anyhow::Result<Settings> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &cli.p {
        cfg.ranks = parse_ranks(p)?;
    }
    if let Some(l) = &cli.levels {
        cfg.levels = parse_usizes(l)?;
    }
    if let Some(s) = &cli.scheme {
        cfg.scheme = Some(s.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let passes = cli.passes.or_else(|| cfg.extra.get("passes").and_then(|v| v.parse().ok())).unwrap_or(1);
    if cli.passes.is_some() {
        cfg.extra.insert("passes".into(), passes.to_string());
    }
    cfg.validate()?;
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out = std::env::var_os("SURFMINK_OUT")
        .map(PathBuf::from)
        .or_else(|| cli.out.clone())
        .or_else(|| cfg.outputs.first().cloned())
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok(Settings { cfg, workers, passes, out })
}

fn floats(settings: &Settings, key: &str) -> anyhow::Result<Option<Vec<f64>>> {
    settings.extra(key).map(|v| parse_floats(v).map_err(|e| anyhow::anyhow!("config key `{key}`: {e}"))).transpose()
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let mut s = settings(cli)?;
    match &cli.command {
        Command::RegularPolygons => {
            let surface = parse_surface(&s.surface_or("sphere:1"))?;
            let qs = match s.extra("q") {
                Some(v) => parse_usizes(v)?,
                None => vec![3, 4, 5, 6],
            };
            let polar = floats(&s, "polar")?.and_then(|v| v.first().copied()).unwrap_or(PI / 4.0);
            let table = cmd_regular_polygons(&qs, &s.ranks_or(&[1, 2, 3, 4, 5, 6]), &surface, polar)?;
            s.emit("regular-polygons", table, "regular_polygons.csv")?;
        }
        Command::TorusSweep => {
            let range = floats(&s, "theta_range")?.unwrap_or_else(|| vec![SWEEP_START / PI, SWEEP_END / PI]);
            let [from, to] = range[..] else { anyhow::bail!("theta_range needs two values") };
            let steps = s.extra("steps").map(str::parse).transpose()?.unwrap_or(34);
            let table = cmd_torus_sweep(from * PI, to * PI, steps, &s.ranks_or(&[2, 3, 4, 5, 6]))?;
            s.emit("torus-sweep", table, "torus_sweep.csv")?;
        }
        Command::Convergence => {
            let scheme: Scheme = s.cfg.scheme.as_deref().unwrap_or("geodesic").parse()?;
            let surface = parse_surface(&s.surface_or("ellipsoid:1.6,1.3,1.0"))?;
            let flower = FlowerParams::parse(&s.curve_or("flower:0.7,0.2,3"))?;
            let levels = s.levels_or(&[4, 16, 64, 256, 1024]);
            for p in s.ranks_or(&[3]) {
                let table = cmd_convergence(scheme, &surface, flower, &levels, p, s.workers)?;
                let name = if scheme == Scheme::Geodesic { "geodesic" } else { "line" };
                s.emit("convergence", table, &format!("convergence_{name}_p{p}.csv"))?;
            }
        }
        Command::Levelset => {
            let flower = FlowerParams::parse(&s.curve_or("flower:0.5,0.1,4"))?;
            let study = cmd_levelset_study(&s.levels_or(&[1, 2, 3, 4, 5, 6, 7, 8]), flower, &s.ranks_or(&[2, 4, 6]), s.workers)?;
            for (p, slope) in &study.slopes {
                eprintln!("p = {p}: log-log slope {slope:.3}");
            }
            let svg = s.out.join("levelset.svg");
            emit_svg_plot(&study.series, &svg, "|mu_h,p - mu_p| against h", &[1.0])?;
            eprintln!("wrote {}", svg.display());
            s.emit("levelset", study.table, "levelset.csv")?;
        }
        Command::FlowerSweep { which } => {
            let which: SweepParam = which.parse()?;
            let values = floats(&s, "values")?.unwrap_or_else(|| which.default_values());
            let table = cmd_flower_sweep(which, &values, &s.ranks_or(&(2..=10).collect::<Vec<_>>()), s.workers)?;
            s.emit("flower-sweep", table, &format!("flower_{}.csv", which.name()))?;
        }
        Command::Contour { paths } => {
            let mut paths = paths.clone();
            if paths.is_empty() {
                paths = s.cfg.inputs.clone();
            }
            s.cfg.inputs = paths.clone();
            let table = cmd_contour(&paths, s.passes, &s.ranks_or(&[2, 3, 4, 5, 6]))?;
            s.emit("contour", table, "contour.csv")?;
        }
        Command::TransportDemo => {
            let surface = parse_surface(&s.surface_or("sphere:1"))?;
            let spec = s.extra("polygon").unwrap_or("octant").to_string();
            let chain = polygon_chain(&surface, &spec)?;
            let table = cmd_transport_demo(&surface, &chain, &s.ranks_or(&[3, 4]))?;
            s.emit("transport-demo", table, "transport_demo.csv")?;
        }
        Command::Properties => {
            let instances = s.extra("instances").map(str::parse).transpose()?.unwrap_or(100);
            let table = cmd_properties(s.cfg.seed, instances, s.workers)?;
            let failed: f64 = (0..table.rows.len()).filter_map(|r| table.get(r, "failures")?.as_f64()).sum();
            s.emit("properties", table, "properties.csv")?;
            if failed > 0.0 {
                anyhow::bail!("{failed} property instances failed");
            }
        }
    }
    Ok(())
}

/// `octant` or `regular:Q:POLAR`.
fn polygon_chain(surface: &surfmink_core::SurfaceHandle, spec: &str) -> anyhow::Result<surfmink_core::PolyChain> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[..] {
        ["octant"] => match surface {
            surfmink_core::SurfaceHandle::Sphere { radius } => Ok(octant_chain(*radius)?),
            _ => anyhow::bail!("the octant triangle needs a sphere"),
        },
        ["regular", q, polar] => Ok(regular_sphere_chain(surface, q.parse()?, polar.parse()?)?),
        _ => anyhow::bail!("unknown polygon `{spec}`"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(e.downcast_ref::<CliError>(), Some(CliError::Usage(_))) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
