//! Experiment drivers behind the `surfmink` command line.
//!
//! Every `cmd_*` function computes one experiment and returns its result
//! table; writing files is left to the caller.

use std::f64::consts::PI;
use std::fmt::Display;

use surfmink_core::SurfaceHandle;

pub mod commands;
pub mod properties;

pub use commands::*;
pub use properties::{cmd_properties, run_property_suites, SuiteOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{op} failed on {input}: {source}")]
    Failed {
        op: &'static str,
        input: String,
        #[source]
        source: surfmink_core::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) trait During<T> {
    fn during(self, op: &'static str, input: impl Display) -> CliResult<T>;
}

impl<T> During<T> for surfmink_core::Result<T> {
    fn during(self, op: &'static str, input: impl Display) -> CliResult<T> {
        self.map_err(|source| CliError::Failed { op, input: input.to_string(), source })
    }
}

/// Parses `plane`, `sphere:R`, `ellipsoid:A,B,C` or `torus:R,r`.
pub fn parse_surface(spec: &str) -> CliResult<SurfaceHandle> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = parse_floats(args).map_err(|e| CliError::Usage(format!("surface `{spec}`: {e}")))?;
    let built = match (kind.trim(), nums.as_slice()) {
        ("plane", []) => Ok(SurfaceHandle::Plane),
        ("sphere", []) => SurfaceHandle::sphere(1.0),
        ("sphere", [r]) => SurfaceHandle::sphere(*r),
        ("ellipsoid", [a, b, c]) => SurfaceHandle::ellipsoid(*a, *b, *c),
        ("torus", [big, small]) => SurfaceHandle::torus(*big, *small),
        _ => return Err(CliError::Usage(format!("unknown surface `{spec}`"))),
    };
    built.during("parse_surface", spec)
}

/// Flower curve parameters `(r0, a, omega)` and chart center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowerParams {
    pub r0: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub center: [f64; 2],
}

impl FlowerParams {
    pub fn new(r0: f64, amplitude: f64, frequency: f64) -> Self {
        FlowerParams { r0, amplitude, frequency, center: [PI / 2.0, PI / 4.0] }
    }

    /// Parses `flower:R0,A,OMEGA` or `flower:R0,A,OMEGA,Y0` (or without the prefix).
    pub fn parse(spec: &str) -> CliResult<Self> {
        let args = spec.strip_prefix("flower:").unwrap_or(spec);
        let nums = parse_floats(args).map_err(|e| CliError::Usage(format!("curve `{spec}`: {e}")))?;
        match nums.as_slice() {
            [r0, a, w] => Ok(FlowerParams::new(*r0, *a, *w)),
            [r0, a, w, y0] => Ok(FlowerParams { center: [PI / 2.0, *y0], ..FlowerParams::new(*r0, *a, *w) }),
            _ => Err(CliError::Usage(format!("curve `{spec}` needs r0,a,omega[,y0]"))),
        }
    }

    pub fn path(&self) -> surfmink_core::FlowerPath {
        surfmink_core::FlowerPath::new(self.r0, self.amplitude, self.frequency).with_center(self.center)
    }

    pub fn describe(&self) -> String {
        format!("flower({}, {}, {}) at ({}, {})", self.r0, self.amplitude, self.frequency, self.center[0], self.center[1])
    }
}

pub fn parse_floats(list: &str) -> Result<Vec<f64>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

/// Runs `f` over `items` on a pool of `workers` threads; results keep input order.
pub fn par_map<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    pool.install(|| items.par_iter().map(f).collect())
}
