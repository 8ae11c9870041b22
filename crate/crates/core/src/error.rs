use std::path::PathBuf;

/// Errors raised by the geometry, tensor and I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("geodesic shooting did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("points are at or beyond the cut locus: {0}")]
    CutLocus(String),

    #[error("operation `{0}` is not available on triangulated surfaces")]
    UnsupportedOnMesh(&'static str),

    #[error("curve velocity vanishes at parameter {0}")]
    DegenerateVelocity(f64),

    #[error("geodesic integrator failed: {0}")]
    StepFailure(String),

    #[error("total turning angle {sum:.3e} is not above the admissibility floor")]
    InadmissibleTotalAngle { sum: f64 },

    #[error("projected difference at vertex {vertex} is degenerate")]
    DegenerateProjection { vertex: usize },

    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("levelset touches the chart singularity near vertex {0}")]
    ChartSingularity(usize),

    #[error("zero levelset has {0} components, expected one")]
    MultipleComponents(usize),

    #[error("zero levelset walk did not close")]
    OpenChain,

    #[error("W0 is not available for this shape/surface combination")]
    W0Unavailable,

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("mesh is not a closed 2-manifold: edge ({0}, {1}) is shared by {2} triangles")]
    NonManifold(usize, usize, usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
