//! Irreducible surface Minkowski tensors of closed curves on curved surfaces.
//!
//! The crate computes rank-`p` shape measures `mu_p` of curves on analytic
//! surfaces (plane, sphere, ellipsoid, torus) and on triangle meshes, from
//! smooth parametrizations, geodesic polygons, or chains of approximate
//! points.

pub mod approx;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod io;
pub mod levelset;
pub mod surfaces;
pub mod tensor;

pub use approx::{
    build_geodesic_polygon, continue_geodesic_polygon, geodesic_sides, build_line_polygon, convergence_study, ingest_contour, sample_curve, ConsistencyReport,
    PolyChain, Provenance, Scheme,
};
pub use curve::{ArcLengthTable, ChartCurve, FlowerPath, ParamCurve};
pub use error::{Error, Result};
pub use geometry::{Frame, SurfacePoint, TangentVector, Vec3};
pub use levelset::{clipped_area, extract_zero_levelset, flower_levelset, make_sphere_mesh, LevelsetField, TriMesh};
pub use surfaces::SurfaceHandle;
pub use tensor::{
    eigen_spectrum, perturb_polygon, polygon_components, polygon_components_with, polygon_f_angles, smooth_components,
    smooth_f, IrreducibleMT, MinkowskiFunctionals, PolygonData, ShapeSpectrum, SmoothCurveData, TransportMode,
};
