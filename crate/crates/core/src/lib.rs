//! Discovery of convex obstacles behind a membership oracle, small enclosing
//! ellipsoids and cross-polytopes for each, a triangulated free space that
//! excludes them, and RRT/RRT* planners that sample from it.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below cover the common case.

pub mod error;
pub mod extremal;
pub mod freespace;
pub mod geometry;
pub mod gjk;
pub mod linalg;
pub mod mvee;
pub mod oracle;
pub mod planners;
pub mod point;
pub mod ray_search;
pub mod scalar;

pub use error::{Error, Result};
pub use extremal::{build_orthonormal_basis, directional_width, farthest, FarthestResult, OrthonormalBasis};
pub use oracle::{
    make_analytic_oracle, make_bitmap_oracle, BoundingBox, MembershipOracle, OracleStats, ShapeSpec, WorkspaceMeta,
};
pub use point::{Direction, Point};
pub use ray_search::{extreme_along_ray, RaySearchResult};
pub use scalar::Real;

pub type Point64 = Point<f64>;
pub type Direction64 = Direction<f64>;
pub type Point32 = Point<f32>;
pub type Meta64 = WorkspaceMeta<f64>;
pub use freespace::{
    sample, sample_with_region, triangulate_bounds, Region, RemovalReport, SamplerState, TriangulatedFreeSpace,
};
pub use gjk::{gjk_distance, gjk_intersects, GjkResult};
pub use mvee::{
    approx_mve_coreset, cross_polytope_bound, mahalanobis_farthest, mve_coreset, mvee_of_points, CoresetConfig,
    CoresetPointSet, CrossPolytope, Ellipsoid, MveCoreset, StepTrace,
};
pub use planners::{
    discover, plan, preprocess, rrt, rrt_star, FreeSpaceSampler, OnTheFlySampler, PlanResult, PlannerConfig,
    PlannerKind, PreprocessConfig, PreprocessResult, Sampler, UniformSampler,
};
