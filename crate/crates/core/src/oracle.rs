//! Membership oracles: the single-bit view of the obstacle set.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Halfspace};
use crate::linalg::Matrix;
use crate::point::{Direction, Point};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStats {
    pub total_queries: u64,
    pub queries_true: u64,
}

impl OracleStats {
    pub fn since(&self, earlier: &OracleStats) -> OracleStats {
        OracleStats {
            total_queries: self.total_queries - earlier.total_queries,
            queries_true: self.queries_true - earlier.queries_true,
        }
    }
}

/// Thread-safe query tally.
#[derive(Debug, Default)]
pub struct QueryCounter {
    total: AtomicU64,
    truthy: AtomicU64,
}

impl QueryCounter {
    pub fn record(&self, answer: bool) -> bool {
        self.total.fetch_add(1, Ordering::Relaxed);
        if answer {
            self.truthy.fetch_add(1, Ordering::Relaxed);
        }
        answer
    }

    pub fn stats(&self) -> OracleStats {
        OracleStats {
            total_queries: self.total.load(Ordering::Relaxed),
            queries_true: self.truthy.load(Ordering::Relaxed),
        }
    }
}

impl Clone for QueryCounter {
    fn clone(&self) -> Self {
        let s = self.stats();
        QueryCounter { total: AtomicU64::new(s.total_queries), truthy: AtomicU64::new(s.queries_true) }
    }
}

/// Black-box predicate "is p inside some obstacle".
pub trait MembershipOracle<T: Real>: Send + Sync {
    fn query(&self, p: &Point<T>) -> bool;
    fn stats(&self) -> OracleStats;
    fn dim(&self) -> usize;
}

impl<T: Real, O: MembershipOracle<T> + ?Sized> MembershipOracle<T> for &O {
    fn query(&self, p: &Point<T>) -> bool {
        (**self).query(p)
    }
    fn stats(&self) -> OracleStats {
        (**self).stats()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
}

/// Wraps an oracle and counts only the queries made through the wrapper.
pub struct CountingOracle<'a, T: Real> {
    inner: &'a dyn MembershipOracle<T>,
    counter: QueryCounter,
}

impl<'a, T: Real> CountingOracle<'a, T> {
    pub fn new(inner: &'a dyn MembershipOracle<T>) -> Self {
        CountingOracle { inner, counter: QueryCounter::default() }
    }

    pub fn used(&self) -> u64 {
        self.counter.stats().total_queries
    }
}

impl<T: Real> MembershipOracle<T> for CountingOracle<'_, T> {
    fn query(&self, p: &Point<T>) -> bool {
        self.counter.record(self.inner.query(p))
    }
    fn stats(&self) -> OracleStats {
        self.counter.stats()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

/// Oracle backed by an arbitrary predicate. Handy for fixtures.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
    counter: QueryCounter,
}

impl<F> FnOracle<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnOracle { dim, f, counter: QueryCounter::default() }
    }
}

impl<T: Real, F: Fn(&Point<T>) -> bool + Send + Sync> MembershipOracle<T> for FnOracle<F> {
    fn query(&self, p: &Point<T>) -> bool {
        self.counter.record((self.f)(p))
    }
    fn stats(&self) -> OracleStats {
        self.counter.stats()
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BoundingBox<T: Real> {
    pub lo: Point<T>,
    pub hi: Point<T>,
}

impl<T: Real> BoundingBox<T> {
    pub fn new(lo: Point<T>, hi: Point<T>) -> Result<Self> {
        if lo.dim() != hi.dim() || lo.dim() == 0 {
            return Err(Error::InvalidInput("box corners have mismatched dimension".into()));
        }
        if (0..lo.dim()).any(|i| !(lo[i] < hi[i])) {
            return Err(Error::InvalidInput("box is empty".into()));
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        (0..self.dim()).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }

    pub fn volume(&self) -> T {
        (0..self.dim()).fold(T::one(), |v, i| v * (self.hi[i] - self.lo[i]))
    }

    pub fn center(&self) -> Point<T> {
        self.lo.lerp(&self.hi, T::c(0.5))
    }

    pub fn diagonal(&self) -> T {
        self.lo.dist(&self.hi)
    }

    pub fn corners(&self) -> Vec<Point<T>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|m| Point::from_vec((0..d).map(|i| if m >> i & 1 == 1 { self.hi[i] } else { self.lo[i] }).collect()))
            .collect()
    }

    pub fn halfspaces(&self) -> Vec<Halfspace<T>> {
        let d = self.dim();
        let mut hs = Vec::with_capacity(2 * d);
        for i in 0..d {
            hs.push(Halfspace { normal: Point::unit(d, i), offset: self.hi[i] });
            hs.push(Halfspace { normal: -&Point::unit(d, i), offset: -self.lo[i] });
        }
        hs
    }
}

/// Workspace-level constants shared by every algorithm in one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct WorkspaceMeta<T: Real> {
    pub dim: usize,
    pub bounds: BoundingBox<T>,
    pub eps: T,
    pub inradius_lb: T,
    pub circumradius_ub: T,
}

impl<T: Real> WorkspaceMeta<T> {
    pub fn new(bounds: BoundingBox<T>, eps: T, inradius_lb: T, circumradius_ub: T) -> Result<Self> {
        let meta = WorkspaceMeta { dim: bounds.dim(), bounds, eps, inradius_lb, circumradius_ub };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.dim() != self.dim || self.dim == 0 {
            return Err(Error::InvalidInput("dim does not match bounds".into()));
        }
        BoundingBox::new(self.bounds.lo.clone(), self.bounds.hi.clone())?;
        if !(self.eps > T::zero() && self.eps < T::one()) {
            return Err(Error::InvalidInput(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if self.inradius_lb < self.eps {
            return Err(Error::InvalidInput("inradius_lb must be at least eps".into()));
        }
        if self.inradius_lb > self.circumradius_ub {
            return Err(Error::InvalidInput("inradius_lb exceeds circumradius_ub".into()));
        }
        Ok(())
    }

    /// Longest chord an obstacle can have; the ray-search horizon.
    pub fn t_max(&self) -> T {
        T::c(2.0) * self.circumradius_ub
    }
}

/// Serializable description of a convex obstacle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub enum ShapeSpec<T: Real> {
    Ball {
        center: Vec<T>,
        radius: T,
    },
    /// Semi-axes along the rows of `axes` (identity when absent), or rotated
    /// by `angle` radians in the plane.
    Ellipsoid {
        center: Vec<T>,
        semi_axes: Vec<T>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle: Option<T>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axes: Option<Vec<Vec<T>>>,
    },
    Box {
        lo: Vec<T>,
        hi: Vec<T>,
    },
    Polytope {
        vertices: Vec<Vec<T>>,
    },
}

/// A convex shape ready for membership tests.
#[derive(Clone, Debug)]
pub enum ConvexShape<T: Real> {
    Ball {
        center: Point<T>,
        radius: T,
    },
    /// `(x−c)ᵀ A (x−c) ≤ 1`.
    Ellipsoid {
        center: Point<T>,
        a: Matrix<T>,
    },
    Box(BoundingBox<T>),
    Polytope {
        vertices: Vec<Point<T>>,
        facets: Vec<Halfspace<T>>,
        tol: T,
    },
}

impl<T: Real> ConvexShape<T> {
    pub fn from_spec(spec: &ShapeSpec<T>, dim: usize) -> Result<Self> {
        let check = |v: &[T], what: &str| -> Result<Point<T>> {
            if v.len() != dim {
                return Err(Error::InvalidInput(format!("{what} has {} coordinates, expected {dim}", v.len())));
            }
            Ok(Point::new(v))
        };
        match spec {
            ShapeSpec::Ball { center, radius } => {
                if !(*radius > T::zero()) {
                    return Err(Error::DegenerateShape("ball radius must be positive".into()));
                }
                Ok(ConvexShape::Ball { center: check(center, "ball center")?, radius: *radius })
            }
            ShapeSpec::Ellipsoid { center, semi_axes, angle, axes } => {
                let c = check(center, "ellipsoid center")?;
                check(semi_axes, "ellipsoid semi_axes")?;
                if semi_axes.iter().any(|a| !(*a > T::zero())) {
                    return Err(Error::DegenerateShape("ellipsoid semi-axes must be positive".into()));
                }
                let rot = match (angle, axes) {
                    (Some(_), Some(_)) => {
                        return Err(Error::InvalidInput("give either angle or axes, not both".into()))
                    }
                    (Some(th), None) => {
                        if dim != 2 {
                            return Err(Error::InvalidInput("angle is only meaningful in the plane".into()));
                        }
                        Matrix::from_rows(&[vec![th.cos(), th.sin()], vec![-th.sin(), th.cos()]])
                    }
                    (None, Some(rows)) => {
                        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                            return Err(Error::InvalidInput("axes must be a d×d matrix".into()));
                        }
                        let m = Matrix::from_rows(rows);
                        let gram = m.mul(&m.transpose());
                        if gram.sub(&Matrix::identity(dim)).max_abs() > T::c(1e-6) {
                            return Err(Error::InvalidInput("axes must be orthonormal".into()));
                        }
                        m
                    }
                    (None, None) => Matrix::identity(dim),
                };
                let inv_sq: Vec<T> = semi_axes.iter().map(|&a| T::one() / (a * a)).collect();
                let a = rot.transpose().mul(&Matrix::diag(&inv_sq)).mul(&rot).symmetrize();
                Ok(ConvexShape::Ellipsoid { center: c, a })
            }
            ShapeSpec::Box { lo, hi } => {
                let b = BoundingBox::new(check(lo, "box lo")?, check(hi, "box hi")?)
                    .map_err(|_| Error::DegenerateShape("box must have positive extent".into()))?;
                Ok(ConvexShape::Box(b))
            }
            ShapeSpec::Polytope { vertices } => {
                let pts = vertices.iter().map(|v| check(v, "polytope vertex")).collect::<Result<Vec<_>>>()?;
                Self::polytope(pts)
            }
        }
    }

    pub fn polytope(vertices: Vec<Point<T>>) -> Result<Self> {
        let dim = vertices.first().map(|p| p.dim()).unwrap_or(0);
        if vertices.len() < dim + 1 {
            return Err(Error::DegenerateShape(format!(
                "polytope needs at least {} vertices, got {}",
                dim + 1,
                vertices.len()
            )));
        }
        let tol = geometry::default_tol(&vertices);
        if geometry::affine_rank(&vertices, tol) < dim {
            return Err(Error::DegenerateShape("polytope vertices are not affinely independent".into()));
        }
        let facets = geometry::halfspaces(&vertices, tol);
        let verts = geometry::hull_vertices(&vertices, tol);
        Ok(ConvexShape::Polytope { vertices: verts, facets, tol })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexShape::Ball { center, .. } | ConvexShape::Ellipsoid { center, .. } => center.dim(),
            ConvexShape::Box(b) => b.dim(),
            ConvexShape::Polytope { vertices, .. } => vertices[0].dim(),
        }
    }

    /// Closed-set membership.
    pub fn contains(&self, p: &Point<T>) -> bool {
        match self {
            ConvexShape::Ball { center, radius } => {
                let r2 = *radius * *radius;
                let d2 = p.iter().zip(center.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>();
                d2 <= r2
            }
            ConvexShape::Ellipsoid { center, a } => {
                let v = p - center;
                v.dot(&a.mul_vec(&v)) <= T::one()
            }
            ConvexShape::Box(b) => b.contains(p),
            ConvexShape::Polytope { facets, tol, .. } => facets.iter().all(|h| h.signed_distance(p) <= *tol),
        }
    }

    /// A point strictly inside the shape.
    pub fn interior_point(&self) -> Point<T> {
        match self {
            ConvexShape::Ball { center, .. } | ConvexShape::Ellipsoid { center, .. } => center.clone(),
            ConvexShape::Box(b) => b.center(),
            ConvexShape::Polytope { vertices, .. } => Point::centroid(vertices),
        }
    }

    /// `max_{x∈shape} ⟨x, u⟩`.
    pub fn support(&self, u: &Point<T>) -> T {
        match self {
            ConvexShape::Ball { center, radius } => center.dot(u) + *radius * u.norm(),
            ConvexShape::Ellipsoid { center, a } => {
                let ainv = a.inverse_spd().expect("ellipsoid matrix is SPD");
                center.dot(u) + u.dot(&ainv.mul_vec(u)).sqrt()
            }
            ConvexShape::Box(b) => {
                (0..b.dim()).map(|i| if u[i] >= T::zero() { b.hi[i] * u[i] } else { b.lo[i] * u[i] }).sum()
            }
            ConvexShape::Polytope { vertices, .. } => vertices.iter().map(|v| v.dot(u)).fold(T::neg_infinity(), T::max),
        }
    }

    /// Boundary point hit by the ray from `interior_point()` along `u`.
    pub fn radial_boundary(&self, u: &Direction<T>) -> Point<T> {
        let c = self.interior_point();
        let uu = u.as_point();
        let t = match self {
            ConvexShape::Ball { radius, .. } => *radius,
            ConvexShape::Ellipsoid { a, .. } => T::one() / uu.dot(&a.mul_vec(uu)).sqrt(),
            ConvexShape::Box(b) => (0..b.dim())
                .filter(|&i| uu[i] != T::zero())
                .map(|i| {
                    let face = if uu[i] > T::zero() { b.hi[i] } else { b.lo[i] };
                    (face - c[i]) / uu[i]
                })
                .fold(T::infinity(), T::min),
            ConvexShape::Polytope { facets, .. } => facets
                .iter()
                .filter(|h| h.normal.dot(uu) > T::zero())
                .map(|h| -h.signed_distance(&c) / h.normal.dot(uu))
                .fold(T::infinity(), T::min),
        };
        c.offset(uu, t)
    }

    pub fn volume(&self) -> T {
        let d = self.dim();
        match self {
            ConvexShape::Ball { radius, .. } => crate::linalg::unit_ball_volume::<T>(d) * radius.powi(d as i32),
            ConvexShape::Ellipsoid { a, .. } => crate::linalg::unit_ball_volume::<T>(d) / a.determinant().sqrt(),
            ConvexShape::Box(b) => b.volume(),
            ConvexShape::Polytope { vertices, tol, .. } => geometry::convex_volume(vertices, *tol),
        }
    }
}

/// Oracle over a list of analytic convex shapes.
pub struct AnalyticOracle<T: Real> {
    shapes: Vec<ConvexShape<T>>,
    meta: WorkspaceMeta<T>,
    counter: QueryCounter,
}

/// Builds an analytic oracle, rejecting degenerate or mis-dimensioned shapes.
pub fn make_analytic_oracle<T: Real>(shapes: &[ShapeSpec<T>], meta: WorkspaceMeta<T>) -> Result<AnalyticOracle<T>> {
    meta.validate()?;
    let shapes = shapes.iter().map(|s| ConvexShape::from_spec(s, meta.dim)).collect::<Result<Vec<_>>>()?;
    Ok(AnalyticOracle { shapes, meta, counter: QueryCounter::default() })
}

impl<T: Real> AnalyticOracle<T> {
    pub fn from_shapes(shapes: Vec<ConvexShape<T>>, meta: WorkspaceMeta<T>) -> Self {
        AnalyticOracle { shapes, meta, counter: QueryCounter::default() }
    }

    pub fn shapes(&self) -> &[ConvexShape<T>] {
        &self.shapes
    }

    pub fn meta(&self) -> &WorkspaceMeta<T> {
        &self.meta
    }

    /// Membership without touching the counters; for test bookkeeping.
    pub fn contains_uncounted(&self, p: &Point<T>) -> bool {
        self.shapes.iter().any(|s| s.contains(p))
    }
}

impl<T: Real> MembershipOracle<T> for AnalyticOracle<T> {
    fn query(&self, p: &Point<T>) -> bool {
        self.counter.record(self.shapes.iter().any(|s| s.contains(p)))
    }
    fn stats(&self) -> OracleStats {
        self.counter.stats()
    }
    fn dim(&self) -> usize {
        self.meta.dim
    }
}

/// 8-bit grayscale raster, row 0 at the top as stored in the file.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayMap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayMap {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        GrayMap { width, height, pixels: vec![fill; width * height] }
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: u8) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MapNotFound(path.display().to_string()),
            _ => Error::MalformedMap(format!("{}: {e}", path.display())),
        })?;
        Self::parse_pgm(&bytes)
    }

    /// Parses binary PGM ("P5") with maxval below 256.
    pub fn parse_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let next_token = |pos: &mut usize| -> Result<String> {
            loop {
                while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                    *pos += 1;
                }
                if *pos < bytes.len() && bytes[*pos] == b'#' {
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = *pos;
            while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
                *pos += 1;
            }
            if start == *pos {
                return Err(Error::MalformedMap("unexpected end of header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
        };
        let magic = next_token(&mut pos)?;
        if magic != "P5" {
            return Err(Error::MalformedMap(format!("magic {magic:?}, expected \"P5\"")));
        }
        let num = |pos: &mut usize, what: &str| -> Result<usize> {
            let tok = next_token(pos)?;
            tok.parse::<usize>().map_err(|_| Error::MalformedMap(format!("{what} {tok:?} is not a number")))
        };
        let width = num(&mut pos, "width")?;
        let height = num(&mut pos, "height")?;
        let maxval = num(&mut pos, "maxval")?;
        if width == 0 || height == 0 {
            return Err(Error::MalformedMap("zero-sized image".into()));
        }
        if maxval == 0 || maxval > 255 {
            return Err(Error::MalformedMap(format!("maxval {maxval} unsupported")));
        }
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(Error::MalformedMap("missing separator before pixel data".into()));
        }
        pos += 1;
        let need = width * height;
        if bytes.len() - pos < need {
            return Err(Error::MalformedMap(format!("expected {need} pixel bytes, found {}", bytes.len() - pos)));
        }
        Ok(GrayMap { width, height, pixels: bytes[pos..pos + need].to_vec() })
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Oracle over a grayscale map; dark pixels are obstacles.
pub struct BitmapOracle<T: Real> {
    map: GrayMap,
    origin: Point<T>,
    meters_per_pixel: T,
    threshold: u8,
    meta: WorkspaceMeta<T>,
    counter: QueryCounter,
}

pub const DEFAULT_THRESHOLD: u8 = 128;

/// Loads a PGM map. The map's lower-left corner sits at `meta.bounds.lo`.
pub fn make_bitmap_oracle<T: Real>(
    map_file: &Path,
    threshold: u8,
    meters_per_pixel: T,
    meta: WorkspaceMeta<T>,
) -> Result<BitmapOracle<T>> {
    let map = GrayMap::load(map_file)?;
    BitmapOracle::new(map, threshold, meters_per_pixel, meta)
}

impl<T: Real> BitmapOracle<T> {
    pub fn new(map: GrayMap, threshold: u8, meters_per_pixel: T, meta: WorkspaceMeta<T>) -> Result<Self> {
        meta.validate()?;
        if meta.dim != 2 {
            return Err(Error::InvalidInput("bitmap maps are planar".into()));
        }
        if !(meters_per_pixel > T::zero()) {
            return Err(Error::InvalidInput("meters_per_pixel must be positive".into()));
        }
        Ok(BitmapOracle {
            origin: meta.bounds.lo.clone(),
            map,
            meters_per_pixel,
            threshold,
            meta,
            counter: QueryCounter::default(),
        })
    }

    pub fn map(&self) -> &GrayMap {
        &self.map
    }

    pub fn meters_per_pixel(&self) -> T {
        self.meters_per_pixel
    }

    /// (column, row-from-top) of the pixel owning `p`, if any.
    pub fn pixel_of(&self, p: &Point<T>) -> Option<(usize, usize)> {
        if !self.meta.bounds.contains(p) {
            return None;
        }
        let fx = ((p[0] - self.origin[0]) / self.meters_per_pixel).floor();
        let fy = ((p[1] - self.origin[1]) / self.meters_per_pixel).floor();
        if fx < T::zero() || fy < T::zero() {
            return None;
        }
        let col = fx.to_usize()?;
        let row_up = fy.to_usize()?;
        if col >= self.map.width || row_up >= self.map.height {
            return None;
        }
        Some((col, self.map.height - 1 - row_up))
    }

    /// World coordinates of the centre of pixel (col, row-from-top).
    pub fn pixel_center(&self, col: usize, row: usize) -> Point<T> {
        let half = T::c(0.5);
        let row_up = self.map.height - 1 - row;
        Point::new(&[
            self.origin[0] + (T::from_usize_lossy(col) + half) * self.meters_per_pixel,
            self.origin[1] + (T::from_usize_lossy(row_up) + half) * self.meters_per_pixel,
        ])
    }

    pub fn is_obstacle_pixel(&self, col: usize, row: usize) -> bool {
        self.map.get(col, row) <= self.threshold
    }

    fn lookup(&self, p: &Point<T>) -> bool {
        match self.pixel_of(p) {
            Some((c, r)) => self.is_obstacle_pixel(c, r),
            None => false,
        }
    }
}

impl<T: Real> MembershipOracle<T> for BitmapOracle<T> {
    fn query(&self, p: &Point<T>) -> bool {
        self.counter.record(self.lookup(p))
    }
    fn stats(&self) -> OracleStats {
        self.counter.stats()
    }
    fn dim(&self) -> usize {
        2
    }
}
