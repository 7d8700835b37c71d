//! Triangulated free space: the bounding box minus every removed
//! cross-polytope, kept as a set of simplices that can be sampled in
//! proportion to their volume.

use std::collections::{HashMap, HashSet};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{self, Halfspace};
use crate::gjk::gjk_intersects;
use crate::linalg::simplex_volume;
use crate::mvee::CrossPolytope;
use crate::oracle::BoundingBox;
use crate::point::Point;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Region<T: Real> {
    pub id: u64,
    pub simplex: Vec<Point<T>>,
    pub volume: T,
}

impl<T: Real> Region<T> {
    pub fn contains(&self, x: &Point<T>, tol: T) -> bool {
        geometry::simplex_contains(&self.simplex, x, tol)
    }
}

/// Summary of one removal.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RemovalReport<T> {
    /// Free volume lost to the polytope.
    pub removed_volume: T,
    pub affected: usize,
    pub created: usize,
}

#[derive(Clone, Debug)]
pub struct TriangulatedFreeSpace<T: Real> {
    bounds: BoundingBox<T>,
    regions: Vec<Region<T>>,
    total_volume: T,
    removed: Vec<CrossPolytope<T>>,
    next_id: u64,
    version: u64,
    /// Planar edges that must not be flipped (patch borders, polytope sides).
    constraints: HashSet<EdgeKey>,
}

type VKey = (u64, u64);
type EdgeKey = (VKey, VKey);

fn vkey<T: Real>(p: &Point<T>) -> VKey {
    (p[0].to_f64_lossy().to_bits(), p[1].to_f64_lossy().to_bits())
}

fn edge_key(a: VKey, b: VKey) -> EdgeKey {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Splits the box into d! simplices along the main diagonal (Kuhn
/// triangulation): 2 triangles in the plane, 6 tetrahedra in space.
pub fn triangulate_bounds<T: Real>(bounds: &BoundingBox<T>) -> TriangulatedFreeSpace<T> {
    let d = bounds.dim();
    let mut perms: Vec<Vec<usize>> = Vec::new();
    permutations(&mut (0..d).collect::<Vec<_>>(), 0, &mut perms);
    let mut fs = TriangulatedFreeSpace {
        bounds: bounds.clone(),
        regions: Vec::with_capacity(perms.len()),
        total_volume: T::zero(),
        removed: Vec::new(),
        next_id: 0,
        version: 0,
        constraints: HashSet::new(),
    };
    for perm in perms {
        let mut v = bounds.lo.clone();
        let mut simplex = vec![v.clone()];
        for &axis in &perm {
            v[axis] = bounds.hi[axis];
            simplex.push(v.clone());
        }
        fs.push_region(simplex);
    }
    fs.total_volume = fs.sum_volumes();
    fs
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

impl<T: Real> TriangulatedFreeSpace<T> {
    pub fn bounds(&self) -> &BoundingBox<T> {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn regions(&self) -> &[Region<T>] {
        &self.regions
    }

    pub fn total_volume(&self) -> T {
        self.total_volume
    }

    pub fn removed(&self) -> &[CrossPolytope<T>] {
        &self.removed
    }

    /// Bumped on every change; samplers use it to refresh their tables.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn sum_volumes(&self) -> T {
        self.regions.iter().map(|r| r.volume).sum()
    }

    /// Whether `x` lies in some region (closed, with slack `tol`).
    pub fn covers(&self, x: &Point<T>, tol: T) -> bool {
        self.regions.iter().any(|r| r.contains(x, tol))
    }

    /// Regions as vertex lists, for `--dump-triangulation`.
    pub fn vertex_lists(&self) -> Vec<Vec<Vec<f64>>> {
        self.regions.iter().map(|r| r.simplex.iter().map(|p| p.to_f64()).collect()).collect()
    }

    fn push_region(&mut self, simplex: Vec<Point<T>>) -> bool {
        let volume = simplex_volume(&simplex);
        let scale = self.bounds.diagonal();
        if !(volume > scale.powi(self.dim() as i32) * T::c(1e-13)) {
            return false;
        }
        self.regions.push(Region { id: self.next_id, simplex, volume });
        self.next_id += 1;
        true
    }

    /// Removes conv(C) (clipped to the bounds) from the free space. Regions
    /// not touching C keep their ids; the rest are re-triangulated.
    pub fn remove_polytope(&mut self, c: &CrossPolytope<T>) -> Result<RemovalReport<T>> {
        if c.dim() != self.dim() {
            return Err(Error::InvalidInput("polytope dimension does not match the free space".into()));
        }
        if self.dim() > 3 {
            return Err(Error::InvalidInput("free-space updates support d ≤ 3".into()));
        }
        let tol = self.tol();
        let clipped = geometry::intersect_halfspaces(&c.vertices, &self.bounds.halfspaces(), tol);
        if clipped.is_empty() {
            return Ok(RemovalReport::default());
        }
        let affected: Vec<usize> =
            (0..self.regions.len()).filter(|&i| gjk_intersects(&self.regions[i].simplex, &clipped)).collect();
        if affected.is_empty() {
            return Ok(RemovalReport::default());
        }
        let old: Vec<&Region<T>> = affected.iter().map(|&i| &self.regions[i]).collect();
        let (pieces, constraint_edges) = match self.dim() {
            2 => retriangulate_2d(&old, &clipped, tol),
            _ => subtract_convex(&old, &geometry::halfspaces(&clipped, tol), tol),
        };
        let before = self.total_volume;
        let mut next = self.clone();
        let affected_set: HashSet<usize> = affected.iter().copied().collect();
        let mut keep = Vec::with_capacity(next.regions.len());
        for (i, r) in next.regions.drain(..).enumerate() {
            if !affected_set.contains(&i) {
                keep.push(r);
            }
        }
        next.regions = keep;
        let mut created = 0;
        for s in pieces {
            if next.push_region(s) {
                created += 1;
            }
        }
        next.total_volume = next.sum_volumes();
        if next.total_volume <= self.bounds.volume() * T::c(1e-12) {
            return Err(Error::FreeSpaceExhausted);
        }
        next.constraints.extend(constraint_edges);
        next.removed.push(c.clone());
        next.version += 1;
        *self = next;
        Ok(RemovalReport { removed_volume: before - self.total_volume, affected: affected.len(), created })
    }

    /// Free space built in one pass: the bounds minus all polytopes.
    pub fn batch(bounds: &BoundingBox<T>, polytopes: &[CrossPolytope<T>]) -> Result<Self> {
        let mut fs = triangulate_bounds(bounds);
        let tol = fs.tol();
        let clipped: Vec<Vec<Point<T>>> = polytopes
            .iter()
            .map(|c| geometry::intersect_halfspaces(&c.vertices, &bounds.halfspaces(), tol))
            .filter(|v| !v.is_empty())
            .collect();
        let all: Vec<&Region<T>> = fs.regions.iter().collect();
        let pieces = match bounds.dim() {
            2 => batch_2d(&all, &clipped, tol),
            3 => {
                let mut cur: Vec<Vec<Point<T>>> = all.iter().map(|r| r.simplex.clone()).collect();
                for poly in &clipped {
                    let hs = geometry::halfspaces(poly, tol);
                    let regs: Vec<Region<T>> =
                        cur.into_iter().map(|s| Region { id: 0, volume: simplex_volume(&s), simplex: s }).collect();
                    let refs: Vec<&Region<T>> = regs.iter().collect();
                    cur = subtract_convex(&refs, &hs, tol).0;
                }
                cur
            }
            _ => return Err(Error::InvalidInput("free-space updates support d ≤ 3".into())),
        };
        fs.regions.clear();
        for s in pieces {
            fs.push_region(s);
        }
        fs.total_volume = fs.sum_volumes();
        if fs.total_volume <= bounds.volume() * T::c(1e-12) {
            return Err(Error::FreeSpaceExhausted);
        }
        fs.removed = polytopes.to_vec();
        fs.version = 1;
        Ok(fs)
    }

    fn tol(&self) -> T {
        self.bounds.diagonal() * T::tiny()
    }

    /// Interior edges whose two triangles violate the empty-circumcircle
    /// test, skipping constrained edges. Planar only.
    pub fn delaunay_violations(&self) -> usize {
        if self.dim() != 2 {
            return 0;
        }
        let mut by_edge: HashMap<EdgeKey, Vec<(usize, usize)>> = HashMap::new();
        for (ri, r) in self.regions.iter().enumerate() {
            for k in 0..3 {
                let a = vkey(&r.simplex[(k + 1) % 3]);
                let b = vkey(&r.simplex[(k + 2) % 3]);
                by_edge.entry(edge_key(a, b)).or_default().push((ri, k));
            }
        }
        let mut bad = 0;
        for (e, users) in by_edge {
            if users.len() != 2 || self.constraints.contains(&e) {
                continue;
            }
            let (r1, _) = users[0];
            let (r2, k2) = users[1];
            let t = &self.regions[r1].simplex;
            let opp = &self.regions[r2].simplex[k2];
            if in_circumcircle(t, opp) {
                bad += 1;
            }
        }
        bad
    }
}

/// Strictly inside the circumcircle, with a relative tolerance.
fn in_circumcircle<T: Real>(tri: &[Point<T>], p: &Point<T>) -> bool {
    let f = |q: &Point<T>| (q[0].to_f64_lossy() - p[0].to_f64_lossy(), q[1].to_f64_lossy() - p[1].to_f64_lossy());
    let (ax, ay) = f(&tri[0]);
    let (bx, by) = f(&tri[1]);
    let (cx, cy) = f(&tri[2]);
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    let orient = (tri[1][0] - tri[0][0]).to_f64_lossy() * (tri[2][1] - tri[0][1]).to_f64_lossy()
        - (tri[1][1] - tri[0][1]).to_f64_lossy() * (tri[2][0] - tri[0][0]).to_f64_lossy();
    let scale = [ax, ay, bx, by, cx, cy].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    det * orient.signum() > 1e-9 * scale.powi(4)
}

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

struct CdtBuilder {
    cdt: Cdt,
    handles: HashMap<VKey, FixedVertexHandle>,
}

impl CdtBuilder {
    fn new() -> Self {
        CdtBuilder { cdt: Cdt::new(), handles: HashMap::new() }
    }

    fn vertex<T: Real>(&mut self, p: &Point<T>) -> FixedVertexHandle {
        let key = vkey(p);
        if let Some(&h) = self.handles.get(&key) {
            return h;
        }
        let h = self.cdt.insert(Point2::new(p[0].to_f64_lossy(), p[1].to_f64_lossy())).expect("finite coordinates");
        self.handles.insert(key, h);
        h
    }

    fn constrain<T: Real>(&mut self, a: &Point<T>, b: &Point<T>) {
        let ha = self.vertex(a);
        let hb = self.vertex(b);
        if ha != hb {
            self.cdt.add_constraint_and_split(ha, hb, |p| p);
        }
    }

    /// Triangles of the CDT accepted by `keep`, plus the constraint edges
    /// among their sides.
    fn harvest<T: Real>(&self, keep: impl Fn(&Point<T>) -> bool) -> (Vec<Vec<Point<T>>>, Vec<EdgeKey>) {
        let mut out = Vec::new();
        let mut cons = Vec::new();
        for face in self.cdt.inner_faces() {
            let pts: Vec<Point<T>> = face
                .vertices()
                .iter()
                .map(|v| {
                    let q = v.position();
                    Point::new(&[T::c(q.x), T::c(q.y)])
                })
                .collect();
            let centroid = Point::centroid(&pts);
            if !keep(&centroid) {
                continue;
            }
            for e in face.adjacent_edges() {
                if self.cdt.is_constraint_edge(e.as_undirected().fix()) {
                    let [a, b] = e.vertices().map(|v| {
                        let q = v.position();
                        Point::<T>::new(&[T::c(q.x), T::c(q.y)])
                    });
                    cons.push(edge_key(vkey(&a), vkey(&b)));
                }
            }
            out.push(pts);
        }
        (out, cons)
    }
}

fn polygon_halfspaces<T: Real>(poly: &[Point<T>], tol: T) -> Vec<Halfspace<T>> {
    geometry::halfspaces(poly, tol)
}

fn strictly_inside<T: Real>(hs: &[Halfspace<T>], x: &Point<T>, tol: T) -> bool {
    hs.iter().all(|h| h.signed_distance(x) < -tol)
}

/// Constrained Delaunay triangulation of (∪ affected triangles) ∖ poly.
fn retriangulate_2d<T: Real>(affected: &[&Region<T>], poly: &[Point<T>], tol: T) -> (Vec<Vec<Point<T>>>, Vec<EdgeKey>) {
    let mut b = CdtBuilder::new();
    let mut count: HashMap<EdgeKey, (usize, Point<T>, Point<T>)> = HashMap::new();
    for r in affected {
        for k in 0..3 {
            b.vertex(&r.simplex[k]);
            let (p, q) = (&r.simplex[(k + 1) % 3], &r.simplex[(k + 2) % 3]);
            count.entry(edge_key(vkey(p), vkey(q))).or_insert((0, p.clone(), q.clone())).0 += 1;
        }
    }
    let ring = geometry::convex_polygon_ccw(poly, tol);
    for p in &ring {
        b.vertex(p);
    }
    let mut border: Vec<(EdgeKey, &(usize, Point<T>, Point<T>))> =
        count.iter().filter(|(_, v)| v.0 == 1).map(|(k, v)| (*k, v)).collect();
    border.sort_by_key(|a| a.0);
    for (_, (_, p, q)) in border {
        b.constrain(p, q);
    }
    for i in 0..ring.len() {
        b.constrain(&ring[i], &ring[(i + 1) % ring.len()]);
    }
    let hs = polygon_halfspaces(&ring, tol);
    b.harvest(|c: &Point<T>| !strictly_inside(&hs, c, tol) && affected.iter().any(|r| r.contains(c, T::c(1e-9))))
}

/// One-shot planar triangulation of the regions minus several polygons.
fn batch_2d<T: Real>(regions: &[&Region<T>], polys: &[Vec<Point<T>>], tol: T) -> Vec<Vec<Point<T>>> {
    let mut b = CdtBuilder::new();
    for r in regions {
        for p in &r.simplex {
            b.vertex(p);
        }
    }
    let rings: Vec<Vec<Point<T>>> = polys.iter().map(|p| geometry::convex_polygon_ccw(p, tol)).collect();
    for ring in &rings {
        for i in 0..ring.len() {
            b.constrain(&ring[i], &ring[(i + 1) % ring.len()]);
        }
    }
    let hs: Vec<Vec<Halfspace<T>>> = rings.iter().map(|r| polygon_halfspaces(r, tol)).collect();
    b.harvest(|c: &Point<T>| !hs.iter().any(|h| strictly_inside(h, c, tol))).0
}

/// Each simplex minus the convex set `{x : every h(x) ≤ 0}`, as simplices.
/// Piece k lies outside facet k and inside facets 1..k−1, so the pieces are
/// disjoint and convex.
fn subtract_convex<T: Real>(
    simplices: &[&Region<T>],
    hs: &[Halfspace<T>],
    tol: T,
) -> (Vec<Vec<Point<T>>>, Vec<EdgeKey>) {
    let d = hs.first().map(|h| h.normal.dim()).unwrap_or(0);
    let mut out = Vec::new();
    for r in simplices {
        let mut rest = r.simplex.clone();
        for h in hs {
            let outside = geometry::clip_convex(&rest, &h.flipped(), tol);
            if outside.len() > d && geometry::affine_rank(&outside, tol) == d {
                let verts = geometry::hull_vertices(&outside, tol);
                for s in geometry::triangulate_convex(&verts, tol) {
                    out.push(s.iter().map(|&i| verts[i].clone()).collect());
                }
            }
            rest = geometry::clip_convex(&rest, h, tol);
            if rest.len() <= d || geometry::affine_rank(&rest, tol) < d {
                break;
            }
            rest = geometry::hull_vertices(&rest, tol);
        }
    }
    (out, Vec::new())
}

/// Per-caller sampling state: rng plus the cumulative volume table.
#[derive(Clone, Debug)]
pub struct SamplerState<T: Real> {
    rng: ChaCha8Rng,
    cumulative: Vec<T>,
    version: Option<u64>,
}

impl<T: Real> SamplerState<T> {
    pub fn new(seed: u64) -> Self {
        SamplerState { rng: ChaCha8Rng::seed_from_u64(seed), cumulative: Vec::new(), version: None }
    }

    pub fn from_rng(rng: ChaCha8Rng) -> Self {
        SamplerState { rng, cumulative: Vec::new(), version: None }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn refresh(&mut self, fs: &TriangulatedFreeSpace<T>) {
        if self.version == Some(fs.version()) && self.cumulative.len() == fs.regions().len() {
            return;
        }
        self.cumulative.clear();
        let mut acc = T::zero();
        for r in fs.regions() {
            acc += r.volume;
            self.cumulative.push(acc);
        }
        self.version = Some(fs.version());
    }
}

/// Uniform point of the free space: a region drawn with probability
/// proportional to its volume, then a uniform point inside it.
pub fn sample<T: Real>(fs: &TriangulatedFreeSpace<T>, state: &mut SamplerState<T>) -> Result<Point<T>> {
    Ok(sample_with_region(fs, state)?.1)
}

/// As [`sample`], also returning the index of the chosen region.
pub fn sample_with_region<T: Real>(
    fs: &TriangulatedFreeSpace<T>,
    state: &mut SamplerState<T>,
) -> Result<(usize, Point<T>)> {
    state.refresh(fs);
    let total = match state.cumulative.last() {
        Some(&t) if t > T::zero() => t,
        _ => return Err(Error::FreeSpaceExhausted),
    };
    let r = T::c(state.rng.random::<f64>()) * total;
    let idx = state.cumulative.partition_point(|&c| c <= r).min(state.cumulative.len() - 1);
    let p = uniform_in_simplex(&fs.regions()[idx].simplex, &mut state.rng);
    Ok((idx, p))
}

/// Uniform point of a simplex from the gaps of sorted uniforms.
pub fn uniform_in_simplex<T: Real>(simplex: &[Point<T>], rng: &mut ChaCha8Rng) -> Point<T> {
    let d = simplex.len() - 1;
    let mut cuts: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut prev = 0.0;
    let mut p = Point::zeros(simplex[0].dim());
    for (i, v) in simplex.iter().enumerate() {
        let next = if i < d { cuts[i] } else { 1.0 };
        p = p.offset(v, T::c(next - prev));
        prev = next;
    }
    p
}
