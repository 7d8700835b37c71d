//! Convex-polytope helpers in vertex form: facet enumeration, clipping by
//! halfspaces, and simplicial decomposition. Brute force, meant for the
//! handful of vertices that appear per region or obstacle.

use crate::linalg::{simplex_volume, Matrix};
use crate::point::{Direction, Point};
use crate::scalar::Real;

/// `{x : ⟨normal, x⟩ ≤ offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace<T: Real> {
    pub normal: Point<T>,
    pub offset: T,
}

impl<T: Real> Halfspace<T> {
    pub fn signed_distance(&self, x: &Point<T>) -> T {
        self.normal.dot(x) - self.offset
    }

    pub fn contains(&self, x: &Point<T>, tol: T) -> bool {
        self.signed_distance(x) <= tol
    }

    pub fn flipped(&self) -> Self {
        Halfspace { normal: -&self.normal, offset: -self.offset }
    }
}

#[derive(Clone, Debug)]
pub struct Facet<T: Real> {
    pub plane: Halfspace<T>,
    /// Indices of the input points lying on the facet hyperplane.
    pub points: Vec<usize>,
}

/// Length scale of a point set, used to turn relative tolerances absolute.
pub fn extent<T: Real>(points: &[Point<T>]) -> T {
    let d = points[0].dim();
    let mut ext = T::zero();
    for i in 0..d {
        let lo = points.iter().fold(T::infinity(), |m, p| m.min(p[i]));
        let hi = points.iter().fold(T::neg_infinity(), |m, p| m.max(p[i]));
        ext = ext.max(hi - lo);
        ext = ext.max(lo.abs()).max(hi.abs());
    }
    ext.max(T::epsilon())
}

pub fn default_tol<T: Real>(points: &[Point<T>]) -> T {
    extent(points) * T::tiny() * T::c(10.0)
}

/// Calls `f` with every k-subset of `0..n` in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { return };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Dimension of the affine hull of `points`, with `tol` an absolute length.
pub fn affine_rank<T: Real>(points: &[Point<T>], tol: T) -> usize {
    if points.is_empty() {
        return 0;
    }
    let mut basis: Vec<Point<T>> = Vec::new();
    for p in &points[1..] {
        let mut v = p - &points[0];
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v = v.offset(b, -c);
            }
        }
        let n = v.norm();
        if n > tol {
            basis.push(v.scale(T::one() / n));
        }
    }
    basis.len()
}

/// Unit normal of the hyperplane through d points in ℝᵈ (generalized cross product).
fn hyperplane_normal<T: Real>(pts: &[&Point<T>]) -> Option<Point<T>> {
    let d = pts[0].dim();
    let rows: Vec<Point<T>> = pts[1..].iter().map(|p| *p - pts[0]).collect();
    let mut n = Point::zeros(d);
    for k in 0..d {
        let mut minor = Matrix::zeros(d - 1, d - 1);
        for (i, r) in rows.iter().enumerate() {
            let mut jj = 0;
            for j in 0..d {
                if j == k {
                    continue;
                }
                minor[(i, jj)] = r[j];
                jj += 1;
            }
        }
        let det = minor.determinant();
        n[k] = if k % 2 == 0 { det } else { -det };
    }
    let len = n.norm();
    let scale = rows.iter().fold(T::one(), |m, r| m * r.norm().max(T::epsilon()));
    if !(len > scale * T::c(1e-9)) {
        return None;
    }
    Some(n.scale(T::one() / len))
}

/// All facets of conv(points). Requires a full-dimensional point set.
pub fn facets<T: Real>(points: &[Point<T>], tol: T) -> Vec<Facet<T>> {
    let n = points.len();
    let d = points[0].dim();
    let mut out: Vec<Facet<T>> = Vec::new();
    if d == 1 {
        let (mut lo, mut hi) = (0, 0);
        for i in 0..n {
            if points[i][0] < points[lo][0] {
                lo = i;
            }
            if points[i][0] > points[hi][0] {
                hi = i;
            }
        }
        let on = |v: T| (0..n).filter(|&i| (points[i][0] - v).abs() <= tol).collect::<Vec<_>>();
        out.push(Facet {
            plane: Halfspace { normal: Point::new(&[T::one()]), offset: points[hi][0] },
            points: on(points[hi][0]),
        });
        out.push(Facet {
            plane: Halfspace { normal: Point::new(&[-T::one()]), offset: -points[lo][0] },
            points: on(points[lo][0]),
        });
        return out;
    }
    for_each_combination(n, d, |idx| {
        let pts: Vec<&Point<T>> = idx.iter().map(|&i| &points[i]).collect();
        let Some(normal) = hyperplane_normal(&pts) else { return };
        let offset = normal.dot(pts[0]);
        let mut above = false;
        let mut below = false;
        for p in points {
            let s = normal.dot(p) - offset;
            if s > tol {
                above = true;
            } else if s < -tol {
                below = true;
            }
            if above && below {
                return;
            }
        }
        if !above && !below {
            return;
        }
        let plane = if above { Halfspace { normal: -&normal, offset: -offset } } else { Halfspace { normal, offset } };
        let on: Vec<usize> = (0..n).filter(|&i| plane.signed_distance(&points[i]).abs() <= tol).collect();
        if out.iter().any(|f| f.points == on) {
            return;
        }
        out.push(Facet { plane, points: on });
    });
    out
}

/// Halfspace description of conv(points).
pub fn halfspaces<T: Real>(points: &[Point<T>], tol: T) -> Vec<Halfspace<T>> {
    facets(points, tol).into_iter().map(|f| f.plane).collect()
}

/// Removes near-duplicate points (within `tol` in every coordinate).
pub fn dedup_points<T: Real>(points: Vec<Point<T>>, tol: T) -> Vec<Point<T>> {
    let mut out: Vec<Point<T>> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| p.iter().zip(q.iter()).all(|(a, b)| (*a - *b).abs() <= tol)) {
            out.push(p);
        }
    }
    out
}

/// Vertices of conv(points): points lying on at least d facets.
pub fn hull_vertices<T: Real>(points: &[Point<T>], tol: T) -> Vec<Point<T>> {
    let d = points[0].dim();
    if affine_rank(points, tol) < d {
        return Vec::new();
    }
    let fs = facets(points, tol);
    let mut count = vec![0usize; points.len()];
    for f in &fs {
        for &i in &f.points {
            count[i] += 1;
        }
    }
    points.iter().zip(count).filter(|(_, c)| *c >= d).map(|(p, _)| p.clone()).collect()
}

/// conv(points) ∩ {h ≤ 0}, in vertex form (not reduced to hull vertices).
pub fn clip_convex<T: Real>(points: &[Point<T>], h: &Halfspace<T>, tol: T) -> Vec<Point<T>> {
    let s: Vec<T> = points.iter().map(|p| h.signed_distance(p)).collect();
    let mut out: Vec<Point<T>> = Vec::new();
    for (p, &si) in points.iter().zip(&s) {
        if si <= tol {
            out.push(p.clone());
        }
    }
    if out.len() == points.len() {
        return out;
    }
    for i in 0..points.len() {
        for j in 0..points.len() {
            if s[i] < -tol && s[j] > tol {
                let t = s[i] / (s[i] - s[j]);
                out.push(points[i].lerp(&points[j], t));
            }
        }
    }
    dedup_points(out, tol)
}

/// Convex hull vertices of `points` clipped by every halfspace, or empty if
/// the intersection has no d-dimensional volume.
pub fn intersect_halfspaces<T: Real>(points: &[Point<T>], hs: &[Halfspace<T>], tol: T) -> Vec<Point<T>> {
    let d = points[0].dim();
    let mut cur = points.to_vec();
    for h in hs {
        cur = clip_convex(&cur, h, tol);
        if cur.len() <= d || affine_rank(&cur, tol) < d {
            return Vec::new();
        }
        cur = hull_vertices(&cur, tol);
        if cur.len() <= d {
            return Vec::new();
        }
    }
    cur
}

/// Orthonormal vectors spanning the complement of `u`, followed by `u` itself.
pub fn complete_basis<T: Real>(u: &Direction<T>) -> Vec<Point<T>> {
    let d = u.dim();
    let mut axes: Vec<usize> = (0..d).collect();
    axes.sort_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap_or(std::cmp::Ordering::Equal));
    let mut basis: Vec<Point<T>> = vec![u.as_point().clone()];
    for &a in &axes {
        if basis.len() == d {
            break;
        }
        let mut v = Point::unit(d, a);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v = v.offset(b, -c);
            }
        }
        let n = v.norm();
        if n > T::c(1e-3) {
            basis.push(v.scale(T::one() / n));
        }
    }
    let u = basis.remove(0);
    basis.push(u);
    basis
}

/// Simplicial decomposition of conv(points) as index tuples into `points`.
/// Flat inputs yield no simplices.
pub fn triangulate_convex<T: Real>(points: &[Point<T>], tol: T) -> Vec<Vec<usize>> {
    let d = points[0].dim();
    if points.len() <= d {
        return Vec::new();
    }
    if d == 1 {
        let mut lo = 0;
        let mut hi = 0;
        for i in 0..points.len() {
            if points[i][0] < points[lo][0] {
                lo = i;
            }
            if points[i][0] > points[hi][0] {
                hi = i;
            }
        }
        if points[hi][0] - points[lo][0] > tol {
            return vec![vec![lo, hi]];
        }
        return Vec::new();
    }
    if affine_rank(points, tol) < d {
        return Vec::new();
    }
    let apex = (0..points.len()).min_by(|&a, &b| points[a].lex_cmp(&points[b])).unwrap();
    let mut out = Vec::new();
    for f in facets(points, tol) {
        if f.points.contains(&apex) {
            continue;
        }
        let dir = Direction::try_unit(f.plane.normal.clone())
            .or_else(|_| Direction::normalize(&f.plane.normal))
            .expect("facet normal");
        let basis = complete_basis(&dir);
        let origin = &points[f.points[0]];
        let projected: Vec<Point<T>> = f
            .points
            .iter()
            .map(|&i| {
                let rel = &points[i] - origin;
                Point::from_vec(basis[..d - 1].iter().map(|b| b.dot(&rel)).collect())
            })
            .collect();
        for sub in triangulate_convex(&projected, tol) {
            let mut s: Vec<usize> = sub.iter().map(|&k| f.points[k]).collect();
            s.push(apex);
            out.push(s);
        }
    }
    out
}

/// Volume of conv(points).
pub fn convex_volume<T: Real>(points: &[Point<T>], tol: T) -> T {
    triangulate_convex(points, tol)
        .iter()
        .map(|s| {
            let v: Vec<Point<T>> = s.iter().map(|&i| points[i].clone()).collect();
            simplex_volume(&v)
        })
        .sum()
}

/// Hull vertices of a planar point set in counter-clockwise order.
pub fn convex_polygon_ccw<T: Real>(points: &[Point<T>], tol: T) -> Vec<Point<T>> {
    let mut v = hull_vertices(points, tol);
    if v.is_empty() {
        return v;
    }
    let c = Point::centroid(&v);
    v.sort_by(|a, b| {
        let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
        let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
        ta.partial_cmp(&tb).unwrap_or(std::cmp::Ordering::Equal)
    });
    v
}

/// Whether `x` lies in the simplex `verts`, with barycentric slack `tol`.
pub fn simplex_contains<T: Real>(verts: &[Point<T>], x: &Point<T>, tol: T) -> bool {
    match barycentric(verts, x) {
        Some(l) => l.iter().all(|&v| v >= -tol),
        None => false,
    }
}

/// Barycentric coordinates of `x` with respect to a nondegenerate simplex.
pub fn barycentric<T: Real>(verts: &[Point<T>], x: &Point<T>) -> Option<Vec<T>> {
    let cols: Vec<Point<T>> = verts[1..].iter().map(|v| v - &verts[0]).collect();
    let m = Matrix::from_columns(&cols);
    let mu = m.solve(&(x - &verts[0]))?;
    let mut l = vec![T::one() - mu.iter().copied().sum::<T>()];
    l.extend(mu.iter().copied());
    Some(l)
}
