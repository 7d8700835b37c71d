//! Gilbert–Johnson–Keerthi distance between convex hulls of point sets, in
//! any dimension. The sub-simplex step tries every face of the current
//! simplex, which is cheap for the d+1 ≤ 4 points involved here.

use crate::linalg::Matrix;
use crate::point::Point;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GjkResult<T> {
    pub intersects: bool,
    /// Euclidean distance between the hulls; zero when they intersect.
    pub distance: T,
}

/// Relative tolerance of the termination test.
pub const GJK_TOL: f64 = 1e-9;

pub fn gjk_intersects<T: Real>(a: &[Point<T>], b: &[Point<T>]) -> bool {
    gjk_distance(a, b).intersects
}

pub fn gjk_distance<T: Real>(a: &[Point<T>], b: &[Point<T>]) -> GjkResult<T> {
    assert!(!a.is_empty() && !b.is_empty(), "gjk needs nonempty point sets");
    let d = a[0].dim();
    let tol = T::c(GJK_TOL);
    let scale = a.iter().chain(b.iter()).fold(T::one(), |m, p| m.max(p.norm()));
    let abs_tol = tol * scale;

    let support = |v: &Point<T>| -> Point<T> {
        // point of A − B minimizing ⟨·, v⟩
        let pa = a.iter().min_by(|x, y| x.dot(v).partial_cmp(&y.dot(v)).unwrap()).unwrap();
        let pb = b.iter().max_by(|x, y| x.dot(v).partial_cmp(&y.dot(v)).unwrap()).unwrap();
        pa - pb
    };

    let mut x = &a[0] - &b[0];
    let mut simplex: Vec<Point<T>> = Vec::with_capacity(d + 1);
    let max_iter = 64 + 4 * (a.len() + b.len());
    for _ in 0..max_iter {
        let xn2 = x.norm_sq();
        if xn2.sqrt() <= abs_tol {
            return GjkResult { intersects: true, distance: T::zero() };
        }
        let w = support(&x);
        if xn2 - x.dot(&w) <= tol * xn2 || simplex.iter().any(|s| s == &w) {
            break;
        }
        simplex.push(w);
        let (closest, kept) = closest_on_simplex(&simplex);
        simplex = kept;
        x = closest;
        if simplex.len() == d + 1 {
            return GjkResult { intersects: true, distance: T::zero() };
        }
    }
    let dist = x.norm();
    GjkResult { intersects: dist <= abs_tol, distance: if dist <= abs_tol { T::zero() } else { dist } }
}

/// Closest point of conv(simplex) to the origin, and the minimal face
/// carrying it.
fn closest_on_simplex<T: Real>(simplex: &[Point<T>]) -> (Point<T>, Vec<Point<T>>) {
    let n = simplex.len();
    let mut best: Option<(T, Point<T>, Vec<usize>)> = None;
    for mask in 1usize..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let Some((p, lambdas)) = affine_projection(simplex, &idx) else { continue };
        if lambdas.iter().any(|&l| l < -T::c(1e-12)) {
            continue;
        }
        let norm = p.norm_sq();
        if best.as_ref().is_none_or(|b| norm < b.0) {
            best = Some((norm, p, idx));
        }
    }
    let (_, p, idx) = best.expect("singletons are always feasible");
    (p, idx.into_iter().map(|i| simplex[i].clone()).collect())
}

/// Projection of the origin on the affine hull of the selected points, with
/// its affine coordinates; `None` if the points are affinely dependent.
fn affine_projection<T: Real>(pts: &[Point<T>], idx: &[usize]) -> Option<(Point<T>, Vec<T>)> {
    let p0 = &pts[idx[0]];
    if idx.len() == 1 {
        return Some((p0.clone(), vec![T::one()]));
    }
    let k = idx.len() - 1;
    let dirs: Vec<Point<T>> = idx[1..].iter().map(|&i| &pts[i] - p0).collect();
    let mut g = Matrix::zeros(k, k);
    let mut rhs = Point::zeros(k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = dirs[i].dot(&dirs[j]);
        }
        rhs[i] = -dirs[i].dot(p0);
    }
    let mu = g.solve(&rhs)?;
    let mut p = p0.clone();
    for i in 0..k {
        p = p.offset(&dirs[i], mu[i]);
    }
    let mut lambdas = vec![T::one() - mu.iter().copied().sum::<T>()];
    lambdas.extend(mu.iter().copied());
    Some((p, lambdas))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point<f64> {
        Point::new(c)
    }

    fn square(x: f64, y: f64) -> Vec<Point<f64>> {
        vec![p(&[x, y]), p(&[x + 1.0, y]), p(&[x + 1.0, y + 1.0]), p(&[x, y + 1.0])]
    }

    #[test]
    fn shared_edge_counts_as_contact() {
        let t1 = vec![p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[0.0, 1.0])];
        let t2 = vec![p(&[1.0, 0.0]), p(&[0.0, 1.0]), p(&[1.0, 1.0])];
        assert!(gjk_intersects(&t1, &t2));
    }

    #[test]
    fn separated_squares() {
        let r = gjk_distance(&square(0.0, 0.0), &square(3.0, 3.0));
        assert!(!r.intersects);
        assert!((r.distance - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn point_inside_triangle() {
        let t = vec![p(&[0.0, 0.0]), p(&[2.0, 0.0]), p(&[0.0, 2.0])];
        assert!(gjk_intersects(&[p(&[0.5, 0.5])], &t));
        assert!(!gjk_intersects(&[p(&[1.5, 1.5])], &t));
    }

    #[test]
    fn tetrahedra_in_3d() {
        let t = vec![p(&[0.0, 0.0, 0.0]), p(&[1.0, 0.0, 0.0]), p(&[0.0, 1.0, 0.0]), p(&[0.0, 0.0, 1.0])];
        let far: Vec<Point<f64>> = t.iter().map(|v| v + &p(&[2.0, 0.0, 0.0])).collect();
        let r = gjk_distance(&t, &far);
        assert!((r.distance - 1.0).abs() < 1e-9);
        let near: Vec<Point<f64>> = t.iter().map(|v| v + &p(&[0.2, 0.2, 0.2])).collect();
        assert!(gjk_intersects(&t, &near));
    }
}
