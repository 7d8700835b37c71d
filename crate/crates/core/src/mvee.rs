//! Minimum-volume enclosing ellipsoids: exact fitting for finite point sets,
//! oracle-driven coresets for implicit obstacles, and the cross-polytope
//! built from an ellipsoid's principal axes.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::{farthest_with, FarthestConfig};
use crate::geometry::{self, Halfspace};
use crate::linalg::{factorial, unit_ball_volume, Matrix};
use crate::oracle::{CountingOracle, MembershipOracle};
use crate::point::{Direction, Point};
use crate::scalar::Real;

/// `{x : ‖L(x−c)‖² ≤ 1}` with `Q = LᵀL`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid<T: Real> {
    pub center: Point<T>,
    pub shape: Matrix<T>,
    /// Lower triangular, `LᵀL = Q`.
    pub factor: Matrix<T>,
}

impl<T: Real> Ellipsoid<T> {
    pub fn new(center: Point<T>, shape: Matrix<T>) -> Result<Self> {
        let d = center.dim();
        if shape.rows() != d || shape.cols() != d {
            return Err(Error::InvalidInput("shape matrix has the wrong size".into()));
        }
        if !shape.is_symmetric(T::c(1e-8)) {
            return Err(Error::InvalidInput("shape matrix is not symmetric".into()));
        }
        let shape = shape.symmetrize();
        // Cholesky of the index-reversed matrix gives the lower factor with LᵀL = Q
        let mut rev = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rev[(i, j)] = shape[(d - 1 - i, d - 1 - j)];
            }
        }
        let g = rev.cholesky().ok_or_else(|| Error::InvalidInput("shape matrix is not positive definite".into()))?;
        let mut factor = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                factor[(i, j)] = g[(d - 1 - j, d - 1 - i)];
            }
        }
        Ok(Ellipsoid { center, shape, factor })
    }

    /// Ball of the given radius.
    pub fn ball(center: Point<T>, radius: T) -> Self {
        let d = center.dim();
        Self::new(center, Matrix::identity(d).scale(T::one() / (radius * radius))).expect("ball")
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// `‖L(x−c)‖₂`.
    pub fn mahalanobis(&self, x: &Point<T>) -> T {
        self.factor.mul_vec(&(x - &self.center)).norm()
    }

    pub fn mahalanobis_l1(&self, x: &Point<T>) -> T {
        self.factor.mul_vec(&(x - &self.center)).norm_l1()
    }

    pub fn contains(&self, x: &Point<T>, tol: T) -> bool {
        self.mahalanobis(x) <= T::one() + tol
    }

    pub fn volume(&self) -> T {
        unit_ball_volume::<T>(self.dim()) / self.shape.determinant().sqrt()
    }

    pub fn log_volume(&self) -> T {
        unit_ball_volume::<T>(self.dim()).ln() - T::c(0.5) * self.shape.determinant().ln()
    }

    /// Same centre, every semi-axis multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Ellipsoid {
            center: self.center.clone(),
            shape: self.shape.scale(T::one() / (s * s)),
            factor: self.factor.scale(T::one() / s),
        }
    }

    /// Principal semi-axis vectors, shortest first.
    pub fn semi_axes(&self) -> Vec<Point<T>> {
        let (vals, vecs) = self.shape.symmetric_eigen();
        // eigenvalues ascend, so reverse to list the shortest axis first
        (0..self.dim())
            .rev()
            .map(|i| vecs.column(i).scale(T::one() / vals[i].max(T::min_positive_value()).sqrt()))
            .collect()
    }

    pub fn min_semi_axis(&self) -> T {
        self.semi_axes()[0].norm()
    }

    /// `c + L⁻¹s`: the boundary point in direction `s` of the unit ball frame.
    pub fn map_from_ball(&self, s: &Point<T>) -> Point<T> {
        let d = self.dim();
        let mut y = Point::zeros(d);
        for i in 0..d {
            let mut acc = s[i];
            for k in 0..i {
                acc -= self.factor[(i, k)] * y[k];
            }
            y[i] = acc / self.factor[(i, i)];
        }
        &self.center + &y
    }

    pub fn to_dump(&self) -> EllipsoidDump {
        EllipsoidDump {
            center: self.center.to_f64(),
            shape: self.shape.row_major().iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }
}

/// JSON form of an ellipsoid: centre and row-major shape matrix.
#[derive(Clone, Debug, Serialize)]
pub struct EllipsoidDump {
    pub center: Vec<f64>,
    pub shape: Vec<f64>,
}

/// Points collected on one obstacle.
#[derive(Clone, Debug, PartialEq)]
pub struct CoresetPointSet<T: Real> {
    pub points: Vec<Point<T>>,
    pub eps: T,
}

#[derive(Clone, Debug)]
pub struct MveeFit<T: Real> {
    pub ellipsoid: Ellipsoid<T>,
    /// Barycentric weights of the input points.
    pub weights: Vec<T>,
    /// Upper bound on vol(ellipsoid) / vol(true MVEE).
    pub ratio_bound: T,
    pub iterations: usize,
}

/// Minimum-volume enclosing ellipsoid of a finite point set, to relative
/// volume tolerance `tol`.
pub fn mvee_of_points<T: Real>(points: &[Point<T>], tol: T) -> Result<Ellipsoid<T>> {
    Ok(mvee_fit(points, tol)?.ellipsoid)
}

/// Khachiyan's barycentric coordinate ascent with Todd–Yildirim away steps.
///
/// Large inputs are solved on a working set: the optimum is supported by at
/// most d(d+3)/2 points, so the ascent runs on a few candidates, every input
/// point is checked against the result, and the worst violators join the
/// set until none is left.
pub fn mvee_fit<T: Real>(points: &[Point<T>], tol: T) -> Result<MveeFit<T>> {
    let n = points.len();
    if n == 0 {
        return Err(Error::DegenerateHull);
    }
    let d = points[0].dim();
    if n < d + 1 || geometry::affine_rank(points, geometry::default_tol(points)) < d {
        return Err(Error::DegenerateHull);
    }
    let max_iter = 200_000usize;
    if n <= 8 * (d + 1) {
        let (u, iters) = khachiyan_weights(points, vec![T::one() / T::from_usize_lossy(n); n], tol, max_iter)?;
        return finish_fit(points, u, iters);
    }
    let mut working: Vec<usize> = Vec::new();
    for i in 0..d {
        let key = |a: &usize, b: &usize| points[*a][i].partial_cmp(&points[*b][i]).unwrap_or(std::cmp::Ordering::Equal);
        working.extend((0..n).min_by(key));
        working.extend((0..n).max_by(key));
    }
    working.sort_unstable();
    working.dedup();
    let mut total_iters = 0;
    loop {
        let sub: Vec<Point<T>> = working.iter().map(|&i| points[i].clone()).collect();
        if sub.len() < d + 1 || geometry::affine_rank(&sub, geometry::default_tol(&sub)) < d {
            // a flat working set cannot be fitted; grow it from the farthest
            // points of the input seen from its centroid
            let mut c = Point::zeros(d);
            for p in &sub {
                c = c.offset(p, T::one() / T::from_usize_lossy(sub.len()));
            }
            let next = (0..n)
                .filter(|i| !working.contains(i))
                .max_by(|&a, &b| {
                    points[a].dist(&c).partial_cmp(&points[b].dist(&c)).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("the full input has full rank");
            working.push(next);
            working.sort_unstable();
            continue;
        }
        let u0 = vec![T::one() / T::from_usize_lossy(sub.len()); sub.len()];
        let (u_sub, iters) = khachiyan_weights(&sub, u0, tol, max_iter)?;
        total_iters += iters;
        let mut u = vec![T::zero(); n];
        for (&i, &w) in working.iter().zip(&u_sub) {
            u[i] = w;
        }
        let (c, sigma) = weighted_moments(points, &u);
        let g = sigma.cholesky().ok_or(Error::DegenerateHull)?;
        let mut kappa: Vec<(usize, T)> =
            (0..n).map(|i| (i, mahalanobis_sq_chol(&g, &(&points[i] - &c)) + T::one())).collect();
        let kmax = kappa.iter().map(|k| k.1).fold(T::zero(), T::max);
        let dd = T::from_usize_lossy(d);
        if ((kmax - T::one()) / dd).powf(dd * T::c(0.5)) <= T::one() + tol || working.len() == n {
            return finish_fit(points, u, total_iters);
        }
        kappa.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let before = working.len();
        working.extend(kappa.iter().map(|k| k.0).filter(|i| u[*i] == T::zero()).take(1));
        working.sort_unstable();
        working.dedup();
        if working.len() == before {
            return finish_fit(points, u, total_iters);
        }
    }
}

/// Ascent on the weights `u` of `points` until the volume bound is within
/// `tol` or `max_iter` steps were taken.
fn khachiyan_weights<T: Real>(points: &[Point<T>], mut u: Vec<T>, tol: T, max_iter: usize) -> Result<(Vec<T>, usize)> {
    let n = points.len();
    let d = points[0].dim();
    let dp1 = T::from_usize_lossy(d + 1);
    let dd = T::from_usize_lossy(d);
    let mut iter = 0usize;
    loop {
        let (c, sigma) = weighted_moments(points, &u);
        let g = sigma.cholesky().ok_or(Error::DegenerateHull)?;
        let m: Vec<T> = points.iter().map(|p| mahalanobis_sq_chol(&g, &(p - &c)) + T::one()).collect();
        let (jmax, &kmax) =
            m.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal)).unwrap();
        let ratio = ((kmax - T::one()) / dd).powf(dd * T::c(0.5));
        if ratio <= T::one() + tol || iter >= max_iter {
            return Ok((u, iter));
        }
        iter += 1;
        // coordinate steps zigzag between near-tied support points; a Newton
        // step on the support moves all their weights at once
        if iter.is_multiple_of(64) {
            if let Some(v) = newton_polish(points, &u) {
                u = v;
                continue;
            }
        }
        let (jmin, kmin) = (0..n)
            .filter(|&i| u[i] > T::zero())
            .map(|i| (i, m[i]))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        if kmax - dp1 >= dp1 - kmin {
            let beta = (kmax - dp1) / (dp1 * (kmax - T::one()));
            for w in u.iter_mut() {
                *w *= T::one() - beta;
            }
            u[jmax] += beta;
        } else {
            let uj = u[jmin];
            let mut beta = (dp1 - kmin) / (dp1 * (kmin - T::one()));
            let cap = uj / (T::one() - uj);
            let drop = beta >= cap;
            if drop {
                beta = cap;
            }
            for w in u.iter_mut() {
                *w *= T::one() + beta;
            }
            u[jmin] -= beta;
            if drop {
                u[jmin] = T::zero();
            }
        }
    }
}

/// `log det Σᵢ uᵢ qᵢqᵢᵀ` for the lifted points `qᵢ = (pᵢ, 1)`, whose
/// maximizer over the simplex is the optimal weighting.
fn lifted_log_det<T: Real>(points: &[Point<T>], u: &[T]) -> Option<T> {
    let m = lifted_moment(points, u);
    let g = m.cholesky()?;
    Some((0..g.rows()).map(|i| g[(i, i)].ln()).sum::<T>() * T::c(2.0))
}

fn lift<T: Real>(p: &Point<T>) -> Point<T> {
    let mut v = p.coords().to_vec();
    v.push(T::one());
    Point::from_vec(v)
}

fn lifted_moment<T: Real>(points: &[Point<T>], u: &[T]) -> Matrix<T> {
    let k = points[0].dim() + 1;
    let mut m = Matrix::zeros(k, k);
    for (p, &w) in points.iter().zip(u) {
        if w > T::zero() {
            let q = lift(p);
            m = m.add(&Matrix::outer(&q, &q).scale(w));
        }
    }
    m
}

/// Damped Newton ascent of the lifted log-determinant over the weights of
/// the current support, with Σu = 1 held by a multiplier. Weights that reach
/// zero leave the support. Returns `None` when no improvement was found.
fn newton_polish<T: Real>(points: &[Point<T>], u: &[T]) -> Option<Vec<T>> {
    let f0 = lifted_log_det(points, u)?;
    let mut u = u.to_vec();
    let mut f = f0;
    for _ in 0..30 {
        let support: Vec<usize> = (0..u.len()).filter(|&i| u[i] > T::zero()).collect();
        let k = support.len();
        let minv = lifted_moment(points, &u).inverse_spd()?;
        let q: Vec<Point<T>> = support.iter().map(|&i| lift(&points[i])).collect();
        let mq: Vec<Point<T>> = q.iter().map(|v| minv.mul_vec(v)).collect();
        let mut kkt = Matrix::zeros(k + 1, k + 1);
        let mut rhs = Point::zeros(k + 1);
        for a in 0..k {
            rhs[a] = -q[a].dot(&mq[a]);
            for b in 0..k {
                let x = q[a].dot(&mq[b]);
                kkt[(a, b)] = -x * x;
            }
            kkt[(a, k)] = -T::one();
            kkt[(k, a)] = T::one();
        }
        // the direction solves HΔ − λ1 = −g with 1ᵀΔ = 0
        let sol = kkt.solve(&rhs)?;
        let delta: Vec<T> = (0..k).map(|a| sol[a]).collect();
        let mut alpha = T::one();
        let mut blocking = None;
        for a in 0..k {
            if delta[a] < T::zero() {
                let lim = -u[support[a]] / delta[a];
                if lim < alpha {
                    alpha = lim;
                    blocking = Some(a);
                }
            }
        }
        let mut accepted = None;
        for _ in 0..40 {
            let mut v = u.clone();
            for a in 0..k {
                v[support[a]] = (v[support[a]] + alpha * delta[a]).max(T::zero());
            }
            if let Some(b) = blocking {
                v[support[b]] = T::zero();
            }
            let total: T = v.iter().copied().sum();
            for w in v.iter_mut() {
                *w /= total;
            }
            if let Some(fv) = lifted_log_det(points, &v) {
                if fv > f {
                    accepted = Some((v, fv));
                    break;
                }
            }
            alpha *= T::c(0.5);
            blocking = None;
        }
        let Some((v, fv)) = accepted else { break };
        let gain = fv - f;
        u = v;
        f = fv;
        if gain <= T::c(1e-15) * f.abs().max(T::one()) {
            break;
        }
    }
    (f > f0).then_some(u)
}

/// Ellipsoid of the weights `u`, scaled to enclose every point.
fn finish_fit<T: Real>(points: &[Point<T>], u: Vec<T>, iterations: usize) -> Result<MveeFit<T>> {
    let dd = T::from_usize_lossy(points[0].dim());
    let (c, sigma) = weighted_moments(points, &u);
    let g = sigma.cholesky().ok_or(Error::DegenerateHull)?;
    let kmax = points.iter().map(|p| mahalanobis_sq_chol(&g, &(p - &c)) + T::one()).fold(T::zero(), T::max);
    let ratio = ((kmax - T::one()) / dd).powf(dd * T::c(0.5));
    let inv = sigma.inverse_spd().ok_or(Error::DegenerateHull)?;
    let e = Ellipsoid::new(c, inv.scale(T::one() / (kmax - T::one())))?;
    Ok(MveeFit { ellipsoid: e, weights: u, ratio_bound: ratio, iterations })
}

/// Weighted mean and covariance `Σ uᵢ(pᵢ−c)(pᵢ−c)ᵀ`.
fn weighted_moments<T: Real>(points: &[Point<T>], u: &[T]) -> (Point<T>, Matrix<T>) {
    let d = points[0].dim();
    let mut c = Point::zeros(d);
    for (p, &w) in points.iter().zip(u) {
        c = c.offset(p, w);
    }
    let mut s = Matrix::zeros(d, d);
    for (p, &w) in points.iter().zip(u) {
        if w == T::zero() {
            continue;
        }
        let v = p - &c;
        for i in 0..d {
            for j in 0..d {
                s[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    (c, s.symmetrize())
}

fn mahalanobis_sq_chol<T: Real>(g: &Matrix<T>, v: &Point<T>) -> T {
    let d = v.dim();
    let mut y = Point::zeros(d);
    let mut acc = T::zero();
    for i in 0..d {
        let mut s = v[i];
        for k in 0..i {
            s -= g[(i, k)] * y[k];
        }
        y[i] = s / g[(i, i)];
        acc += y[i] * y[i];
    }
    acc
}

/// Options shared by the oracle-driven coreset routines.
#[derive(Clone, Copy, Debug)]
pub struct CoresetConfig<T> {
    /// Ray-search horizon (longest possible obstacle chord).
    pub t_max: T,
    /// Randomly rotates the first search direction when set.
    pub rotation_seed: Option<u64>,
    /// Local ascent steps applied to each search start.
    pub refine_steps: usize,
    /// Overrides the default iteration cap.
    pub max_iterations: Option<usize>,
    /// Absolute accuracy of the boundary points, in world units. Defaults to
    /// ε; a finer value decouples it from the volume tolerance.
    pub precision: Option<T>,
    /// Stride cap handed to every ray search; see [`FarthestConfig::max_step`].
    pub max_step: Option<T>,
    /// Before halting, repeats the farthest-point search from the axis
    /// directions as well. Costs a few extra searches per coreset; without it
    /// a nearly round fit can halt while a vertex still sticks out.
    pub confirm_halt: bool,
}

impl<T: Real> CoresetConfig<T> {
    pub fn new(t_max: T) -> Self {
        CoresetConfig {
            t_max,
            rotation_seed: None,
            refine_steps: 4,
            max_iterations: None,
            precision: None,
            max_step: None,
            confirm_halt: true,
        }
    }

    fn farthest(&self) -> FarthestConfig<T> {
        FarthestConfig { max_step: self.max_step, ..FarthestConfig::new(self.t_max) }
    }
}

/// Crude coreset: extreme points in ±x for d mutually orthogonal directions.
pub fn approx_mve_coreset<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    eps: T,
    p: &Point<T>,
    cfg: &CoresetConfig<T>,
) -> Result<CoresetPointSet<T>> {
    let d = p.dim();
    let prec = cfg.precision.unwrap_or(eps);
    let fcfg = cfg.farthest();
    let candidates = candidate_axes::<T>(d, cfg.rotation_seed);
    let mut spans: Vec<Point<T>> = Vec::with_capacity(d);
    let mut points = Vec::with_capacity(2 * d);
    for _ in 0..d {
        // the candidate with the largest component orthogonal to what we have
        let x = candidates
            .iter()
            .map(|c| {
                let mut v = c.clone();
                for _ in 0..2 {
                    for s in &spans {
                        let k = s.dot(&v);
                        v = v.offset(s, -k);
                    }
                }
                v
            })
            .fold(None::<Point<T>>, |best, v| match best {
                Some(b) if b.norm() >= v.norm() - T::c(1e-9) => Some(b),
                _ => Some(v),
            })
            .unwrap();
        let x = Direction::normalize(&x)?;
        let hi = farthest_with(oracle, prec, &x, p, &fcfg)?;
        let lo = farthest_with(oracle, prec, &x.neg(), p, &fcfg)?;
        let width = hi.support_value + lo.support_value;
        if width < prec {
            return Err(Error::DegenerateObstacle { direction: x.as_point().to_f64(), width: width.to_f64_lossy() });
        }
        let mut diff = &hi.point - &lo.point;
        for _ in 0..2 {
            for s in &spans {
                let k = s.dot(&diff);
                diff = diff.offset(s, -k);
            }
        }
        spans.push(diff.scale(T::one() / diff.norm()));
        points.push(hi.point);
        points.push(lo.point);
    }
    Ok(CoresetPointSet { points, eps })
}

/// Canonical axes, or a seeded random orthonormal frame.
fn candidate_axes<T: Real>(d: usize, seed: Option<u64>) -> Vec<Point<T>> {
    match seed {
        None => (0..d).map(|i| Point::unit(d, i)).collect(),
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut out: Vec<Point<T>> = Vec::with_capacity(d);
            while out.len() < d {
                let mut v = Point::from_vec((0..d).map(|_| T::c(rng.random_range(-1.0..1.0))).collect());
                for _ in 0..2 {
                    for b in &out {
                        let k = b.dot(&v);
                        v = v.offset(b, -k);
                    }
                }
                let n = v.norm();
                if n > T::c(1e-3) {
                    out.push(v.scale(T::one() / n));
                }
            }
            out
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    /// `d‖L(p−c)‖² + 1` for the point added in this step.
    pub kappa: f64,
    /// `κ/(d+1) − 1`.
    pub eps: f64,
    /// Step size `ε/(κ−1)`.
    pub beta: f64,
    /// `log det Σ` after the step (the potential of the convergence proof).
    pub log_det: f64,
    /// Log-volume of the ellipsoid `(dΣ)⁻¹` after the step.
    pub log_volume: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepTrace {
    /// Potential and log-volume of the seed ellipsoid, before any step.
    pub initial_log_det: f64,
    pub initial_log_volume: f64,
    pub steps: Vec<StepRecord>,
    /// `ε` value at which the loop halts.
    pub halting_threshold: f64,
    /// The `ε` measured at the last check (halted or not).
    pub final_eps: f64,
    pub converged: bool,
    pub cap: usize,
}

#[derive(Clone, Debug)]
pub struct MveCoreset<T: Real> {
    pub coreset: CoresetPointSet<T>,
    /// Enclosing ellipsoid: contains every coreset point and, up to search
    /// precision, the obstacle.
    pub ellipsoid: Ellipsoid<T>,
    pub trace: StepTrace,
    pub queries_used: u64,
}

impl<T: Real> MveCoreset<T> {
    pub fn converged(&self) -> bool {
        self.trace.converged
    }
}

/// Iteration cap `max(64, ⌈8d(1/ε + ln(d+1))⌉)`.
pub fn iteration_cap(d: usize, eps: f64) -> usize {
    let k = 8.0 * d as f64 * (1.0 / eps + ((d + 1) as f64).ln());
    64usize.max(k.ceil() as usize)
}

/// Threshold `(1+ε)^{2/(d+1)} − 1` on the step `ε` below which the ellipsoid
/// is an ε-approximation.
pub fn halting_threshold(d: usize, eps: f64) -> f64 {
    (1.0 + eps).powf(2.0 / (d as f64 + 1.0)) - 1.0
}

/// ε-coreset for the minimum-volume enclosing ellipsoid of the obstacle
/// containing `p`.
pub fn mve_coreset<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    eps: T,
    p: &Point<T>,
    cfg: &CoresetConfig<T>,
) -> Result<MveCoreset<T>> {
    let counted = CountingOracle::new(oracle);
    let d = p.dim();
    let dd = T::from_usize_lossy(d);
    let seed = approx_mve_coreset(&counted, eps, p, cfg)?;
    let prec = cfg.precision.unwrap_or(eps);
    let eps_f = eps.to_f64_lossy();
    let threshold = halting_threshold(d, eps_f);
    let cap = cfg.max_iterations.unwrap_or_else(|| iteration_cap(d, eps_f));

    // Khachiyan weights of the seed give the starting centre and covariance
    let fit = mvee_fit(&seed.points, eps / T::c(4.0))?;
    let (mut c, mut sigma) = weighted_moments(&seed.points, &fit.weights);
    let mut points = seed.points.clone();
    let fcfg = cfg.farthest();
    let omega = unit_ball_volume::<T>(d).to_f64_lossy();
    let log_vol = |sigma: &Matrix<T>| -> (f64, f64) {
        let ld = sigma.determinant().to_f64_lossy().ln();
        (ld, omega.ln() + 0.5 * (d as f64 * (d as f64).ln() + ld))
    };
    let (ld0, lv0) = log_vol(&sigma);
    let mut trace = StepTrace {
        initial_log_det: ld0,
        initial_log_volume: lv0,
        steps: Vec::new(),
        halting_threshold: threshold,
        final_eps: f64::INFINITY,
        converged: false,
        cap,
    };
    let mut far_points: Vec<Point<T>> = Vec::new();
    let mut anchor = p.clone();
    loop {
        let inv = sigma.inverse_spd().ok_or(Error::DegenerateHull)?;
        let e = Ellipsoid::new(c.clone(), inv.scale(T::one() / dd))?;
        // the weighted mean is a convex combination of body points
        if counted.query(&c) {
            anchor = c.clone();
        }
        // any point above the threshold makes a valid step, so the wide
        // search only runs to confirm a halt
        let kappa_of = |q: &Point<T>| {
            let m = e.mahalanobis(q);
            dd * m * m + T::one()
        };
        let mut search = MahalanobisSearch::run(&counted, &e, prec, &anchor, &fcfg, cfg.refine_steps)?;
        if cfg.confirm_halt && (kappa_of(search.best()) / (dd + T::one()) - T::one()).to_f64_lossy() <= threshold {
            search.widen()?;
        }
        let q = search.best().clone();
        let kappa = kappa_of(&q);
        let eps_i = kappa / (dd + T::one()) - T::one();
        trace.final_eps = eps_i.to_f64_lossy();
        if eps_i.to_f64_lossy() <= threshold {
            trace.converged = true;
            far_points.push(q);
            break;
        }
        if trace.steps.len() >= cap {
            far_points.push(q);
            break;
        }
        let beta = eps_i / (kappa - T::one());
        let v = &q - &c;
        c = c.scale(T::one() - beta).offset(&q, beta);
        sigma = sigma.scale(T::one() - beta).add(&Matrix::outer(&v, &v).scale(beta * (T::one() - beta)));
        let (ld, lv) = log_vol(&sigma);
        trace.steps.push(StepRecord {
            kappa: kappa.to_f64_lossy(),
            eps: eps_i.to_f64_lossy(),
            beta: beta.to_f64_lossy(),
            log_det: ld,
            log_volume: lv,
        });
        points.push(q);
    }
    for pt in &points {
        if !counted.query(pt) {
            return Err(Error::OracleInconsistency(pt.to_f64()));
        }
    }
    let inv = sigma.inverse_spd().ok_or(Error::DegenerateHull)?;
    let e = Ellipsoid::new(c, inv.scale(T::one() / dd))?;
    let ellipsoid = enclose(&e, points.iter().chain(far_points.iter()), prec / dd);
    Ok(MveCoreset { coreset: CoresetPointSet { points, eps }, ellipsoid, trace, queries_used: counted.used() })
}

/// Rescales `e` so every listed point is inside, then pads it by `pad` in
/// world units along its shortest axis.
fn enclose<'a, T: Real>(e: &Ellipsoid<T>, points: impl Iterator<Item = &'a Point<T>>, pad: T) -> Ellipsoid<T> {
    let m = points.map(|p| e.mahalanobis(p)).fold(T::zero(), T::max);
    let fitted = if m > T::zero() { e.scaled(m) } else { e.clone() };
    let a_min = fitted.min_semi_axis();
    fitted.scaled(T::one() + pad / a_min)
}

/// Point of the obstacle approximately maximizing `‖L(q−c)‖₂`: the best
/// ℓ1-scored extreme point over all 2ᵈ sign patterns.
pub fn mahalanobis_farthest<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    e: &Ellipsoid<T>,
    eps: T,
    p_seed: &Point<T>,
    t_max: T,
) -> Result<Point<T>> {
    let fcfg = FarthestConfig::new(t_max);
    Ok(sign_candidates(oracle, e, eps, p_seed, &fcfg)?.remove(0).0)
}

/// Extreme points for every sign pattern, best ℓ1 score first; ties go to
/// the lexicographically smaller point.
fn sign_candidates<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    e: &Ellipsoid<T>,
    eps: T,
    p_seed: &Point<T>,
    fcfg: &FarthestConfig<T>,
) -> Result<Vec<(Point<T>, T)>> {
    let d = e.dim();
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0..(1usize << d) {
        let s = Point::from_vec((0..d).map(|i| if mask >> i & 1 == 1 { -T::one() } else { T::one() }).collect());
        let g = Direction::normalize(&e.factor.tmul_vec(&s))?;
        let r = farthest_with(oracle, eps, &g, p_seed, fcfg)?;
        let score = e.mahalanobis_l1(&r.point);
        out.push((r.point, score));
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.lex_cmp(&b.0)));
    Ok(out)
}

/// Ascent on `‖L(q−c)‖₂` from several extreme points: each step maximizes
/// the linearization `⟨Lᵀy/‖y‖, q⟩` at the current point.
///
/// `run` climbs from the two best sign-pattern points. In whitened
/// coordinates a near-optimal fit makes the body almost round, so every
/// vertex is a local maximum and two starts can miss the farthest one;
/// `widen` adds the axis directions, halving the gaps between starts, and
/// climbs from every start not yet visited.
struct MahalanobisSearch<'a, T: Real> {
    oracle: &'a dyn MembershipOracle<T>,
    e: &'a Ellipsoid<T>,
    eps: T,
    p_seed: &'a Point<T>,
    fcfg: &'a FarthestConfig<T>,
    refine_steps: usize,
    pending: Vec<Point<T>>,
    seen: Vec<Point<T>>,
    best: Option<(Point<T>, T)>,
}

impl<'a, T: Real> MahalanobisSearch<'a, T> {
    fn run(
        oracle: &'a dyn MembershipOracle<T>,
        e: &'a Ellipsoid<T>,
        eps: T,
        p_seed: &'a Point<T>,
        fcfg: &'a FarthestConfig<T>,
        refine_steps: usize,
    ) -> Result<Self> {
        let mut cands = sign_candidates(oracle, e, eps, p_seed, fcfg)?;
        cands.sort_by(|a, b| {
            let (ma, mb) = (e.mahalanobis(&a.0), e.mahalanobis(&b.0));
            mb.partial_cmp(&ma).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.lex_cmp(&b.0))
        });
        let mut s = MahalanobisSearch {
            oracle,
            e,
            eps,
            p_seed,
            fcfg,
            refine_steps,
            pending: Vec::new(),
            seen: Vec::new(),
            best: None,
        };
        let mut cands = cands.into_iter().map(|c| c.0);
        for start in cands.by_ref().take(2) {
            s.climb(start)?;
        }
        s.pending = cands.collect();
        Ok(s)
    }

    fn widen(&mut self) -> Result<()> {
        let d = self.e.dim();
        let mut starts = std::mem::take(&mut self.pending);
        for i in 0..2 * d {
            let mut s = Point::zeros(d);
            s[i / 2] = if i % 2 == 0 { T::one() } else { -T::one() };
            let g = Direction::normalize(&self.e.factor.tmul_vec(&s))?;
            starts.push(farthest_with(self.oracle, self.eps, &g, self.p_seed, self.fcfg)?.point);
        }
        for start in starts {
            self.climb(start)?;
        }
        Ok(())
    }

    fn best(&self) -> &Point<T> {
        &self.best.as_ref().expect("at least one start").0
    }

    fn climb(&mut self, start: Point<T>) -> Result<()> {
        // a start on an already visited point would retrace its ascent; near
        // a vertex the located point can slide a few ε along an edge
        let near = self.eps * T::c(5.0);
        if self.seen.iter().any(|s| s.dist(&start) <= near) {
            return Ok(());
        }
        let e = self.e;
        let mut q = start;
        let mut m = e.mahalanobis(&q);
        self.seen.push(q.clone());
        for _ in 0..self.refine_steps {
            let y = e.factor.mul_vec(&(&q - &e.center));
            let Ok(g) = Direction::normalize(&e.factor.tmul_vec(&y)) else { break };
            let r = farthest_with(self.oracle, self.eps, &g, self.p_seed, self.fcfg)?;
            self.seen.push(r.point.clone());
            let m_new = e.mahalanobis(&r.point);
            if m_new <= m * (T::one() + T::c(1e-4)) {
                if m_new > m {
                    q = r.point;
                    m = m_new;
                }
                break;
            }
            q = r.point;
            m = m_new;
        }
        if self.best.as_ref().is_none_or(|b| m > b.1) {
            self.best = Some((q, m));
        }
        Ok(())
    }
}

/// Convex hull of the 2d endpoints of the √d-expanded principal axes.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossPolytope<T: Real> {
    pub center: Point<T>,
    /// `center ± h_i`, in the order +h₁, −h₁, +h₂, …
    pub vertices: Vec<Point<T>>,
    /// Mutually orthogonal half-diagonals `h_i`.
    pub half_diagonals: Vec<Point<T>>,
}

/// Cross-polytope on the √d-expanded principal axes of `e`; contains `e`.
pub fn cross_polytope_bound<T: Real>(e: &Ellipsoid<T>) -> CrossPolytope<T> {
    let sd = T::from_usize_lossy(e.dim()).sqrt();
    let h: Vec<Point<T>> = e.semi_axes().into_iter().map(|a| a.scale(sd)).collect();
    CrossPolytope::from_half_diagonals(e.center.clone(), h)
}

impl<T: Real> CrossPolytope<T> {
    pub fn from_half_diagonals(center: Point<T>, half_diagonals: Vec<Point<T>>) -> Self {
        let mut vertices = Vec::with_capacity(2 * half_diagonals.len());
        for h in &half_diagonals {
            vertices.push(&center + h);
            vertices.push(&center - h);
        }
        CrossPolytope { center, vertices, half_diagonals }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Σᵢ |⟨x−v, hᵢ⟩| / ‖hᵢ‖², which is ≤ 1 exactly on the polytope.
    pub fn gauge(&self, x: &Point<T>) -> T {
        let v = x - &self.center;
        self.half_diagonals.iter().map(|h| (h.dot(&v) / h.norm_sq()).abs()).sum()
    }

    pub fn contains(&self, x: &Point<T>) -> bool {
        self.gauge(x) <= T::one()
    }

    /// Strict interior test: points on the boundary are not inside.
    pub fn contains_strict(&self, x: &Point<T>) -> bool {
        self.gauge(x) < T::one()
    }

    /// `factor·(conv(C) − v) + v`.
    pub fn scaled(&self, factor: T) -> Self {
        Self::from_half_diagonals(self.center.clone(), self.half_diagonals.iter().map(|h| h.scale(factor)).collect())
    }

    /// The inner body of the sandwich bound, shrunk by `d^{-3/2}`.
    pub fn inner(&self) -> Self {
        let d = T::from_usize_lossy(self.dim());
        self.scaled(T::one() / (d * d.sqrt()))
    }

    pub fn volume(&self) -> T {
        let d = self.dim();
        let m = Matrix::from_columns(&self.half_diagonals);
        T::c(2.0).powi(d as i32) * m.determinant().abs() / factorial::<T>(d)
    }

    /// The 2ᵈ facets `Σ sᵢ⟨x−v, hᵢ⟩/‖hᵢ‖² ≤ 1`, with unit normals.
    pub fn halfspaces(&self) -> Vec<Halfspace<T>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                let mut n = Point::zeros(d);
                for (i, h) in self.half_diagonals.iter().enumerate() {
                    let s = if mask >> i & 1 == 1 { -T::one() } else { T::one() };
                    n = n.offset(h, s / h.norm_sq());
                }
                let len = n.norm();
                let offset = (T::one() + n.dot(&self.center)) / len;
                Halfspace { normal: n.scale(T::one() / len), offset }
            })
            .collect()
    }

    pub fn to_dump(&self) -> CrossPolytopeDump {
        CrossPolytopeDump { center: self.center.to_f64(), vertices: self.vertices.iter().map(|v| v.to_f64()).collect() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossPolytopeDump {
    pub center: Vec<f64>,
    pub vertices: Vec<Vec<f64>>,
}
