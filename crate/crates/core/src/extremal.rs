//! Approximate extreme point of an implicit convex body along a direction.
//!
//! The height function `f(x) = max{h : x + h·u ∈ K}` over the hyperplane
//! orthogonal to `u` is concave. Each step maximizes it along one line of
//! that hyperplane; the line maximum is found as the top of a planar slice
//! of K, located by golden-section search over the angle of rays cast from
//! an interior anchor. The boundary height along those rays is unimodal in
//! the angle, so the slice search needs no derivative information.

use crate::error::{Error, Result};
use crate::geometry::complete_basis;
use crate::oracle::{CountingOracle, MembershipOracle};
use crate::point::{Direction, Point};
use crate::ray_search::{extreme_along_ray_capped, extreme_along_ray_near};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis<T: Real> {
    /// e₁ … e_d; the last vector is the requested direction.
    pub vectors: Vec<Direction<T>>,
}

impl<T: Real> OrthonormalBasis<T> {
    pub fn last(&self) -> &Direction<T> {
        self.vectors.last().expect("nonempty basis")
    }
}

pub fn build_orthonormal_basis<T: Real>(u: &Direction<T>, dim: usize) -> Result<OrthonormalBasis<T>> {
    if u.dim() != dim {
        return Err(Error::InvalidInput(format!("direction has dimension {}, expected {dim}", u.dim())));
    }
    let vectors = complete_basis(u)
        .into_iter()
        .enumerate()
        .map(|(i, v)| if i + 1 == dim { u.clone() } else { Direction::normalize(&v).expect("basis vector") })
        .collect();
    Ok(OrthonormalBasis { vectors })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FarthestResult<T: Real> {
    pub point: Point<T>,
    /// ⟨point, u⟩.
    pub support_value: T,
    pub queries_used: u64,
    /// Outer sweeps performed.
    pub iterations: usize,
}

/// Tuning of the farthest-point search.
#[derive(Clone, Copy, Debug)]
pub struct FarthestConfig<T> {
    /// Ray-search horizon; at least the longest chord of any obstacle.
    pub t_max: T,
    /// Cap on outer sweeps; `None` means `16·d`.
    pub max_sweeps: Option<usize>,
    /// Stride cap for ray searches; keep it below the narrowest gap between
    /// obstacles so rays cannot hop into a neighbour.
    pub max_step: Option<T>,
}

impl<T: Real> FarthestConfig<T> {
    pub fn new(t_max: T) -> Self {
        FarthestConfig { t_max, max_sweeps: None, max_step: None }
    }
}

/// Finds a point of the obstacle containing `p` whose support value along
/// `u` is within `eps` of the maximum.
pub fn farthest<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    eps: T,
    u: &Direction<T>,
    p: &Point<T>,
    t_max: T,
) -> Result<FarthestResult<T>> {
    farthest_with(oracle, eps, u, p, &FarthestConfig::new(t_max))
}

pub fn farthest_with<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    eps: T,
    u: &Direction<T>,
    p: &Point<T>,
    cfg: &FarthestConfig<T>,
) -> Result<FarthestResult<T>> {
    let d = p.dim();
    if u.dim() != d {
        return Err(Error::InvalidInput("direction and point dimensions differ".into()));
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let counted = CountingOracle::new(oracle);
    let engine = Engine {
        oracle: &counted,
        ray_eps: eps / T::from_usize_lossy(d),
        t_max: cfg.t_max,
        max_step: cfg.max_step,
        ang_tol: eps / (T::c(4.0) * T::from_usize_lossy(d) * cfg.t_max),
    };
    let max_sweeps = cfg.max_sweeps.unwrap_or(16 * d);
    let (point, iterations) = match d {
        1 => {
            let r = extreme_along_ray_capped(&counted, p, u, engine.ray_eps, cfg.t_max, cfg.max_step)?;
            (p.offset(u.as_point(), r.t_inside), 1)
        }
        2 => {
            if !counted.query(p) {
                return Err(Error::StartOutside);
            }
            let basis = build_orthonormal_basis(u, 2)?;
            let s = engine.slice_max(p, basis.vectors[0].as_point(), u, None)?;
            (s.point, 1)
        }
        _ => engine.sweeps(p, u, eps, max_sweeps)?,
    };
    let point = snap_back(&counted, point, u, eps)?;
    let support_value = u.dot(&point);
    Ok(FarthestResult { point, support_value, queries_used: counted.used(), iterations })
}

/// Retreats along −u until the oracle confirms membership.
fn snap_back<T: Real>(oracle: &dyn MembershipOracle<T>, mut q: Point<T>, u: &Direction<T>, eps: T) -> Result<Point<T>> {
    // points come from verified probes; re-checking only matters for a
    // non-deterministic oracle, so give it a few steps and then give up
    for _ in 0..3 {
        if oracle.query(&q) {
            return Ok(q);
        }
        q = q.offset(u.as_point(), -eps);
    }
    Err(Error::OracleInconsistency(q.to_f64()))
}

/// Directional width `⟨P[u] − P[−u], u⟩` of the obstacle containing `seed`.
pub fn directional_width<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    seed: &Point<T>,
    u: &Direction<T>,
    eps: T,
    t_max: T,
) -> Result<T> {
    let up = farthest(oracle, eps, u, seed, t_max)?;
    let down = farthest(oracle, eps, &u.neg(), seed, t_max)?;
    Ok(up.support_value + down.support_value)
}

pub(crate) struct SliceMax<T: Real> {
    pub point: Point<T>,
    pub height: T,
    /// (angle, exit radius) of every ray cast in the slice.
    pub rays: Vec<(T, T)>,
}

pub(crate) struct Engine<'a, T: Real> {
    pub oracle: &'a dyn MembershipOracle<T>,
    pub ray_eps: T,
    pub t_max: T,
    pub max_step: Option<T>,
    pub ang_tol: T,
}

impl<T: Real> Engine<'_, T> {
    /// Top of the slice `{anchor + a·w + b·u}` of the body, searched over rays
    /// `cos θ·w + sin θ·u`, θ ∈ [0, π]. `prev` seeds warm starts.
    pub fn slice_max(
        &self,
        anchor: &Point<T>,
        w: &Point<T>,
        u: &Direction<T>,
        prev: Option<&[(T, T)]>,
    ) -> Result<SliceMax<T>> {
        let pi = T::PI();
        let base = u.dot(anchor);
        let mut rays: Vec<(T, T)> = Vec::with_capacity(32);
        let mut best = SliceMax { point: anchor.clone(), height: base, rays: Vec::new() };
        let eval = |theta: T, rays: &mut Vec<(T, T)>, best: &mut SliceMax<T>| -> Result<T> {
            let dir = w.scale(theta.cos()).offset(u.as_point(), theta.sin());
            let dir = Direction::normalize(&dir)?;
            // a warm start probes straight at the neighbour's exit radius, which
            // can land in another obstacle; with a stride cap every ray walks out
            let guess = match self.max_step {
                Some(_) => None,
                None => nearest_radius(rays, theta).or_else(|| prev.and_then(|pr| nearest_radius(pr, theta))),
            };
            let r = match guess {
                Some(g) => {
                    extreme_along_ray_near(self.oracle, anchor, &dir, self.ray_eps, self.t_max, g, self.max_step)?
                }
                None => extreme_along_ray_capped(self.oracle, anchor, &dir, self.ray_eps, self.t_max, self.max_step)?,
            };
            rays.push((theta, r.t_inside));
            let q = anchor.offset(dir.as_point(), r.t_inside);
            let h = u.dot(&q);
            if h > best.height {
                best.height = h;
                best.point = q;
            }
            Ok(h)
        };

        const COARSE: usize = 8;
        let step = pi / T::from_usize_lossy(COARSE);
        let mut coarse = Vec::with_capacity(COARSE);
        for k in 0..COARSE {
            let theta = step * (T::from_usize_lossy(k) + T::c(0.5));
            coarse.push(eval(theta, &mut rays, &mut best)?);
        }
        let kbest = (0..COARSE)
            .max_by(|&a, &b| coarse[a].partial_cmp(&coarse[b]).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        let centre = step * (T::from_usize_lossy(kbest) + T::c(0.5));
        let mut a = (centre - step).max(T::zero());
        let mut b = (centre + step).min(pi);
        let g = (T::c(5.0).sqrt() - T::one()) * T::c(0.5);
        let mut c = b - g * (b - a);
        let mut dd = a + g * (b - a);
        let mut fc = eval(c, &mut rays, &mut best)?;
        let mut fd = eval(dd, &mut rays, &mut best)?;
        while b - a > self.ang_tol {
            if fc >= fd {
                b = dd;
                dd = c;
                fd = fc;
                c = b - g * (b - a);
                fc = eval(c, &mut rays, &mut best)?;
            } else {
                a = c;
                c = dd;
                fc = fd;
                dd = a + g * (b - a);
                fd = eval(dd, &mut rays, &mut best)?;
            }
        }
        best.rays = rays;
        Ok(best)
    }

    /// d ≥ 3: repeated line maximizations with the anchor pulled toward
    /// the best point found, until a sweep gains less than eps/2.
    fn sweeps(&self, p: &Point<T>, u: &Direction<T>, eps: T, max_sweeps: usize) -> Result<(Point<T>, usize)> {
        let d = p.dim();
        if !self.oracle.query(p) {
            return Err(Error::StartOutside);
        }
        let basis = build_orthonormal_basis(u, d)?;
        let mut anchor = p.clone();
        let mut best_point = p.clone();
        let mut best = u.dot(p);
        let half = T::c(0.5);
        for sweep in 1..=max_sweeps {
            let before = best;
            let cand = if d == 3 {
                self.pencil_max(&anchor, basis.vectors[0].as_point(), basis.vectors[1].as_point(), u)?
            } else {
                let mut top = SliceMax { point: anchor.clone(), height: u.dot(&anchor), rays: Vec::new() };
                for e in &basis.vectors[..d - 1] {
                    let s = self.slice_max(&anchor, e.as_point(), u, None)?;
                    if s.height > top.height {
                        anchor = anchor.lerp(&s.point, half);
                        top = s;
                    }
                }
                top
            };
            if cand.height > best {
                best = cand.height;
                best_point = cand.point.clone();
            }
            if best - before < eps * half && sweep > 1 {
                return Ok((best_point, sweep));
            }
            // the midpoint of two body points is inside by convexity
            anchor = anchor.lerp(&best_point, half);
            if !self.oracle.query(&anchor) {
                return Err(Error::OracleInconsistency(anchor.to_f64()));
            }
        }
        Err(Error::NotConverged { best: best_point.to_f64(), gap: (best - u.dot(&anchor)).to_f64_lossy() })
    }

    /// d = 3: maximum over the pencil of vertical planes through the anchor.
    /// The slice maximum is quasi-concave in the pencil angle.
    fn pencil_max(&self, anchor: &Point<T>, e1: &Point<T>, e2: &Point<T>, u: &Direction<T>) -> Result<SliceMax<T>> {
        let pi = T::PI();
        let mut best: Option<SliceMax<T>> = None;
        let mut last_rays: Vec<(T, T)> = Vec::new();
        let slice = |phi: T, best: &mut Option<SliceMax<T>>, last: &mut Vec<(T, T)>| -> Result<T> {
            let w = e1.scale(phi.cos()).offset(e2, phi.sin());
            let s = self.slice_max(anchor, &w, u, if last.is_empty() { None } else { Some(last) })?;
            let h = s.height;
            *last = s.rays.clone();
            if best.as_ref().is_none_or(|b| h > b.height) {
                *best = Some(s);
            }
            Ok(h)
        };
        let mut coarse_n = 8usize;
        let base = u.dot(anchor);
        loop {
            let step = pi / T::from_usize_lossy(coarse_n);
            let mut vals = Vec::with_capacity(coarse_n);
            for k in 0..coarse_n {
                vals.push(slice(step * T::from_usize_lossy(k), &mut best, &mut last_rays)?);
            }
            let kbest = (0..coarse_n)
                .max_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap();
            let hi = vals[kbest];
            let lo = vals.iter().copied().fold(T::infinity(), T::min);
            // a flat coarse profile can hide a narrow peak; refine the grid
            if hi - lo <= self.ray_eps * T::c(2.0) && hi - base > T::zero() && coarse_n < 64 {
                coarse_n *= 2;
                continue;
            }
            let centre = step * T::from_usize_lossy(kbest);
            let mut a = centre - step;
            let mut b = centre + step;
            let g = (T::c(5.0).sqrt() - T::one()) * T::c(0.5);
            let mut c = b - g * (b - a);
            let mut dd = a + g * (b - a);
            let mut fc = slice(c, &mut best, &mut last_rays)?;
            let mut fd = slice(dd, &mut best, &mut last_rays)?;
            while b - a > self.ang_tol * T::c(4.0) {
                if fc >= fd {
                    b = dd;
                    dd = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = slice(c, &mut best, &mut last_rays)?;
                } else {
                    a = c;
                    c = dd;
                    fc = fd;
                    dd = a + g * (b - a);
                    fd = slice(dd, &mut best, &mut last_rays)?;
                }
            }
            break;
        }
        Ok(best.expect("at least one slice"))
    }
}

fn nearest_radius<T: Real>(rays: &[(T, T)], theta: T) -> Option<T> {
    rays.iter()
        .min_by(|a, b| (a.0 - theta).abs().partial_cmp(&(b.0 - theta).abs()).unwrap_or(std::cmp::Ordering::Equal))
        .map(|r| r.1)
}
