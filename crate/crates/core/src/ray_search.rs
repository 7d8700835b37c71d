//! Boundary location along a ray: geometric growth, then bisection.

use crate::error::{Error, Result};
use crate::oracle::MembershipOracle;
use crate::point::{Direction, Point};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySearchResult<T> {
    /// Largest probed parameter known to be inside.
    pub t_inside: T,
    /// Smallest probed parameter known to be outside.
    pub t_outside: T,
    pub queries_used: u64,
}

impl<T: Real> RaySearchResult<T> {
    pub fn width(&self) -> T {
        self.t_outside - self.t_inside
    }
}

/// Growth factor of the exponential phase.
pub const DEFAULT_BASE: f64 = 2.0;

/// Finds the exit parameter of the ray `p + t·u` to precision `eps`.
///
/// Costs at most `2⌈log₂(t_max/eps)⌉ + 2` queries, counting the check of `p`.
pub fn extreme_along_ray<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    p: &Point<T>,
    u: &Direction<T>,
    eps: T,
    t_max: T,
) -> Result<RaySearchResult<T>> {
    extreme_along_ray_with_base(oracle, p, u, eps, t_max, T::c(DEFAULT_BASE))
}

pub fn extreme_along_ray_with_base<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    p: &Point<T>,
    u: &Direction<T>,
    eps: T,
    t_max: T,
    base: T,
) -> Result<RaySearchResult<T>> {
    search(oracle, p, u, eps, t_max, base, None, None)
}

/// Exponential search whose stride never exceeds `max_step`.
///
/// Plain doubling can hop over a gap narrower than its stride and report the
/// far side of a neighbouring obstacle. With the stride capped below the
/// smallest gap every probe before the exit stays in the starting body, at a
/// cost of up to `t_max/max_step` extra queries.
pub fn extreme_along_ray_capped<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    p: &Point<T>,
    u: &Direction<T>,
    eps: T,
    t_max: T,
    max_step: Option<T>,
) -> Result<RaySearchResult<T>> {
    search(oracle, p, u, eps, t_max, T::c(DEFAULT_BASE), max_step, None)
}

/// Same search, also recording the bracket after every probe.
pub fn extreme_along_ray_traced<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    p: &Point<T>,
    u: &Direction<T>,
    eps: T,
    t_max: T,
    trace: &mut Vec<(T, T)>,
) -> Result<RaySearchResult<T>> {
    search(oracle, p, u, eps, t_max, T::c(DEFAULT_BASE), None, Some(trace))
}

fn check_args<T: Real>(eps: T, t_max: T, max_step: Option<T>) -> Result<()> {
    if !(eps > T::zero()) || !(t_max > T::zero()) {
        return Err(Error::InvalidInput("ray search needs eps > 0 and t_max > 0".into()));
    }
    if let Some(h) = max_step {
        if !(h > T::zero()) {
            return Err(Error::InvalidInput("max_step must be positive".into()));
        }
    }
    Ok(())
}

fn next_probe<T: Real>(lo: T, step: T, max_step: Option<T>) -> T {
    match max_step {
        Some(h) if step - lo > h => lo + h,
        _ => step,
    }
}

fn search<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    p: &Point<T>,
    u: &Direction<T>,
    eps: T,
    t_max: T,
    base: T,
    max_step: Option<T>,
    mut trace: Option<&mut Vec<(T, T)>>,
) -> Result<RaySearchResult<T>> {
    check_args(eps, t_max, max_step)?;
    if !(base > T::one()) {
        return Err(Error::InvalidInput("exponential base must exceed 1".into()));
    }
    let dir = u.as_point();
    let mut queries = 1u64;
    if !oracle.query(p) {
        return Err(Error::StartOutside);
    }
    let mut lo = T::zero();
    let mut step = eps;
    let hi;
    loop {
        let t = next_probe(lo, step, max_step).min(t_max);
        queries += 1;
        let inside = oracle.query(&p.offset(dir, t));
        if inside {
            lo = t;
            if t >= t_max {
                return Err(Error::Unbounded { t_max: t_max.to_f64_lossy() });
            }
            step *= base;
        } else {
            hi = t;
            break;
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push((lo, t_max));
        }
    }
    if let Some(tr) = trace.as_deref_mut() {
        tr.push((lo, hi));
    }
    bisect(oracle, p, dir, eps, lo, hi, queries, trace)
}

#[allow(clippy::too_many_arguments)]
fn bisect<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    p: &Point<T>,
    dir: &Point<T>,
    eps: T,
    mut lo: T,
    mut hi: T,
    mut queries: u64,
    mut trace: Option<&mut Vec<(T, T)>>,
) -> Result<RaySearchResult<T>> {
    while hi - lo > eps {
        let mid = (lo + hi) * T::c(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        queries += 1;
        if oracle.query(&p.offset(dir, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push((lo, hi));
        }
    }
    Ok(RaySearchResult { t_inside: lo, t_outside: hi, queries_used: queries })
}

/// Search started from a guessed exit parameter, for rays whose neighbours
/// were already measured. Assumes `p` is inside and does not re-check it.
pub(crate) fn extreme_along_ray_near<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    p: &Point<T>,
    u: &Direction<T>,
    eps: T,
    t_max: T,
    guess: T,
    max_step: Option<T>,
) -> Result<RaySearchResult<T>> {
    check_args(eps, t_max, max_step)?;
    let dir = u.as_point();
    let g = guess.max(eps).min(t_max);
    let mut queries = 1u64;
    let (lo, hi);
    if oracle.query(&p.offset(dir, g)) {
        if g >= t_max {
            return Err(Error::Unbounded { t_max: t_max.to_f64_lossy() });
        }
        let mut l = g;
        let mut step = eps;
        loop {
            let t = (l + max_step.map_or(step, |h| step.min(h))).min(t_max);
            queries += 1;
            if oracle.query(&p.offset(dir, t)) {
                if t >= t_max {
                    return Err(Error::Unbounded { t_max: t_max.to_f64_lossy() });
                }
                l = t;
                step *= T::c(2.0);
            } else {
                lo = l;
                hi = t;
                break;
            }
        }
    } else {
        let mut h = g;
        let mut step = eps;
        loop {
            let t = h - max_step.map_or(step, |m| step.min(m));
            if t <= T::zero() {
                lo = T::zero();
                hi = h;
                break;
            }
            queries += 1;
            if oracle.query(&p.offset(dir, t)) {
                lo = t;
                hi = h;
                break;
            }
            h = t;
            step *= T::c(2.0);
        }
    }
    bisect(oracle, p, dir, eps, lo, hi, queries, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FnOracle;

    #[test]
    fn segment_endpoint() {
        let o = FnOracle::new(1, |p: &Point<f64>| p[0] >= 0.0 && p[0] <= 0.5);
        let r = extreme_along_ray(&o, &Point::new(&[0.1]), &Direction::axis(1, 0), 1e-3, 4.0).unwrap();
        assert!(r.t_inside >= 0.399 && r.t_inside <= 0.4, "{r:?}");
        assert!(r.width() <= 1e-3);
        assert_eq!(r.queries_used, o.stats().total_queries);
    }

    #[test]
    fn immediate_exit() {
        let o = FnOracle::new(1, |p: &Point<f64>| p[0] >= 0.0 && p[0] <= 0.5);
        let r = extreme_along_ray(&o, &Point::new(&[0.4995]), &Direction::axis(1, 0), 1e-3, 4.0).unwrap();
        assert_eq!(r.t_inside, 0.0);
        assert_eq!(r.t_outside, 1e-3);
        assert_eq!(r.queries_used, 2);
    }

    #[test]
    fn errors() {
        let o = FnOracle::new(1, |p: &Point<f64>| p[0].abs() <= 1.0);
        let e = extreme_along_ray(&o, &Point::new(&[3.0]), &Direction::axis(1, 0), 1e-3, 4.0);
        assert_eq!(e, Err(Error::StartOutside));
        let e = extreme_along_ray(&o, &Point::new(&[0.0]), &Direction::axis(1, 0), 1e-3, 0.5);
        assert!(matches!(e, Err(Error::Unbounded { .. })));
    }

    #[test]
    fn near_search_agrees() {
        let o = FnOracle::new(2, |p: &Point<f64>| p.norm() <= 1.0);
        let u = Direction::from_angle(0.3);
        for guess in [0.01, 0.5, 0.999, 1.0, 1.2, 1.9] {
            let r = extreme_along_ray_near(&o, &Point::zeros(2), &u, 1e-4, 3.0, guess, None).unwrap();
            assert!(r.t_inside <= 1.0 && r.t_outside > 1.0 && r.width() <= 1e-4, "{guess}: {r:?}");
        }
        let close = extreme_along_ray_near(&o, &Point::zeros(2), &u, 1e-4, 3.0, 1.00004, None).unwrap();
        assert!(close.queries_used <= 3);
    }
}
