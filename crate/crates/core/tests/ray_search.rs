use std::f64::consts::TAU;

use active_coreset::oracle::FnOracle;
use active_coreset::ray_search::extreme_along_ray_capped;
use active_coreset::{directional_width, extreme_along_ray, farthest, Direction64, Error, MembershipOracle, Point64};
use proptest::prelude::*;

fn disk(cx: f64, cy: f64, r: f64) -> impl Fn(&Point64) -> bool + Send + Sync {
    move |p: &Point64| (p[0] - cx).powi(2) + (p[1] - cy).powi(2) <= r * r
}

/// Exit parameter of `p + t·u` from the disk, from the quadratic.
fn disk_exit(c: (f64, f64), r: f64, p: (f64, f64), u: (f64, f64)) -> f64 {
    let (dx, dy) = (p.0 - c.0, p.1 - c.1);
    let b = dx * u.0 + dy * u.1;
    let cc = dx * dx + dy * dy - r * r;
    -b + (b * b - cc).sqrt()
}

#[test]
fn segment_endpoint() {
    let o = FnOracle::new(1, |p: &Point64| (0.0..=0.5).contains(&p[0]));
    let r = extreme_along_ray(&o, &Point64::new(&[0.1]), &Direction64::axis(1, 0), 1e-3, 1.0).unwrap();
    assert!(r.t_inside >= 0.399 && r.t_inside <= 0.4, "{r:?}");
}

#[test]
fn immediate_exit() {
    let o = FnOracle::new(1, |p: &Point64| (0.0..=0.5).contains(&p[0]));
    let r = extreme_along_ray(&o, &Point64::new(&[0.4999]), &Direction64::axis(1, 0), 1e-3, 1.0).unwrap();
    assert_eq!(r.t_inside, 0.0);
    assert!(r.t_outside <= 1e-3);
}

#[test]
fn unit_disk_radius() {
    let o = FnOracle::new(2, disk(0.0, 0.0, 1.0));
    let r = extreme_along_ray(&o, &Point64::zeros(2), &Direction64::axis(2, 0), 1e-4, 4.0).unwrap();
    assert!((r.t_inside - 1.0).abs() <= 1e-4 && r.t_inside <= 1.0);
}

#[test]
fn errors() {
    let o = FnOracle::new(2, disk(0.0, 0.0, 1.0));
    let u = Direction64::axis(2, 0);
    assert_eq!(extreme_along_ray(&o, &Point64::new(&[2.0, 0.0]), &u, 1e-3, 4.0).err(), Some(Error::StartOutside));
    let half_plane = FnOracle::new(2, |p: &Point64| p[1] <= 0.0);
    assert!(matches!(
        extreme_along_ray(&half_plane, &Point64::new(&[0.0, -1.0]), &u, 1e-3, 4.0),
        Err(Error::Unbounded { .. })
    ));
}

#[test]
fn doubling_hops_a_gap_and_the_cap_prevents_it() {
    // [−1, 1] and [1.1, 3.1]: the probe at 1.28 lands in the second body
    let two = FnOracle::new(1, |p: &Point64| p[0].abs() <= 1.0 || (1.1..=3.1).contains(&p[0]));
    let u = Direction64::axis(1, 0);
    let hop = extreme_along_ray(&two, &Point64::zeros(1), &u, 0.01, 8.0).unwrap();
    assert!(hop.t_inside > 3.0, "{hop:?}");
    let capped = extreme_along_ray_capped(&two, &Point64::zeros(1), &u, 0.01, 8.0, Some(0.05)).unwrap();
    assert!(capped.t_inside <= 1.0 && capped.t_outside >= 1.0, "{capped:?}");
}

#[test]
fn widths() {
    let eps = 1e-3;
    let o = FnOracle::new(2, disk(0.0, 0.0, 1.0));
    let w = directional_width(&o, &Point64::zeros(2), &Direction64::axis(2, 0), eps, 4.0).unwrap();
    assert!((w - 2.0).abs() <= 2.0 * eps, "{w}");
    let b = FnOracle::new(2, |p: &Point64| p[0].abs() <= 1.0 && p[1].abs() <= 2.0);
    let w = directional_width(&b, &Point64::new(&[0.3, 0.5]), &Direction64::axis(2, 1), eps, 10.0).unwrap();
    assert!((w - 4.0).abs() <= 2.0 * eps, "{w}");
    let u = Direction64::from_angle(0.7);
    let a = directional_width(&b, &Point64::zeros(2), &u, eps, 10.0).unwrap();
    let c = directional_width(&b, &Point64::zeros(2), &u.neg(), eps, 10.0).unwrap();
    assert!((a - c).abs() <= 2.0 * eps);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bracket_holds_the_exit(
        cx in -1.0..1.0f64, cy in -1.0..1.0f64, r in 0.2..2.0f64,
        rho in 0.0..0.95f64, phi in 0.0..TAU, theta in 0.0..TAU,
        log_eps in -4.0..-1.5f64,
    ) {
        let eps = 10f64.powf(log_eps);
        let o = FnOracle::new(2, disk(cx, cy, r));
        let p = (cx + rho * r * phi.cos(), cy + rho * r * phi.sin());
        let u = (theta.cos(), theta.sin());
        let t_max = 2.0 * r;
        let res = extreme_along_ray(&o, &Point64::new(&[p.0, p.1]), &Direction64::from_angle(theta), eps, t_max).unwrap();
        let exit = disk_exit((cx, cy), r, p, u);
        prop_assert!(res.t_inside <= exit + 1e-12 && exit <= res.t_outside + 1e-12);
        prop_assert!(res.width() <= eps && res.t_inside >= 0.0);
        let bound = 2 * (t_max / eps).log2().ceil() as u64 + 2;
        prop_assert!(res.queries_used <= bound, "{} > {}", res.queries_used, bound);
        prop_assert_eq!(res.queries_used, o.stats().total_queries);
    }

    #[test]
    fn farthest_matches_support(
        a in 0.3..1.5f64, b in 0.3..1.5f64, theta in 0.0..TAU,
    ) {
        let eps = 1e-3;
        let o = FnOracle::new(2, move |p: &Point64| (p[0] / a).powi(2) + (p[1] / b).powi(2) <= 1.0);
        let u = Direction64::from_angle(theta);
        let f = farthest(&o, eps, &u, &Point64::zeros(2), 2.0 * a.max(b)).unwrap();
        // support function of an axis-aligned ellipse
        let h = ((a * theta.cos()).powi(2) + (b * theta.sin()).powi(2)).sqrt();
        prop_assert!(f.support_value <= h + 1e-12 && f.support_value >= h - eps, "{} vs {}", f.support_value, h);
        prop_assert!((f.point[0] / a).powi(2) + (f.point[1] / b).powi(2) <= 1.0);
    }
}

#[test]
fn farthest_in_three_dimensions() {
    let (a, b, c) = (1.0, 0.6, 0.4);
    let o = FnOracle::new(3, move |p: &Point64| (p[0] / a).powi(2) + (p[1] / b).powi(2) + (p[2] / c).powi(2) <= 1.0);
    let eps = 1e-2;
    for k in 0..8 {
        let t = k as f64 * 0.7;
        let v = Point64::new(&[t.cos(), t.sin() * 0.8, 0.6]);
        let u = Direction64::normalize(&v).unwrap();
        let f = farthest(&o, eps, &u, &Point64::new(&[0.1, 0.0, 0.0]), 2.0).unwrap();
        let w = u.as_point();
        let h = ((a * w[0]).powi(2) + (b * w[1]).powi(2) + (c * w[2]).powi(2)).sqrt();
        assert!(f.support_value <= h + 1e-12 && f.support_value >= h - eps, "{} vs {h}", f.support_value);
    }
}
