use std::collections::HashMap;
use std::f64::consts::PI;

use active_coreset::freespace::uniform_in_simplex;
use active_coreset::{
    gjk_distance, gjk_intersects, sample, triangulate_bounds, BoundingBox, CrossPolytope, Point64, SamplerState,
    TriangulatedFreeSpace,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

// grid points on the box diagonal sit on a shared edge, where rounding can
// put them a hair outside both neighbours
const SLACK: f64 = 1e-12;

fn unit_box(d: usize) -> BoundingBox<f64> {
    BoundingBox::new(Point64::zeros(d), Point64::new(&vec![1.0; d])).unwrap()
}

/// Axis-aligned diamond with half-diagonals `rx`, `ry`; area 2·rx·ry.
fn diamond(cx: f64, cy: f64, rx: f64, ry: f64) -> CrossPolytope<f64> {
    CrossPolytope::from_half_diagonals(
        Point64::new(&[cx, cy]),
        vec![Point64::new(&[rx, 0.0]), Point64::new(&[0.0, ry])],
    )
}

/// Rotated diamond, to get edges at arbitrary slopes.
fn tilted(cx: f64, cy: f64, rx: f64, ry: f64, t: f64) -> CrossPolytope<f64> {
    let (c, s) = (t.cos(), t.sin());
    CrossPolytope::from_half_diagonals(
        Point64::new(&[cx, cy]),
        vec![Point64::new(&[rx * c, rx * s]), Point64::new(&[-ry * s, ry * c])],
    )
}

/// Whether `x` lies within `tol` of a polytope boundary, in gauge units.
fn near_boundary(polys: &[CrossPolytope<f64>], x: &Point64, tol: f64) -> bool {
    polys.iter().any(|c| (c.gauge(x) - 1.0).abs() < tol)
}

fn shrink(simplex: &[Point64], by: f64) -> Vec<Point64> {
    let n = simplex.len() as f64;
    let mut c = Point64::zeros(simplex[0].dim());
    for v in simplex {
        c = c.offset(v, 1.0 / n);
    }
    simplex.iter().map(|v| v.lerp(&c, by)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // disjoint diamonds inside the box: free area is the box minus their areas
    #[test]
    fn volume_conservation(raw in proptest::collection::vec((0.15..0.85f64, 0.15..0.85f64, 0.03..0.14f64, 0.03..0.14f64, 0.0..PI), 1..6)) {
        let mut polys: Vec<CrossPolytope<f64>> = Vec::new();
        let mut radii: Vec<(f64, f64, f64)> = Vec::new();
        for &(x, y, rx, ry, t) in &raw {
            let r = rx.max(ry);
            if radii.iter().all(|&(a, b, q)| ((a - x).powi(2) + (b - y).powi(2)).sqrt() > q + r + 1e-3) {
                radii.push((x, y, r));
                polys.push(tilted(x, y, rx, ry, t));
            }
        }
        let mut fs = triangulate_bounds(&unit_box(2));
        let mut expected = 1.0;
        for c in &polys {
            let before = fs.total_volume();
            let rep = fs.remove_polytope(c).unwrap();
            let area = c.volume();
            expected -= area;
            prop_assert!((rep.removed_volume - area).abs() < 1e-12, "{} vs {}", rep.removed_volume, area);
            prop_assert!((before - fs.total_volume() - rep.removed_volume).abs() < 1e-12);
            prop_assert!((fs.total_volume() - expected).abs() < 1e-12);
            prop_assert!((fs.sum_volumes() - fs.total_volume()).abs() < 1e-12);
        }
    }

    // overlapping and clipped removals commute
    #[test]
    fn removals_commute(
        a in (0.0..1.0f64, 0.0..1.0f64, 0.05..0.4f64, 0.05..0.4f64, 0.0..PI),
        b in (0.0..1.0f64, 0.0..1.0f64, 0.05..0.4f64, 0.05..0.4f64, 0.0..PI),
    ) {
        let pa = tilted(a.0, a.1, a.2, a.3, a.4);
        let pb = tilted(b.0, b.1, b.2, b.3, b.4);
        let run = |first: &CrossPolytope<f64>, second: &CrossPolytope<f64>| {
            let mut fs = triangulate_bounds(&unit_box(2));
            fs.remove_polytope(first).unwrap();
            fs.remove_polytope(second).unwrap();
            fs
        };
        let ab = run(&pa, &pb);
        let ba = run(&pb, &pa);
        prop_assert!((ab.total_volume() - ba.total_volume()).abs() < 1e-12);
        let polys = [pa, pb];
        for i in 0..40 {
            for j in 0..40 {
                let x = Point64::new(&[(i as f64 + 0.5) / 40.0, (j as f64 + 0.5) / 40.0]);
                if near_boundary(&polys, &x, 1e-6) {
                    continue;
                }
                prop_assert_eq!(ab.covers(&x, SLACK), ba.covers(&x, SLACK));
                let free = !polys.iter().any(|c| c.gauge(&x) < 1.0);
                prop_assert_eq!(ab.covers(&x, SLACK), free, "{:?}", x);
            }
        }
    }
}

#[test]
fn simplex_sampling_is_uniform() {
    // split the triangle into 16 congruent cells by the floors of 4·λ
    let tri = vec![Point64::new(&[0.1, 0.2]), Point64::new(&[2.0, 0.4]), Point64::new(&[0.7, 1.9])];
    let (ax, ay, bx, by, cx, cy) = (tri[0][0], tri[0][1], tri[1][0], tri[1][1], tri[2][0], tri[2][1]);
    let det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 32_000;
    let mut counts: HashMap<(i32, i32, bool), usize> = HashMap::new();
    for _ in 0..n {
        let p = uniform_in_simplex(&tri, &mut rng);
        let l1 = ((p[0] - ax) * (cy - ay) - (cx - ax) * (p[1] - ay)) / det;
        let l2 = ((bx - ax) * (p[1] - ay) - (p[0] - ax) * (by - ay)) / det;
        let l0 = 1.0 - l1 - l2;
        assert!(l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12);
        let (i, j, k) = ((4.0 * l0).floor() as i32, (4.0 * l1).floor() as i32, (4.0 * l2).floor() as i32);
        *counts.entry((i, j, i + j + k == 3)).or_default() += 1;
    }
    assert_eq!(counts.len(), 16);
    let e = n as f64 / 16.0;
    let stat: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let crit = ChiSquared::new(15.0).unwrap().inverse_cdf(0.99);
    assert!(stat < crit, "χ² {stat} ≥ {crit}");
}

#[test]
fn no_samples_inside_removed_polytopes() {
    let polys = [diamond(0.3, 0.3, 0.2, 0.1), tilted(0.7, 0.6, 0.25, 0.15, 0.6), diamond(0.0, 1.0, 0.3, 0.3)];
    let mut fs = triangulate_bounds(&unit_box(2));
    for c in &polys {
        fs.remove_polytope(c).unwrap();
    }
    let mut st = SamplerState::new(3);
    for _ in 0..20_000 {
        let x = sample(&fs, &mut st).unwrap();
        assert!(unit_box(2).contains(&x));
        assert!(polys.iter().all(|c| !c.contains_strict(&x)), "{x:?}");
    }
}

#[test]
fn incremental_equals_batch() {
    let polys = vec![
        diamond(0.25, 0.25, 0.15, 0.2),
        tilted(0.6, 0.4, 0.3, 0.1, 0.9),
        tilted(0.55, 0.55, 0.12, 0.2, 2.0),
        diamond(0.95, 0.9, 0.2, 0.3),
    ];
    let mut inc = triangulate_bounds(&unit_box(2));
    for c in &polys {
        inc.remove_polytope(c).unwrap();
    }
    let batch = TriangulatedFreeSpace::batch(&unit_box(2), &polys).unwrap();
    assert!((inc.total_volume() - batch.total_volume()).abs() < 1e-12);
    for i in 0..200 {
        for j in 0..200 {
            let x = Point64::new(&[(i as f64 + 0.5) / 200.0, (j as f64 + 0.5) / 200.0]);
            if near_boundary(&polys, &x, 1e-6) {
                continue;
            }
            assert_eq!(inc.covers(&x, SLACK), batch.covers(&x, SLACK), "{x:?}");
        }
    }
}

#[test]
fn octahedron_out_of_the_cube() {
    let r = 0.3;
    let c = CrossPolytope::from_half_diagonals(
        Point64::new(&[0.5, 0.45, 0.5]),
        vec![Point64::new(&[r, 0.0, 0.0]), Point64::new(&[0.0, r, 0.0]), Point64::new(&[0.0, 0.0, r])],
    );
    let mut fs = triangulate_bounds(&unit_box(3));
    assert_eq!(fs.regions().len(), 6);
    fs.remove_polytope(&c).unwrap();
    let want = 1.0 - 4.0 / 3.0 * r * r * r;
    assert!((fs.total_volume() - want).abs() < 1e-12, "{} vs {want}", fs.total_volume());
    let mut st = SamplerState::new(9);
    for _ in 0..5000 {
        let x = sample(&fs, &mut st).unwrap();
        assert!(!c.contains_strict(&x));
    }
}

#[test]
fn regions_are_interior_disjoint() {
    let polys = [diamond(0.3, 0.6, 0.2, 0.15), tilted(0.7, 0.3, 0.2, 0.1, 0.4)];
    let mut fs = triangulate_bounds(&unit_box(2));
    for c in &polys {
        fs.remove_polytope(c).unwrap();
    }
    let shrunk: Vec<Vec<Point64>> = fs.regions().iter().map(|r| shrink(&r.simplex, 1e-6)).collect();
    for i in 0..shrunk.len() {
        for j in i + 1..shrunk.len() {
            assert!(!gjk_intersects(&shrunk[i], &shrunk[j]), "regions {i} and {j} overlap");
        }
        for c in &polys {
            assert!(!gjk_intersects(&shrunk[i], &shrink(&c.vertices, 1e-6)), "region {i} overlaps a polytope");
        }
    }
}

#[test]
fn gjk_distances() {
    let sq = |x: f64, y: f64| {
        vec![
            Point64::new(&[x, y]),
            Point64::new(&[x + 1.0, y]),
            Point64::new(&[x + 1.0, y + 1.0]),
            Point64::new(&[x, y + 1.0]),
        ]
    };
    let r = gjk_distance(&sq(0.0, 0.0), &sq(2.0, 0.0));
    assert!(!r.intersects && (r.distance - 1.0).abs() < 1e-9);
    // corner to corner along the diagonal
    let r = gjk_distance(&sq(0.0, 0.0), &sq(2.0, 3.0));
    assert!((r.distance - 5f64.sqrt()).abs() < 1e-9, "{}", r.distance);
    let r = gjk_distance(&sq(0.0, 0.0), &sq(0.5, 0.5));
    assert!(r.intersects && r.distance == 0.0);
    // point above a tetrahedron's face x + y + z = 1
    let tet = vec![
        Point64::zeros(3),
        Point64::new(&[1.0, 0.0, 0.0]),
        Point64::new(&[0.0, 1.0, 0.0]),
        Point64::new(&[0.0, 0.0, 1.0]),
    ];
    let p = vec![Point64::new(&[1.0, 1.0, 1.0])];
    let r = gjk_distance(&tet, &p);
    assert!((r.distance - 2.0 / 3f64.sqrt()).abs() < 1e-9, "{}", r.distance);
}
