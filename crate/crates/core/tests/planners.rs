use active_coreset::planners::{RecordingSampler, ReplaySampler};
use active_coreset::{
    make_analytic_oracle, preprocess, rrt, rrt_star, triangulate_bounds, BoundingBox, FreeSpaceSampler, Meta64,
    OnTheFlySampler, PlanResult, PlannerConfig, Point64, PreprocessConfig, ShapeSpec, UniformSampler,
};

const BALL: ([f64; 2], f64) = ([0.5, 0.5], 0.2);
const BOX: ([f64; 2], [f64; 2]) = ([0.05, 0.7], [0.25, 0.95]);

fn meta() -> Meta64 {
    let b = BoundingBox::new(Point64::zeros(2), Point64::new(&[1.0, 1.0])).unwrap();
    Meta64::new(b, 0.01, 0.1, 0.3).unwrap()
}

fn world() -> active_coreset::oracle::AnalyticOracle<f64> {
    let shapes = vec![
        ShapeSpec::Ball { center: BALL.0.to_vec(), radius: BALL.1 },
        ShapeSpec::Box { lo: BOX.0.to_vec(), hi: BOX.1.to_vec() },
    ];
    make_analytic_oracle(&shapes, meta()).unwrap()
}

/// Index of the obstacle holding (x, y): 0 for the ball, 1 for the box.
fn shape_of(x: f64, y: f64) -> Option<usize> {
    if (x - BALL.0[0]).powi(2) + (y - BALL.0[1]).powi(2) <= BALL.1 * BALL.1 {
        Some(0)
    } else if (BOX.0[0]..=BOX.1[0]).contains(&x) && (BOX.0[1]..=BOX.1[1]).contains(&y) {
        Some(1)
    } else {
        None
    }
}

fn blocked(x: f64, y: f64) -> bool {
    shape_of(x, y).is_some()
}

fn start() -> Point64 {
    Point64::new(&[0.05, 0.05])
}

fn goal() -> Point64 {
    Point64::new(&[0.95, 0.95])
}

fn cfg(seed: u64) -> PlannerConfig<f64> {
    PlannerConfig { seed, max_iterations: 20_000, ..PlannerConfig::new(0.05, 0.005) }
}

/// Re-checks every segment at a tenth of the planner's edge resolution.
fn certify(r: &PlanResult, res: f64) {
    let path = r.path.as_ref().expect("path found");
    for w in path.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let n = (len / (res / 10.0)).ceil().max(1.0) as usize;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let (x, y) = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]));
            assert!(!blocked(x, y), "({x}, {y}) on {a:?} -> {b:?}");
        }
    }
}

#[test]
fn paths_are_collision_free() {
    let o = world();
    for seed in 0..10 {
        let c = cfg(seed);
        let mut s = UniformSampler::new(meta().bounds, seed);
        let r = rrt(&o, &mut s, &start(), &goal(), &c).unwrap();
        certify(&r, c.edge_resolution);
        let mut s = UniformSampler::new(meta().bounds, seed);
        let r = rrt_star(&o, &mut s, &start(), &goal(), &c).unwrap();
        certify(&r, c.edge_resolution);
    }
}

#[test]
fn same_seed_same_result() {
    let o = world();
    let run = || {
        let mut s = UniformSampler::new(meta().bounds, 42);
        rrt_star(&o, &mut s, &start(), &goal(), &cfg(42)).unwrap().without_timing()
    };
    assert_eq!(run(), run());
}

#[test]
fn replayed_samples_reproduce_the_plan() {
    let o = world();
    let mut rec = RecordingSampler { inner: UniformSampler::new(meta().bounds, 5), drawn: Vec::new() };
    let first = rrt(&o, &mut rec, &start(), &goal(), &cfg(5)).unwrap();
    assert!(first.found());
    let pts: Vec<Point64> = rec.drawn.iter().map(|p| Point64::new(p)).collect();
    let mut replay = ReplaySampler::new(pts);
    let second = rrt(&o, &mut replay, &start(), &goal(), &cfg(5)).unwrap();
    assert_eq!(first.without_timing(), second.without_timing());
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn empty_map_paths_are_short() {
    let m = meta();
    let o = make_analytic_oracle::<f64>(&[], m.clone()).unwrap();
    let (a, b) = (Point64::new(&[0.1, 0.1]), Point64::new(&[0.9, 0.9]));
    let straight = a.dist(&b);
    for seed in 0..20 {
        let mut s = UniformSampler::new(m.bounds.clone(), seed);
        let r = rrt(&o, &mut s, &a, &b, &cfg(seed)).unwrap();
        assert!(r.path_length <= 1.5 * straight, "seed {seed}: {} vs {straight}", r.path_length);
    }
}

#[test]
fn rrt_star_is_not_longer() {
    let o = world();
    let mut plain = Vec::new();
    let mut star = Vec::new();
    for seed in 0..15 {
        let mut s = UniformSampler::new(meta().bounds, seed);
        plain.push(rrt(&o, &mut s, &start(), &goal(), &cfg(seed)).unwrap().path_length);
        let mut s = UniformSampler::new(meta().bounds, seed);
        star.push(rrt_star(&o, &mut s, &start(), &goal(), &cfg(seed)).unwrap().path_length);
    }
    let (p, s) = (median(plain), median(star));
    assert!(s <= p, "rrt* {s} vs rrt {p}");
}

#[test]
fn free_space_sampling_wastes_nothing() {
    let o = world();
    let pre = preprocess(&o, &meta(), &PreprocessConfig::default()).unwrap();
    assert_eq!(pre.discoveries.len(), 2);
    for seed in 0..10 {
        let mut s = FreeSpaceSampler::new(&pre.free_space, seed);
        let r = rrt(&o, &mut s, &start(), &goal(), &cfg(seed)).unwrap();
        assert!(r.found());
        assert_eq!(r.samples_wasted, 0);
        certify(&r, cfg(seed).edge_resolution);
    }
}

#[test]
fn on_the_fly_discovers_blocking_obstacles() {
    let o = world();
    let mut s = OnTheFlySampler::new(triangulate_bounds(&meta().bounds), meta(), 3);
    let r = rrt(&o, &mut s, &start(), &goal(), &cfg(3)).unwrap();
    assert!(r.found());
    assert!(!s.discoveries.is_empty());
    // every sample that hit an obstacle triggered at most one discovery
    assert!(s.discoveries.len() as u64 + s.failures as u64 <= r.samples_wasted);
    for d in &s.discoveries {
        // the polytope covers the whole obstacle its probe landed in
        let shape = shape_of(d.probe[0], d.probe[1]).expect("probe inside an obstacle");
        for k in 0..10_000 {
            let (x, y) = (((k % 100) as f64 + 0.5) / 100.0, ((k / 100) as f64 + 0.5) / 100.0);
            if shape_of(x, y) == Some(shape) {
                assert!(d.polytope.contains(&Point64::new(&[x, y])), "({x}, {y})");
            }
        }
    }
}
