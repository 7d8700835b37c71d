//! Map approximation: how well each method reconstructs a bitmap for a
//! given number of oracle queries. Ours is the preprocessing pass; the
//! baselines are a breadth-first pixel sweep and an RRT exploring the map.

use std::collections::VecDeque;
use std::sync::Mutex;

use active_coreset::oracle::{BitmapOracle, GrayMap};
use active_coreset::{preprocess, MembershipOracle, OracleStats, Point64, Sampler, UniformSampler};
use serde::{Deserialize, Serialize};

use crate::scenario::{ScenarioError, World};

/// Passes queries through and keeps every (point, answer) pair in order.
pub struct RecordingOracle<'a> {
    inner: &'a dyn MembershipOracle<f64>,
    log: Mutex<Vec<(Point64, bool)>>,
}

impl<'a> RecordingOracle<'a> {
    pub fn new(inner: &'a dyn MembershipOracle<f64>) -> Self {
        RecordingOracle { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn into_log(self) -> Vec<(Point64, bool)> {
        self.log.into_inner().expect("log lock")
    }
}

impl MembershipOracle<f64> for RecordingOracle<'_> {
    fn query(&self, p: &Point64) -> bool {
        let r = self.inner.query(p);
        self.log.lock().expect("log lock").push((p.clone(), r));
        r
    }
    fn stats(&self) -> OracleStats {
        self.inner.stats()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

/// Obstacle flags per pixel, row-major like the map.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        Grid { width, height, cells: vec![false; width * height] }
    }

    pub fn truth(o: &BitmapOracle<f64>) -> Self {
        let m = o.map();
        let mut g = Grid::new(m.width, m.height);
        for row in 0..m.height {
            for col in 0..m.width {
                g.cells[row * m.width + col] = o.is_obstacle_pixel(col, row);
            }
        }
        g
    }

    pub fn set(&mut self, col: usize, row: usize, v: bool) {
        self.cells[row * self.width + col] = v;
    }

    pub fn agreement(&self, other: &Grid) -> f64 {
        let same = self.cells.iter().zip(&other.cells).filter(|(a, b)| a == b).count();
        same as f64 / self.cells.len() as f64
    }

    pub fn to_map(&self) -> GrayMap {
        let mut m = GrayMap::new(self.width, self.height, 255);
        for row in 0..self.height {
            for col in 0..self.width {
                if self.cells[row * self.width + col] {
                    m.set(col, row, 0);
                }
            }
        }
        m
    }
}

/// Convex hull in the plane (monotone chain), counter-clockwise.
pub fn hull_2d(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Marks the pixels whose centres lie in the hull of `points`.
fn fill_hull(grid: &mut Grid, o: &BitmapOracle<f64>, points: &[(f64, f64)]) {
    let h = hull_2d(points);
    if h.len() < 3 {
        return;
    }
    let mpp = o.meters_per_pixel();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &h {
        x0 = x0.min(p.0);
        x1 = x1.max(p.0);
        y0 = y0.min(p.1);
        y1 = y1.max(p.1);
    }
    let inside = |x: f64, y: f64| {
        (0..h.len()).all(|i| {
            let (a, b) = (h[i], h[(i + 1) % h.len()]);
            (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0) >= -1e-12
        })
    };
    for row in 0..grid.height {
        let cy = o.pixel_center(0, row)[1];
        if cy < y0 - mpp || cy > y1 + mpp {
            continue;
        }
        for col in 0..grid.width {
            let cx = o.pixel_center(col, 0)[0];
            if cx < x0 - mpp || cx > x1 + mpp {
                continue;
            }
            if inside(cx, cy) {
                grid.set(col, row, true);
            }
        }
    }
}

/// Applies the first `q` logged answers to an all-free grid.
fn replay(o: &BitmapOracle<f64>, log: &[(Point64, bool)], q: usize) -> Grid {
    let m = o.map();
    let mut g = Grid::new(m.width, m.height);
    for (p, hit) in &log[..q.min(log.len())] {
        if let Some((c, r)) = o.pixel_of(p) {
            g.set(c, r, *hit);
        }
    }
    g
}

/// Our reconstruction after `q` queries: every obstacle whose discovery
/// finished by then, drawn as the hull of the inside points it queried,
/// plus every single inside answer.
pub struct OursRun {
    pub log: Vec<(Point64, bool)>,
    pub discoveries: Vec<std::ops::Range<u64>>,
    pub polytopes: usize,
}

impl OursRun {
    pub fn total_queries(&self) -> usize {
        self.log.len()
    }

    pub fn reconstruct(&self, o: &BitmapOracle<f64>, q: usize) -> Grid {
        let mut g = Grid::new(o.map().width, o.map().height);
        for (p, hit) in &self.log[..q.min(self.log.len())] {
            if *hit {
                if let Some((c, r)) = o.pixel_of(p) {
                    g.set(c, r, true);
                }
            }
        }
        for range in &self.discoveries {
            if range.end as usize > q {
                continue;
            }
            let pts: Vec<(f64, f64)> = self.log[range.start as usize..range.end as usize]
                .iter()
                .filter(|(_, hit)| *hit)
                .map(|(p, _)| (p[0], p[1]))
                .collect();
            fill_hull(&mut g, o, &pts);
        }
        g
    }
}

pub fn run_ours(world: &World) -> Result<OursRun, ScenarioError> {
    let rec = RecordingOracle::new(&world.oracle);
    let pre = preprocess(&rec, &world.meta, &world.scenario.preprocess_config())?;
    Ok(OursRun {
        discoveries: pre.discoveries.iter().map(|d| d.queries.clone()).collect(),
        polytopes: pre.discoveries.len(),
        log: rec.into_log(),
    })
}

/// Breadth-first sweep over 4-connected pixels from the start pixel,
/// querying each pixel centre and expanding through free pixels.
pub struct BfsRun {
    pub log: Vec<(Point64, bool)>,
    reached: Vec<bool>,
}

impl BfsRun {
    pub fn total_queries(&self) -> usize {
        self.log.len()
    }

    /// After the sweep completes, pixels it never reached are enclosed and
    /// therefore obstacles; before that they count as free.
    pub fn reconstruct(&self, o: &BitmapOracle<f64>, q: usize) -> Grid {
        let mut g = replay(o, &self.log, q);
        if q >= self.log.len() {
            for (i, &r) in self.reached.iter().enumerate() {
                if !r {
                    g.cells[i] = true;
                }
            }
        }
        g
    }
}

pub fn run_bfs(world: &World, o: &BitmapOracle<f64>) -> BfsRun {
    let m = o.map();
    let (w, h) = (m.width, m.height);
    let mut reached = vec![false; w * h];
    let mut log = Vec::new();
    let mut queue = VecDeque::new();
    if let Some((c, r)) = o.pixel_of(&world.start()) {
        reached[r * w + c] = true;
        queue.push_back((c, r));
    }
    while let Some((c, r)) = queue.pop_front() {
        let p = o.pixel_center(c, r);
        let hit = world.oracle.query(&p);
        log.push((p, hit));
        if hit {
            continue;
        }
        let mut push = |c: usize, r: usize| {
            if !reached[r * w + c] {
                reached[r * w + c] = true;
                queue.push_back((c, r));
            }
        };
        if c > 0 {
            push(c - 1, r);
        }
        if c + 1 < w {
            push(c + 1, r);
        }
        if r > 0 {
            push(c, r - 1);
        }
        if r + 1 < h {
            push(c, r + 1);
        }
    }
    BfsRun { log, reached }
}

/// RRT grown from the start with uniform samples and no goal; every sample
/// and every edge check point is a query.
pub fn run_rrt_exploration(
    world: &World,
    o: &BitmapOracle<f64>,
    budget: usize,
    step: f64,
    seed: u64,
) -> Vec<(Point64, bool)> {
    let mut sampler = UniformSampler::new(world.meta.bounds.clone(), seed);
    let res = o.meters_per_pixel();
    let mut nodes = vec![world.start()];
    let mut log = Vec::with_capacity(budget);
    let q = |p: Point64, log: &mut Vec<(Point64, bool)>| {
        let hit = world.oracle.query(&p);
        log.push((p, hit));
        hit
    };
    while log.len() < budget {
        let x = sampler.sample().expect("box sampling");
        if q(x.clone(), &mut log) {
            continue;
        }
        let near = nodes
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.dist(&x).total_cmp(&b.1.dist(&x)))
            .map(|(i, _)| i)
            .expect("root");
        let from = nodes[near].clone();
        let dist = from.dist(&x);
        let new = if dist <= step { x } else { from.lerp(&x, step / dist) };
        let n = (from.dist(&new) / res).ceil().max(1.0) as usize;
        let mut free = true;
        for k in 1..=n {
            if log.len() >= budget {
                free = false;
                break;
            }
            if q(from.lerp(&new, k as f64 / n as f64), &mut log) {
                free = false;
                break;
            }
        }
        if free {
            nodes.push(new);
        }
    }
    log.truncate(budget);
    log
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub queries: usize,
    pub ours: f64,
    pub bfs: f64,
    pub rrt: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapApproxReport {
    pub pixels: usize,
    pub obstacle_pixels: usize,
    pub polytopes: usize,
    pub ours_queries: usize,
    pub bfs_queries: usize,
    pub ours_agreement: f64,
    pub bfs_agreement: f64,
    /// RRT exploration given exactly our query count.
    pub rrt_agreement_at_ours_budget: f64,
    pub checkpoints: Vec<Checkpoint>,
}

pub struct MapApprox {
    pub report: MapApproxReport,
    pub ours: GrayMap,
    pub bfs: GrayMap,
    pub rrt: GrayMap,
}

pub fn run_map_approx(world: &World) -> Result<MapApprox, ScenarioError> {
    let o = world.bitmap().ok_or_else(|| ScenarioError::Invalid {
        field: "map".into(),
        message: "map-approx needs a bitmap or raster map".into(),
    })?;
    let truth = Grid::truth(o);
    let ours = run_ours(world)?;
    let bfs = run_bfs(world, o);
    let mut marks: Vec<usize> = world.scenario.map_approx.checkpoints.iter().map(|&q| q as usize).collect();
    marks.push(ours.total_queries());
    marks.sort_unstable();
    marks.dedup();
    let step = world
        .scenario
        .map_approx
        .rrt_step
        .unwrap_or_else(|| world.scenario.planner_config().map(|c| c.step_size).unwrap_or(0.1));
    let rrt_budget = *marks.last().expect("non-empty");
    let rrt = run_rrt_exploration(world, o, rrt_budget, step, world.scenario.seed);
    let checkpoints: Vec<Checkpoint> = marks
        .iter()
        .map(|&q| Checkpoint {
            queries: q,
            ours: ours.reconstruct(o, q).agreement(&truth),
            bfs: bfs.reconstruct(o, q).agreement(&truth),
            rrt: replay(o, &rrt, q).agreement(&truth),
        })
        .collect();
    let n = ours.total_queries();
    let ours_grid = ours.reconstruct(o, n);
    let bfs_grid = bfs.reconstruct(o, bfs.total_queries());
    let rrt_grid = replay(o, &rrt, n);
    let report = MapApproxReport {
        pixels: truth.cells.len(),
        obstacle_pixels: truth.cells.iter().filter(|&&c| c).count(),
        polytopes: ours.polytopes,
        ours_queries: n,
        bfs_queries: bfs.total_queries(),
        ours_agreement: ours_grid.agreement(&truth),
        bfs_agreement: bfs_grid.agreement(&truth),
        rrt_agreement_at_ours_budget: rrt_grid.agreement(&truth),
        checkpoints,
    };
    Ok(MapApprox { report, ours: ours_grid.to_map(), bfs: bfs_grid.to_map(), rrt: rrt_grid.to_map() })
}
