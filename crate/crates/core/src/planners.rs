//! RRT and RRT* behind a pluggable sampler, and the preprocessing driver
//! that discovers obstacles and carves them out of the free space.

use std::ops::Range;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freespace::{sample, triangulate_bounds, SamplerState, TriangulatedFreeSpace};
use crate::mvee::{cross_polytope_bound, mve_coreset, CoresetConfig, CrossPolytope, Ellipsoid};
use crate::oracle::{BoundingBox, CountingOracle, MembershipOracle, OracleStats, WorkspaceMeta};
use crate::point::Point;
use crate::scalar::Real;

/// Source of candidate states for a planner.
pub trait Sampler<T: Real> {
    fn sample(&mut self) -> Result<Point<T>>;

    /// Called when a drawn sample turned out to be inside an obstacle.
    fn report_obstacle(&mut self, _oracle: &dyn MembershipOracle<T>, _p: &Point<T>) -> Result<()> {
        Ok(())
    }

    fn name(&self) -> &'static str;
}

/// Uniform over the bounding box.
pub struct UniformSampler<T: Real> {
    bounds: BoundingBox<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> UniformSampler<T> {
    pub fn new(bounds: BoundingBox<T>, seed: u64) -> Self {
        UniformSampler { bounds, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl<T: Real> Sampler<T> for UniformSampler<T> {
    fn sample(&mut self) -> Result<Point<T>> {
        let d = self.bounds.dim();
        let mut p = Point::zeros(d);
        for i in 0..d {
            let u = T::c(self.rng.random::<f64>());
            p[i] = self.bounds.lo[i] + u * (self.bounds.hi[i] - self.bounds.lo[i]);
        }
        Ok(p)
    }

    fn name(&self) -> &'static str {
        "uniform"
    }
}

/// Volume-weighted sampling from a frozen free space shared between trials.
pub struct FreeSpaceSampler<'a, T: Real> {
    fs: &'a TriangulatedFreeSpace<T>,
    state: SamplerState<T>,
}

impl<'a, T: Real> FreeSpaceSampler<'a, T> {
    pub fn new(fs: &'a TriangulatedFreeSpace<T>, seed: u64) -> Self {
        FreeSpaceSampler { fs, state: SamplerState::new(seed) }
    }
}

impl<T: Real> Sampler<T> for FreeSpaceSampler<'_, T> {
    fn sample(&mut self) -> Result<Point<T>> {
        sample(self.fs, &mut self.state)
    }

    fn name(&self) -> &'static str {
        "freespace"
    }
}

/// Free-space sampler that discovers and removes an obstacle whenever one
/// of its samples lands inside it.
pub struct OnTheFlySampler<T: Real> {
    fs: TriangulatedFreeSpace<T>,
    state: SamplerState<T>,
    meta: WorkspaceMeta<T>,
    coreset: CoresetConfig<T>,
    pub discoveries: Vec<Discovery<T>>,
    pub failures: usize,
}

impl<T: Real> OnTheFlySampler<T> {
    pub fn new(fs: TriangulatedFreeSpace<T>, meta: WorkspaceMeta<T>, seed: u64) -> Self {
        let coreset = CoresetConfig::new(meta.t_max());
        OnTheFlySampler { fs, state: SamplerState::new(seed), meta, coreset, discoveries: Vec::new(), failures: 0 }
    }

    pub fn with_max_step(mut self, max_step: Option<T>) -> Self {
        self.coreset.max_step = max_step;
        self
    }

    pub fn free_space(&self) -> &TriangulatedFreeSpace<T> {
        &self.fs
    }
}

impl<T: Real> Sampler<T> for OnTheFlySampler<T> {
    fn sample(&mut self) -> Result<Point<T>> {
        sample(&self.fs, &mut self.state)
    }

    fn report_obstacle(&mut self, oracle: &dyn MembershipOracle<T>, p: &Point<T>) -> Result<()> {
        if self.fs.removed().iter().any(|c| c.contains(p)) {
            return Ok(());
        }
        match discover(oracle, self.meta.eps, p, &self.coreset) {
            Ok(found) => match self.fs.remove_polytope(&found.polytope) {
                Ok(_) => self.discoveries.push(found),
                Err(Error::FreeSpaceExhausted) => return Err(Error::FreeSpaceExhausted),
                Err(_) => self.failures += 1,
            },
            Err(_) => self.failures += 1,
        }
        Ok(())
    }

    fn name(&self) -> &'static str {
        "on_the_fly"
    }
}

/// Replays a fixed list of points, cycling. Used to compare planners on an
/// identical sample stream.
pub struct ReplaySampler<T: Real> {
    points: Vec<Point<T>>,
    next: usize,
}

impl<T: Real> ReplaySampler<T> {
    pub fn new(points: Vec<Point<T>>) -> Self {
        assert!(!points.is_empty());
        ReplaySampler { points, next: 0 }
    }
}

impl<T: Real> Sampler<T> for ReplaySampler<T> {
    fn sample(&mut self) -> Result<Point<T>> {
        let p = self.points[self.next % self.points.len()].clone();
        self.next += 1;
        Ok(p)
    }

    fn name(&self) -> &'static str {
        "replay"
    }
}

/// Records every point drawn from the wrapped sampler.
pub struct RecordingSampler<S> {
    pub inner: S,
    pub drawn: Vec<Vec<f64>>,
}

impl<T: Real, S: Sampler<T>> Sampler<T> for RecordingSampler<S> {
    fn sample(&mut self) -> Result<Point<T>> {
        let p = self.inner.sample()?;
        self.drawn.push(p.to_f64());
        Ok(p)
    }

    fn report_obstacle(&mut self, oracle: &dyn MembershipOracle<T>, p: &Point<T>) -> Result<()> {
        self.inner.report_obstacle(oracle, p)
    }

    fn name(&self) -> &'static str {
        self.inner.name()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlannerConfig<T> {
    pub step_size: T,
    pub goal_bias: f64,
    pub max_iterations: usize,
    pub goal_tolerance: T,
    /// RRT* neighbourhood radius as a multiple of `step_size`.
    pub rewire_factor: T,
    /// Spacing of the point checks along each edge.
    pub edge_resolution: T,
    /// Seeds the goal-bias coin; samplers carry their own rng.
    pub seed: u64,
}

impl<T: Real> PlannerConfig<T> {
    pub fn new(step_size: T, edge_resolution: T) -> Self {
        PlannerConfig {
            step_size,
            goal_bias: 0.05,
            max_iterations: 5000,
            goal_tolerance: step_size,
            rewire_factor: T::c(2.0),
            edge_resolution,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > T::zero()) {
            return Err(Error::InvalidInput("step_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return Err(Error::InvalidInput("goal_bias must lie in [0, 1)".into()));
        }
        if !(self.goal_tolerance > T::zero()) {
            return Err(Error::InvalidInput("goal_tolerance must be positive".into()));
        }
        if !(self.edge_resolution > T::zero()) || !(self.rewire_factor > T::zero()) {
            return Err(Error::InvalidInput("edge_resolution and rewire_factor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node<T: Real> {
    pub point: Point<T>,
    pub parent: Option<usize>,
    pub cost: T,
}

#[derive(Clone, Debug, Default)]
pub struct Tree<T: Real> {
    pub nodes: Vec<Node<T>>,
    children: Vec<Vec<usize>>,
}

impl<T: Real> Tree<T> {
    fn with_root(root: Point<T>) -> Self {
        Tree { nodes: vec![Node { point: root, parent: None, cost: T::zero() }], children: vec![Vec::new()] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, point: Point<T>, parent: usize) -> usize {
        let cost = self.nodes[parent].cost + self.nodes[parent].point.dist(&point);
        self.nodes.push(Node { point, parent: Some(parent), cost });
        self.children.push(Vec::new());
        self.children[parent].push(self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn nearest(&self, x: &Point<T>) -> usize {
        let mut best = (0, T::infinity());
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.point.dist(x);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn within(&self, x: &Point<T>, r: T) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].point.dist(x) <= r).collect()
    }

    fn reparent(&mut self, node: usize, parent: usize) {
        if let Some(old) = self.nodes[node].parent {
            self.children[old].retain(|&c| c != node);
        }
        self.nodes[node].parent = Some(parent);
        self.children[parent].push(node);
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            let p = self.nodes[n].parent.expect("non-root");
            self.nodes[n].cost = self.nodes[p].cost + self.nodes[p].point.dist(&self.nodes[n].point);
            stack.extend(self.children[n].iter().copied());
        }
    }

    fn path_to(&self, mut i: usize) -> Vec<Point<T>> {
        let mut path = vec![self.nodes[i].point.clone()];
        while let Some(p) = self.nodes[i].parent {
            path.push(self.nodes[p].point.clone());
            i = p;
        }
        path.reverse();
        path
    }

    /// Edges as coordinate pairs, for plots.
    pub fn edges(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.nodes.iter().filter_map(|n| n.parent.map(|p| (self.nodes[p].point.to_f64(), n.point.to_f64()))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanResult {
    pub path: Option<Vec<Vec<f64>>>,
    /// Infinite when no path was found.
    pub path_length: f64,
    #[serde(skip)]
    pub wall_time: Duration,
    pub iterations: usize,
    pub samples_total: u64,
    /// Samples the oracle reported inside an obstacle.
    pub samples_wasted: u64,
    pub queries: u64,
    pub tree_size: usize,
}

impl PlanResult {
    pub fn found(&self) -> bool {
        self.path.is_some()
    }

    pub fn wasted_fraction(&self) -> f64 {
        if self.samples_total == 0 {
            0.0
        } else {
            self.samples_wasted as f64 / self.samples_total as f64
        }
    }

    /// Copy with the wall time cleared, for byte-level comparisons.
    pub fn without_timing(&self) -> Self {
        PlanResult { wall_time: Duration::ZERO, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Rrt,
    RrtStar,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Rrt => "rrt",
            PlannerKind::RrtStar => "rrt_star",
        }
    }
}

/// True when every check point at spacing `res` on (a, b] is free.
pub fn edge_free<T: Real>(oracle: &dyn MembershipOracle<T>, a: &Point<T>, b: &Point<T>, res: T) -> bool {
    let len = a.dist(b);
    let n = (len / res).ceil().to_usize().unwrap_or(1).max(1);
    (1..=n).all(|k| !oracle.query(&a.lerp(b, T::from_usize_lossy(k) / T::from_usize_lossy(n))))
}

pub fn rrt<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    sampler: &mut dyn Sampler<T>,
    start: &Point<T>,
    goal: &Point<T>,
    cfg: &PlannerConfig<T>,
) -> Result<PlanResult> {
    plan(PlannerKind::Rrt, oracle, sampler, start, goal, cfg).map(|(r, _)| r)
}

pub fn rrt_star<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    sampler: &mut dyn Sampler<T>,
    start: &Point<T>,
    goal: &Point<T>,
    cfg: &PlannerConfig<T>,
) -> Result<PlanResult> {
    plan(PlannerKind::RrtStar, oracle, sampler, start, goal, cfg).map(|(r, _)| r)
}

/// Runs either planner and also hands back the tree.
pub fn plan<T: Real>(
    kind: PlannerKind,
    oracle: &dyn MembershipOracle<T>,
    sampler: &mut dyn Sampler<T>,
    start: &Point<T>,
    goal: &Point<T>,
    cfg: &PlannerConfig<T>,
) -> Result<(PlanResult, Tree<T>)> {
    cfg.validate()?;
    if start.dim() != oracle.dim() || goal.dim() != oracle.dim() {
        return Err(Error::InvalidInput("start/goal dimension does not match the oracle".into()));
    }
    let clock = Instant::now();
    let oracle = CountingOracle::new(oracle);
    if oracle.query(start) || oracle.query(goal) {
        return Err(Error::EndpointInObstacle);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tree = Tree::with_root(start.clone());
    let mut res = PlanResult {
        path: None,
        path_length: f64::INFINITY,
        wall_time: Duration::ZERO,
        iterations: 0,
        samples_total: 0,
        samples_wasted: 0,
        queries: 0,
        tree_size: 1,
    };
    let radius = cfg.step_size * cfg.rewire_factor;
    let finish = |tree: &Tree<T>, i: usize, res: &mut PlanResult| {
        let path = tree.path_to(i);
        res.path_length = path.windows(2).map(|w| w[0].dist(&w[1]).to_f64_lossy()).sum();
        res.path = Some(path.iter().map(|p| p.to_f64()).collect());
    };

    let mut goal_node = None;
    if start == goal {
        goal_node = Some(0);
    } else if start.dist(goal) <= cfg.goal_tolerance && edge_free(&oracle, start, goal, cfg.edge_resolution) {
        goal_node = Some(tree.push(goal.clone(), 0));
    }
    while goal_node.is_none() && res.iterations < cfg.max_iterations {
        res.iterations += 1;
        let target = if rng.random::<f64>() < cfg.goal_bias {
            goal.clone()
        } else {
            let x = sampler.sample()?;
            res.samples_total += 1;
            if oracle.query(&x) {
                res.samples_wasted += 1;
                sampler.report_obstacle(&oracle, &x)?;
                continue;
            }
            x
        };
        let near = tree.nearest(&target);
        let from = &tree.nodes[near].point;
        let dist = from.dist(&target);
        if dist <= T::zero() {
            continue;
        }
        let new = if dist <= cfg.step_size { target } else { from.lerp(&target, cfg.step_size / dist) };
        let idx = match kind {
            PlannerKind::Rrt => {
                if !edge_free(&oracle, from, &new, cfg.edge_resolution) {
                    continue;
                }
                tree.push(new, near)
            }
            PlannerKind::RrtStar => match connect_best(&oracle, &tree, &new, near, radius, cfg.edge_resolution) {
                Some((parent, neighbours)) => {
                    let idx = tree.push(new, parent);
                    rewire(&oracle, &mut tree, idx, &neighbours, cfg.edge_resolution);
                    idx
                }
                None => continue,
            },
        };
        let p = &tree.nodes[idx].point;
        if p.dist(goal) <= cfg.goal_tolerance {
            goal_node = match kind {
                PlannerKind::Rrt if p == goal => Some(idx),
                PlannerKind::Rrt => {
                    if edge_free(&oracle, p, goal, cfg.edge_resolution) {
                        Some(tree.push(goal.clone(), idx))
                    } else {
                        None
                    }
                }
                PlannerKind::RrtStar if p == goal => Some(idx),
                PlannerKind::RrtStar => connect_best(&oracle, &tree, goal, idx, radius, cfg.edge_resolution)
                    .map(|(parent, _)| tree.push(goal.clone(), parent)),
            };
        }
    }
    if let Some(g) = goal_node {
        finish(&tree, g, &mut res);
    }
    res.tree_size = tree.len();
    res.queries = oracle.used();
    res.wall_time = clock.elapsed();
    Ok((res, tree))
}

/// Cheapest collision-free parent for `x` among nodes within `radius`,
/// falling back on `nearest`. Also returns the neighbourhood for rewiring.
fn connect_best<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    tree: &Tree<T>,
    x: &Point<T>,
    nearest: usize,
    radius: T,
    res: T,
) -> Option<(usize, Vec<usize>)> {
    let mut neighbours = tree.within(x, radius);
    if !neighbours.contains(&nearest) {
        neighbours.push(nearest);
    }
    let mut order: Vec<(T, usize)> =
        neighbours.iter().map(|&i| (tree.nodes[i].cost + tree.nodes[i].point.dist(x), i)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let parent = order.iter().find(|(_, i)| edge_free(oracle, &tree.nodes[*i].point, x, res))?.1;
    Some((parent, neighbours))
}

fn rewire<T: Real>(oracle: &dyn MembershipOracle<T>, tree: &mut Tree<T>, new: usize, neighbours: &[usize], res: T) {
    for &nb in neighbours {
        if Some(nb) == tree.nodes[new].parent || nb == 0 {
            continue;
        }
        let through = tree.nodes[new].cost + tree.nodes[new].point.dist(&tree.nodes[nb].point);
        if through < tree.nodes[nb].cost && edge_free(oracle, &tree.nodes[new].point, &tree.nodes[nb].point, res) {
            tree.reparent(nb, new);
        }
    }
}

/// One discovered obstacle.
#[derive(Clone, Debug)]
pub struct Discovery<T: Real> {
    pub probe: Point<T>,
    pub ellipsoid: Ellipsoid<T>,
    pub polytope: CrossPolytope<T>,
    pub coreset: Vec<Point<T>>,
    pub converged: bool,
    /// Position of this discovery's queries in the oracle's query stream.
    pub queries: Range<u64>,
}

/// Runs the coreset search from an oracle-true point and bounds the result.
pub fn discover<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    eps: T,
    p: &Point<T>,
    cfg: &CoresetConfig<T>,
) -> Result<Discovery<T>> {
    let before = oracle.stats().total_queries;
    let found = mve_coreset(oracle, eps, p, cfg)?;
    let polytope = cross_polytope_bound(&found.ellipsoid);
    Ok(Discovery {
        probe: p.clone(),
        converged: found.converged(),
        ellipsoid: found.ellipsoid,
        polytope,
        coreset: found.coreset.points,
        queries: before..before + found.queries_used,
    })
}

#[derive(Clone, Debug)]
pub struct PreprocessConfig<T> {
    /// Maximum number of probe points queried.
    pub budget: u64,
    /// Finest probe-grid spacing; defaults to the spacing that guarantees a
    /// probe inside every obstacle of the promised inradius, but never
    /// below ε.
    pub probe_spacing: Option<T>,
    /// Stops before a new discovery once this many queries have been spent.
    pub query_budget: Option<u64>,
    /// Volume tolerance of each coreset. Defaults to the workspace ε, which
    /// otherwise also sets the ray precision.
    pub coreset_eps: Option<T>,
    /// Longest stride of a ray search. Set it below the narrowest gap between
    /// obstacles; unset, rays may hop across a gap and merge two obstacles.
    pub max_step: Option<T>,
    /// See [`CoresetConfig::confirm_halt`].
    pub confirm_halt: bool,
}

impl<T: Real> Default for PreprocessConfig<T> {
    fn default() -> Self {
        PreprocessConfig {
            budget: u64::MAX,
            probe_spacing: None,
            query_budget: None,
            coreset_eps: None,
            max_step: None,
            confirm_halt: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PreprocessResult<T: Real> {
    pub free_space: TriangulatedFreeSpace<T>,
    pub discoveries: Vec<Discovery<T>>,
    pub stats: OracleStats,
    pub probes: u64,
    pub skipped: u64,
    /// Probes whose discovery failed (for example a sliver at pixel scale).
    pub failures: u64,
    pub exhausted: bool,
}

impl<T: Real> PreprocessResult<T> {
    pub fn polytopes(&self) -> Vec<CrossPolytope<T>> {
        self.discoveries.iter().map(|d| d.polytope.clone()).collect()
    }

    /// Bounds volume minus free volume.
    pub fn removed_volume(&self) -> T {
        self.free_space.bounds().volume() - self.free_space.total_volume()
    }
}

/// Coarse-to-fine probe points: cell centres of grids with cell side
/// L/2ᵗ for t = 0, 1, … down to `spacing`.
pub fn probe_schedule<T: Real>(bounds: &BoundingBox<T>, spacing: T) -> Vec<Point<T>> {
    let d = bounds.dim();
    let extent: Vec<T> = (0..d).map(|i| bounds.hi[i] - bounds.lo[i]).collect();
    let l = extent.iter().copied().fold(T::zero(), T::max);
    let mut out = Vec::new();
    let mut h = l;
    loop {
        let counts: Vec<usize> = extent.iter().map(|&e| (e / h).ceil().to_usize().unwrap_or(1).max(1)).collect();
        let total: usize = counts.iter().product();
        for mut k in 0..total {
            let mut p = Point::zeros(d);
            for i in 0..d {
                let idx = k % counts[i];
                k /= counts[i];
                let step = extent[i] / T::from_usize_lossy(counts[i]);
                p[i] = bounds.lo[i] + (T::from_usize_lossy(idx) + T::c(0.5)) * step;
            }
            out.push(p);
        }
        if h <= spacing {
            break;
        }
        h /= T::c(2.0);
    }
    out
}

/// Probes the workspace, discovers each obstacle once, and removes its
/// cross-polytope from the free space.
pub fn preprocess<T: Real>(
    oracle: &dyn MembershipOracle<T>,
    meta: &WorkspaceMeta<T>,
    cfg: &PreprocessConfig<T>,
) -> Result<PreprocessResult<T>> {
    meta.validate()?;
    if cfg.budget == 0 {
        return Err(Error::InvalidInput("preprocess budget must be at least 1".into()));
    }
    if meta.dim > 3 {
        return Err(Error::InvalidInput("preprocessing supports d ≤ 3".into()));
    }
    let counted = CountingOracle::new(oracle);
    let d = T::from_usize_lossy(meta.dim);
    let spacing = cfg.probe_spacing.unwrap_or_else(|| (T::c(2.0) * meta.inradius_lb / d.sqrt()).max(meta.eps));
    let mut coreset = CoresetConfig::new(meta.t_max());
    coreset.precision = Some(meta.eps);
    coreset.max_step = cfg.max_step;
    coreset.confirm_halt = cfg.confirm_halt;
    let coreset_eps = cfg.coreset_eps.unwrap_or(meta.eps);
    let mut out = PreprocessResult {
        free_space: triangulate_bounds(&meta.bounds),
        discoveries: Vec::new(),
        stats: OracleStats::default(),
        probes: 0,
        skipped: 0,
        failures: 0,
        exhausted: false,
    };
    for p in probe_schedule(&meta.bounds, spacing) {
        if out.probes >= cfg.budget {
            break;
        }
        if out.discoveries.iter().any(|found| found.polytope.contains(&p)) {
            out.skipped += 1;
            continue;
        }
        out.probes += 1;
        if !counted.query(&p) {
            continue;
        }
        if cfg.query_budget.is_some_and(|b| counted.used() >= b) {
            break;
        }
        let found = match discover(&counted, coreset_eps, &p, &coreset) {
            Ok(f) => f,
            Err(_) => {
                out.failures += 1;
                continue;
            }
        };
        match out.free_space.remove_polytope(&found.polytope) {
            Ok(_) => out.discoveries.push(found),
            Err(Error::FreeSpaceExhausted) => {
                out.exhausted = true;
                break;
            }
            Err(_) => out.failures += 1,
        }
    }
    out.stats = counted.stats();
    Ok(out)
}
