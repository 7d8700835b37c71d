//! Preprocessing, planner trials and the MVEE error curve.

use std::time::Instant;

use active_coreset::freespace::TriangulatedFreeSpace;
use active_coreset::geometry::convex_polygon_ccw;
use active_coreset::mvee::mvee_of_points;
use active_coreset::oracle::ConvexShape;
use active_coreset::planners::{plan, OnTheFlySampler, Tree};
use active_coreset::{
    mve_coreset, preprocess, triangulate_bounds, CoresetConfig, Direction64, Ellipsoid, FreeSpaceSampler,
    MembershipOracle, PlanResult, PlannerConfig, PlannerKind, Point64, PreprocessResult, Sampler, UniformSampler,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::report::{aggregate, GroupAggregate, Row};
use crate::scenario::{ScenarioError, World, WorldOracle};
use crate::svg::Canvas;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Uniform over the bounds, the vanilla planner.
    Uniform,
    /// Volume-weighted free-space sampling after preprocessing.
    Freespace,
    /// Free-space sampling with discovery during planning.
    OnTheFly,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Freespace => "freespace",
            SamplerKind::OnTheFly => "on_the_fly",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub jobs: usize,
    /// When false, `time_ms` is written as 0 so reruns are byte-identical.
    pub timing: bool,
    pub on_the_fly: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { jobs: 1, timing: true, on_the_fly: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub queries: u64,
    pub queries_true: u64,
    pub probes: u64,
    pub skipped: u64,
    pub failures: u64,
    pub polytopes: usize,
    pub regions: usize,
    pub exhausted: bool,
    pub free_volume: f64,
    pub removed_volume: f64,
    pub obstacle_volume: f64,
    /// Free volume given up by over-covering: removed minus obstacle volume.
    pub free_volume_loss: f64,
}

pub fn summarize(world: &World, pre: &PreprocessResult<f64>) -> PreprocessSummary {
    let obstacle_volume = world.obstacle_volume();
    PreprocessSummary {
        queries: pre.stats.total_queries,
        queries_true: pre.stats.queries_true,
        probes: pre.probes,
        skipped: pre.skipped,
        failures: pre.failures,
        polytopes: pre.discoveries.len(),
        regions: pre.free_space.regions().len(),
        exhausted: pre.exhausted,
        free_volume: pre.free_space.total_volume(),
        removed_volume: pre.removed_volume(),
        obstacle_volume,
        free_volume_loss: pre.removed_volume() - obstacle_volume,
    }
}

pub fn run_preprocess(world: &World) -> Result<PreprocessResult<f64>, ScenarioError> {
    Ok(preprocess(&world.oracle, &world.meta, &world.scenario.preprocess_config())?)
}

/// Trial seed for trial `k`; vanilla and ours share it.
pub fn trial_seed(base: u64, k: usize) -> u64 {
    base.wrapping_add(k as u64)
}

fn sampler_seed(seed: u64) -> u64 {
    // keep the sampler stream apart from the planner's goal-bias stream
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03
}

/// Runs one planner trial.
pub fn run_trial(
    world: &World,
    free_space: &TriangulatedFreeSpace<f64>,
    kind: PlannerKind,
    sampler: SamplerKind,
    seed: u64,
    cfg: &PlannerConfig<f64>,
) -> active_coreset::Result<(PlanResult, Tree<f64>)> {
    let cfg = PlannerConfig { seed, ..*cfg };
    let s_seed = sampler_seed(seed);
    let (start, goal) = (world.start(), world.goal());
    let mut s: Box<dyn Sampler<f64> + '_> = match sampler {
        SamplerKind::Uniform => Box::new(UniformSampler::new(world.meta.bounds.clone(), s_seed)),
        SamplerKind::Freespace => Box::new(FreeSpaceSampler::new(free_space, s_seed)),
        SamplerKind::OnTheFly => {
            let fs = triangulate_bounds(&world.meta.bounds);
            let max_step = world.scenario.preprocess.max_step;
            Box::new(OnTheFlySampler::new(fs, world.meta.clone(), s_seed).with_max_step(max_step))
        }
    };
    plan(kind, &world.oracle, s.as_mut(), &start, &goal, &cfg)
}

pub fn row_for(world: &World, kind: PlannerKind, sampler: SamplerKind, seed: u64, r: &PlanResult, timing: bool) -> Row {
    Row {
        map: world.scenario.name.clone(),
        planner: kind.name().into(),
        sampler: sampler.name().into(),
        seed,
        time_ms: if timing { r.wall_time.as_secs_f64() * 1e3 } else { 0.0 },
        iterations: r.iterations,
        samples_total: r.samples_total,
        samples_wasted: r.samples_wasted,
        path_length: r.path_length,
        found: r.found(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub rows: Vec<Row>,
    pub aggregates: Vec<GroupAggregate>,
    pub preprocessing: PreprocessSummary,
    /// Trials that ended in an error, as "planner/sampler/seed: message".
    pub failures: Vec<String>,
    pub preprocess_ms: f64,
}

/// Every planner × sampler × trial of the scenario.
pub fn run_benchmark(
    world: &World,
    opts: &RunOptions,
) -> Result<(ExperimentReport, PreprocessResult<f64>), ScenarioError> {
    let clock = Instant::now();
    let pre = run_preprocess(world)?;
    let preprocess_ms = if opts.timing { clock.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let cfg = world.scenario.planner_config()?;
    let mut samplers = vec![SamplerKind::Uniform, SamplerKind::Freespace];
    if opts.on_the_fly {
        samplers.push(SamplerKind::OnTheFly);
    }
    let mut tasks = Vec::new();
    for &kind in &world.scenario.planners {
        for &s in &samplers {
            for k in 0..world.scenario.trials {
                tasks.push((kind, s, trial_seed(world.scenario.seed, k)));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| ScenarioError::Invalid { field: "jobs".into(), message: e.to_string() })?;
    let results: Vec<_> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(kind, s, seed)| (kind, s, seed, run_trial(world, &pre.free_space, kind, s, seed, &cfg)))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (kind, s, seed, r) in results {
        match r {
            Ok((res, _)) => rows.push(row_for(world, kind, s, seed, &res, opts.timing)),
            Err(e) => {
                failures.push(format!("{}/{}/{}: {}", kind.name(), s.name(), seed, e));
                rows.push(Row {
                    map: world.scenario.name.clone(),
                    planner: kind.name().into(),
                    sampler: s.name().into(),
                    seed,
                    time_ms: 0.0,
                    iterations: 0,
                    samples_total: 0,
                    samples_wasted: 0,
                    path_length: f64::INFINITY,
                    found: false,
                });
            }
        }
    }
    let report = ExperimentReport {
        scenario: world.scenario.name.clone(),
        aggregates: aggregate(&rows),
        rows,
        preprocessing: summarize(world, &pre),
        failures,
        preprocess_ms,
    };
    Ok((report, pre))
}

fn xy(p: &Point64) -> (f64, f64) {
    (p[0], p[1])
}

/// Boundary polygon of an analytic shape in the plane of the first two axes.
fn outline(shape: &ConvexShape<f64>, d: usize) -> Vec<(f64, f64)> {
    if let ConvexShape::Polytope { vertices, .. } = shape {
        if d == 2 {
            return convex_polygon_ccw(vertices, 1e-12).iter().map(xy).collect();
        }
    }
    (0..96)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 96.0;
            let mut v = Point64::zeros(d);
            v[0] = a.cos();
            v[1] = a.sin();
            xy(&shape.radial_boundary(&Direction64::try_unit(v).expect("unit")))
        })
        .collect()
}

/// Map, discovered polytopes, triangulation, tree and path in one picture.
pub fn render_scene(
    world: &World,
    pre: Option<&PreprocessResult<f64>>,
    show_triangulation: bool,
    tree: Option<&Tree<f64>>,
    path: Option<&[Vec<f64>]>,
) -> String {
    let mut c = Canvas::new(&world.meta.bounds, 800.0);
    let d = world.meta.dim;
    match &world.oracle {
        WorldOracle::Analytic(o) => {
            for s in o.shapes() {
                c.polygon(&outline(s, d), "#444444", "none", 1.0);
            }
        }
        WorldOracle::Bitmap(o) => c.bitmap(o, "#444444"),
    }
    if let Some(pre) = pre {
        if show_triangulation {
            for r in pre.free_space.regions() {
                let pts: Vec<(f64, f64)> = r.simplex.iter().map(xy).collect();
                c.polygon(&pts, "none", "#8899cc", 0.0);
            }
        }
        for found in &pre.discoveries {
            let v = if d == 2 {
                convex_polygon_ccw(&found.polytope.vertices, 1e-12)
            } else {
                found.polytope.vertices.clone()
            };
            let pts: Vec<(f64, f64)> = v.iter().map(xy).collect();
            c.polygon(&pts, "#e08040", "#c05010", 0.25);
            for p in &found.coreset {
                c.circle(xy(p), 2.0, "#c05010");
            }
        }
    }
    if let Some(t) = tree {
        for (a, b) in t.edges() {
            c.line((a[0], a[1]), (b[0], b[1]), "#3a7d3a", 0.6);
        }
    }
    if let Some(p) = path {
        let pts: Vec<(f64, f64)> = p.iter().map(|q| (q[0], q[1])).collect();
        c.polyline(&pts, "#d01010", 2.5);
    }
    c.circle(xy(&world.start()), 5.0, "#1060d0");
    c.circle(xy(&world.goal()), 5.0, "#10a010");
    c.finish()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub coreset_size: usize,
    /// vol(exact MVEE of the body) / vol(MVEE of the coreset so far).
    pub ratio: f64,
    pub error: f64,
    /// The step's ε_i; infinite for the seed.
    pub step_eps: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MveeCurve {
    pub eps: f64,
    pub points: Vec<CurvePoint>,
    pub final_ratio: f64,
    pub converged: bool,
    pub queries: u64,
}

/// Exact minimum-volume enclosing ellipsoid of an analytic shape.
pub fn exact_mvee(shape: &ConvexShape<f64>) -> active_coreset::Result<Ellipsoid<f64>> {
    match shape {
        ConvexShape::Ball { center, radius } => Ok(Ellipsoid::ball(center.clone(), *radius)),
        ConvexShape::Ellipsoid { center, a } => Ellipsoid::new(center.clone(), a.clone()),
        ConvexShape::Box(b) => mvee_of_points(&b.corners(), 1e-9),
        ConvexShape::Polytope { vertices, .. } => mvee_of_points(vertices, 1e-9),
    }
}

/// Coreset run on one analytic shape, with the volume error after each step
/// against the exact ellipsoid.
pub fn run_mvee_curve(world: &World, eps: f64, shape_index: usize) -> Result<MveeCurve, ScenarioError> {
    let shapes = match &world.oracle {
        WorldOracle::Analytic(o) => o.shapes(),
        WorldOracle::Bitmap(_) => {
            return Err(ScenarioError::Invalid {
                field: "map".into(),
                message: "mvee-curve needs an analytic map".into(),
            })
        }
    };
    let shape = shapes.get(shape_index).ok_or_else(|| ScenarioError::Invalid {
        field: "mvee_curve.shape".into(),
        message: format!("no shape {shape_index}"),
    })?;
    let single = active_coreset::oracle::AnalyticOracle::from_shapes(vec![shape.clone()], world.meta.clone());
    let reference = exact_mvee(shape)?.volume();
    // ε is a relative tolerance, so the boundary points need an accuracy
    // relative to the body; at an absolute ε a small body never halts
    let mut cfg = CoresetConfig::new(world.meta.t_max());
    cfg.precision = Some(eps * world.meta.inradius_lb);
    let run = mve_coreset(&single, eps, &shape.interior_point(), &cfg)?;
    let pts = &run.coreset.points;
    let steps = run.trace.steps.len();
    let seed_len = pts.len() - steps;
    let mut points = Vec::new();
    for i in curve_iterations(steps) {
        let prefix = &pts[..seed_len + i];
        let ratio = reference / mvee_of_points(prefix, 1e-9)?.volume();
        points.push(CurvePoint {
            iteration: i,
            coreset_size: prefix.len(),
            ratio,
            error: ratio - 1.0,
            step_eps: if i == 0 { f64::INFINITY } else { run.trace.steps[i - 1].eps },
        });
    }
    Ok(MveeCurve {
        eps,
        final_ratio: points.last().map(|p| p.ratio).unwrap_or(f64::NAN),
        points,
        converged: run.converged(),
        queries: run.queries_used,
    })
}

/// Every iteration up to 32, then about 10% apart, and always the last.
fn curve_iterations(steps: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=steps.min(32)).collect();
    let mut i = 32.0f64;
    while (i as usize) < steps {
        i = (i * 1.1).ceil();
        out.push((i as usize).min(steps));
    }
    out.dedup();
    out
}

pub fn render_curve(curve: &MveeCurve) -> String {
    let err: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.iteration as f64, p.error.abs().max(1e-12))).collect();
    let step: Vec<(f64, f64)> =
        curve.points.iter().filter(|p| p.step_eps.is_finite()).map(|p| (p.iteration as f64, p.step_eps)).collect();
    crate::svg::line_chart(
        &format!("volume error, eps = {}", curve.eps),
        "iteration",
        "error",
        &[("volume error", "#d01010", err), ("step eps", "#1060d0", step)],
        true,
    )
}

/// Fraction of planner samples drawn from `sampler` that land in an
/// obstacle, without planning. Used for waste checks.
pub fn sample_hits(world: &World, sampler: &mut dyn Sampler<f64>, n: usize) -> active_coreset::Result<usize> {
    let mut hits = 0;
    for _ in 0..n {
        if world.truth(&sampler.sample()?) {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Oracle answers for the queries used by `MembershipOracle`-level checks
/// that should not disturb the world's counters.
pub struct Uncounted<'a>(pub &'a World);

impl MembershipOracle<f64> for Uncounted<'_> {
    fn query(&self, p: &Point64) -> bool {
        self.0.truth(p)
    }
    fn stats(&self) -> active_coreset::OracleStats {
        active_coreset::OracleStats::default()
    }
    fn dim(&self) -> usize {
        self.0.meta.dim
    }
}
