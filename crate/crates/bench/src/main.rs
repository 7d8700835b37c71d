use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use active_coreset_bench::experiments::{self, render_curve, render_scene, run_preprocess, summarize, RunOptions};
use active_coreset_bench::{run_benchmark, run_map_approx, run_mvee_curve, write_csv, SamplerKind, Scenario};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "active-coreset", version, about = "Obstacle discovery, informed sampling and planner benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover obstacles and build the triangulated free space.
    Preprocess(Common),
    /// One trial of every planner with and without preprocessing.
    Plan(Common),
    /// All trials of the scenario; writes results.csv and aggregates.json.
    Bench(Common),
    /// Volume error of the coreset against the exact ellipsoid, per step.
    MveeCurve {
        #[command(flatten)]
        common: Common,
        /// Overrides the scenario's tolerance.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Reconstruction quality against query count, ours versus baselines.
    MapApprox(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent trials.
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
    /// Also write the discovered ellipsoids and cross-polytopes.
    #[arg(long)]
    dump_obstacles: bool,
    /// Also write the free-space simplices.
    #[arg(long)]
    dump_triangulation: bool,
    /// Add a sampler that discovers obstacles while planning.
    #[arg(long)]
    on_the_fly: bool,
    /// Write 0 for wall times so that reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Res<()> {
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn load(c: &Common) -> Res<active_coreset_bench::World> {
    let mut s = Scenario::load(&c.scenario)?;
    if let Some(seed) = c.seed {
        s.seed = seed;
    }
    fs::create_dir_all(&c.out)?;
    Ok(s.world()?)
}

fn dumps(c: &Common, pre: &active_coreset::PreprocessResult<f64>) -> Res<()> {
    if c.dump_obstacles {
        let items: Vec<_> = pre
            .discoveries
            .iter()
            .map(|d| {
                json!({
                    "probe": d.probe.to_f64(),
                    "ellipsoid": d.ellipsoid.to_dump(),
                    "cross_polytope": d.polytope.to_dump(),
                    "coreset": d.coreset.iter().map(|p| p.to_f64()).collect::<Vec<_>>(),
                    "converged": d.converged,
                    "queries": [d.queries.start, d.queries.end],
                })
            })
            .collect();
        write(&c.out, "obstacles.json", serde_json::to_string_pretty(&items)?)?;
    }
    if c.dump_triangulation {
        write(&c.out, "triangulation.json", serde_json::to_string(&pre.free_space.vertex_lists())?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Preprocess(c) => {
            let world = load(&c)?;
            let pre = run_preprocess(&world)?;
            let summary = summarize(&world, &pre);
            write(&c.out, "preprocess.json", serde_json::to_string_pretty(&summary)?)?;
            dumps(&c, &pre)?;
            write(&c.out, "preprocess.svg", render_scene(&world, Some(&pre), true, None, None))?;
            println!(
                "{} obstacles, {} queries, free volume {:.6} of {:.6}",
                summary.polytopes,
                summary.queries,
                summary.free_volume,
                world.meta.bounds.volume()
            );
        }
        Command::Plan(c) => {
            let world = load(&c)?;
            let pre = run_preprocess(&world)?;
            dumps(&c, &pre)?;
            let cfg = world.scenario.planner_config()?;
            let mut samplers = vec![SamplerKind::Uniform, SamplerKind::Freespace];
            if c.on_the_fly {
                samplers.push(SamplerKind::OnTheFly);
            }
            let mut rows = Vec::new();
            for &kind in &world.scenario.planners {
                for &s in &samplers {
                    let seed = world.scenario.seed;
                    match experiments::run_trial(&world, &pre.free_space, kind, s, seed, &cfg) {
                        Ok((res, tree)) => {
                            let shown = if s == SamplerKind::Uniform { None } else { Some(&pre) };
                            let svg = render_scene(&world, shown, false, Some(&tree), res.path.as_deref());
                            write(&c.out, &format!("plan_{}_{}.svg", kind.name(), s.name()), svg)?;
                            rows.push(experiments::row_for(&world, kind, s, seed, &res, !c.no_timing));
                        }
                        Err(e) => eprintln!("{}/{}: {e}", kind.name(), s.name()),
                    }
                }
            }
            let mut buf = Vec::new();
            write_csv(&mut buf, &rows)?;
            write(&c.out, "results.csv", &buf)?;
            print!("{}", String::from_utf8(buf)?);
        }
        Command::Bench(c) => {
            let world = load(&c)?;
            let opts = RunOptions { jobs: c.jobs, timing: !c.no_timing, on_the_fly: c.on_the_fly };
            let (report, pre) = run_benchmark(&world, &opts)?;
            dumps(&c, &pre)?;
            let mut buf = Vec::new();
            write_csv(&mut buf, &report.rows)?;
            write(&c.out, "results.csv", &buf)?;
            let agg = json!({
                "scenario": report.scenario,
                "aggregates": report.aggregates,
                "preprocessing": report.preprocessing,
                "preprocess_ms": report.preprocess_ms,
                "failures": report.failures,
            });
            write(&c.out, "aggregates.json", serde_json::to_string_pretty(&agg)?)?;
            write(&c.out, "preprocess.svg", render_scene(&world, Some(&pre), true, None, None))?;
            for g in &report.aggregates {
                println!(
                    "{:<9} {:<11} success {:>5.1}%  iterations {:>9.1}  wasted {:>5.1}%  length {:.4}",
                    g.planner,
                    g.sampler,
                    100.0 * g.success_rate,
                    g.iterations.mean,
                    g.wasted_pct.mean,
                    g.path_length.mean
                );
            }
            if !report.failures.is_empty() {
                eprintln!("{} trials failed; see aggregates.json", report.failures.len());
            }
        }
        Command::MveeCurve { common: c, eps } => {
            let world = load(&c)?;
            let eps = eps.or(world.scenario.mvee_curve.eps).unwrap_or(world.scenario.eps);
            let curve = run_mvee_curve(&world, eps, world.scenario.mvee_curve.shape)?;
            write(&c.out, "mvee_curve.json", serde_json::to_string_pretty(&curve)?)?;
            write(&c.out, "mvee_curve.svg", render_curve(&curve))?;
            println!(
                "{} steps, final ratio {:.6} (1 + eps = {:.6}), {} queries",
                curve.points.last().map_or(0, |p| p.iteration),
                curve.final_ratio,
                1.0 + eps,
                curve.queries
            );
        }
        Command::MapApprox(c) => {
            let world = load(&c)?;
            let m = run_map_approx(&world)?;
            write(&c.out, "map_approx.json", serde_json::to_string_pretty(&m.report)?)?;
            write(&c.out, "reconstructed.pgm", m.ours.to_pgm())?;
            write(&c.out, "reconstructed_bfs.pgm", m.bfs.to_pgm())?;
            write(&c.out, "reconstructed_rrt.pgm", m.rrt.to_pgm())?;
            let r = &m.report;
            println!("pixels {}  obstacle pixels {}", r.pixels, r.obstacle_pixels);
            println!("{:>10} {:>8} {:>8} {:>8}", "queries", "ours", "bfs", "rrt");
            for cp in &r.checkpoints {
                println!("{:>10} {:>8.4} {:>8.4} {:>8.4}", cp.queries, cp.ours, cp.bfs, cp.rrt);
            }
            println!("bfs completes after {} queries with agreement {:.4}", r.bfs_queries, r.bfs_agreement);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
