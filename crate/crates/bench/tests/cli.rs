use std::path::{Path, PathBuf};
use std::process::Command;

use active_coreset_bench::report::read_csv;
use active_coreset_bench::CSV_HEADER;
use serde_json::Value;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Runs the binary and returns its stdout, failing the test on a nonzero exit.
fn run(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_active-coreset")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn run_in(cmd: &str, scenario: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![cmd, "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_scenario(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

#[test]
fn bench_is_reproducible_without_timing() {
    let s = scenarios().join("empty.json");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_in("bench", &s, a.path(), &["--no-timing", "--jobs", "3"]);
    run_in("bench", &s, b.path(), &["--no-timing", "--jobs", "1"]);
    for f in ["results.csv", "aggregates.json", "preprocess.svg"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    // 5 trials × 2 planners × 2 samplers
    assert_eq!(csv.lines().count(), 1 + 20);
}

fn close(v: &Value, want: f64) -> bool {
    match v.as_f64() {
        Some(x) => (x - want).abs() <= 1e-12 * want.abs().max(1.0),
        // serde_json writes NaN as null
        None => v.is_null() && want.is_nan(),
    }
}

#[test]
fn aggregates_match_the_rows() {
    let dir = tempfile::tempdir().unwrap();
    run_in("bench", &scenarios().join("map_c.json"), dir.path(), &["--no-timing"]);
    let rows = read_csv(std::fs::File::open(dir.path().join("results.csv")).unwrap()).unwrap();
    let agg = json(&dir.path().join("aggregates.json"));
    let groups = agg["aggregates"].as_array().unwrap();
    assert!(!groups.is_empty());
    let mut seen = 0;
    for g in groups {
        let mine: Vec<_> = rows
            .iter()
            .filter(|r| r.planner == g["planner"].as_str().unwrap() && r.sampler == g["sampler"].as_str().unwrap())
            .collect();
        seen += mine.len();
        assert_eq!(g["trials"].as_u64().unwrap() as usize, mine.len());
        let found = mine.iter().filter(|r| r.found).count() as f64;
        assert!(close(&g["success_rate"], found / mine.len() as f64));
        let it: Vec<f64> = mine.iter().map(|r| r.iterations as f64).collect();
        let mean = it.iter().sum::<f64>() / it.len() as f64;
        assert!(close(&g["iterations"]["mean"], mean), "{} vs {mean}", g["iterations"]["mean"]);
        if it.len() > 1 {
            let sd = (it.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (it.len() - 1) as f64).sqrt();
            assert!(close(&g["iterations"]["std"], sd));
        }
        let lens: Vec<f64> = mine.iter().filter(|r| r.found).map(|r| r.path_length).collect();
        let want = if lens.is_empty() { f64::NAN } else { lens.iter().sum::<f64>() / lens.len() as f64 };
        assert!(close(&g["path_length"]["mean"], want));
        let wasted: f64 = mine.iter().map(|r| 100.0 * r.samples_wasted as f64 / r.samples_total.max(1) as f64).sum();
        assert!(close(&g["wasted_pct"]["mean"], wasted / mine.len() as f64));
    }
    assert_eq!(seen, rows.len());
}

#[test]
fn svg_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    run_in("preprocess", &scenarios().join("map_c.json"), dir.path(), &["--dump-obstacles", "--dump-triangulation"]);
    let text = std::fs::read_to_string(dir.path().join("preprocess.svg")).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let summary = json(&dir.path().join("preprocess.json"));
    let obstacles = json(&dir.path().join("obstacles.json"));
    assert_eq!(obstacles.as_array().unwrap().len() as u64, summary["polytopes"].as_u64().unwrap());
    assert!(!json(&dir.path().join("triangulation.json")).as_array().unwrap().is_empty());
}

#[test]
fn plan_writes_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_in(
        "plan",
        &scenarios().join("map_c.json"),
        dir.path(),
        &["--seed", "3", "--dump-obstacles", "--on-the-fly"],
    );
    let rows = read_csv(std::fs::File::open(dir.path().join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 3);
    assert!(rows.iter().all(|r| r.seed == 3));
    assert!(stdout.starts_with(CSV_HEADER));
    assert!(dir.path().join("obstacles.json").exists());
    for r in &rows {
        let svg = std::fs::read_to_string(dir.path().join(format!("plan_{}_{}.svg", r.planner, r.sampler))).unwrap();
        roxmltree::Document::parse(&svg).unwrap();
        if r.sampler == "freespace" {
            assert_eq!(r.samples_wasted, 0);
        }
    }
}

#[test]
fn mvee_curve_on_hexagon_and_disk() {
    let dir = tempfile::tempdir().unwrap();
    let eps = 0.01;
    run_in("mvee-curve", &scenarios().join("hexagon.json"), dir.path(), &["--eps", "0.01"]);
    let c = json(&dir.path().join("mvee_curve.json"));
    assert!(c["converged"].as_bool().unwrap());
    // the coreset lies in the hexagon, so its ellipsoid is never the larger one
    let r = c["final_ratio"].as_f64().unwrap();
    assert!((1.0 - 1e-9..=1.0 + eps).contains(&r), "{r}");
    roxmltree::Document::parse(&std::fs::read_to_string(dir.path().join("mvee_curve.svg")).unwrap()).unwrap();

    let disk = serde_json::json!({
        "name": "disk",
        "map": { "kind": "analytic", "shapes": [{ "kind": "ball", "center": [0.5, 0.5], "radius": 0.3 }] },
        "bounds": { "lo": [0, 0], "hi": [1, 1] },
        "eps": eps, "inradius_lb": 0.2, "circumradius_ub": 0.35,
        "start": [0.02, 0.02], "goal": [0.98, 0.98]
    });
    let s = write_scenario(dir.path(), &disk);
    run_in("mvee-curve", &s, dir.path(), &[]);
    let c = json(&dir.path().join("mvee_curve.json"));
    let pts = c["points"].as_array().unwrap();
    let last = pts.last().unwrap()["error"].as_f64().unwrap();
    assert!((-1e-9..=eps).contains(&last), "{last}");
}

#[test]
fn map_approx_on_an_empty_raster() {
    let dir = tempfile::tempdir().unwrap();
    let empty = serde_json::json!({
        "name": "blank",
        "map": { "kind": "raster", "width": 40, "height": 30, "meters_per_pixel": 0.05, "shapes": [] },
        "eps": 0.01, "inradius_lb": 0.2, "circumradius_ub": 0.7,
        "start": [0.1, 0.1], "goal": [1.9, 1.4]
    });
    let s = write_scenario(dir.path(), &empty);
    run_in("map-approx", &s, dir.path(), &[]);
    let r = json(&dir.path().join("map_approx.json"));
    assert_eq!(r["ours_agreement"].as_f64().unwrap(), 1.0);
    assert!(r["ours_queries"].as_u64().unwrap() <= r["bfs_queries"].as_u64().unwrap());
}

#[test]
fn map_approx_beats_flood_fill() {
    let dir = tempfile::tempdir().unwrap();
    run_in("map-approx", &scenarios().join("map_approx.json"), dir.path(), &[]);
    let r = json(&dir.path().join("map_approx.json"));
    assert!(r["ours_queries"].as_u64().unwrap() < r["bfs_queries"].as_u64().unwrap());
    assert!(r["ours_agreement"].as_f64().unwrap() > 0.99);
    for f in ["reconstructed.pgm", "reconstructed_bfs.pgm", "reconstructed_rrt.pgm"] {
        assert!(std::fs::read(dir.path().join(f)).unwrap().starts_with(b"P5"));
    }
}

#[test]
fn bad_scenarios_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(dir.path(), &serde_json::json!({ "name": "x", "eps": "small" }));
    let out = Command::new(env!("CARGO_BIN_EXE_active-coreset"))
        .args(["preprocess", "--scenario", s.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}
