//! Benchmark harness around `active-coreset`: scenario files, planner
//! trials, map approximation, and CSV/JSON/SVG/PGM outputs.

pub mod experiments;
pub mod explore;
pub mod report;
pub mod scenario;
pub mod svg;

pub use experiments::{run_benchmark, run_mvee_curve, run_trial, ExperimentReport, RunOptions, SamplerKind};
pub use explore::{run_map_approx, MapApprox, MapApproxReport};
pub use report::{aggregate, write_csv, Row, CSV_HEADER};
pub use scenario::{Scenario, ScenarioError, World};
