//! Result rows, their CSV form, and aggregate statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

/// One planner run. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub map: String,
    pub planner: String,
    pub sampler: String,
    pub seed: u64,
    pub time_ms: f64,
    pub iterations: usize,
    pub samples_total: u64,
    pub samples_wasted: u64,
    /// `inf` when no path was found.
    pub path_length: f64,
    pub found: bool,
}

pub const CSV_HEADER: &str =
    "map,planner,sampler,seed,time_ms,iterations,samples_total,samples_wasted,path_length,found";

impl Row {
    pub fn wasted_pct(&self) -> f64 {
        if self.samples_total == 0 {
            0.0
        } else {
            100.0 * self.samples_wasted as f64 / self.samples_total as f64
        }
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> csv::Result<Vec<Row>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for fewer than two values.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    /// Statistics of the finite values.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Stat {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Stat { n: 0, mean: f64::NAN, std: f64::NAN, min: f64::NAN, max: f64::NAN };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Stat {
            n: v.len(),
            mean,
            std: var.sqrt(),
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupAggregate {
    pub planner: String,
    pub sampler: String,
    pub trials: usize,
    pub success_rate: f64,
    pub time_ms: Stat,
    pub iterations: Stat,
    pub samples_total: Stat,
    pub samples_wasted: Stat,
    pub wasted_pct: Stat,
    /// Over the trials that found a path.
    pub path_length: Stat,
}

/// Groups rows by (planner, sampler) in order of first appearance.
pub fn aggregate(rows: &[Row]) -> Vec<GroupAggregate> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        let k = (r.planner.clone(), r.sampler.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(planner, sampler)| {
            let g: Vec<&Row> = rows.iter().filter(|r| r.planner == planner && r.sampler == sampler).collect();
            GroupAggregate {
                trials: g.len(),
                success_rate: g.iter().filter(|r| r.found).count() as f64 / g.len() as f64,
                time_ms: Stat::of(g.iter().map(|r| r.time_ms)),
                iterations: Stat::of(g.iter().map(|r| r.iterations as f64)),
                samples_total: Stat::of(g.iter().map(|r| r.samples_total as f64)),
                samples_wasted: Stat::of(g.iter().map(|r| r.samples_wasted as f64)),
                wasted_pct: Stat::of(g.iter().map(|r| r.wasted_pct())),
                path_length: Stat::of(g.iter().filter(|r| r.found).map(|r| r.path_length)),
                planner,
                sampler,
            }
        })
        .collect()
}
