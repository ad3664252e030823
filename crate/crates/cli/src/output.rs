//! CSV files. Every file opens with a `# schema: <name>/<version>` line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use crossing_core::coordinator::{thinning_stats, EventLog, ScenarioConfig};
use crossing_core::model::{Lane, VehicleParams};

pub const VEHICLES_SCHEMA: &str = "crossing.vehicles/1";
pub const SUMMARY_SCHEMA: &str = "crossing.summary/1";
pub const TRAJECTORY_SCHEMA: &str = "crossing.trajectories/1";
pub const SWEEP_SCHEMA: &str = "crossing.sweep/1";
pub const COMPARISON_SCHEMA: &str = "crossing.comparison/1";

pub fn writer(path: &Path, schema: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# schema: {schema}")?;
    Ok(csv::WriterBuilder::new().from_writer(out))
}

/// Shortest round-trip text, empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn write_vehicles(path: &Path, log: &EventLog) -> Result<()> {
    let mut w = writer(path, VEHICLES_SCHEMA)?;
    w.write_record([
        "id",
        "lane",
        "t_arrival_s",
        "diverted",
        "schedule_time_s",
        "crossing_time_s",
        "exit_time_s",
        "delay_s",
        "wait_s",
    ])?;
    for r in &log.records {
        w.write_record([
            r.id.to_string(),
            r.lane.number().to_string(),
            num(r.t_arrival),
            r.diverted.to_string(),
            num(r.schedule_time),
            num(r.crossing_time),
            num(r.exit_time),
            num(r.delay),
            num(r.wait),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Samples every recorded trajectory on the simulation grid.
pub fn write_trajectories(path: &Path, log: &EventLog, dt: f64) -> Result<()> {
    let mut w = writer(path, TRAJECTORY_SCHEMA)?;
    w.write_record(["id", "t_s", "x_m", "v_mps"])?;
    for r in &log.records {
        let Some(tr) = &r.trajectory else { continue };
        let (t0, t1) = (tr.t0(), tr.t_end());
        let mut cursor = 0;
        let mut k = (t0 / dt).ceil() as u64;
        loop {
            let t = k as f64 * dt;
            if t > t1 {
                break;
            }
            let s = tr.eval_with_cursor(&mut cursor, t);
            w.write_record([r.id.to_string(), num(t), num(s.position), num(s.velocity)])?;
            k += 1;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub seed: u64,
    pub config_hash: String,
    pub params: VehicleParams,
    pub horizon: f64,
    /// Per lane then all: (mean, median) delay.
    pub delay: [(f64, f64); 3],
    pub mean_wait: f64,
    pub arrival_rate: [f64; 2],
    pub served_rate: [f64; 2],
    pub theta_rate: [f64; 2],
    pub theta_fraction: f64,
    pub vehicles: usize,
    pub diverted: u64,
    pub checks_performed: u64,
    pub checks_failed: u64,
    pub delay_bound_violations: u64,
    pub planner_diversions: u64,
}

fn mean_median(mut xs: Vec<f64>) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) };
    (mean, median)
}

impl Summary {
    pub fn new(log: &EventLog, sc: &ScenarioConfig, config_hash: &str) -> Self {
        let delays = |lane: Option<Lane>| {
            mean_median(log.accepted().filter(|r| lane.is_none_or(|l| r.lane == l)).map(|r| r.delay).collect())
        };
        let waits: Vec<f64> = log.accepted().map(|r| r.wait).filter(|w| !w.is_nan()).collect();
        let th = thinning_stats(log, sc.horizon);
        Summary {
            seed: sc.seed,
            config_hash: config_hash.to_string(),
            params: sc.params,
            horizon: sc.horizon,
            delay: [delays(Some(Lane::One)), delays(Some(Lane::Two)), delays(None)],
            mean_wait: mean_median(waits).0,
            arrival_rate: th.arrivals,
            served_rate: th.served,
            theta_rate: th.theta,
            theta_fraction: th.theta_fraction(),
            vehicles: log.records.len(),
            diverted: log.diverted.iter().sum(),
            checks_performed: log.checks_performed,
            checks_failed: log.checks_failed,
            delay_bound_violations: log.delay_bound_violations,
            planner_diversions: log.planner_diversions,
        }
    }

    pub fn header() -> Vec<&'static str> {
        vec![
            "seed",
            "config_hash",
            "service_time_s",
            "switchover_time_s",
            "min_road_len_m",
            "road_len_m",
            "horizon_s",
            "lane1_mean_delay_s",
            "lane1_median_delay_s",
            "lane2_mean_delay_s",
            "lane2_median_delay_s",
            "mean_delay_s",
            "median_delay_s",
            "mean_wait_s",
            "lane1_arrival_rate_per_s",
            "lane2_arrival_rate_per_s",
            "lane1_served_rate_per_s",
            "lane2_served_rate_per_s",
            "lane1_theta_rate_per_s",
            "lane2_theta_rate_per_s",
            "theta_fraction",
            "vehicles",
            "diverted",
            "collision_checks",
            "collision_checks_failed",
            "delay_bound_violations",
            "planner_diversions",
        ]
    }

    pub fn row(&self) -> Vec<String> {
        let p = &self.params;
        vec![
            self.seed.to_string(),
            self.config_hash.clone(),
            num(p.service_time()),
            num(p.switchover_time()),
            num(p.min_road_len()),
            num(p.road_len),
            num(self.horizon),
            num(self.delay[0].0),
            num(self.delay[0].1),
            num(self.delay[1].0),
            num(self.delay[1].1),
            num(self.delay[2].0),
            num(self.delay[2].1),
            num(self.mean_wait),
            num(self.arrival_rate[0]),
            num(self.arrival_rate[1]),
            num(self.served_rate[0]),
            num(self.served_rate[1]),
            num(self.theta_rate[0]),
            num(self.theta_rate[1]),
            num(self.theta_fraction),
            self.vehicles.to_string(),
            self.diverted.to_string(),
            self.checks_performed.to_string(),
            self.checks_failed.to_string(),
            self.delay_bound_violations.to_string(),
            self.planner_diversions.to_string(),
        ]
    }

    /// Safety or delay-bound problems found in the run.
    pub fn property_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.checks_failed > 0 {
            out.push(format!("{} failed collision checks", self.checks_failed));
        }
        if self.delay_bound_violations > 0 {
            out.push(format!("{} vehicles with delay above their polling wait", self.delay_bound_violations));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = writer(path, SUMMARY_SCHEMA)?;
        w.write_record(Self::header())?;
        w.write_record(self.row())?;
        w.flush()?;
        Ok(())
    }
}
