// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use crossing_core::baseline::run_traffic_light;
use crossing_core::coordinator::{run, CoordinatorError, EventLog, ScenarioConfig};
use crossing_core::polling::run_polling;
use rayon::prelude::*;

use config::{ConfigError, ExperimentConfig};
use output::{num, Summary};

#[derive(Parser)]
#[command(name = "crossing", version, about = "Signal-free intersection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One coordinated run: vehicles.csv, summary.csv, trajectories.csv.
    Simulate(RunArgs),
    /// One row per (sweep value, seed) in sweep.csv.
    Sweep(RunArgs),
    /// Traffic-light runs for every green time, paired with a coordinated run.
    Baseline(RunArgs),
    /// Runs the property suite; exit status 1 if anything fails.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
        /// Add a broken fixture that the suite must report.
        #[arg(long, value_enum)]
        inject: Vec<verify::Fixture>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Also write sampled trajectories.
    #[arg(long)]
    trajectories: bool,
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

/// How a command ended, short of an I/O error.
enum Outcome {
    Ok,
    PropertyFailure(Vec<String>),
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct ConfigProblem(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => with_pool(a.jobs, || simulate(&a)),
        Command::Sweep(a) => with_pool(a.jobs, || sweep(&a)),
        Command::Baseline(a) => with_pool(a.jobs, || baseline(&a)),
        Command::Verify { seed, jobs, inject } => with_pool(jobs, || verify_cmd(seed, &inject)),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::PropertyFailure(msgs)) => {
            for m in msgs {
                eprintln!("property failure: {m}");
            }
            ExitCode::from(1)
        }
        Err(e) if e.is::<ConfigError>() || e.is::<ConfigProblem>() => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn with_pool(jobs: Option<usize>, f: impl FnOnce() -> Result<Outcome> + Send) -> Result<Outcome> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n.max(1));
    }
    b.build().context("starting worker pool")?.install(f)
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.override_seed(seed);
    }
    if args.trajectories {
        cfg.scenario.record_trajectories = true;
    }
    let out = args.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok((cfg, out))
}

/// Config mistakes surfacing at run time map to exit status 2.
fn run_checked(sc: &ScenarioConfig) -> Result<Result<EventLog, CoordinatorError>> {
    match run(sc) {
        Err(
            e @ (CoordinatorError::Config(_)
            | CoordinatorError::RoadTooShort { .. }
            | CoordinatorError::Model(_)
            | CoordinatorError::Arrival(_)),
        ) => Err(ConfigProblem(e.to_string()).into()),
        other => Ok(other),
    }
}

fn simulate(args: &RunArgs) -> Result<Outcome> {
    let (cfg, out) = load(args)?;
    let sc = cfg.scenario.clone();
    let log = match run_checked(&sc)? {
        Ok(log) => log,
        Err(e) => return Ok(Outcome::PropertyFailure(vec![e.to_string()])),
    };
    let summary = Summary::new(&log, &sc, &cfg.hash(&sc));
    write_run(&out, "", &log, &summary, args.trajectories.then_some(sc.dt_sim))?;
    let p = &sc.params;
    println!(
        "s = {} s, r = {} s, L* = {} m; {} vehicles, {} diverted, mean delay {} s",
        p.service_time(),
        p.switchover_time(),
        p.min_road_len(),
        summary.vehicles,
        summary.diverted,
        num(summary.delay[2].0),
    );
    Ok(finish(summary.property_failures()))
}

fn write_run(out: &Path, suffix: &str, log: &EventLog, summary: &Summary, traj_dt: Option<f64>) -> Result<()> {
    output::write_vehicles(&out.join(format!("vehicles{suffix}.csv")), log)?;
    summary.write(&out.join(format!("summary{suffix}.csv")))?;
    if let Some(dt) = traj_dt {
        output::write_trajectories(&out.join(format!("trajectories{suffix}.csv")), log, dt)?;
    }
    Ok(())
}

fn finish(failures: Vec<String>) -> Outcome {
    if failures.is_empty() {
        Outcome::Ok
    } else {
        Outcome::PropertyFailure(failures)
    }
}

fn sweep(args: &RunArgs) -> Result<Outcome> {
    let (cfg, out) = load(args)?;
    let Some(sw) = cfg.sweep.clone() else {
        return Err(ConfigProblem("sweep needs sweep.param and sweep.values".into()).into());
    };
    let points: Vec<(usize, f64, u64)> =
        sw.values.iter().enumerate().flat_map(|(i, &v)| cfg.seeds.iter().map(move |&s| (i, v, s))).collect();
    let runs_dir = out.join("runs");
    std::fs::create_dir_all(&runs_dir).with_context(|| format!("creating {}", runs_dir.display()))?;

    let rows: Vec<Result<(Vec<String>, Vec<String>)>> = points
        .par_iter()
        .map(|&(i, value, seed)| {
            let sc = cfg.scenario_for(Some(value), seed);
            let (status, mut row, failures) = match run_checked(&sc)? {
                Ok(log) => {
                    let s = Summary::new(&log, &sc, &cfg.hash(&sc));
                    let failures = s.property_failures();
                    let status = if failures.is_empty() { "ok".to_string() } else { failures.join("; ") };
                    (status, s.row(), failures)
                }
                Err(e) => (e.to_string(), vec![String::new(); Summary::header().len()], vec![e.to_string()]),
            };
            row.push(num(polling_wait(&sc)));
            for &g in &cfg.greens {
                let light = run_traffic_light(&sc, &cfg.light(g)).map(|l| mean_delay(&l)).unwrap_or(f64::NAN);
                row.push(num(light));
            }
            let mut full = vec![sw.param.clone(), num(value)];
            full.extend(row);
            full.push(status);
            let mut w = output::writer(&runs_dir.join(format!("point{i}_seed{seed}.csv")), output::SWEEP_SCHEMA)?;
            w.write_record(sweep_header(&cfg))?;
            w.write_record(&full)?;
            w.flush()?;
            Ok((full, failures.into_iter().map(|f| format!("{} = {value}, seed {seed}: {f}", sw.param)).collect()))
        })
        .collect();

    let mut w = output::writer(&out.join("sweep.csv"), output::SWEEP_SCHEMA)?;
    w.write_record(sweep_header(&cfg))?;
    let mut failures = Vec::new();
    for r in rows {
        let (row, f) = r?;
        w.write_record(&row)?;
        failures.extend(f);
    }
    w.flush()?;
    println!("{} runs written to {}", points.len(), out.join("sweep.csv").display());
    Ok(finish(failures))
}

fn sweep_header(cfg: &ExperimentConfig) -> Vec<String> {
    let mut h = vec!["param".to_string(), "value".to_string()];
    h.extend(Summary::header().into_iter().map(String::from));
    h.push("polling_mean_wait_s".into());
    for g in &cfg.greens {
        h.push(format!("light_g{g}_mean_delay_s"));
    }
    h.push("status".into());
    h
}

/// Mean wait of the bare polling system on the same arrivals.
fn polling_wait(sc: &ScenarioConfig) -> f64 {
    let a = sc.arrivals[0].spec(sc.horizon, sc.seed).sample(crossing_core::model::Lane::One);
    let b = sc.arrivals[1].spec(sc.horizon, sc.seed).sample(crossing_core::model::Lane::Two);
    let p = &sc.params;
    let run = run_polling([&a, &b], sc.policy, p.service_time(), p.switchover_time());
    if run.starts.is_empty() {
        f64::NAN
    } else {
        run.mean_wait()
    }
}

fn mean_delay(log: &EventLog) -> f64 {
    let n = log.accepted().count();
    if n == 0 {
        return f64::NAN;
    }
    log.accepted().map(|r| r.delay).sum::<f64>() / n as f64
}

fn baseline(args: &RunArgs) -> Result<Outcome> {
    let (cfg, out) = load(args)?;
    if cfg.greens.is_empty() {
        return Err(ConfigProblem("baseline needs light.green (one or more green times)".into()).into());
    }
    let sc = cfg.scenario.clone();
    let hash = cfg.hash(&sc);
    let coordinated = match run_checked(&sc)? {
        Ok(log) => log,
        Err(e) => return Ok(Outcome::PropertyFailure(vec![format!("coordinated run: {e}")])),
    };
    let coord_delay = mean_delay(&coordinated);
    let lights: Vec<_> = cfg.greens.par_iter().map(|&g| (g, run_traffic_light(&sc, &cfg.light(g)))).collect();

    let mut cmp = output::writer(&out.join("comparison.csv"), output::COMPARISON_SCHEMA)?;
    cmp.write_record([
        "seed",
        "config_hash",
        "green_s",
        "yellow_s",
        "baseline_mean_delay_s",
        "coordinated_mean_delay_s",
        "ratio",
    ])?;
    let mut failures = Vec::new();
    for (g, res) in lights {
        let light = cfg.light(g);
        let log = match res {
            Ok(log) => log,
            Err(e) => {
                failures.push(format!("traffic light g = {g} s: {e}"));
                continue;
            }
        };
        let summary = Summary::new(&log, &sc, &hash);
        write_run(&out, &format!("_g{g}"), &log, &summary, None)?;
        failures.extend(summary.property_failures().into_iter().map(|f| format!("traffic light g = {g} s: {f}")));
        let d = mean_delay(&log);
        cmp.write_record([
            sc.seed.to_string(),
            hash.clone(),
            num(g),
            num(light.yellow),
            num(d),
            num(coord_delay),
            num(d / coord_delay),
        ])?;
        println!("g = {g} s: light {} s, coordinated {} s, ratio {}", num(d), num(coord_delay), num(d / coord_delay));
    }
    cmp.flush()?;
    Ok(finish(failures))
}

fn verify_cmd(seed: u64, inject: &[verify::Fixture]) -> Result<Outcome> {
    let checks = verify::run_suite(seed, inject);
    let mut failures = Vec::new();
    for c in &checks {
        println!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        if !c.pass {
            failures.push(c.name.to_string());
        }
    }
    println!("{}/{} checks passed", checks.len() - failures.len(), checks.len());
    Ok(finish(failures))
}
