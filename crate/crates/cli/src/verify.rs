//! Self-check suite behind `crossing verify`.

use clap::ValueEnum;
use crossing_core::arrivals::{matern_intensity, matern_rate_for_intensity, sample_matern};
use crossing_core::coordinator::{run, LaneArrivals, ScenarioConfig};
use crossing_core::lp::{solve, vertex_enumeration, LinearProgram, LpStatus};
use crossing_core::model::{Lane, VehicleParams};
use crossing_core::polling::{check_regularity, LongestQueueFirst, PolicyState, PollingPolicy, PollingSystem};
use rayon::prelude::*;

/// Deliberately broken inputs that the suite must flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// A queue-length policy that reorders waiting customers.
    IrregularPolicy,
    /// A control region far below the minimum length under heavy load.
    ShortRoad,
}

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub fn run_suite(seed: u64, inject: &[Fixture]) -> Vec<Check> {
    let mut checks = vec![worked_example(), regularity(seed), lp_oracle(seed), matern_counts(seed)];
    checks.extend(short_runs(seed));
    for f in inject {
        checks.push(match f {
            Fixture::IrregularPolicy => irregular_policy(seed),
            Fixture::ShortRoad => short_road(seed),
        });
    }
    checks
}

fn worked_example() -> Check {
    let mut sys = PollingSystem::new(1.0, 1.0, PollingPolicy::Exhaustive);
    let arrivals = [
        (Lane::Two, 0.0),
        (Lane::Two, 0.5),
        (Lane::One, 1.5),
        (Lane::One, 2.2),
        (Lane::One, 2.4),
        (Lane::One, 2.6),
        (Lane::Two, 4.5),
        (Lane::Two, 5.5),
        (Lane::Two, 6.5),
        (Lane::One, 8.5),
    ];
    for (lane, t) in arrivals {
        sys.add_to_queue(lane, t).expect("increasing");
    }
    sys.advance(f64::INFINITY).expect("forward");
    let starts = sys.history();
    let times = |lane| starts.iter().filter(|s| s.customer.queue == lane).map(|s| s.start).collect::<Vec<_>>();
    let (t1, t2) = (times(Lane::One), times(Lane::Two));
    let pass = t1 == [4.0, 5.0, 6.0, 7.0, 13.0] && t2 == [1.0, 2.0, 9.0, 10.0, 11.0];
    Check { name: "polling worked example", pass, detail: format!("lane 1 {t1:?}, lane 2 {t2:?}") }
}

fn regularity(seed: u64) -> Check {
    let policies = [
        PollingPolicy::Exhaustive,
        PollingPolicy::Gated,
        PollingPolicy::KLimited(1),
        PollingPolicy::KLimited(4),
        PollingPolicy::KLimited(8),
    ];
    let mut first = None;
    let mut failures = 0;
    for p in policies {
        for k in 0..1000 {
            if let Err(w) = check_regularity(PolicyState::new(p), 0.2, 0.1, seed.wrapping_mul(7919).wrapping_add(k)) {
                failures += 1;
                first.get_or_insert_with(|| format!("{p}: {w}"));
            }
        }
    }
    let detail = match first {
        Some(w) => format!("{failures} of 5000 scenarios reordered; first witness: {w}"),
        None => "5000 scenarios over 5 policies".into(),
    };
    Check { name: "regularity", pass: failures == 0, detail }
}

fn irregular_policy(seed: u64) -> Check {
    let found = (0..500).find_map(|k| check_regularity(LongestQueueFirst, 0.2, 0.1, seed.wrapping_add(k)).err());
    match found {
        Some(w) => Check { name: "injected irregular policy", pass: false, detail: format!("witness: {w}") },
        None => Check { name: "injected irregular policy", pass: true, detail: "no reordering found".into() },
    }
}

fn lp_oracle(seed: u64) -> Check {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut mismatches) = (0.0f64, 0);
    for _ in 0..200 {
        let n = rng.random_range(2..5);
        let mut lp = LinearProgram::new(n);
        lp.objective = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        for j in 0..n {
            lp.lower[j] = rng.random_range(-3.0..0.0);
            lp.upper[j] = lp.lower[j] + rng.random_range(0.5..5.0);
        }
        for _ in 0..rng.random_range(1..4) {
            let row: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            lp.add_le(LinearProgram::dense_row(&row), rng.random_range(-2.0..6.0));
        }
        let sol = solve(&lp).expect("well-formed");
        match vertex_enumeration(&lp) {
            Some((best, _)) if sol.status == LpStatus::Optimal => worst = worst.max((sol.objective_value - best).abs()),
            None if sol.status == LpStatus::Infeasible => {}
            _ => mismatches += 1,
        }
    }
    Check {
        name: "lp oracle",
        pass: mismatches == 0 && worst <= 1e-7,
        detail: format!("200 programs, {mismatches} status mismatches, max objective gap {worst:.1e}"),
    }
}

fn matern_counts(seed: u64) -> Check {
    let h = 100_000.0;
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 2.0, 5.0] {
        let n = sample_matern(lambda, 0.2, h, seed).len() as f64;
        let expect = matern_intensity(lambda, 0.2);
        // Poisson standard error; hard-core counts vary less.
        worst = worst.max((n / h - expect).abs() / (expect / h).sqrt());
    }
    Check {
        name: "hard-core intensity",
        pass: worst <= 3.0,
        detail: format!("largest deviation {worst:.2} standard errors"),
    }
}

/// Short randomized runs with every runtime check enabled.
fn short_runs(seed: u64) -> Vec<Check> {
    let cases: Vec<(f64, u64)> = [0.8, 1.5, 2.3].iter().flat_map(|&i| (0..3).map(move |k| (i, seed + k))).collect();
    let logs: Vec<_> = cases
        .par_iter()
        .map(|&(intensity, s)| {
            let lambda = matern_rate_for_intensity(intensity, 0.2).expect("reachable");
            let cfg = ScenarioConfig {
                arrivals: [LaneArrivals::matern(lambda, 0.2); 2],
                horizon: 150.0,
                seed: s,
                check_truncation: true,
                ..Default::default()
            };
            run(&cfg).map_err(|e| format!("intensity {intensity} seed {s}: {e}"))
        })
        .collect();
    let mut errors = Vec::new();
    let (mut checks, mut failed, mut over, mut trunc, mut worst_dev, mut outside, mut members) =
        (0, 0, 0, 0, 0.0f64, 0, 0);
    for log in &logs {
        match log {
            Ok(log) => {
                checks += log.checks_performed;
                failed += log.checks_failed;
                over += log.delay_bound_violations;
                trunc += log.truncation.violations;
                worst_dev = worst_dev.max(log.truncation.max_deviation);
                outside += log.membership.violations;
                members += log.membership.checks;
            }
            Err(e) => errors.push(e.clone()),
        }
    }
    let err = errors.first().cloned();
    vec![
        Check {
            name: "safety",
            pass: errors.is_empty() && failed == 0,
            detail: err.unwrap_or_else(|| format!("{checks} checks over {} runs, {failed} failed", logs.len())),
        },
        Check {
            name: "delay <= wait",
            pass: errors.is_empty() && over == 0,
            detail: format!("{over} vehicles over the bound"),
        },
        Check {
            name: "truncation",
            pass: errors.is_empty() && trunc == 0,
            detail: format!("{trunc} violations, max deviation {worst_dev:.1e} m"),
        },
        Check {
            name: "follower sets",
            pass: errors.is_empty() && outside == 0,
            detail: format!("{members} classifications, {outside} outside"),
        },
    ]
}

fn short_road(seed: u64) -> Check {
    let params = VehicleParams { road_len: 12.0, ..Default::default() };
    let cfg = ScenarioConfig {
        params,
        arrivals: [LaneArrivals::poisson(4.0); 2],
        horizon: 200.0,
        seed,
        assumption_override: true,
        ..Default::default()
    };
    match run(&cfg) {
        Ok(log) if log.checks_failed == 0 && log.planner_diversions == 0 => {
            Check { name: "injected short road", pass: true, detail: "no failure surfaced".into() }
        }
        Ok(log) => Check {
            name: "injected short road",
            pass: false,
            detail: format!("{} failed checks, {} planner diversions", log.checks_failed, log.planner_diversions),
        },
        Err(e) => Check { name: "injected short road", pass: false, detail: e.to_string() },
    }
}
