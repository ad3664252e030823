use crossing_core::coordinator::{run_with_arrivals, CoordinatorError, LaneArrivals, ScenarioConfig};
use crossing_core::model::VehicleParams;
use crossing_core::polling::PollingPolicy;
use proptest::prelude::*;

/// Increasing times with every gap above `b`.
fn hard_core(n: usize, b: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.5, 0..n).prop_map(move |gaps| {
        let mut t = 0.0;
        gaps.into_iter()
            .map(|g| {
                t += b + 1e-6 + g;
                t
            })
            .collect()
    })
}

fn config(policy: PollingPolicy) -> ScenarioConfig {
    ScenarioConfig {
        arrivals: [LaneArrivals::matern(1.0, 0.2); 2],
        policy,
        horizon: 40.0,
        check_truncation: true,
        ..Default::default()
    }
}

fn policy() -> impl Strategy<Value = PollingPolicy> {
    prop_oneof![
        Just(PollingPolicy::Exhaustive),
        Just(PollingPolicy::Gated),
        (1u32..5).prop_map(PollingPolicy::KLimited),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dense_bursts_stay_safe(a in hard_core(40, 0.2), b in hard_core(40, 0.2), pol in policy()) {
        let log = run_with_arrivals(&config(pol), [&a, &b]).unwrap();
        prop_assert_eq!(log.checks_failed, 0);
        prop_assert_eq!(log.delay_bound_violations, 0);
        prop_assert_eq!(log.truncation.violations, 0);
        prop_assert_eq!(log.membership.violations, 0);
        prop_assert_eq!(log.planner_diversions, 0);
        for r in log.accepted() {
            prop_assert!(r.delay >= -1e-6 && r.delay <= r.wait + 1e-6, "{:?}", r);
            prop_assert!(r.crossing_time >= r.t_arrival + 5.0 - 1e-9);
        }
        let total = (log.arrivals[0] + log.arrivals[1]) as usize;
        prop_assert_eq!(total, a.len() + b.len());
        prop_assert_eq!(log.records.len(), total);
    }

    #[test]
    fn crossings_respect_service_spacing(a in hard_core(30, 0.2), b in hard_core(30, 0.2)) {
        let log = run_with_arrivals(&config(PollingPolicy::Exhaustive), [&a, &b]).unwrap();
        let mut xs: Vec<_> = log.accepted().map(|r| (r.crossing_time, r.lane)).collect();
        xs.sort_by(|p, q| p.0.total_cmp(&q.0));
        for w in xs.windows(2) {
            let need = if w[0].1 == w[1].1 { 0.2 } else { 0.3 };
            prop_assert!(w[1].0 - w[0].0 >= need - 1e-9);
        }
    }

    #[test]
    fn short_road_failures_are_reported(a in hard_core(40, 0.0), b in hard_core(40, 0.0)) {
        // Below the minimum road length and without a hard core nothing is
        // promised, but the run must end in a value, not a panic.
        let params = VehicleParams { road_len: 15.0, ..Default::default() };
        let cfg = ScenarioConfig { params, assumption_override: true, check_truncation: false, ..config(PollingPolicy::Exhaustive) };
        match run_with_arrivals(&cfg, [&a, &b]) {
            Ok(log) => prop_assert_eq!(log.checks_failed, 0),
            Err(CoordinatorError::Collision { .. }) | Err(CoordinatorError::Planner { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected {}", e),
        }
    }
}

#[test]
fn same_seed_same_log() {
    let cfg = ScenarioConfig {
        horizon: 200.0,
        arrivals: [LaneArrivals::matern(2.0, 0.2); 2],
        seed: 11,
        ..Default::default()
    };
    let a = crossing_core::coordinator::run(&cfg).unwrap();
    let b = crossing_core::coordinator::run(&cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn lp_planner_agrees_on_a_light_run() {
    use crossing_core::motion::Planner;
    let a = [0.0, 3.0, 3.5];
    let b = [0.1, 0.4];
    let cfg = ScenarioConfig { horizon: 10.0, ..Default::default() };
    let exact = run_with_arrivals(&cfg, [&a, &b]).unwrap();
    // The grid program only constrains the gap at its nodes.
    let lp_cfg = ScenarioConfig { planner: Planner::Lp { grid: 120 }, collision_check: false, ..cfg };
    let lp = run_with_arrivals(&lp_cfg, [&a, &b]).unwrap();
    for (x, y) in exact.records.iter().zip(&lp.records) {
        assert_eq!(x.schedule_time, y.schedule_time);
        assert!((x.exit_time - y.exit_time).abs() < 1e-6, "{} vs {}", x.exit_time, y.exit_time);
    }
}
