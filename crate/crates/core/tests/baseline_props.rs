use crossing_core::baseline::{run_traffic_light_with, LightConfig, Phase};
use crossing_core::coordinator::{LaneArrivals, ScenarioConfig};
use crossing_core::model::VehicleParams;
use proptest::prelude::*;

fn stream(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, 0..n).prop_map(|gaps| {
        let mut t = 0.0;
        gaps.into_iter()
            .map(|g| {
                t += 0.2 + 1e-6 + g;
                t
            })
            .collect()
    })
}

fn config() -> ScenarioConfig {
    ScenarioConfig { arrivals: [LaneArrivals::none(); 2], horizon: 100.0, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn entries_only_on_green_or_closing_yellow(a in stream(60), b in stream(60), g in 3.0f64..16.0) {
        let p = VehicleParams::default();
        let light = LightConfig::new(g, &p);
        let log = run_traffic_light_with(&config(), &light, [&a, &b]).unwrap();
        prop_assert_eq!(log.checks_failed, 0);
        for r in log.accepted() {
            // A car waiting on the line enters exactly when its green starts.
            let open = |t: f64| matches!(light.phase(r.lane, t), Phase::Green | Phase::YellowAfterGreen);
            let phase = light.phase(r.lane, r.crossing_time - 1e-9);
            prop_assert!(open(r.crossing_time - 1e-9) || open(r.crossing_time + 1e-9), "{:?} at {:?}", r, phase);
            prop_assert!(r.delay >= -1e-6);
            if phase == Phase::YellowAfterGreen {
                // Clears the intersection before the yellow ends.
                let exit_phase = light.phase(r.lane, r.exit_time - 1e-9);
                prop_assert!(exit_phase == Phase::YellowAfterGreen, "{:?}", r);
            }
        }
    }
}

#[test]
fn longer_green_costs_more_at_light_load() {
    let cfg = ScenarioConfig {
        arrivals: [LaneArrivals::matern(0.3, 0.2); 2],
        horizon: 3000.0,
        seed: 5,
        ..Default::default()
    };
    let mean = |g: f64| {
        let log = crossing_core::baseline::run_traffic_light(&cfg, &LightConfig::new(g, &cfg.params)).unwrap();
        let n = log.accepted().count() as f64;
        log.accepted().map(|r| r.delay).sum::<f64>() / n
    };
    let (d5, d15) = (mean(5.0), mean(15.0));
    assert!(d5 > 0.0 && d15 > d5, "{d5} {d15}");
}

#[test]
fn car_just_outside_stopping_distance_at_yellow_waits() {
    // Yellow starts between grid points with the car 1 mm short of needing to go.
    let p = VehicleParams::default();
    let g = 10.47776682379603;
    let light = LightConfig::new(g, &p);
    let arrival = g - (p.road_len - 12.501) / p.v_m;
    let log = run_traffic_light_with(&config(), &light, [&[arrival], &[]]).unwrap();
    let r = log.accepted().next().unwrap();
    assert!(r.crossing_time >= light.period(), "{r:?}");
}
