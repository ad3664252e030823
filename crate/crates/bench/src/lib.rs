//! Fixtures shared by the benchmarks.

use crossing_core::arrivals::{matern_rate_for_intensity, sample_matern};
use crossing_core::coordinator::{LaneArrivals, ScenarioConfig};
use crossing_core::model::{State, VehicleParams};
use crossing_core::motion::{envelope_synthesize, MotionProblem};

const B: f64 = 0.2;

/// A vehicle entering 0.5 s behind a leader that was planned with 3 s of slack.
pub fn follower_problem() -> MotionProblem {
    let p = VehicleParams::default();
    let leader = MotionProblem::new(State::new(-p.road_len, p.v_m), 0.0, 8.0, None, p);
    let front = envelope_synthesize(&leader).expect("leader plan");
    MotionProblem::new(State::new(-p.road_len, p.v_m), 0.5, 8.2, Some(front), p)
}

pub fn scenario(intensity: f64, horizon: f64, seed: u64) -> ScenarioConfig {
    let lambda = matern_rate_for_intensity(intensity, B).expect("reachable intensity");
    ScenarioConfig { arrivals: [LaneArrivals::matern(lambda, B); 2], horizon, seed, ..Default::default() }
}

/// Hard-core arrival times for both lanes.
pub fn arrival_pair(intensity: f64, horizon: f64, seed: u64) -> [Vec<f64>; 2] {
    let lambda = matern_rate_for_intensity(intensity, B).expect("reachable intensity");
    [sample_matern(lambda, B, horizon, seed), sample_matern(lambda, B, horizon, seed.wrapping_add(1))]
}
