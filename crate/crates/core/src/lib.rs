//! Coordination of autonomous vehicles at a signalless two-lane crossing.
//!
//! A polling server decides the crossing order; each vehicle then receives a
//! time-optimal trajectory that reaches the intersection at full speed at its
//! scheduled instant without hitting the vehicle in front.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrivals;
pub mod baseline;
pub mod coordinator;
pub mod lp;
pub mod model;
pub mod motion;
pub mod polling;

pub use arrivals::{
    matern_intensity, matern_rate_for_intensity, sample_matern, sample_poisson, ArrivalKind, ArrivalProcessSpec,
};
pub use baseline::{run_traffic_light, safe_follow_accel, yellow_duration, Directive, FollowerState, LightConfig};
pub use coordinator::{
    run, run_with_arrivals, thinning_stats, Coordinator, CoordinatorError, EventLog, LaneArrivals, ScenarioConfig,
    ThinningStats, VehicleRecord,
};
pub use lp::{solve, LinearProgram, LpSolution, LpStatus};
pub use model::{check_safety, compute_delay, rigid_body, Lane, Rectangle, State, Trajectory, VehicleParams};
pub use motion::{entry_feasible, in_f, motion_synthesize, MotionProblem, Planner};
pub use polling::{run_polling, PollingPolicy, PollingSystem, Schedule};
