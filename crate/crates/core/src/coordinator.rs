//! Event-driven coordination: every arrival updates the polling schedule and
//! replans the affected vehicles front to back.
//!
//! Vehicles scheduled before the newcomer keep their trajectories (re-solving
//! them would reproduce the same curves); the newcomer and every vehicle
//! scheduled after it are replanned to reach the intersection at
//! `tau + L / v_m`.

use std::collections::VecDeque;

use thiserror::Error;

use crate::arrivals::{ArrivalError, ArrivalKind, ArrivalProcessSpec};
use crate::model::{check_safety_with, compute_delay, Lane, ModelError, State, Trajectory, VehicleParams};
use crate::motion::{entry_feasible, in_f, Membership, MotionError, MotionProblem, Planner};
use crate::polling::{CustomerId, PollingError, PollingPolicy, PollingSystem};

/// Overlap tolerated by the collision checker, in meters.
pub const EPS_COLLISION: f64 = 1e-6;
/// Slack allowed in `delay <= wait`.
pub const EPS_DELAY: f64 = 1e-6;
/// Tolerance of the truncation check, in meters.
pub const EPS_TRUNCATION: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum CoordinatorError {
    #[error("control region shorter than 2 v_m^2 / a_m ({len} < {min}); set the override to run anyway")]
    RoadTooShort { len: f64, min: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Arrival(#[from] ArrivalError),
    #[error(transparent)]
    Polling(#[from] PollingError),
    #[error("collision at t={time}: vehicles {first} and {second} overlap by {overlap:.3e} m")]
    Collision { time: f64, first: usize, second: usize, overlap: f64 },
    #[error("planning failed for vehicle {vehicle} at t={time}: {source}; state: {dump}")]
    Planner {
        vehicle: usize,
        time: f64,
        dump: String,
        #[source]
        source: MotionError,
    },
    #[error("vehicle {vehicle} has negative delay {delay}")]
    NegativeDelay { vehicle: usize, delay: f64 },
}

/// Arrival process of one lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneArrivals {
    pub kind: ArrivalKind,
    /// Rate of the underlying Poisson process (1/s).
    pub lambda: f64,
}

impl LaneArrivals {
    pub fn matern(lambda: f64, b: f64) -> Self {
        LaneArrivals { kind: ArrivalKind::Matern { b }, lambda }
    }

    pub fn poisson(lambda: f64) -> Self {
        LaneArrivals { kind: ArrivalKind::Poisson, lambda }
    }

    pub fn none() -> Self {
        LaneArrivals { kind: ArrivalKind::Poisson, lambda: 0.0 }
    }

    pub fn spec(&self, horizon: f64, seed: u64) -> ArrivalProcessSpec {
        ArrivalProcessSpec { kind: self.kind, lambda: self.lambda, horizon, seed }
    }

    /// Whether consecutive arrivals are guaranteed at least `s` apart.
    fn hard_core_at_least(&self, s: f64) -> bool {
        match self.kind {
            ArrivalKind::Matern { b } => b >= s - 1e-12,
            ArrivalKind::Poisson => self.lambda == 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub params: VehicleParams,
    pub arrivals: [LaneArrivals; 2],
    pub policy: PollingPolicy,
    pub horizon: f64,
    pub dt_sim: f64,
    pub seed: u64,
    pub collision_check: bool,
    /// Run even when the control region is shorter than `2 v_m^2 / a_m`.
    pub assumption_override: bool,
    pub planner: Planner,
    /// Re-solve earlier-scheduled vehicles at every arrival and compare.
    pub check_truncation: bool,
    /// Keep each vehicle's realized trajectory in its record.
    pub record_trajectories: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let params = VehicleParams::default();
        let b = params.service_time();
        ScenarioConfig {
            params,
            arrivals: [LaneArrivals::matern(1.0, b); 2],
            policy: PollingPolicy::Exhaustive,
            horizon: 1000.0,
            dt_sim: 0.01,
            seed: 0,
            collision_check: true,
            assumption_override: false,
            planner: Planner::Envelope,
            check_truncation: false,
            record_trajectories: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), CoordinatorError> {
        self.params.validate()?;
        if !self.params.meets_min_road_len() && !self.assumption_override {
            return Err(CoordinatorError::RoadTooShort { len: self.params.road_len, min: self.params.min_road_len() });
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(CoordinatorError::Config(format!(
                "horizon must be finite and non-negative, got {}",
                self.horizon
            )));
        }
        if !(self.dt_sim > 0.0) {
            return Err(CoordinatorError::Config(format!("dt_sim must be positive, got {}", self.dt_sim)));
        }
        if let PollingPolicy::KLimited(0) = self.policy {
            return Err(CoordinatorError::Config("k-limited policy needs k >= 1".into()));
        }
        for a in &self.arrivals {
            a.spec(self.horizon, self.seed).validate()?;
        }
        Ok(())
    }

    /// Road at least the minimum length and arrivals at least one service time
    /// apart: planning cannot fail, so a failure is a bug.
    fn planning_guaranteed(&self) -> bool {
        let s = self.params.service_time();
        self.params.meets_min_road_len() && self.arrivals.iter().all(|a| a.hard_core_at_least(s))
    }
}

/// Outcome for one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRecord {
    pub id: usize,
    pub lane: Lane,
    pub t_arrival: f64,
    pub diverted: bool,
    /// Service start in the polling system; NaN when diverted.
    pub schedule_time: f64,
    pub crossing_time: f64,
    pub exit_time: f64,
    pub delay: f64,
    pub wait: f64,
    /// Realized path, when recording is enabled.
    pub trajectory: Option<Trajectory>,
}

impl VehicleRecord {
    fn new(id: usize, lane: Lane, t_arrival: f64) -> Self {
        VehicleRecord {
            id,
            lane,
            t_arrival,
            diverted: false,
            schedule_time: f64::NAN,
            crossing_time: f64::NAN,
            exit_time: f64::NAN,
            delay: f64::NAN,
            wait: f64::NAN,
            trajectory: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TruncationStats {
    pub comparisons: u64,
    pub max_deviation: f64,
    pub violations: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MembershipStats {
    pub checks: u64,
    pub boundary: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<VehicleRecord>,
    pub horizon: f64,
    pub arrivals: [u64; 2],
    pub served: [u64; 2],
    pub diverted: [u64; 2],
    /// Accepted-by-braking arrivals whose own plan was infeasible (only
    /// possible outside the hard-core assumptions).
    pub planner_diversions: u64,
    pub checks_performed: u64,
    pub checks_failed: u64,
    /// Vehicles with `delay > wait + EPS_DELAY`.
    pub delay_bound_violations: u64,
    pub max_delay_excess: f64,
    pub replans: u64,
    pub truncation: TruncationStats,
    pub membership: MembershipStats,
}

impl EventLog {
    pub fn accepted(&self) -> impl Iterator<Item = &VehicleRecord> {
        self.records.iter().filter(|r| !r.diverted)
    }
}

/// Per-lane intensities over `horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningStats {
    pub theta: [f64; 2],
    pub served: [f64; 2],
    pub arrivals: [f64; 2],
}

impl ThinningStats {
    pub fn total_theta(&self) -> f64 {
        self.theta[0] + self.theta[1]
    }

    pub fn total_served(&self) -> f64 {
        self.served[0] + self.served[1]
    }

    /// Diverted share of all arrivals.
    pub fn theta_fraction(&self) -> f64 {
        let a = self.arrivals[0] + self.arrivals[1];
        if a > 0.0 {
            self.total_theta() / a
        } else {
            0.0
        }
    }
}

pub fn thinning_stats(log: &EventLog, horizon: f64) -> ThinningStats {
    let per = |c: [u64; 2]| {
        if horizon > 0.0 {
            [c[0] as f64 / horizon, c[1] as f64 / horizon]
        } else {
            [0.0; 2]
        }
    };
    ThinningStats { theta: per(log.diverted), served: per(log.served), arrivals: per(log.arrivals) }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalOutcome {
    /// Record indices of every vehicle that received a new trajectory.
    Accepted {
        replanned: Vec<usize>,
    },
    Diverted,
}

/// A vehicle inside the control region or the intersection.
#[derive(Debug, Clone)]
struct Active {
    record: usize,
    customer: CustomerId,
    trajectory: Trajectory,
    exit_time: f64,
    cursor: usize,
}

/// Mutable state of a coordinated run.
#[derive(Debug, Clone)]
pub struct Coordinator {
    config: ScenarioConfig,
    polling: PollingSystem,
    lanes: [VecDeque<Active>; 2],
    /// Record index of each polling customer.
    customers: Vec<usize>,
    log: EventLog,
    clock: f64,
    next_check: u64,
    strict: bool,
}

impl Coordinator {
    pub fn new(config: ScenarioConfig) -> Result<Self, CoordinatorError> {
        config.validate()?;
        let p = &config.params;
        let polling = PollingSystem::new(p.service_time(), p.switchover_time(), config.policy).without_history();
        let strict = config.planning_guaranteed();
        let log = EventLog { horizon: config.horizon, ..Default::default() };
        Ok(Coordinator {
            config,
            polling,
            lanes: [VecDeque::new(), VecDeque::new()],
            customers: Vec::new(),
            log,
            clock: 0.0,
            next_check: 0,
            strict,
        })
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Positions of every vehicle still in the system at the current clock.
    pub fn snapshot(&self) -> Vec<(usize, Lane, State)> {
        let mut out = Vec::new();
        for lane in Lane::BOTH {
            for a in &self.lanes[lane.index()] {
                let s = a.trajectory.eval(self.clock).unwrap_or(a.trajectory.final_state());
                out.push((a.record, lane, s));
            }
        }
        out
    }

    /// Handles an arrival at `(-L, v_m)` on `lane` at time `t`.
    pub fn on_arrival(&mut self, lane: Lane, t: f64) -> Result<ArrivalOutcome, CoordinatorError> {
        if t < self.clock {
            return Err(PollingError::ArrivalInPast { arrival: t, clock: self.clock }.into());
        }
        self.check_until(t, false)?;
        self.clock = t;
        self.retire(t);

        let p = self.config.params;
        let id = self.log.records.len();
        self.log.records.push(VehicleRecord::new(id, lane, t));
        self.log.arrivals[lane.index()] += 1;

        let k = lane.index();
        let front = self.lanes[k].back().map(|a| a.trajectory.clone());
        if !entry_feasible(front.as_ref(), t, &p) {
            return Ok(self.divert(id, lane));
        }

        let mut trial = self.polling.clone();
        let cid = trial.add_to_queue(lane, t)?;
        let schedule = trial.simulate();
        let pos = schedule.position_of(cid).expect("new customer is scheduled");
        let tau = schedule.order[pos].2;
        let tf = tau + p.road_len / p.v_m;
        let problem = MotionProblem::new(State::new(-p.road_len, p.v_m), t, tf, front, p);
        let own = match self.config.planner.plan(&problem) {
            Ok(tr) => tr,
            Err(e) if !self.strict && matches!(e, MotionError::Infeasible(_)) => {
                self.log.planner_diversions += 1;
                return Ok(self.divert(id, lane));
            }
            Err(source) => return Err(self.planner_error(id, t, source)),
        };

        if self.config.check_truncation {
            self.check_truncation(t, &schedule.order[..pos])?;
        }

        self.polling = trial;
        debug_assert_eq!(cid as usize, self.customers.len());
        self.customers.push(id);
        self.log.served[k] += 1;
        {
            let rec = &mut self.log.records[id];
            rec.schedule_time = tau;
            rec.wait = tau - t;
        }
        let exit = self.finish_plan(id, &own)?;
        if self.config.record_trajectories {
            self.log.records[id].trajectory = Some(own.clone());
        }
        self.lanes[k].push_back(Active { record: id, customer: cid, trajectory: own, exit_time: exit, cursor: 0 });
        let mut replanned = vec![id];
        self.log.replans += 1;

        // Everyone after the newcomer waits in the other lane; replan front to back.
        let later = &schedule.order[pos + 1..];
        let other = lane.other().index();
        for (nu, &(c, q, tau_j)) in later.iter().enumerate() {
            debug_assert_eq!(q, lane.other());
            let rec = self.customers[c as usize];
            let slot = self.lanes[other].iter().position(|a| a.customer == c).expect("scheduled vehicle is active");
            let state = self.lanes[other][slot].trajectory.eval(t)?;
            self.log.membership.checks += 1;
            match in_f(state, nu + 1, &p) {
                Membership::Interior => {}
                Membership::Boundary => self.log.membership.boundary += 1,
                Membership::Outside => self.log.membership.violations += 1,
            }
            let front = slot.checked_sub(1).map(|f| self.lanes[other][f].trajectory.clone());
            let problem = MotionProblem::new(state, t, tau_j + p.road_len / p.v_m, front, p);
            let tr = self.config.planner.plan(&problem).map_err(|e| self.planner_error(rec, t, e))?;
            {
                let r = &mut self.log.records[rec];
                r.schedule_time = tau_j;
                r.wait = tau_j - r.t_arrival;
            }
            let exit = self.finish_plan(rec, &tr)?;
            if self.config.record_trajectories {
                let r = &mut self.log.records[rec];
                r.trajectory = Some(match &r.trajectory {
                    Some(old) => old.splice(t, &tr),
                    None => tr.clone(),
                });
            }
            let a = &mut self.lanes[other][slot];
            a.trajectory = tr;
            a.exit_time = exit;
            a.cursor = 0;
            replanned.push(rec);
            self.log.replans += 1;
        }

        if self.config.collision_check {
            self.check_at(t)?;
        }
        Ok(ArrivalOutcome::Accepted { replanned })
    }

    /// Runs the remaining collision checks and returns the log.
    pub fn finish(mut self) -> Result<EventLog, CoordinatorError> {
        let end = self.lanes.iter().flatten().map(|a| a.exit_time).fold(self.clock, f64::max);
        self.check_until(end, true)?;
        self.clock = end;
        self.retire(f64::INFINITY);
        for r in self.log.records.iter().filter(|r| !r.diverted) {
            if r.delay < -EPS_DELAY {
                return Err(CoordinatorError::NegativeDelay { vehicle: r.id, delay: r.delay });
            }
            let excess = r.delay - r.wait;
            self.log.max_delay_excess = self.log.max_delay_excess.max(excess);
            if excess > EPS_DELAY {
                self.log.delay_bound_violations += 1;
            }
        }
        Ok(self.log)
    }

    fn divert(&mut self, id: usize, lane: Lane) -> ArrivalOutcome {
        self.log.records[id].diverted = true;
        self.log.diverted[lane.index()] += 1;
        ArrivalOutcome::Diverted
    }

    fn planner_error(&self, vehicle: usize, time: f64, source: MotionError) -> CoordinatorError {
        let dump = self
            .snapshot()
            .iter()
            .map(|(r, lane, s)| format!("#{r}@{lane}:({:.4},{:.4})", s.position, s.velocity))
            .collect::<Vec<_>>()
            .join(" ");
        CoordinatorError::Planner { vehicle, time, dump, source }
    }

    /// Fills crossing, exit and delay from a fresh plan; returns the exit time.
    fn finish_plan(&mut self, rec: usize, tr: &Trajectory) -> Result<f64, CoordinatorError> {
        let p = self.config.params;
        let cross = tr.time_at_position(0.0).expect("plans end at full speed");
        let exit = tr.time_at_position(p.l + p.w).expect("plans end at full speed");
        let r = &mut self.log.records[rec];
        r.crossing_time = cross;
        r.exit_time = exit;
        r.delay = compute_delay(r.t_arrival, exit, &p);
        if r.delay < -EPS_DELAY {
            return Err(CoordinatorError::NegativeDelay { vehicle: rec, delay: r.delay });
        }
        Ok(exit)
    }

    /// Re-solves every earlier-scheduled vehicle still upstream and compares
    /// with its current trajectory.
    fn check_truncation(&mut self, t: f64, earlier: &[(CustomerId, Lane, f64)]) -> Result<(), CoordinatorError> {
        let p = self.config.params;
        for &(c, q, tau) in earlier {
            let k = q.index();
            let Some(slot) = self.lanes[k].iter().position(|a| a.customer == c) else {
                continue;
            };
            let tf = tau + p.road_len / p.v_m;
            if tf - t < 1e-6 {
                continue;
            }
            let cur = &self.lanes[k][slot].trajectory;
            let front = slot.checked_sub(1).map(|f| self.lanes[k][f].trajectory.clone());
            let problem = MotionProblem::new(cur.eval(t)?, t, tf, front, p);
            let rec = self.lanes[k][slot].record;
            let fresh = self.config.planner.plan(&problem).map_err(|e| self.planner_error(rec, t, e))?;
            let mut dev: f64 = 0.0;
            for i in 0..=64 {
                let s = t + (tf - t) * i as f64 / 64.0;
                dev = dev.max((fresh.position_at(s) - cur.position_at(s)).abs());
            }
            for &s in fresh.times().iter().chain(cur.times()).filter(|&&s| s >= t) {
                dev = dev.max((fresh.position_at(s) - cur.position_at(s)).abs());
            }
            let st = &mut self.log.truncation;
            st.comparisons += 1;
            st.max_deviation = st.max_deviation.max(dev);
            if dev > EPS_TRUNCATION {
                st.violations += 1;
            }
        }
        Ok(())
    }

    fn retire(&mut self, t: f64) {
        for lane in &mut self.lanes {
            while lane.front().is_some_and(|a| a.exit_time <= t) {
                lane.pop_front();
            }
        }
    }

    /// Grid checks at `k * dt_sim` before `t` (or up to `t` inclusive).
    fn check_until(&mut self, t: f64, inclusive: bool) -> Result<(), CoordinatorError> {
        if !self.config.collision_check {
            return Ok(());
        }
        loop {
            let c = self.next_check as f64 * self.config.dt_sim;
            if c > t || (!inclusive && c >= t) {
                return Ok(());
            }
            self.next_check += 1;
            if c < self.clock {
                continue;
            }
            self.check_at(c)?;
        }
    }

    fn check_at(&mut self, c: f64) -> Result<(), CoordinatorError> {
        let mut snap = Vec::new();
        let mut who = Vec::new();
        for lane in Lane::BOTH {
            for a in self.lanes[lane.index()].iter_mut() {
                if a.exit_time <= c || self.log.records[a.record].t_arrival > c {
                    continue;
                }
                let s = a.trajectory.eval_with_cursor(&mut a.cursor, c);
                snap.push((lane, s.position));
                who.push(a.record);
            }
        }
        self.log.checks_performed += 1;
        let hits = check_safety_with(&snap, &self.config.params, EPS_COLLISION);
        if let Some(h) = hits.first() {
            self.log.checks_failed += 1;
            return Err(CoordinatorError::Collision {
                time: c,
                first: who[h.first],
                second: who[h.second],
                overlap: h.overlap,
            });
        }
        Ok(())
    }
}

/// Samples both lanes from the config seed and runs to completion.
pub fn run(config: &ScenarioConfig) -> Result<EventLog, CoordinatorError> {
    config.validate()?;
    let streams = [
        config.arrivals[0].spec(config.horizon, config.seed).sample(Lane::One),
        config.arrivals[1].spec(config.horizon, config.seed).sample(Lane::Two),
    ];
    run_with_arrivals(config, [&streams[0], &streams[1]])
}

/// Runs on explicit arrival streams (one increasing list per lane).
pub fn run_with_arrivals(config: &ScenarioConfig, arrivals: [&[f64]; 2]) -> Result<EventLog, CoordinatorError> {
    let mut co = Coordinator::new(config.clone())?;
    for (lane, t) in merge_arrivals(arrivals) {
        co.on_arrival(lane, t)?;
    }
    co.finish()
}

/// Merges two increasing streams; lane 1 first on ties.
pub fn merge_arrivals(arrivals: [&[f64]; 2]) -> Vec<(Lane, f64)> {
    let (a, b) = (arrivals[0], arrivals[1]);
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            out.push((Lane::One, a[i]));
            i += 1;
        } else {
            out.push((Lane::Two, b[j]));
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig { horizon: 100.0, ..Default::default() }
    }

    #[test]
    fn first_vehicle_flows_freely() {
        let log = run_with_arrivals(&cfg(), [&[0.0], &[]]).unwrap();
        let r = &log.records[0];
        assert_eq!((r.schedule_time, r.wait), (0.0, 0.0));
        assert!((r.crossing_time - 5.0).abs() < 1e-9 && (r.exit_time - 5.3).abs() < 1e-9);
        assert!(r.delay.abs() < 1e-9);
    }

    #[test]
    fn cross_lane_pair() {
        // The server starts parked at lane 1.
        let log = run_with_arrivals(&cfg(), [&[0.0], &[0.01]]).unwrap();
        let (one, two) = (&log.records[0], &log.records[1]);
        assert_eq!(two.lane, Lane::Two);
        assert_eq!(one.schedule_time, 0.0);
        assert!((two.schedule_time - 0.3).abs() < 1e-12);
        assert!((two.wait - 0.29).abs() < 1e-12);
        assert!(two.delay <= two.wait + EPS_DELAY);
        assert_eq!(log.checks_failed, 0);

        // A first arrival on lane 2 pays the switchover.
        let log = run_with_arrivals(&cfg(), [&[0.01], &[0.0]]).unwrap();
        let (two, one) = (&log.records[0], &log.records[1]);
        assert!((two.schedule_time - 0.1).abs() < 1e-12);
        assert!((one.schedule_time - 0.4).abs() < 1e-12);
        assert!((one.wait - 0.39).abs() < 1e-12);
    }

    #[test]
    fn empty_run() {
        let mut c = cfg();
        c.arrivals = [LaneArrivals::none(); 2];
        let log = run(&c).unwrap();
        assert!(log.records.is_empty());
        assert_eq!(log.checks_failed, 0);
        let th = thinning_stats(&log, c.horizon);
        assert_eq!(th.theta, [0.0, 0.0]);
    }

    #[test]
    fn refuses_short_road_without_override() {
        let mut c = cfg();
        c.params.road_len = 40.0;
        assert!(matches!(run(&c), Err(CoordinatorError::RoadTooShort { .. })));
        c.assumption_override = true;
        c.arrivals = [LaneArrivals::none(); 2];
        assert!(run(&c).is_ok());
    }

    #[test]
    fn blocked_entry_is_diverted() {
        // A long queue on lane 1 while lane 2 holds the server.
        let two: Vec<f64> = (0..40).map(|i| 0.21 * i as f64).collect();
        let one: Vec<f64> = (0..40).map(|i| 0.001 + 0.21 * i as f64).collect();
        let log = run_with_arrivals(&cfg(), [&one, &two]).unwrap();
        assert!(log.diverted.iter().sum::<u64>() > 0);
        assert_eq!(log.checks_failed, 0);
        for lane in 0..2 {
            assert_eq!(log.arrivals[lane], log.served[lane] + log.diverted[lane]);
        }
    }

    #[test]
    fn deterministic() {
        let c = ScenarioConfig { horizon: 200.0, seed: 3, ..Default::default() };
        assert_eq!(run(&c).unwrap(), run(&c).unwrap());
    }
}
