//! Vehicle parameters, rigid-body geometry, trajectories and delay.
//!
//! Each lane has its own scalar axis. A vehicle's position is the coordinate
//! of its front bumper; it is negative inside the control region and crosses
//! zero when the vehicle enters the intersection square.

use std::fmt;

use thiserror::Error;

/// Dynamic-consistency tolerance for trajectory nodes, in meters.
pub const EPS_DYN: f64 = 1e-6;
/// Slack allowed on velocity and acceleration bounds.
pub const EPS_BOUND: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
    #[error("time {t} precedes trajectory start {t0}")]
    BeforeStart { t: f64, t0: f64 },
    #[error("malformed trajectory: {0}")]
    Malformed(String),
}

/// Geometry and dynamics constants shared by every vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Vehicle length (m).
    pub l: f64,
    /// Vehicle width, equal to the side of the intersection square (m).
    pub w: f64,
    /// Maximum speed (m/s).
    pub v_m: f64,
    /// Maximum acceleration and deceleration (m/s^2).
    pub a_m: f64,
    /// Length of the control region (m).
    pub road_len: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams { l: 2.0, w: 1.0, v_m: 10.0, a_m: 4.0, road_len: 50.0 }
    }
}

impl VehicleParams {
    pub fn new(l: f64, w: f64, v_m: f64, a_m: f64, road_len: f64) -> Result<Self, ModelError> {
        let p = VehicleParams { l, w, v_m, a_m, road_len };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [("l", self.l), ("w", self.w), ("v_m", self.v_m), ("a_m", self.a_m), ("L", self.road_len)];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidParams(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Polling service time `s = l / v_m`.
    pub fn service_time(&self) -> f64 {
        self.l / self.v_m
    }

    /// Polling switchover time `r = w / v_m`.
    pub fn switchover_time(&self) -> f64 {
        self.w / self.v_m
    }

    /// Minimum control-region length `2 v_m^2 / a_m`.
    pub fn min_road_len(&self) -> f64 {
        2.0 * self.v_m * self.v_m / self.a_m
    }

    /// Whether the control region is long enough for guaranteed feasibility.
    pub fn meets_min_road_len(&self) -> bool {
        self.road_len >= self.min_road_len() * (1.0 - 1e-12)
    }

    /// Distance covered while braking from `v_m` to rest.
    pub fn brake_distance(&self) -> f64 {
        self.v_m * self.v_m / (2.0 * self.a_m)
    }

    /// Free-flow time from entering the control region to leaving the intersection.
    pub fn free_flow_time(&self) -> f64 {
        (self.road_len + self.l + self.w) / self.v_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lane {
    One,
    Two,
}

impl Lane {
    pub const BOTH: [Lane; 2] = [Lane::One, Lane::Two];

    pub fn index(self) -> usize {
        match self {
            Lane::One => 0,
            Lane::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn other(self) -> Lane {
        match self {
            Lane::One => Lane::Two,
            Lane::Two => Lane::One,
        }
    }

    pub fn from_number(n: u8) -> Option<Lane> {
        match n {
            1 => Some(Lane::One),
            2 => Some(Lane::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Lane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub position: f64,
    pub velocity: f64,
}

impl State {
    pub fn new(position: f64, velocity: f64) -> Self {
        State { position, velocity }
    }
}

/// Open axis-aligned rectangle `(x_lo, x_hi) x (y_lo, y_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rectangle {
    /// Open rectangles intersect when both axis overlaps have positive length.
    pub fn intersects(&self, other: &Rectangle) -> bool {
        self.overlap(other) > 0.0
    }

    /// The smaller of the two axis overlaps; non-positive when disjoint.
    pub fn overlap(&self, other: &Rectangle) -> f64 {
        let dx = self.x_hi.min(other.x_hi) - self.x_lo.max(other.x_lo);
        let dy = self.y_hi.min(other.y_hi) - self.y_lo.max(other.y_lo);
        dx.min(dy)
    }
}

/// Footprint of a vehicle whose front bumper is at `y` in `lane`.
pub fn rigid_body(y: f64, lane: Lane, params: &VehicleParams) -> Rectangle {
    match lane {
        Lane::One => Rectangle { x_lo: y - params.l, x_hi: y, y_lo: 0.0, y_hi: params.w },
        Lane::Two => Rectangle { x_lo: 0.0, x_hi: params.w, y_lo: y - params.l, y_hi: y },
    }
}

/// A pair of snapshot indices whose footprints overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub first: usize,
    pub second: usize,
    pub overlap: f64,
}

/// Every colliding pair in `snapshot`; empty means safe.
pub fn check_safety(snapshot: &[(Lane, f64)], params: &VehicleParams) -> Vec<Collision> {
    check_safety_with(snapshot, params, 0.0)
}

/// Like [`check_safety`], but ignores overlaps no deeper than `eps` meters.
///
/// Same-lane footprints are intervals of equal length, so after sorting only
/// neighbours need comparing. Cross-lane footprints can only meet inside the
/// intersection square.
pub fn check_safety_with(snapshot: &[(Lane, f64)], params: &VehicleParams, eps: f64) -> Vec<Collision> {
    let mut out = Vec::new();
    let mut by_lane: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &(lane, _)) in snapshot.iter().enumerate() {
        by_lane[lane.index()].push(i);
    }
    for idx in by_lane.iter_mut() {
        idx.sort_by(|&a, &b| snapshot[a].1.total_cmp(&snapshot[b].1));
        for pair in idx.windows(2) {
            let (rear, front) = (pair[0], pair[1]);
            let overlap = params.l - (snapshot[front].1 - snapshot[rear].1);
            if overlap > eps {
                out.push(Collision { first: rear.min(front), second: rear.max(front), overlap });
            }
        }
    }
    let inside = |i: &usize| {
        let y = snapshot[*i].1;
        y > 0.0 && y - params.l < params.w
    };
    let one: Vec<usize> = by_lane[0].iter().copied().filter(inside).collect();
    let two: Vec<usize> = by_lane[1].iter().copied().filter(inside).collect();
    for &i in &one {
        let ri = rigid_body(snapshot[i].1, Lane::One, params);
        for &j in &two {
            let overlap = ri.overlap(&rigid_body(snapshot[j].1, Lane::Two, params));
            if overlap > eps {
                out.push(Collision { first: i.min(j), second: i.max(j), overlap });
            }
        }
    }
    out.sort_by_key(|c| (c.first, c.second));
    out
}

/// Extra transit time relative to free flow.
pub fn compute_delay(t_enter: f64, t_exit: f64, params: &VehicleParams) -> f64 {
    (t_exit - t_enter) - params.free_flow_time()
}

/// Position/velocity history on a (possibly non-uniform) time grid.
///
/// Velocity is linear between nodes and position is its exact integral.
/// Past the final node the vehicle keeps its terminal velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    positions: Vec<f64>,
    velocities: Vec<f64>,
    accelerations: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from node times, positions and velocities; the
    /// per-step acceleration is derived from the velocity change.
    pub fn from_nodes(times: Vec<f64>, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self, ModelError> {
        let n = times.len();
        if n == 0 || positions.len() != n || velocities.len() != n {
            return Err(ModelError::Malformed(format!(
                "node arrays must be non-empty and equal length ({n}, {}, {})",
                positions.len(),
                velocities.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ModelError::Malformed("node times must be strictly increasing".into()));
        }
        let accelerations =
            (0..n - 1).map(|i| (velocities[i + 1] - velocities[i]) / (times[i + 1] - times[i])).collect();
        Ok(Trajectory { times, positions, velocities, accelerations })
    }

    /// Uniform grid starting at `t0` with step `dt`, as produced by the LP.
    pub fn uniform(
        t0: f64,
        dt: f64,
        positions: Vec<f64>,
        velocities: Vec<f64>,
        accelerations: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let n = positions.len();
        if !(dt > 0.0) || n == 0 || velocities.len() != n || accelerations.len() + 1 != n {
            return Err(ModelError::Malformed("inconsistent uniform grid".into()));
        }
        let times = (0..n).map(|i| t0 + dt * i as f64).collect();
        Ok(Trajectory { times, positions, velocities, accelerations })
    }

    /// Constant-speed motion from `(t0, x0)` until `t1`.
    pub fn constant_speed(t0: f64, x0: f64, v: f64, t1: f64) -> Self {
        Trajectory::from_nodes(vec![t0, t1], vec![x0, x0 + v * (t1 - t0)], vec![v, v])
            .expect("constant-speed trajectory needs t1 > t0")
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn accelerations(&self) -> &[f64] {
        &self.accelerations
    }

    pub fn final_state(&self) -> State {
        State::new(*self.positions.last().unwrap(), *self.velocities.last().unwrap())
    }

    /// Index of the step containing `t` (the last node index past the end).
    pub fn segment_at(&self, t: f64) -> usize {
        self.times.partition_point(|&ti| ti <= t).saturating_sub(1)
    }

    /// State at time `t`; errors before the first node.
    pub fn eval(&self, t: f64) -> Result<State, ModelError> {
        if t < self.times[0] {
            return Err(ModelError::BeforeStart { t, t0: self.times[0] });
        }
        Ok(self.eval_in(self.segment_at(t), t))
    }

    /// Evaluates with a cursor that only moves forward; for monotone sweeps.
    pub fn eval_with_cursor(&self, cursor: &mut usize, t: f64) -> State {
        let n = self.times.len();
        if *cursor >= n || self.times[*cursor] > t {
            *cursor = self.segment_at(t);
        }
        while *cursor + 1 < n && self.times[*cursor + 1] <= t {
            *cursor += 1;
        }
        self.eval_in(*cursor, t.max(self.times[0]))
    }

    fn eval_in(&self, i: usize, t: f64) -> State {
        let d = t - self.times[i];
        if i + 1 >= self.times.len() {
            let v = self.velocities[i];
            return State::new(self.positions[i] + v * d, v);
        }
        let h = self.times[i + 1] - self.times[i];
        let (v0, v1) = (self.velocities[i], self.velocities[i + 1]);
        let slope = (v1 - v0) / h;
        State::new(self.positions[i] + v0 * d + 0.5 * slope * d * d, v0 + slope * d)
    }

    /// Position at `t`, clamping queries before the start to the first node.
    pub fn position_at(&self, t: f64) -> f64 {
        self.eval_in(self.segment_at(t), t.max(self.times[0])).position
    }

    /// First time the position reaches `p`, if it ever does.
    pub fn time_at_position(&self, p: f64) -> Option<f64> {
        if self.positions[0] >= p {
            return Some(self.times[0]);
        }
        let n = self.times.len();
        let i = self.positions.partition_point(|&x| x < p);
        if i >= n {
            let (x, v) = (self.positions[n - 1], self.velocities[n - 1]);
            return if v > 0.0 { Some(self.times[n - 1] + (p - x) / v) } else { None };
        }
        let k = i - 1;
        let h = self.times[k + 1] - self.times[k];
        let (x0, v0, v1) = (self.positions[k], self.velocities[k], self.velocities[k + 1]);
        let a = 0.5 * (v1 - v0) / h;
        let rem = p - x0;
        // Smallest non-negative root of a d^2 + v0 d - rem = 0.
        let d = if a.abs() < 1e-15 {
            if v0 > 0.0 {
                rem / v0
            } else {
                h
            }
        } else {
            let disc = (v0 * v0 + 4.0 * a * rem).max(0.0);
            2.0 * rem / (v0 + disc.sqrt()).max(f64::MIN_POSITIVE)
        };
        Some(self.times[k] + d.clamp(0.0, h))
    }

    /// Largest position and velocity residuals of the trapezoid update.
    pub fn residuals(&self) -> (f64, f64) {
        let mut rx: f64 = 0.0;
        let mut rv: f64 = 0.0;
        for i in 0..self.times.len() - 1 {
            let h = self.times[i + 1] - self.times[i];
            let (v0, v1) = (self.velocities[i], self.velocities[i + 1]);
            rx = rx.max((self.positions[i + 1] - (self.positions[i] + 0.5 * (v0 + v1) * h)).abs());
            rv = rv.max((v1 - (v0 + self.accelerations[i] * h)).abs());
        }
        (rx, rv)
    }

    /// Checks dynamic consistency, monotone positions and the box bounds.
    pub fn validate(&self, params: &VehicleParams) -> Result<(), ModelError> {
        let (rx, rv) = self.residuals();
        if rx > EPS_DYN || rv > EPS_DYN {
            return Err(ModelError::Malformed(format!("dynamic residuals {rx:e} / {rv:e}")));
        }
        if let Some(v) = self.velocities.iter().find(|&&v| v < -EPS_BOUND || v > params.v_m + EPS_BOUND) {
            return Err(ModelError::Malformed(format!("velocity {v} outside [0, v_m]")));
        }
        if let Some(u) = self.accelerations.iter().find(|&&u| u.abs() > params.a_m + EPS_BOUND) {
            return Err(ModelError::Malformed(format!("acceleration {u} exceeds a_m")));
        }
        if self.positions.windows(2).any(|w| w[1] < w[0] - EPS_DYN) {
            return Err(ModelError::Malformed("positions decrease".into()));
        }
        Ok(())
    }

    /// The part of this trajectory at or after `t`, starting with a node at `t`.
    pub fn truncate_before(&self, t: f64) -> Trajectory {
        let t = t.max(self.t0());
        let s = self.eval_in(self.segment_at(t), t);
        let k = self.times.partition_point(|&ti| ti <= t);
        let mut times = vec![t];
        let mut pos = vec![s.position];
        let mut vel = vec![s.velocity];
        for i in k..self.times.len() {
            if self.times[i] - t > 1e-12 {
                times.push(self.times[i]);
                pos.push(self.positions[i]);
                vel.push(self.velocities[i]);
            }
        }
        Trajectory::from_nodes(times, pos, vel).expect("truncation keeps node order")
    }

    /// This trajectory up to `t`, followed by `tail` (which should start at `t`).
    pub fn splice(&self, t: f64, tail: &Trajectory) -> Trajectory {
        let mut times = Vec::new();
        let mut pos = Vec::new();
        let mut vel = Vec::new();
        for i in 0..self.times.len() {
            if self.times[i] < t - 1e-12 {
                times.push(self.times[i]);
                pos.push(self.positions[i]);
                vel.push(self.velocities[i]);
            }
        }
        for i in 0..tail.times.len() {
            if times.last().is_none_or(|&last| tail.times[i] > last + 1e-12) {
                times.push(tail.times[i]);
                pos.push(tail.positions[i]);
                vel.push(tail.velocities[i]);
            }
        }
        Trajectory::from_nodes(times, pos, vel).expect("splice keeps node order")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn derived_constants() {
        let p = std_params();
        assert!((p.service_time() - 0.2).abs() < 1e-15);
        assert!((p.switchover_time() - 0.1).abs() < 1e-15);
        assert_eq!(p.min_road_len(), 50.0);
        assert!(p.meets_min_road_len());
        assert!(!VehicleParams { road_len: 49.0, ..p }.meets_min_road_len());
        assert!(VehicleParams::new(2.0, 0.0, 10.0, 4.0, 50.0).is_err());
    }

    #[test]
    fn rigid_body_lanes() {
        let p = std_params();
        assert_eq!(rigid_body(0.0, Lane::One, &p), Rectangle { x_lo: -2.0, x_hi: 0.0, y_lo: 0.0, y_hi: 1.0 });
        assert_eq!(rigid_body(0.0, Lane::Two, &p), Rectangle { x_lo: 0.0, x_hi: 1.0, y_lo: -2.0, y_hi: 0.0 });
        let a = rigid_body(1.5, Lane::One, &p);
        let b = rigid_body(1.5, Lane::Two, &p);
        assert!(a.intersects(&b));
        assert!((a.overlap(&b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn safety_examples() {
        let p = std_params();
        assert!(check_safety(&[(Lane::One, 0.0), (Lane::One, -2.0)], &p).is_empty());
        let hit = check_safety(&[(Lane::One, 1.5), (Lane::Two, 1.5)], &p);
        assert_eq!(hit.len(), 1);
        assert_eq!((hit[0].first, hit[0].second), (0, 1));
        assert!(check_safety(&[], &p).is_empty());
        // Lane 2 vehicle exactly leaving as lane 1 enters.
        assert!(check_safety(&[(Lane::One, 0.0), (Lane::Two, 3.0)], &p).is_empty());
        assert_eq!(check_safety(&[(Lane::One, 0.1), (Lane::Two, 2.9)], &p).len(), 1);
    }

    #[test]
    fn delay_examples() {
        let p = std_params();
        assert!((compute_delay(0.0, 5.3, &p)).abs() < 1e-12);
        assert!((compute_delay(0.0, 5.5, &p) - 0.2).abs() < 1e-12);
        assert!((compute_delay(3.0, 8.3, &p)).abs() < 1e-12);
    }

    #[test]
    fn eval_constant_speed() {
        let tr = Trajectory::constant_speed(1.0, -50.0, 10.0, 6.0);
        for t in [1.0, 1.37, 3.5, 6.0] {
            let s = tr.eval(t).unwrap();
            assert!((s.position - (-50.0 + 10.0 * (t - 1.0))).abs() < 1e-12);
            assert_eq!(s.velocity, 10.0);
        }
        // Extrapolates past the last node.
        assert!((tr.eval(7.0).unwrap().position - 10.0).abs() < 1e-12);
        assert!(matches!(tr.eval(0.5), Err(ModelError::BeforeStart { .. })));
    }

    #[test]
    fn eval_quadratic_midpoint() {
        let (a, dt) = (4.0, 0.5);
        let tr = Trajectory::uniform(0.0, dt, vec![0.0, 0.5 * a * dt * dt], vec![0.0, a * dt], vec![a]).unwrap();
        let s = tr.eval(dt / 2.0).unwrap();
        assert!((s.position - a * dt * dt / 8.0).abs() < 1e-15);
        assert_eq!(tr.eval(0.0).unwrap(), State::new(0.0, 0.0));
        assert_eq!(tr.eval(dt).unwrap(), State::new(0.5, 2.0));
    }

    #[test]
    fn time_at_position_inverts_eval() {
        let tr = Trajectory::from_nodes(vec![0.0, 1.0, 3.0], vec![-10.0, -2.0, 6.0], vec![10.0, 6.0, 2.0]).unwrap();
        for t in [0.0, 0.3, 0.99, 1.5, 2.7] {
            let x = tr.eval(t).unwrap().position;
            let back = tr.time_at_position(x).unwrap();
            assert!((back - t).abs() < 1e-9, "{t} -> {back}");
        }
        assert!((tr.time_at_position(8.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn truncate_and_splice() {
        let tr = Trajectory::from_nodes(vec![0.0, 1.0, 2.0], vec![0.0, 9.0, 17.0], vec![10.0, 8.0, 8.0]).unwrap();
        let tail = tr.truncate_before(0.5);
        assert_eq!(tail.t0(), 0.5);
        for t in [0.5, 0.8, 1.0, 1.7, 2.5] {
            let (a, b) = (tail.eval(t).unwrap(), tr.eval(t).unwrap());
            assert!((a.position - b.position).abs() < 1e-12 && (a.velocity - b.velocity).abs() < 1e-12);
        }
        let joined = tr.splice(0.5, &tail);
        for t in [0.0, 0.3, 0.5, 1.2, 3.0] {
            let (a, b) = (joined.eval(t).unwrap(), tr.eval(t).unwrap());
            assert!((a.position - b.position).abs() < 1e-12 && (a.velocity - b.velocity).abs() < 1e-12);
        }
    }

    #[test]
    fn validate_rejects_bad_dynamics() {
        let p = std_params();
        let good = Trajectory::constant_speed(0.0, -50.0, 10.0, 5.0);
        assert!(good.validate(&p).is_ok());
        let fast = Trajectory::constant_speed(0.0, -50.0, 11.0, 5.0);
        assert!(fast.validate(&p).is_err());
        let jump = Trajectory::uniform(0.0, 1.0, vec![0.0, 5.0], vec![1.0, 1.0], vec![0.0]).unwrap();
        assert!(jump.validate(&p).is_err());
    }
}
