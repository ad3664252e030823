//! Fixed-cycle traffic light with locally aggressive car following.
//!
//! Each lane cycles green, yellow, red, yellow; lane 2 is shifted by half a
//! period. Only the yellow that follows a green lets vehicles in, and only
//! those that can no longer stop before the intersection. Every step, each
//! vehicle picks the largest acceleration that keeps it able to stop behind
//! the vehicle ahead (or behind the stop line) at the next step.

use crate::coordinator::{CoordinatorError, EventLog, ScenarioConfig, VehicleRecord, EPS_COLLISION};
use crate::model::{check_safety_with, compute_delay, Lane, VehicleParams};

/// Minimum yellow time: a vehicle that just cannot stop when yellow starts
/// must clear the intersection.
pub fn yellow_duration(params: &VehicleParams) -> f64 {
    params.v_m / (2.0 * params.a_m) + (params.l + params.w) / params.v_m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightConfig {
    /// Duration of green, and of red (s).
    pub green: f64,
    pub yellow: f64,
}

impl LightConfig {
    /// Green/red of `green` seconds with the minimum safe yellow.
    pub fn new(green: f64, params: &VehicleParams) -> Self {
        LightConfig { green, yellow: yellow_duration(params) }
    }

    /// Longer yellow than the minimum. Shorter ones are rejected.
    pub fn with_yellow(green: f64, yellow: f64, params: &VehicleParams) -> Result<Self, CoordinatorError> {
        let min = yellow_duration(params);
        if yellow < min - 1e-12 {
            return Err(CoordinatorError::Config(format!("yellow {yellow} s is below the safe minimum {min} s")));
        }
        Ok(LightConfig { green, yellow })
    }

    pub fn period(&self) -> f64 {
        2.0 * (self.green + self.yellow)
    }

    pub fn phase(&self, lane: Lane, t: f64) -> Phase {
        let shift = match lane {
            Lane::One => 0.0,
            Lane::Two => self.green + self.yellow,
        };
        let tau = (t + shift).rem_euclid(self.period());
        let (g, y) = (self.green, self.yellow);
        if tau < g {
            Phase::Green
        } else if tau < g + y {
            Phase::YellowAfterGreen
        } else if tau < 2.0 * g + y {
            Phase::Red
        } else {
            Phase::YellowAfterRed
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Green,
    YellowAfterGreen,
    Red,
    YellowAfterRed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directive {
    Go,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerState {
    pub position: f64,
    pub velocity: f64,
}

/// Largest acceleration keeping `v'^2/(2a) <= d' - l + v_f'^2/(2a)` and
/// `d' >= l` after one step, where `front` is the front vehicle's state at
/// the end of the step. With a stop directive the stop line acts as a stopped vehicle whose rear
/// bumper is at 0.
pub fn safe_follow_accel(
    me: FollowerState,
    front: Option<FollowerState>,
    dt: f64,
    params: &VehicleParams,
    directive: Directive,
) -> f64 {
    let (a_m, v) = (params.a_m, me.velocity);
    let hi = a_m.min((params.v_m - v) / dt);
    let mut best = hi;
    let line = FollowerState { position: params.l, velocity: 0.0 };
    let obstacles = front.into_iter().chain((directive == Directive::Stop).then_some(line));
    for f in obstacles {
        // q2 a^2 + q1 a + q0 <= 0, from expanding the next-step inequality.
        let q2 = dt * dt / (2.0 * a_m);
        let q1 = v * dt / a_m + 0.5 * dt * dt;
        let q0 =
            v * v / (2.0 * a_m) + me.position + v * dt - f.position + params.l - f.velocity * f.velocity / (2.0 * a_m);
        let disc = q1 * q1 - 4.0 * q2 * q0;
        let root = if disc < 0.0 { f64::NEG_INFINITY } else { (-q1 + disc.sqrt()) / (2.0 * q2) };
        // The gap itself must also stay at least l at the end of the step.
        let gap = 2.0 * (f.position - params.l - me.position - v * dt) / (dt * dt);
        best = best.min(root).min(gap);
    }
    // Stopping inside the step: brake fully, the car halts within its
    // braking distance.
    if best < -v / dt {
        return -a_m;
    }
    best
}

#[derive(Debug, Clone)]
struct Car {
    record: usize,
    x: f64,
    v: f64,
    crossed: bool,
}

/// Fixed-step traffic-light run over the config's arrival streams.
pub fn run_traffic_light(config: &ScenarioConfig, light: &LightConfig) -> Result<EventLog, CoordinatorError> {
    config.validate()?;
    let streams = [
        config.arrivals[0].spec(config.horizon, config.seed).sample(Lane::One),
        config.arrivals[1].spec(config.horizon, config.seed).sample(Lane::Two),
    ];
    run_traffic_light_with(config, light, [&streams[0], &streams[1]])
}

pub fn run_traffic_light_with(
    config: &ScenarioConfig,
    light: &LightConfig,
    arrivals: [&[f64]; 2],
) -> Result<EventLog, CoordinatorError> {
    config.params.validate()?;
    if !(light.green > 0.0 && light.green.is_finite()) {
        return Err(CoordinatorError::Config(format!("green must be positive, got {}", light.green)));
    }
    LightConfig::with_yellow(light.green, light.yellow, &config.params)?;
    let p = config.params;
    let dt = config.dt_sim;
    let mut log = EventLog { horizon: config.horizon, ..Default::default() };
    let mut lanes: [Vec<Car>; 2] = [Vec::new(), Vec::new()];
    let mut next = [0usize; 2];
    let mut step: u64 = 0;
    let clear = p.l + p.w;
    loop {
        let t = step as f64 * dt;
        let pending = (0..2).any(|k| next[k] < arrivals[k].len());
        if !pending && lanes.iter().all(|l| l.is_empty()) {
            break;
        }
        // Spawn arrivals in (t - dt, t], advanced at full speed to t.
        for lane in Lane::BOTH {
            let k = lane.index();
            while next[k] < arrivals[k].len() && arrivals[k][next[k]] <= t {
                let ta = arrivals[k][next[k]];
                next[k] += 1;
                let id = log.records.len();
                let mut rec = VehicleRecord {
                    id,
                    lane,
                    t_arrival: ta,
                    diverted: false,
                    schedule_time: f64::NAN,
                    crossing_time: f64::NAN,
                    exit_time: f64::NAN,
                    delay: f64::NAN,
                    wait: f64::NAN,
                    trajectory: None,
                };
                log.arrivals[k] += 1;
                let x = -p.road_len + p.v_m * (t - ta);
                let safe = lanes[k]
                    .last()
                    .is_none_or(|f| p.v_m * p.v_m / (2.0 * p.a_m) <= f.x - x - p.l + f.v * f.v / (2.0 * p.a_m) + 1e-9);
                if safe {
                    log.served[k] += 1;
                    lanes[k].push(Car { record: id, x, v: p.v_m, crossed: false });
                } else {
                    rec.diverted = true;
                    log.diverted[k] += 1;
                }
                log.records.push(rec);
            }
        }

        if config.collision_check {
            let snap: Vec<(Lane, f64)> =
                Lane::BOTH.iter().flat_map(|&lane| lanes[lane.index()].iter().map(move |c| (lane, c.x))).collect();
            log.checks_performed += 1;
            if let Some(h) = check_safety_with(&snap, &p, EPS_COLLISION).first() {
                log.checks_failed += 1;
                let ids: Vec<usize> =
                    Lane::BOTH.iter().flat_map(|&lane| lanes[lane.index()].iter().map(|c| c.record)).collect();
                return Err(CoordinatorError::Collision {
                    time: t,
                    first: ids[h.first],
                    second: ids[h.second],
                    overlap: h.overlap,
                });
            }
        }

        for lane in Lane::BOTH {
            // The yellow rule applies on the step in which the yellow starts;
            // deciding a step late strands cars that could still have stopped.
            let phase = match (light.phase(lane, t), light.phase(lane, t + dt)) {
                (Phase::Green, Phase::YellowAfterGreen) => Phase::YellowAfterGreen,
                (ph, _) => ph,
            };
            let cars = &mut lanes[lane.index()];
            let mut front: Option<FollowerState> = None;
            for car in cars.iter_mut() {
                let me = FollowerState { position: car.x, velocity: car.v };
                let directive = if car.crossed {
                    Directive::Go
                } else {
                    match phase {
                        Phase::Green => Directive::Go,
                        Phase::Red | Phase::YellowAfterRed => Directive::Stop,
                        Phase::YellowAfterGreen => {
                            if car.x + car.v * car.v / (2.0 * p.a_m) <= 1e-9 {
                                Directive::Stop
                            } else {
                                Directive::Go
                            }
                        }
                    }
                };
                let a = safe_follow_accel(me, front, dt, &p, directive);
                let (x0, v0) = (car.x, car.v);
                if v0 + a * dt < 0.0 {
                    car.v = 0.0;
                    car.x = x0 + v0 * v0 / (2.0 * -a);
                } else {
                    car.v = (v0 + a * dt).min(p.v_m);
                    car.x = x0 + 0.5 * (v0 + car.v) * dt;
                }
                if directive == Directive::Stop {
                    // Rounding must not carry a stopping car over the line.
                    car.x = car.x.min(0.0);
                }
                let rec = &mut log.records[car.record];
                if !car.crossed && car.x > 0.0 {
                    car.crossed = true;
                    rec.crossing_time = t + crossing_offset(x0, v0, a, 0.0, dt);
                }
                if car.x >= clear {
                    rec.exit_time = t + crossing_offset(x0, v0, a, clear, dt);
                    rec.delay = compute_delay(rec.t_arrival, rec.exit_time, &p);
                }
                front = Some(FollowerState { position: car.x, velocity: car.v });
            }
            cars.retain(|c| c.x < clear);
        }
        step += 1;
    }
    for r in log.records.iter().filter(|r| !r.diverted) {
        if r.delay < -1e-6 {
            return Err(CoordinatorError::NegativeDelay { vehicle: r.id, delay: r.delay });
        }
    }
    Ok(log)
}

/// Time within a step at which the position reaches `target`.
fn crossing_offset(x0: f64, v0: f64, a: f64, target: f64, dt: f64) -> f64 {
    let rem = target - x0;
    if rem <= 0.0 {
        return 0.0;
    }
    let d = if a.abs() < 1e-12 {
        rem / v0
    } else {
        let disc = (v0 * v0 + 2.0 * a * rem).max(0.0);
        2.0 * rem / (v0 + disc.sqrt())
    };
    d.clamp(0.0, dt)
}
