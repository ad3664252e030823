//! Trajectory synthesis and the analytic feasibility tests.
//!
//! Two planners solve the same problem: reach `x = 0` at speed `v_m` exactly
//! at `tf`, stay at least `l` behind the vehicle in front, and otherwise be
//! as far forward as possible at every instant.
//!
//! * [`motion_synthesize`] discretizes the problem into an LP on a uniform
//!   grid (trapezoidal positions, piecewise-constant acceleration).
//! * [`envelope_synthesize`] computes the continuous-time optimum directly.
//!   The pointwise-maximal feasible trajectory is the greedy "drive free,
//!   brake at the last moment, ride the upper envelope" curve below the
//!   latest-start envelope `G`, where `G` is itself the same greedy curve
//!   run backwards in time from the terminal state `(0, v_m)` against the
//!   front vehicle. Both passes are exact on piecewise-quadratic curves.

use thiserror::Error;

use crate::lp::{self, LinearProgram, LpStatus, Pricing, SolverOptions};
use crate::model::{State, Trajectory, VehicleParams};

/// Default LP grid size.
pub const DEFAULT_GRID: usize = 800;
/// Tolerance of the `F` set classification.
pub const EPS_F: f64 = 1e-9;
const TOL: f64 = 1e-9;
const TERMINAL_TOL: f64 = 1e-6;
// Position slack for touching the front bound. Knots at large absolute times
// carry cancellation error well above `TOL`.
const GAP_TOL: f64 = 1e-7;
/// Curve knots closer than this are merged into one trajectory node (s).
const NODE_MERGE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("no feasible trajectory: {0}")]
    Infeasible(String),
    #[error("malformed motion problem: {0}")]
    Malformed(String),
    #[error("LP solver returned {0:?}")]
    Solver(LpStatus),
}

#[derive(Debug, Clone)]
pub struct MotionProblem {
    pub initial: State,
    pub t0: f64,
    pub tf: f64,
    /// Trajectory of the vehicle directly ahead in the same lane.
    pub front: Option<Trajectory>,
    pub params: VehicleParams,
    /// LP grid size; ignored by the envelope planner.
    pub grid: usize,
}

impl MotionProblem {
    pub fn new(initial: State, t0: f64, tf: f64, front: Option<Trajectory>, params: VehicleParams) -> Self {
        MotionProblem { initial, t0, tf, front, params, grid: DEFAULT_GRID }
    }

    fn check(&self) -> Result<(), MotionError> {
        let p = &self.params;
        if !(self.tf > self.t0) {
            return Err(MotionError::Malformed(format!("tf {} must exceed t0 {}", self.tf, self.t0)));
        }
        let s = self.initial;
        if !(s.velocity >= -TOL && s.velocity <= p.v_m + TOL) {
            return Err(MotionError::Malformed(format!("initial velocity {} outside [0, v_m]", s.velocity)));
        }
        if !(s.position <= TOL && s.position.is_finite()) {
            return Err(MotionError::Malformed(format!("initial position {} past the intersection", s.position)));
        }
        if self.grid == 0 {
            return Err(MotionError::Malformed("grid size must be positive".into()));
        }
        Ok(())
    }
}

/// Which synthesis routine the coordinator calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Planner {
    #[default]
    Envelope,
    Lp {
        grid: usize,
    },
}

impl Planner {
    pub fn plan(&self, problem: &MotionProblem) -> Result<Trajectory, MotionError> {
        match *self {
            Planner::Envelope => envelope_synthesize(problem),
            Planner::Lp { grid } => {
                let mut p = problem.clone();
                p.grid = grid;
                motion_synthesize(&p)
            }
        }
    }
}

/// Solves the discretized program: maximize `sum x_i` over the grid.
pub fn motion_synthesize(problem: &MotionProblem) -> Result<Trajectory, MotionError> {
    problem.check()?;
    let p = &problem.params;
    let n = problem.grid;
    let dt = (problem.tf - problem.t0) / n as f64;
    // Columns: x_0..x_n, v_0..v_n, u_0..u_{n-1}.
    let (xi, vi, ui) = (|i: usize| i, |i: usize| n + 1 + i, |i: usize| 2 * (n + 1) + i);
    let mut lp = LinearProgram::new(3 * n + 2);
    for i in 0..=n {
        lp.objective[xi(i)] = 1.0;
        lp.lower[xi(i)] = f64::NEG_INFINITY;
        lp.upper[vi(i)] = p.v_m;
    }
    for i in 0..n {
        lp.lower[ui(i)] = -p.a_m;
        lp.upper[ui(i)] = p.a_m;
        lp.add_eq(vec![(xi(i + 1), 1.0), (xi(i), -1.0), (vi(i), -0.5 * dt), (vi(i + 1), -0.5 * dt)], 0.0);
        lp.add_eq(vec![(vi(i + 1), 1.0), (vi(i), -1.0), (ui(i), -dt)], 0.0);
    }
    if let Some(front) = &problem.front {
        for i in 0..=n {
            let t = problem.t0 + dt * i as f64;
            if t <= front.t_end() + 1e-9 {
                lp.upper[xi(i)] = lp.upper[xi(i)].min(front.position_at(t) - p.l);
            }
        }
    }
    let fix = |lp: &mut LinearProgram, j: usize, v: f64| {
        if v > lp.upper[j] + TOL || v < lp.lower[j] - TOL {
            return Err(MotionError::Infeasible(format!("boundary value {v} violates bound of column {j}")));
        }
        lp.lower[j] = v;
        lp.upper[j] = v;
        Ok(())
    };
    fix(&mut lp, xi(0), problem.initial.position)?;
    fix(&mut lp, vi(0), problem.initial.velocity.clamp(0.0, p.v_m))?;
    fix(&mut lp, xi(n), 0.0)?;
    fix(&mut lp, vi(n), p.v_m)?;

    let sol = lp::solve_with(&lp, SolverOptions { pricing: Pricing::Dantzig, ..Default::default() })
        .map_err(|e| MotionError::Malformed(e.to_string()))?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(MotionError::Infeasible("discretized program is infeasible".into())),
        s => return Err(MotionError::Solver(s)),
    }
    let x = sol.x[..=n].to_vec();
    let v = sol.x[n + 1..2 * (n + 1)].to_vec();
    let u = sol.x[2 * (n + 1)..].to_vec();
    Trajectory::uniform(problem.t0, dt, x, v, u).map_err(|e| MotionError::Malformed(e.to_string()))
}

/// Continuous-time optimal trajectory; exact up to floating point.
pub fn envelope_synthesize(problem: &MotionProblem) -> Result<Trajectory, MotionError> {
    problem.check()?;
    let k = Kin { v_m: problem.params.v_m, a_m: problem.params.a_m };
    let (t0, tf) = (problem.t0, problem.tf);
    let horizon = tf - t0;

    // Backward pass in sigma = tf - t with x~(sigma) = v_m sigma + x(tf - sigma).
    let bound_rev = match &problem.front {
        None => vec![Seg { t: 0.0, x: 1e12, v: 0.0, u: 0.0 }],
        Some(front) => {
            let b: Curve = from_trajectory(front).into_iter().map(|s| Seg { x: s.x - problem.params.l, ..s }).collect();
            k.reverse(&b, tf, t0)
        }
    };
    let latest_rev = k
        .greedy_below(0.0, 0.0, 0.0, horizon, &bound_rev)
        .ok_or_else(|| MotionError::Infeasible("front vehicle blocks the terminal state".into()))?;
    let latest = k.reverse_back(&latest_rev, tf, t0);

    let s = problem.initial;
    let curve = k
        .greedy_below(t0, s.position, s.velocity.clamp(0.0, k.v_m), tf, &latest)
        .ok_or_else(|| MotionError::Infeasible("initial state is ahead of the latest-start envelope".into()))?;
    let (xf, vf) = ev(&curve, tf);
    if xf.abs() > TERMINAL_TOL || (vf - k.v_m).abs() > TERMINAL_TOL {
        return Err(MotionError::Infeasible(format!(
            "cannot reach the intersection at full speed by {tf} (x={xf}, v={vf})"
        )));
    }
    to_trajectory(&curve, t0, tf, k.v_m)
}

/// Whether a vehicle entering at `(-L, v_m)` at `t_arrival` can avoid the
/// vehicle in front: full braking minimizes position pointwise, so it
/// suffices to check that trajectory.
pub fn entry_feasible(front: Option<&Trajectory>, t_arrival: f64, params: &VehicleParams) -> bool {
    let Some(front) = front else {
        return true;
    };
    let k = Kin { v_m: params.v_m, a_m: params.a_m };
    let brake = k.brake(t_arrival, -params.road_len, params.v_m);
    let bound: Curve = from_trajectory(front).into_iter().map(|s| Seg { x: s.x - params.l, ..s }).collect();
    let end = (t_arrival + params.v_m / params.a_m).max(front.t_end()) + 1.0;
    min_gap(&bound, &brake, t_arrival, end).0 >= -GAP_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

impl Membership {
    pub fn is_member(self) -> bool {
        self != Membership::Outside
    }
}

/// Classifies `state` against `p + v^2/(2 a_m) <= -v_m^2/(2 a_m) - (nu - 1) l`.
pub fn in_f(state: State, nu: usize, params: &VehicleParams) -> Membership {
    assert!(nu >= 1, "rank starts at 1");
    let lhs = state.position + state.velocity * state.velocity / (2.0 * params.a_m);
    let rhs = -params.brake_distance() - (nu as f64 - 1.0) * params.l;
    let gap = lhs - rhs;
    if gap < -EPS_F {
        Membership::Interior
    } else if gap <= EPS_F {
        Membership::Boundary
    } else {
        Membership::Outside
    }
}

/// Constant-acceleration piece starting at `t`; the last piece never ends.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Seg {
    t: f64,
    x: f64,
    v: f64,
    u: f64,
}

type Curve = Vec<Seg>;

fn seg_index(c: &[Seg], t: f64) -> usize {
    c.partition_point(|s| s.t <= t).saturating_sub(1)
}

/// Index of the piece active just before `t`.
fn seg_index_left(c: &[Seg], t: f64) -> usize {
    c.partition_point(|s| s.t < t).saturating_sub(1)
}

fn ev(c: &[Seg], t: f64) -> (f64, f64) {
    let s = c[seg_index(c, t)];
    let d = t - s.t;
    (s.x + s.v * d + 0.5 * s.u * d * d, s.v + s.u * d)
}

fn from_trajectory(tr: &Trajectory) -> Curve {
    let (ts, xs, vs, us) = (tr.times(), tr.positions(), tr.velocities(), tr.accelerations());
    let mut c: Curve = (0..us.len()).map(|i| Seg { t: ts[i], x: xs[i], v: vs[i], u: us[i] }).collect();
    let last = tr.len() - 1;
    c.push(Seg { t: ts[last], x: xs[last], v: vs[last], u: 0.0 });
    c
}

fn to_trajectory(c: &[Seg], t0: f64, tf: f64, v_m: f64) -> Result<Trajectory, MotionError> {
    let mut times = vec![t0];
    for s in c {
        if s.t > times[times.len() - 1] + NODE_MERGE && s.t < tf - NODE_MERGE {
            times.push(s.t);
        }
    }
    times.push(tf);
    let mut pos = Vec::with_capacity(times.len());
    let mut vel = Vec::with_capacity(times.len());
    for &t in &times {
        let (x, v) = ev(c, t);
        pos.push(x);
        vel.push(v.clamp(0.0, v_m));
    }
    let n = times.len();
    pos[n - 1] = 0.0;
    vel[n - 1] = v_m;
    Trajectory::from_nodes(times, pos, vel).map_err(|e| MotionError::Malformed(e.to_string()))
}

/// Minimum of `w - e` over `[ta, tb]` and where it is attained.
fn min_gap(w: &[Seg], e: &[Seg], ta: f64, tb: f64) -> (f64, f64) {
    if tb <= ta {
        return (ev(w, ta).0 - ev(e, ta).0, ta);
    }
    let mut br: Vec<f64> = vec![ta, tb];
    br.extend(w.iter().chain(e).map(|s| s.t).filter(|&t| t > ta && t < tb));
    br.sort_by(f64::total_cmp);
    br.dedup();
    let mut best = (f64::INFINITY, ta);
    for pair in br.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let m = 0.5 * (a + b);
        let (wx, wv) = ev(w, m);
        let (ex, evv) = ev(e, m);
        let c2 = 0.5 * (w[seg_index(w, m)].u - e[seg_index(e, m)].u);
        let (c0, c1) = (wx - ex, wv - evv);
        let at = |t: f64| {
            let d = t - m;
            c0 + c1 * d + c2 * d * d
        };
        for t in [a, b] {
            let g = at(t);
            if g < best.0 {
                best = (g, t);
            }
        }
        if c2 > 0.0 {
            let t = m - c1 / (2.0 * c2);
            if t > a && t < b {
                let g = at(t);
                if g < best.0 {
                    best = (g, t);
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
struct Kin {
    v_m: f64,
    a_m: f64,
}

impl Kin {
    /// Full acceleration to `v_m`, then cruise.
    fn free(&self, t0: f64, x0: f64, v0: f64) -> Curve {
        if v0 < self.v_m - 1e-15 {
            let d = (self.v_m - v0) / self.a_m;
            let x1 = x0 + v0 * d + 0.5 * self.a_m * d * d;
            vec![Seg { t: t0, x: x0, v: v0, u: self.a_m }, Seg { t: t0 + d, x: x1, v: self.v_m, u: 0.0 }]
        } else {
            vec![Seg { t: t0, x: x0, v: self.v_m, u: 0.0 }]
        }
    }

    /// Full braking to a stop, then standing still.
    fn brake(&self, t0: f64, x0: f64, v0: f64) -> Curve {
        let d = v0 / self.a_m;
        vec![
            Seg { t: t0, x: x0, v: v0, u: -self.a_m },
            Seg { t: t0 + d, x: x0 + v0 * v0 / (2.0 * self.a_m), v: 0.0, u: 0.0 },
        ]
    }

    /// Pointwise-maximal trajectory from `(x0, v0)` at `t0` that stays below
    /// `w` on `[t0, tf]`; `None` if even full braking crosses `w`.
    fn greedy_below(&self, t0: f64, x0: f64, v0: f64, tf: f64, w: &[Seg]) -> Option<Curve> {
        let free = self.free(t0, x0, v0);
        // Margin left when braking from the free curve at `td`; non-increasing in `td`.
        let gap = |td: f64| {
            let (x, v) = ev(&free, td);
            min_gap(w, &self.brake(td, x, v), td, tf)
        };
        let g0 = gap(t0).0;
        if g0 < -GAP_TOL {
            return None;
        }
        // Tangency within rounding: braking here would only add a pulse
        // tens of nanoseconds long that followers then inherit.
        if gap(tf).0 >= -TOL {
            return Some(free);
        }
        let (mut lo, mut hi) = (t0, tf);
        // With no real margin at t0 the bisection would stop a few nanoseconds
        // in, at a point set by rounding.
        if g0 <= TOL {
            hi = t0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid).0 >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let td = lo;
        let (x, v) = ev(&free, td);
        let (_, mut tc) = gap(td);
        let ts = td + v / self.a_m;
        // The minimum of a near-flat gap is poorly located; the touch point is
        // where the velocities agree, and their difference is linear locally.
        let brake_v = |t: f64| (v - self.a_m * (t - td)).max(0.0);
        let dv = ev(w, tc).1 - brake_v(tc);
        let du = w[seg_index(w, tc)].u + if tc < ts { self.a_m } else { 0.0 };
        if dv != 0.0 && du != 0.0 {
            let t_star = (tc - dv / du).clamp(td, tf);
            if (t_star - tc).abs() < 1e-4 && ev(w, t_star).0 - ev(&self.brake(td, x, v), t_star).0 >= -TOL {
                tc = t_star;
            }
        }
        let mut out: Curve = free.iter().copied().filter(|s| s.t < td).collect();
        out.push(Seg { t: td, x, v, u: -self.a_m });
        if ts < tc {
            out.push(Seg { t: ts, x: x + v * v / (2.0 * self.a_m), v: 0.0, u: 0.0 });
        }
        let k = seg_index(w, tc);
        let (wx, wv) = ev(w, tc);
        out.push(Seg { t: tc, x: wx, v: wv, u: w[k].u });
        out.extend_from_slice(&w[k + 1..]);
        Some(normalize(out))
    }

    /// Maps `x(t)` on `[t0, tf]` to `x~(sigma) = v_m sigma + x(tf - sigma)`.
    fn reverse(&self, c: &[Seg], tf: f64, t0: f64) -> Curve {
        let head = c[seg_index_left(c, tf)];
        let (x, v) = ev(c, tf);
        let mut out = vec![Seg { t: 0.0, x, v: self.v_m - v, u: head.u }];
        // Knots are used by index: recomputing `tf - (tf - t)` can land on
        // the wrong side of `t`.
        for i in (1..c.len()).rev().filter(|&i| c[i].t > t0 && c[i].t < tf) {
            let sig = tf - c[i].t;
            out.push(Seg { t: sig, x: self.v_m * sig + c[i].x, v: self.v_m - c[i].v, u: c[i - 1].u });
        }
        out
    }

    /// Inverse of [`Kin::reverse`], ending with cruise from `(tf, 0, v_m)`.
    fn reverse_back(&self, c: &[Seg], tf: f64, t0: f64) -> Curve {
        let horizon = tf - t0;
        let tail = c[seg_index_left(c, horizon)];
        let (xt, vt) = ev(c, horizon);
        let mut out = vec![Seg { t: t0, x: xt - self.v_m * horizon, v: self.v_m - vt, u: tail.u }];
        for i in (1..c.len()).rev().filter(|&i| c[i].t > 0.0 && c[i].t < horizon) {
            let sig = c[i].t;
            out.push(Seg { t: tf - sig, x: c[i].x - self.v_m * sig, v: self.v_m - c[i].v, u: c[i - 1].u });
        }
        out.push(Seg { t: tf, x: 0.0, v: self.v_m, u: 0.0 });
        normalize(out)
    }
}

/// Drops pieces of (numerically) zero duration.
fn normalize(c: Curve) -> Curve {
    let mut out: Curve = Vec::with_capacity(c.len());
    for s in c {
        while out.last().is_some_and(|l: &Seg| s.t <= l.t + 1e-12) {
            out.pop();
        }
        out.push(s);
    }
    out
}
