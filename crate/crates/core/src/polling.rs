//! Two-queue polling server with deterministic service and switchover times.
//!
//! The server follows the wait-and-see rule: with both queues empty it parks
//! at the queue it served last (queue 1 initially). [`PollingSystem::simulate`]
//! projects the current state forward assuming no further arrivals.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::Lane;

pub type CustomerId = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PollingError {
    #[error("arrival at {arrival} precedes the system clock {clock}")]
    ArrivalInPast { arrival: f64, clock: f64 },
    #[error("cannot advance backwards from {clock} to {t}")]
    Backwards { t: f64, clock: f64 },
}

/// Decides, after each service completion, whether the server keeps serving
/// the queue it is at. Everything else (switching only to a non-empty queue,
/// idling when both are empty) is common to every discipline.
pub trait Discipline: Clone + fmt::Debug {
    /// A visit to a queue begins with `queue_len` customers waiting there.
    fn begin_visit(&mut self, queue_len: usize);
    /// One customer of the current visit started service.
    fn served_one(&mut self);
    /// Keep serving the current queue (it is non-empty)?
    fn keep_serving(&self, own_len: usize, other_len: usize) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PollingPolicy {
    Exhaustive,
    Gated,
    KLimited(u32),
}

impl fmt::Display for PollingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PollingPolicy::Exhaustive => write!(f, "exhaustive"),
            PollingPolicy::Gated => write!(f, "gated"),
            PollingPolicy::KLimited(k) => write!(f, "k_limited({k})"),
        }
    }
}

/// A built-in policy together with its per-visit bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyState {
    pub policy: PollingPolicy,
    gate: usize,
    served: u32,
}

impl PolicyState {
    pub fn new(policy: PollingPolicy) -> Self {
        if let PollingPolicy::KLimited(k) = policy {
            assert!(k >= 1, "k-limited policy needs k >= 1");
        }
        PolicyState { policy, gate: 0, served: 0 }
    }
}

impl Discipline for PolicyState {
    fn begin_visit(&mut self, queue_len: usize) {
        self.gate = queue_len;
        self.served = 0;
    }

    fn served_one(&mut self) {
        self.gate = self.gate.saturating_sub(1);
        self.served += 1;
    }

    fn keep_serving(&self, _own: usize, _other: usize) -> bool {
        match self.policy {
            PollingPolicy::Exhaustive => true,
            PollingPolicy::Gated => self.gate > 0,
            PollingPolicy::KLimited(k) => self.served < k,
        }
    }
}

/// Serves whichever queue is longer. Not regular: used to exercise the
/// regularity checker.
#[derive(Debug, Clone, Copy, Default)]
pub struct LongestQueueFirst;

impl Discipline for LongestQueueFirst {
    fn begin_visit(&mut self, _queue_len: usize) {}
    fn served_one(&mut self) {}
    fn keep_serving(&self, own: usize, other: usize) -> bool {
        own >= other
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Customer {
    pub id: CustomerId,
    pub queue: Lane,
    pub arrival: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServerState {
    IdleAt(Lane),
    Serving { customer: Customer, started: f64 },
    Switching { to: Lane, started: f64 },
}

/// A committed service start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceStart {
    pub customer: Customer,
    pub start: f64,
}

/// Projected schedule of every customer still in the system.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    /// Schedule times of queue-1 customers, in queue order.
    pub t1: Vec<f64>,
    /// Schedule times of queue-2 customers, in queue order.
    pub t2: Vec<f64>,
    /// Service order with each customer's schedule time.
    pub order: Vec<(CustomerId, Lane, f64)>,
}

impl Schedule {
    pub fn times(&self, lane: Lane) -> &[f64] {
        match lane {
            Lane::One => &self.t1,
            Lane::Two => &self.t2,
        }
    }

    pub fn position_of(&self, id: CustomerId) -> Option<usize> {
        self.order.iter().position(|&(c, _, _)| c == id)
    }
}

#[derive(Debug, Clone)]
pub struct PollingSystem<D: Discipline = PolicyState> {
    s: f64,
    r: f64,
    clock: f64,
    queues: [VecDeque<Customer>; 2],
    server: ServerState,
    discipline: D,
    next_id: CustomerId,
    history: Vec<ServiceStart>,
    keep_history: bool,
}

impl PollingSystem<PolicyState> {
    pub fn new(s: f64, r: f64, policy: PollingPolicy) -> Self {
        PollingSystem::with_discipline(s, r, PolicyState::new(policy))
    }
}

impl<D: Discipline> PollingSystem<D> {
    pub fn with_discipline(s: f64, r: f64, discipline: D) -> Self {
        assert!(s > 0.0 && r >= 0.0, "service time must be positive and switchover non-negative");
        PollingSystem {
            s,
            r,
            clock: 0.0,
            queues: [VecDeque::new(), VecDeque::new()],
            server: ServerState::IdleAt(Lane::One),
            discipline,
            next_id: 0,
            history: Vec::new(),
            keep_history: true,
        }
    }

    /// Stops recording committed service starts (long runs do not need them).
    pub fn without_history(mut self) -> Self {
        self.keep_history = false;
        self
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn server(&self) -> ServerState {
        self.server
    }

    pub fn queue(&self, lane: Lane) -> &VecDeque<Customer> {
        &self.queues[lane.index()]
    }

    pub fn history(&self) -> &[ServiceStart] {
        &self.history
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(|q| q.is_empty()) && !matches!(self.server, ServerState::Serving { .. })
    }

    /// Appends a customer arriving at `arrival`, first committing every event
    /// up to that instant. Returns the new customer's id.
    pub fn add_to_queue(&mut self, queue: Lane, arrival: f64) -> Result<CustomerId, PollingError> {
        if arrival < self.clock {
            return Err(PollingError::ArrivalInPast { arrival, clock: self.clock });
        }
        self.advance(arrival)?;
        let id = self.next_id;
        self.next_id += 1;
        self.queues[queue.index()].push_back(Customer { id, queue, arrival });
        if let ServerState::IdleAt(at) = self.server {
            if at == queue {
                self.discipline.begin_visit(self.queues[at.index()].len());
                self.start_service(at, arrival);
            } else {
                self.server = ServerState::Switching { to: queue, started: arrival };
            }
        }
        Ok(id)
    }

    /// Commits all completions and switchovers up to `t`.
    pub fn advance(&mut self, t: f64) -> Result<(), PollingError> {
        if t < self.clock {
            return Err(PollingError::Backwards { t, clock: self.clock });
        }
        while let Some(at) = self.next_event_time() {
            if at > t {
                break;
            }
            self.step();
        }
        self.clock = t;
        Ok(())
    }

    fn next_event_time(&self) -> Option<f64> {
        match self.server {
            ServerState::IdleAt(_) => None,
            ServerState::Serving { started, .. } => Some(started + self.s),
            ServerState::Switching { started, .. } => Some(started + self.r),
        }
    }

    /// Processes the next completion or switchover end. Returns the service
    /// start it triggered, if any.
    fn step(&mut self) -> Option<ServiceStart> {
        match self.server {
            ServerState::IdleAt(_) => None,
            ServerState::Switching { to, started } => {
                let now = started + self.r;
                self.discipline.begin_visit(self.queues[to.index()].len());
                Some(self.start_service(to, now))
            }
            ServerState::Serving { customer, started } => {
                let now = started + self.s;
                let at = customer.queue;
                let own = self.queues[at.index()].len();
                let other = self.queues[at.other().index()].len();
                if own > 0 && self.discipline.keep_serving(own, other) {
                    Some(self.start_service(at, now))
                } else if other > 0 {
                    self.server = ServerState::Switching { to: at.other(), started: now };
                    None
                } else if own > 0 {
                    // Nothing waits elsewhere: a fresh visit without switching.
                    self.discipline.begin_visit(own);
                    Some(self.start_service(at, now))
                } else {
                    self.server = ServerState::IdleAt(at);
                    None
                }
            }
        }
    }

    fn start_service(&mut self, queue: Lane, now: f64) -> ServiceStart {
        let customer = self.queues[queue.index()].pop_front().expect("serving a non-empty queue");
        self.discipline.served_one();
        self.server = ServerState::Serving { customer, started: now };
        let rec = ServiceStart { customer, start: now };
        if self.keep_history {
            self.history.push(rec);
        }
        rec
    }

    /// Schedule of every waiting or in-service customer, assuming no further
    /// arrivals. Does not modify `self`.
    pub fn simulate(&self) -> Schedule {
        let mut sim = self.clone();
        sim.keep_history = false;
        let mut sched = Schedule::default();
        let push = |sched: &mut Schedule, c: Customer, start: f64| {
            match c.queue {
                Lane::One => sched.t1.push(start),
                Lane::Two => sched.t2.push(start),
            }
            sched.order.push((c.id, c.queue, start));
        };
        if let ServerState::Serving { customer, started } = sim.server {
            push(&mut sched, customer, started);
        }
        while sim.next_event_time().is_some() {
            if let Some(rec) = sim.step() {
                push(&mut sched, rec.customer, rec.start);
            }
        }
        sched
    }
}

/// Outcome of a full polling-only run.
#[derive(Debug, Clone, Default)]
pub struct PollingRun {
    /// Per queue, wait times in arrival order.
    pub waits: [Vec<f64>; 2],
    pub starts: Vec<ServiceStart>,
}

impl PollingRun {
    pub fn mean_wait(&self) -> f64 {
        let n = self.waits[0].len() + self.waits[1].len();
        if n == 0 {
            return 0.0;
        }
        self.waits.iter().flatten().sum::<f64>() / n as f64
    }
}

/// Event-driven polling run over fixed arrival streams; lane 1 first on ties.
pub fn run_polling(arrivals: [&[f64]; 2], policy: PollingPolicy, s: f64, r: f64) -> PollingRun {
    let mut sys = PollingSystem::new(s, r, policy);
    let (mut i, mut j) = (0, 0);
    let (a, b) = (arrivals[0], arrivals[1]);
    while i < a.len() || j < b.len() {
        let take_one = j >= b.len() || (i < a.len() && a[i] <= b[j]);
        let res = if take_one {
            i += 1;
            sys.add_to_queue(Lane::One, a[i - 1])
        } else {
            j += 1;
            sys.add_to_queue(Lane::Two, b[j - 1])
        };
        res.expect("arrival streams must be increasing");
    }
    sys.advance(f64::INFINITY).expect("forward");
    let mut run = PollingRun { starts: sys.history.clone(), ..Default::default() };
    let mut per: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for rec in &sys.history {
        per[rec.customer.queue.index()].push((rec.customer.arrival, rec.start - rec.customer.arrival));
    }
    for (k, v) in per.iter_mut().enumerate() {
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        run.waits[k] = v.iter().map(|&(_, w)| w).collect();
    }
    run
}

/// Evidence that inserting one customer reordered the others.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityWitness {
    pub injected: Customer,
    pub before: Vec<(CustomerId, Lane, f64)>,
    pub after: Vec<(CustomerId, Lane, f64)>,
    pub reason: String,
}

impl fmt::Display for RegularityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_order = |o: &[(CustomerId, Lane, f64)]| {
            o.iter().map(|(id, q, t)| format!("({id},{q})@{t:.3}")).collect::<Vec<_>>().join(" ")
        };
        writeln!(f, "{}", self.reason)?;
        writeln!(f, "  injected ({},{}) at {:.3}", self.injected.id, self.injected.queue, self.injected.arrival)?;
        writeln!(f, "  before: {}", fmt_order(&self.before))?;
        write!(f, "  after:  {}", fmt_order(&self.after))
    }
}

/// Random scenario for `discipline`, seeded by `seed`: a burst of arrivals,
/// a probe time, then one injected arrival. Checks the old service order is
/// kept with the new customer inserted at a single point, and that schedule
/// times before that point do not move.
pub fn check_regularity<D: Discipline>(discipline: D, s: f64, r: f64, seed: u64) -> Result<(), RegularityWitness> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sys = PollingSystem::with_discipline(s, r, discipline);
    let n = rng.random_range(0..14);
    let mut t = 0.0;
    for _ in 0..n {
        t += rng.random_range(0.0..1.5 * s);
        let lane = if rng.random_bool(0.5) { Lane::One } else { Lane::Two };
        sys.add_to_queue(lane, t).expect("increasing");
    }
    t += rng.random_range(0.0..2.0 * s);
    sys.advance(t).expect("forward");
    let before = sys.simulate().order;
    let lane = if rng.random_bool(0.5) { Lane::One } else { Lane::Two };
    let id = sys.add_to_queue(lane, t).expect("increasing");
    let after = sys.simulate().order;
    let injected = Customer { id, queue: lane, arrival: t };
    let witness = |reason: String| RegularityWitness { injected, before: before.clone(), after: after.clone(), reason };

    let Some(k) = after.iter().position(|&(c, _, _)| c == id) else {
        return Err(witness("injected customer missing from the schedule".into()));
    };
    let rest: Vec<_> = after.iter().filter(|&&(c, _, _)| c != id).map(|&(c, q, _)| (c, q)).collect();
    let old: Vec<_> = before.iter().map(|&(c, q, _)| (c, q)).collect();
    if rest != old {
        return Err(witness("service order of existing customers changed".into()));
    }
    for i in 0..k {
        if (after[i].2 - before[i].2).abs() > 1e-9 {
            return Err(witness(format!("schedule time of customer {} moved", after[i].0)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(policy: PollingPolicy) -> PollingSystem {
        PollingSystem::new(1.0, 1.0, policy)
    }

    #[test]
    fn idle_same_queue_serves_immediately() {
        let mut p = sys(PollingPolicy::Exhaustive);
        p.add_to_queue(Lane::One, 3.0).unwrap();
        assert!(matches!(p.server(), ServerState::Serving { started, .. } if started == 3.0));
        assert_eq!(p.simulate().t1, vec![3.0]);
    }

    #[test]
    fn idle_other_queue_switches_first() {
        let mut p = sys(PollingPolicy::Exhaustive);
        p.add_to_queue(Lane::Two, 3.0).unwrap();
        assert_eq!(p.server(), ServerState::Switching { to: Lane::Two, started: 3.0 });
        assert_eq!(p.simulate().t2, vec![4.0]);
    }

    #[test]
    fn no_preemption() {
        let mut p = sys(PollingPolicy::Exhaustive);
        p.add_to_queue(Lane::One, 0.0).unwrap();
        p.add_to_queue(Lane::Two, 0.5).unwrap();
        assert!(matches!(p.server(), ServerState::Serving { started, customer } if started == 0.0 && customer.id == 0));
        let s = p.simulate();
        assert_eq!(s.t1, vec![0.0]);
        assert_eq!(s.t2, vec![2.0]);
    }

    #[test]
    fn empty_schedule() {
        assert_eq!(sys(PollingPolicy::Gated).simulate(), Schedule::default());
    }

    #[test]
    fn advance_commits_and_parks() {
        let mut p = sys(PollingPolicy::Exhaustive);
        for _ in 0..3 {
            p.add_to_queue(Lane::One, 0.0).unwrap();
        }
        p.advance(0.5).unwrap();
        assert!(matches!(p.server(), ServerState::Serving { started, .. } if started == 0.0));
        p.advance(3.0).unwrap();
        assert_eq!(p.server(), ServerState::IdleAt(Lane::One));
        assert_eq!(p.history().len(), 3);

        let mut a = sys(PollingPolicy::Exhaustive);
        let mut b = sys(PollingPolicy::Exhaustive);
        for q in [&mut a, &mut b] {
            q.add_to_queue(Lane::Two, 0.0).unwrap();
            q.add_to_queue(Lane::One, 0.2).unwrap();
        }
        a.advance(1.3).unwrap();
        a.advance(2.7).unwrap();
        b.advance(2.7).unwrap();
        assert_eq!(a.server(), b.server());
        assert_eq!(a.simulate(), b.simulate());
    }

    #[test]
    fn simulate_is_pure() {
        let mut p = sys(PollingPolicy::KLimited(2));
        for (q, t) in [(Lane::Two, 0.0), (Lane::One, 0.1), (Lane::One, 0.2), (Lane::Two, 0.3)] {
            p.add_to_queue(q, t).unwrap();
        }
        let before = p.clone();
        assert_eq!(p.simulate(), p.simulate());
        assert_eq!(p.server(), before.server());
        assert_eq!(p.clock(), before.clock());
    }

    #[test]
    fn run_polling_small_cases() {
        let one = run_polling([&[2.0], &[]], PollingPolicy::Exhaustive, 0.2, 0.1);
        assert_eq!(one.waits[0], vec![0.0]);
        let two = run_polling([&[0.0], &[0.0]], PollingPolicy::Exhaustive, 0.2, 0.1);
        assert_eq!(two.waits[0], vec![0.0]);
        assert!((two.waits[1][0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn gated_defers_late_arrivals() {
        // Server busy in queue 1; a queue-1 arrival after the gate waits for
        // the queue-2 visit.
        let mut p = sys(PollingPolicy::Gated);
        p.add_to_queue(Lane::One, 0.0).unwrap();
        p.add_to_queue(Lane::Two, 0.1).unwrap();
        p.add_to_queue(Lane::One, 0.2).unwrap();
        let s = p.simulate();
        let lanes: Vec<Lane> = s.order.iter().map(|o| o.1).collect();
        assert_eq!(lanes, vec![Lane::One, Lane::Two, Lane::One]);
        let mut e = sys(PollingPolicy::Exhaustive);
        e.add_to_queue(Lane::One, 0.0).unwrap();
        e.add_to_queue(Lane::Two, 0.1).unwrap();
        e.add_to_queue(Lane::One, 0.2).unwrap();
        let lanes: Vec<Lane> = e.simulate().order.iter().map(|o| o.1).collect();
        assert_eq!(lanes, vec![Lane::One, Lane::One, Lane::Two]);
    }

    #[test]
    fn k_limited_caps_visits() {
        let mut p = sys(PollingPolicy::KLimited(1));
        p.add_to_queue(Lane::One, 0.0).unwrap();
        p.add_to_queue(Lane::One, 0.0).unwrap();
        p.add_to_queue(Lane::Two, 0.0).unwrap();
        let s = p.simulate();
        assert_eq!(s.t1, vec![0.0, 4.0]);
        assert_eq!(s.t2, vec![2.0]);
    }

    #[test]
    fn longest_queue_is_caught() {
        let found = (0..500).find_map(|seed| check_regularity(LongestQueueFirst, 1.0, 1.0, seed).err());
        assert!(found.is_some());
    }
}
