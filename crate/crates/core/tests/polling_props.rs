use crossing_core::model::Lane;
use crossing_core::polling::{
    check_regularity, run_polling, LongestQueueFirst, PolicyState, PollingPolicy, PollingSystem,
};
use proptest::prelude::*;

fn worked_example() -> PollingSystem {
    let mut sys = PollingSystem::new(1.0, 1.0, PollingPolicy::Exhaustive);
    let mut events = vec![
        (Lane::Two, 0.0f64),
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
    events.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (lane, t) in events {
        sys.add_to_queue(lane, t).unwrap();
    }
    sys
}

/// Committed starts followed by the projected remainder.
fn full_order(sys: &PollingSystem) -> Vec<(u64, Lane, f64)> {
    let mut order: Vec<_> = sys.history().iter().map(|h| (h.customer.id, h.customer.queue, h.start)).collect();
    for entry in sys.simulate().order {
        if !order.iter().any(|o| o.0 == entry.0) {
            order.push(entry);
        }
    }
    order
}

#[test]
fn worked_example_schedule() {
    let order = full_order(&worked_example());
    let times = |lane| order.iter().filter(|o| o.1 == lane).map(|o| o.2).collect::<Vec<_>>();
    assert_eq!(times(Lane::One), [4.0, 5.0, 6.0, 7.0, 13.0]);
    assert_eq!(times(Lane::Two), [1.0, 2.0, 9.0, 10.0, 11.0]);
    let lanes: Vec<u8> = order.iter().map(|o| o.1.number()).collect();
    assert_eq!(lanes, [2, 2, 1, 1, 1, 1, 2, 2, 2, 1]);
}

#[test]
fn projection_matches_realized_starts() {
    let mut sys = worked_example();
    let planned = full_order(&sys);
    sys.advance(f64::INFINITY).unwrap();
    assert_eq!(full_order(&sys), planned);
}

#[test]
fn built_in_policies_are_regular() {
    let policies = [
        PollingPolicy::Exhaustive,
        PollingPolicy::Gated,
        PollingPolicy::KLimited(1),
        PollingPolicy::KLimited(4),
        PollingPolicy::KLimited(8),
    ];
    for policy in policies {
        for seed in 0..1000 {
            if let Err(w) = check_regularity(PolicyState::new(policy), 0.2, 0.1, seed) {
                panic!("{policy} seed {seed}: {w}");
            }
        }
    }
}

#[test]
fn queue_length_switching_is_caught() {
    let caught = (0..200).filter(|&seed| check_regularity(LongestQueueFirst, 0.2, 0.1, seed).is_err()).count();
    assert!(caught > 0);
}

fn stream(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..3.0, 0..max).prop_map(|gaps| {
        let mut t = 0.0;
        gaps.into_iter()
            .map(|g| {
                t += g;
                t
            })
            .collect()
    })
}

fn policy() -> impl Strategy<Value = PollingPolicy> {
    prop_oneof![
        Just(PollingPolicy::Exhaustive),
        Just(PollingPolicy::Gated),
        (1u32..6).prop_map(PollingPolicy::KLimited),
    ]
}

proptest! {
    #[test]
    fn everyone_is_served_once_with_spacing(a in stream(25), b in stream(25), pol in policy()) {
        let (s, r) = (0.2, 0.1);
        let run = run_polling([&a, &b], pol, s, r);
        prop_assert_eq!(run.waits[0].len(), a.len());
        prop_assert_eq!(run.waits[1].len(), b.len());
        prop_assert!(run.waits.iter().flatten().all(|&w| w >= -1e-12));
        for pair in run.starts.windows(2) {
            let gap = pair[1].start - pair[0].start;
            let need = if pair[0].customer.queue == pair[1].customer.queue { s } else { s + r };
            prop_assert!(gap >= need - 1e-9, "gap {} < {}", gap, need);
        }
    }

    #[test]
    fn single_lane_never_waits_when_sparse(a in stream(25)) {
        // Gaps of at least s, lane 1 only: the server starts at queue 1.
        let spaced: Vec<f64> = a.iter().enumerate().map(|(i, t)| t + 0.2 * i as f64).collect();
        let run = run_polling([&spaced, &[]], PollingPolicy::Exhaustive, 0.2, 0.1);
        prop_assert!(run.waits[0].iter().all(|&w| w.abs() < 1e-9));
    }

    #[test]
    fn exhaustive_is_work_conserving(a in stream(20), b in stream(20)) {
        // Every start is at an arrival, one switchover after it, or one service
        // (plus switchover) after the previous start.
        let run = run_polling([&a, &b], PollingPolicy::Exhaustive, 0.2, 0.1);
        let mut arrivals: Vec<f64> = a.iter().chain(&b).copied().collect();
        arrivals.sort_by(f64::total_cmp);
        for (k, st) in run.starts.iter().enumerate() {
            let at_arrival = arrivals.iter().any(|&t| (t - st.start).abs() < 1e-9);
            let chained = k > 0 && {
                let prev = &run.starts[k - 1];
                let gap = st.start - prev.start;
                (gap - 0.2).abs() < 1e-9 || (gap - 0.3).abs() < 1e-9
            };
            let after_switch = arrivals.iter().any(|&t| (t + 0.1 - st.start).abs() < 1e-9);
            prop_assert!(at_arrival || chained || after_switch, "start {} unexplained", st.start);
        }
    }
}
