use crossing_core::arrivals::{
    matern_intensity, matern_rate_for_intensity, sample_matern, sample_poisson, ArrivalKind, ArrivalProcessSpec,
};
use crossing_core::model::Lane;
use proptest::prelude::*;

proptest! {
    #[test]
    fn matern_keeps_its_hard_core(lambda in 0.1f64..8.0, b in 0.05f64..0.5, seed in any::<u64>()) {
        let pts = sample_matern(lambda, b, 200.0, seed);
        prop_assert!(pts.windows(2).all(|w| w[1] - w[0] > b));
        prop_assert!(pts.iter().all(|&t| (0.0..200.0).contains(&t)));
    }

    #[test]
    fn poisson_is_sorted_in_window(lambda in 0.1f64..8.0, seed in any::<u64>()) {
        let pts = sample_poisson(lambda, 100.0, seed);
        prop_assert!(pts.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(pts.iter().all(|&t| (0.0..100.0).contains(&t)));
    }

    #[test]
    fn rate_for_intensity_inverts(intensity in 0.01f64..2.45) {
        let lambda = matern_rate_for_intensity(intensity, 0.2).unwrap();
        prop_assert!((matern_intensity(lambda, 0.2) - intensity).abs() < 1e-9);
    }

    #[test]
    fn lanes_draw_independent_streams(seed in any::<u64>()) {
        let spec = ArrivalProcessSpec { kind: ArrivalKind::Matern { b: 0.2 }, lambda: 1.0, horizon: 50.0, seed };
        let (one, two) = (spec.sample(Lane::One), spec.sample(Lane::Two));
        prop_assert_ne!(one, two);
        prop_assert_eq!(spec.sample(Lane::One), spec.sample(Lane::One));
    }
}

#[test]
fn unreachable_intensity_is_rejected() {
    assert!(matern_rate_for_intensity(2.5, 0.2).is_err());
    assert!(matern_rate_for_intensity(3.0, 0.2).is_err());
}

#[test]
fn matern_intensity_matches_counts() {
    for lambda in [0.5, 2.0, 5.0] {
        let h = 20_000.0;
        let n = sample_matern(lambda, 0.2, h, 7).len() as f64;
        let expect = matern_intensity(lambda, 0.2);
        // Hard-core counts are less variable than Poisson ones.
        let se = (expect / h).sqrt();
        assert!((n / h - expect).abs() < 4.0 * se, "lambda {lambda}: {} vs {expect}", n / h);
    }
}
