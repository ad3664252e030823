//! Arrival streams: Poisson and Matérn type-II hard-core processes.
//!
//! Randomness comes from ChaCha8 seeded with the 64-bit master seed; each
//! lane reads its own ChaCha stream (stream id = lane number), so lanes are
//! independent and reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::model::Lane;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrivalError {
    #[error("arrival rate must be positive and finite, got {0}")]
    Rate(f64),
    #[error("hard-core distance must be positive, got {0}")]
    HardCore(f64),
    #[error("horizon must be non-negative, got {0}")]
    Horizon(f64),
    #[error("intensity {intensity} is unreachable with hard core {b} (limit {limit})")]
    Unreachable { intensity: f64, b: f64, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalKind {
    Poisson,
    Matern { b: f64 },
}

/// One lane's arrival process. `lambda` is the rate of the underlying
/// Poisson process (before any hard-core thinning).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalProcessSpec {
    pub kind: ArrivalKind,
    pub lambda: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl ArrivalProcessSpec {
    pub fn validate(&self) -> Result<(), ArrivalError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(ArrivalError::Rate(self.lambda));
        }
        if !(self.horizon >= 0.0) {
            return Err(ArrivalError::Horizon(self.horizon));
        }
        if let ArrivalKind::Matern { b } = self.kind {
            if !(b > 0.0) {
                return Err(ArrivalError::HardCore(b));
            }
        }
        Ok(())
    }

    /// Long-run intensity of the generated stream.
    pub fn intensity(&self) -> f64 {
        match self.kind {
            ArrivalKind::Poisson => self.lambda,
            ArrivalKind::Matern { b } => matern_intensity(self.lambda, b),
        }
    }

    /// Samples the stream for `lane`.
    pub fn sample(&self, lane: Lane) -> Vec<f64> {
        if self.lambda <= 0.0 {
            return Vec::new();
        }
        let mut rng = lane_rng(self.seed, lane);
        match self.kind {
            ArrivalKind::Poisson => poisson_points(&mut rng, self.lambda, 0.0, self.horizon),
            ArrivalKind::Matern { b } => matern_points(&mut rng, self.lambda, b, self.horizon),
        }
    }
}

/// The generator for one lane's sub-stream.
pub fn lane_rng(seed: u64, lane: Lane) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane.number() as u64);
    rng
}

/// Poisson arrivals on `[0, horizon]` (stream 0 of `seed`).
pub fn sample_poisson(lambda: f64, horizon: f64, seed: u64) -> Vec<f64> {
    assert!(lambda > 0.0, "lambda must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    poisson_points(&mut rng, lambda, 0.0, horizon)
}

/// Matérn type-II arrivals on `[0, horizon]` (stream 0 of `seed`).
pub fn sample_matern(lambda: f64, b: f64, horizon: f64, seed: u64) -> Vec<f64> {
    assert!(lambda > 0.0 && b > 0.0, "lambda and b must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    matern_points(&mut rng, lambda, b, horizon)
}

/// Intensity `(1 - exp(-2 lambda b)) / (2 b)` of the Matérn II process.
pub fn matern_intensity(lambda: f64, b: f64) -> f64 {
    -(-2.0 * lambda * b).exp_m1() / (2.0 * b)
}

/// The underlying rate whose Matérn II thinning has the given intensity.
pub fn matern_rate_for_intensity(intensity: f64, b: f64) -> Result<f64, ArrivalError> {
    let limit = 1.0 / (2.0 * b);
    if !(b > 0.0) {
        return Err(ArrivalError::HardCore(b));
    }
    if !(intensity >= 0.0 && intensity < limit) {
        return Err(ArrivalError::Unreachable { intensity, b, limit });
    }
    Ok(-(-2.0 * b * intensity).ln_1p() / (2.0 * b))
}

fn poisson_points<R: Rng>(rng: &mut R, lambda: f64, start: f64, end: f64) -> Vec<f64> {
    let exp = Exp::new(lambda).expect("positive rate");
    let mut out = Vec::with_capacity(((end - start) * lambda * 1.1) as usize + 4);
    let mut t = start;
    loop {
        t += exp.sample(rng);
        if t > end {
            return out;
        }
        out.push(t);
    }
}

/// Points are generated on `[-b, horizon + b]` so that points near the edges
/// compete with neighbours that fall outside the window, then cropped.
fn matern_points<R: Rng>(rng: &mut R, lambda: f64, b: f64, horizon: f64) -> Vec<f64> {
    if horizon < 0.0 {
        return Vec::new();
    }
    let pts = poisson_points(rng, lambda, -b, horizon + b);
    let marks: Vec<f64> = pts.iter().map(|_| rng.random::<f64>()).collect();
    // `beats(j, i)`: point j deletes point i. Equal marks: the earlier point wins.
    let beats = |j: usize, i: usize| marks[j] > marks[i] || (marks[j] == marks[i] && j < i);
    let mut out = Vec::new();
    let mut lo = 0;
    for i in 0..pts.len() {
        while pts[i] - pts[lo] > b {
            lo += 1;
        }
        let mut keep = (lo..i).all(|j| !beats(j, i));
        let mut j = i + 1;
        while keep && j < pts.len() && pts[j] - pts[i] <= b {
            keep = !beats(j, i);
            j += 1;
        }
        if keep && (0.0..=horizon).contains(&pts[i]) {
            out.push(pts[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_empty_horizon() {
        assert!(sample_poisson(2.0, 0.0, 7).is_empty());
    }

    #[test]
    fn poisson_count_within_four_sigma() {
        for seed in [1, 2, 3] {
            let n = sample_poisson(2.0, 10_000.0, seed).len() as f64;
            assert!((n - 20_000.0).abs() <= 4.0 * (20_000.0f64).sqrt(), "{n}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(sample_poisson(1.3, 500.0, 42), sample_poisson(1.3, 500.0, 42));
        assert_eq!(sample_matern(1.3, 0.2, 500.0, 42), sample_matern(1.3, 0.2, 500.0, 42));
        assert_ne!(sample_matern(1.3, 0.2, 500.0, 42), sample_matern(1.3, 0.2, 500.0, 43));
    }

    #[test]
    fn lanes_use_distinct_streams() {
        let spec = ArrivalProcessSpec { kind: ArrivalKind::Matern { b: 0.2 }, lambda: 2.0, horizon: 100.0, seed: 5 };
        assert_ne!(spec.sample(Lane::One), spec.sample(Lane::Two));
        assert_eq!(spec.sample(Lane::Two), spec.sample(Lane::Two));
    }

    #[test]
    fn intensity_formula() {
        assert_eq!(matern_intensity(0.0, 0.2), 0.0);
        assert!((matern_intensity(2.0, 0.2) - 1.376_677_6).abs() < 1e-7);
        assert!((matern_intensity(1e6, 0.2) - 2.5).abs() < 1e-12);
        let lam = matern_rate_for_intensity(2.45, 0.2).unwrap();
        assert!((matern_intensity(lam, 0.2) - 2.45).abs() < 1e-12);
        assert!(matern_rate_for_intensity(2.6, 0.2).is_err());
    }

    #[test]
    fn matern_gaps_exceed_hard_core() {
        for seed in 0..20 {
            let pts = sample_matern(5.0, 0.2, 2_000.0, seed);
            assert!(pts.windows(2).all(|w| w[1] - w[0] > 0.2));
            assert!(pts.iter().all(|&t| (0.0..=2_000.0).contains(&t)));
        }
    }

    #[test]
    fn vanishing_hard_core_keeps_everything() {
        let n = sample_matern(2.0, 1e-9, 20_000.0, 9).len() as f64;
        assert!((n / 20_000.0 - 2.0).abs() < 4.0 * (2.0f64 / 20_000.0).sqrt());
    }

    #[test]
    fn matern_intensity_statistics() {
        let (lambda, b, h) = (2.0, 0.2, 100_000.0);
        let n = sample_matern(lambda, b, h, 11).len() as f64;
        let target = matern_intensity(lambda, b);
        // Hard-core streams are under-dispersed, so the Poisson SE is conservative.
        let se = (target / h).sqrt();
        assert!((n / h - target).abs() <= 3.0 * se, "{} vs {target}", n / h);
    }
}
