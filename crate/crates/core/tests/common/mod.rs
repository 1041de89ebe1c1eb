//! Shared fixtures for the integration suites: the calibrated 21-waveguide
//! device and synthetic Poisson coincidence sampling.
//!
//! Compiled once per test target; not every suite uses every fixture.
#![allow(dead_code)]

use corrwalk_core::{CoincidenceCounts, CorrelationMatrix, LatticeSpec};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// The calibrated 21-waveguide array: coupling 5 mm⁻¹ over an effective
/// length of 0.782 mm, site labels running −10..10.
pub fn device() -> LatticeSpec {
    let mut spec = LatticeSpec::uniform(21, 0.0, 5.0, 0.782).unwrap();
    spec.label_offset = -10;
    spec
}

/// Draw one Poisson count at rate `lambda`.
pub fn poisson_count(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).unwrap().sample(rng) as u64
}

/// Synthesize raw coincidence counts whose *corrected* expectation is
/// `total_events * gamma`: off-diagonal pairs are Poisson at that rate,
/// diagonal pairs at half of it (the fibre splitter routes both photons of
/// a same-guide pair to distinct detectors only half the time).
pub fn sample_poisson_counts(
    gamma: &CorrelationMatrix,
    total_events: f64,
    seed: u64,
) -> CoincidenceCounts {
    let n = gamma.n_sites();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = DMatrix::from_element(n, n, -1i64);
    for q in 0..n {
        for r in q..n {
            let Some(g) = gamma.value(q, r) else {
                continue;
            };
            let rate = total_events * g * if q == r { 0.5 } else { 1.0 };
            raw[(q, r)] = poisson_count(&mut rng, rate) as i64;
        }
    }
    CoincidenceCounts::from_raw(&raw, None, None, 1.0).unwrap()
}
