//! Disorder ensembles: averaged correlation matrices and localization
//! statistics over randomly perturbed devices.
//!
//! Each trial draws an independent disordered copy of the template (uniform
//! noise on the propagation and coupling constants), evolves it, and
//! accumulates the two-photon correlation matrix plus single-photon output
//! statistics. Trial seeds are pre-generated from the master seed, so results
//! are reproducible and independent of evaluation order.
//!
//! Localization shows up in the participation ratio `1 / sum p^2` of the
//! single-photon output: growing on-site disorder traps the walk near its
//! launch site and the mean participation ratio falls. Both the mean of the
//! per-trial participation ratios and the participation ratio of the mean
//! distribution are reported — the former is the localization statistic, the
//! latter describes the (broader) disorder-averaged profile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::correlations::{
    distinguishable_correlation, quantum_correlation, CorrelationMatrix,
};
use crate::error::{Error, Result};
use crate::evolution::{participation_ratio, propagator, single_photon_distribution};
use crate::lattice::{build_single_hamiltonian, sample_disordered_spec, LatticeSpec};

/// Controls for [`disorder_ensemble`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    /// Two-photon input pair (internal site indices). The first site also
    /// serves as the launch site for the single-photon statistics.
    pub input: (usize, usize),
    /// Photons interfere (quantum) or not (distinguishable).
    pub indistinguishable: bool,
    /// Disorder amplitude on the propagation constants (mm^-1).
    pub sigma_beta: f64,
    /// Disorder amplitude on the coupling constants (mm^-1).
    pub sigma_coupling: f64,
    /// Number of disorder samples, >= 1.
    pub trials: u64,
    /// Master seed; trial seeds derive from it.
    pub seed: u64,
}

/// Disorder-averaged outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Mean two-photon correlation matrix over the ensemble.
    pub mean_gamma: CorrelationMatrix,
    /// Mean single-photon output distribution (launch site = first input).
    pub mean_single: Vec<f64>,
    /// Mean over trials of each trial's participation ratio — the
    /// localization statistic.
    pub mean_participation: f64,
    /// Participation ratio of `mean_single`.
    pub participation_of_mean: f64,
    pub trials: u64,
}

/// Average correlations and single-photon statistics over disordered copies
/// of `template`. With both sigmas zero every trial is the template itself
/// and the result equals a single clean run exactly.
pub fn disorder_ensemble(
    template: &LatticeSpec,
    options: &EnsembleOptions,
) -> Result<EnsembleResult> {
    template.validate()?;
    if options.trials == 0 {
        return Err(Error::validation("ensemble needs at least one trial"));
    }
    let n = template.n_sites;
    if options.input.0 >= n || options.input.1 >= n {
        return Err(Error::Validation(format!(
            "input pair {:?} out of range for {n} sites",
            options.input
        )));
    }

    let run_trial = |spec: &LatticeSpec| -> Result<(CorrelationMatrix, Vec<f64>, f64)> {
        let h = build_single_hamiltonian(spec)?;
        let u = propagator(h.matrix(), spec.length_mm)?;
        let gamma = if options.indistinguishable {
            quantum_correlation(&u, options.input)?
        } else {
            distinguishable_correlation(&u, options.input)?
        };
        let single = single_photon_distribution(&u, options.input.0)?;
        let pr = participation_ratio(&single)?;
        Ok((gamma, single, pr))
    };

    // Zero disorder: all trials coincide with the template; return the
    // single clean run so the "no noise" case is bit-exact.
    if options.sigma_beta == 0.0 && options.sigma_coupling == 0.0 {
        let (gamma, single, pr) = run_trial(template)?;
        return Ok(EnsembleResult {
            mean_gamma: gamma,
            participation_of_mean: pr,
            mean_single: single,
            mean_participation: pr,
            trials: options.trials,
        });
    }

    let mut seed_rng = ChaCha8Rng::seed_from_u64(options.seed);
    let trial_seeds: Vec<u64> = (0..options.trials).map(|_| seed_rng.random()).collect();

    let mut gamma_sum = nalgebra::DMatrix::zeros(n, n);
    let mut single_sum = vec![0.0f64; n];
    let mut pr_sum = 0.0f64;
    let mut meta = None;
    for &trial_seed in &trial_seeds {
        let spec = sample_disordered_spec(
            template,
            options.sigma_beta,
            options.sigma_coupling,
            trial_seed,
        )?;
        let (gamma, single, pr) = run_trial(&spec)?;
        gamma_sum += gamma.gamma();
        for (acc, v) in single_sum.iter_mut().zip(&single) {
            *acc += v;
        }
        pr_sum += pr;
        meta = Some(gamma.meta);
    }

    let inv = 1.0 / options.trials as f64;
    let mean_single: Vec<f64> = single_sum.iter().map(|v| v * inv).collect();
    let mean_gamma = CorrelationMatrix::simulated(gamma_sum * inv, meta.unwrap())?;
    Ok(EnsembleResult {
        mean_gamma,
        participation_of_mean: participation_ratio(&mean_single)?,
        mean_single,
        mean_participation: pr_sum * inv,
        trials: options.trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> LatticeSpec {
        LatticeSpec::uniform(21, 0.0, 5.0, 0.782).unwrap()
    }

    fn options(sigma_beta: f64, trials: u64, seed: u64) -> EnsembleOptions {
        EnsembleOptions {
            input: (10, 11),
            indistinguishable: true,
            sigma_beta,
            sigma_coupling: 0.0,
            trials,
            seed,
        }
    }

    #[test]
    fn zero_disorder_equals_clean_run_exactly() {
        let template = device();
        let result = disorder_ensemble(&template, &options(0.0, 17, 3)).unwrap();
        let h = build_single_hamiltonian(&template).unwrap();
        let u = propagator(h.matrix(), template.length_mm).unwrap();
        let clean = quantum_correlation(&u, (10, 11)).unwrap();
        assert_eq!(result.mean_gamma, clean);
        assert_eq!(
            result.mean_single,
            single_photon_distribution(&u, 10).unwrap()
        );
        assert_eq!(result.mean_participation, result.participation_of_mean);
    }

    #[test]
    fn same_seed_reproduces_results() {
        let template = device();
        let a = disorder_ensemble(&template, &options(2.0, 20, 11)).unwrap();
        let b = disorder_ensemble(&template, &options(2.0, 20, 11)).unwrap();
        assert_eq!(a, b);
        let c = disorder_ensemble(&template, &options(2.0, 20, 12)).unwrap();
        assert_ne!(a.mean_single, c.mean_single);
    }

    #[test]
    fn mean_gamma_stays_normalized_and_symmetric() {
        let template = device();
        let result = disorder_ensemble(&template, &options(5.0, 25, 7)).unwrap();
        assert!((result.mean_gamma.pair_sum() - 1.0).abs() < 1e-10);
        assert_eq!(result.mean_gamma.gamma(), &result.mean_gamma.gamma().transpose());
        let single_total: f64 = result.mean_single.iter().sum();
        assert!((single_total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn on_site_disorder_localizes_the_walk() {
        // Participation ratio of the single-photon output falls as on-site
        // disorder grows; a coarse two-point check here, the full
        // three-sigma monotonicity lives in the acceptance suite.
        let template = device();
        let clean = disorder_ensemble(&template, &options(0.0, 1, 1)).unwrap();
        let noisy = disorder_ensemble(&template, &options(15.0, 60, 1)).unwrap();
        assert!(
            noisy.mean_participation < clean.mean_participation,
            "PR {} should drop below clean {}",
            noisy.mean_participation,
            clean.mean_participation
        );
    }

    #[test]
    fn trial_count_validated() {
        let template = device();
        assert!(disorder_ensemble(&template, &options(1.0, 0, 1)).is_err());
        let mut bad = options(1.0, 5, 1);
        bad.input = (10, 21);
        assert!(disorder_ensemble(&template, &bad).is_err());
    }
}
