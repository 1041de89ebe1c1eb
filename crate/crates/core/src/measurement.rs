//! Measured coincidence counts: ingestion, detector corrections, correlation
//! estimation with Poissonian error bars, and violation significance.
//!
//! Raw data are directional coincidence records between detector pairs; on
//! ingest the `(q, r)` and `(r, q)` records are summed into unordered-pair
//! totals. Real devices cannot reach every pair, so unmeasured entries are
//! tracked as *absent* — distinct from zero counts — and excluded from
//! normalization and downstream analyses.
//!
//! Two corrections are applied before normalizing to probabilities: relative
//! detector efficiencies divide each entry by `eff[q] * eff[r]`, and diagonal
//! entries are doubled because a balanced fiber splitter routes both photons
//! of a same-guide pair to distinct detectors only half the time. An optional
//! singles-based correction for source/coupling drift divides each entry by
//! `singles[q] * singles[r]` normalized to the array mean; it is off by
//! default (the right form is device-dependent).
//!
//! Error bars assume independent Poisson statistics on each raw count,
//! propagated to first order through correction and normalization; zero
//! counts enter the variance as 1 (a zero observation does not make an
//! estimate exact) and are flagged low-statistics.

use nalgebra::DMatrix;

use crate::correlations::{
    CorrelationMatrix, CorrelationMeta, EntryStatus, Source, ViolationMap,
};
use crate::error::{Error, Result};

/// Symmetrized coincidence counts plus the calibration data needed to
/// correct them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceCounts {
    counts: DMatrix<u64>,
    present: DMatrix<bool>,
    singles: Option<Vec<u64>>,
    efficiency: Vec<f64>,
    integration_s: f64,
}

impl CoincidenceCounts {
    /// Ingest raw directional records. `raw[(q, r)]` is the number of
    /// coincidences recorded with detector `q` listed first; `-1` marks a
    /// record that was never taken. The two directions of each off-diagonal
    /// pair are summed; a pair is absent only if both directions are.
    ///
    /// `singles` and `efficiency` default to "no information" (no singles
    /// correction possible, unit efficiencies).
    pub fn from_raw(
        raw: &DMatrix<i64>,
        singles: Option<Vec<u64>>,
        efficiency: Option<Vec<f64>>,
        integration_s: f64,
    ) -> Result<Self> {
        let n = raw.nrows();
        if n == 0 || raw.ncols() != n {
            return Err(Error::validation("counts matrix must be square and non-empty"));
        }
        if raw.iter().any(|&v| v < -1) {
            return Err(Error::validation(
                "counts must be nonnegative integers, or -1 for absent",
            ));
        }
        if !(integration_s.is_finite() && integration_s > 0.0) {
            return Err(Error::validation("integration time must be positive"));
        }
        if let Some(s) = &singles {
            if s.len() != n {
                return Err(Error::Validation(format!(
                    "singles vector has {} entries, expected {n}",
                    s.len()
                )));
            }
        }
        let efficiency = efficiency.unwrap_or_else(|| vec![1.0; n]);
        if efficiency.len() != n {
            return Err(Error::Validation(format!(
                "efficiency vector has {} entries, expected {n}",
                efficiency.len()
            )));
        }
        if !efficiency.iter().all(|e| e.is_finite() && *e > 0.0 && *e <= 1.0) {
            return Err(Error::validation("efficiencies must lie in (0, 1]"));
        }

        let mut counts = DMatrix::zeros(n, n);
        let mut present = DMatrix::from_element(n, n, false);
        for q in 0..n {
            for r in q..n {
                let (a, b) = (raw[(q, r)], raw[(r, q)]);
                let here = a >= 0 || b >= 0;
                let total = (a.max(0) + if q == r { 0 } else { b.max(0) }) as u64;
                present[(q, r)] = here;
                present[(r, q)] = here;
                counts[(q, r)] = total;
                counts[(r, q)] = total;
            }
        }
        Ok(CoincidenceCounts {
            counts,
            present,
            singles,
            efficiency,
            integration_s,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.counts.nrows()
    }

    /// Symmetrized unordered-pair totals.
    pub fn counts(&self) -> &DMatrix<u64> {
        &self.counts
    }

    pub fn is_present(&self, q: usize, r: usize) -> bool {
        self.present[(q, r)]
    }

    pub fn present_mask(&self) -> &DMatrix<bool> {
        &self.present
    }

    pub fn singles(&self) -> Option<&[u64]> {
        self.singles.as_deref()
    }

    pub fn efficiency(&self) -> &[f64] {
        &self.efficiency
    }

    pub fn integration_s(&self) -> f64 {
        self.integration_s
    }
}

/// Switches for [`correct_counts`] / [`estimate_gamma`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorrectionOptions {
    /// Divide each entry by the mean-normalized product of the two singles
    /// rates, compensating source and coupling drift between runs. Requires
    /// singles data; off by default.
    pub use_singles: bool,
}

/// Multiplier taking the raw count at `(q, r)` to its corrected value.
fn correction_gain(
    raw: &CoincidenceCounts,
    options: &CorrectionOptions,
    q: usize,
    r: usize,
) -> Result<f64> {
    let mut gain = 1.0 / (raw.efficiency[q] * raw.efficiency[r]);
    if q == r {
        gain *= 2.0;
    }
    if options.use_singles {
        let singles = raw.singles().ok_or_else(|| {
            Error::validation("singles correction requested but no singles data present")
        })?;
        if singles.iter().any(|&s| s == 0) {
            return Err(Error::validation(
                "singles correction requires nonzero singles on every site",
            ));
        }
        let mean = singles.iter().map(|&s| s as f64).sum::<f64>() / singles.len() as f64;
        gain *= mean * mean / (singles[q] as f64 * singles[r] as f64);
    }
    Ok(gain)
}

/// Apply detector corrections, returning real-valued corrected counts with
/// the same presence pattern as the input (absent entries are 0; consult
/// the input's mask). Linear in the raw counts entry by entry.
pub fn correct_counts(
    raw: &CoincidenceCounts,
    options: &CorrectionOptions,
) -> Result<DMatrix<f64>> {
    let n = raw.n_sites();
    let mut corrected = DMatrix::zeros(n, n);
    for q in 0..n {
        for r in q..n {
            if !raw.present[(q, r)] {
                continue;
            }
            let v = correction_gain(raw, options, q, r)? * raw.counts[(q, r)] as f64;
            corrected[(q, r)] = v;
            corrected[(r, q)] = v;
        }
    }
    Ok(corrected)
}

/// Correlation estimate with per-entry Poisson error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    /// Estimated correlation matrix (source [`Source::Measured`]); present
    /// entries sum to 1 over unordered pairs.
    pub gamma: CorrelationMatrix,
    /// Per-entry standard deviations; NaN where absent.
    pub sigma: DMatrix<f64>,
    /// True where a pair was measured but recorded zero counts — its error
    /// bar uses a count floor of 1 instead of a false zero variance.
    pub low_stats: DMatrix<bool>,
    /// True when only one measured pair carried counts: normalization then
    /// forces its probability to exactly 1 with zero variance, which says
    /// nothing about the device.
    pub degenerate_normalization: bool,
}

/// Estimate the correlation matrix from corrected, normalized counts.
///
/// The variance of each entry propagates the per-count Poisson variance
/// through both the correction gains and the shared normalization: with
/// gains `g`, corrected counts `m = g n`, and total `T = sum m`,
///
/// ```text
/// Var(Gamma[q][r]) = (g[q][r]/T)^2 (1 - Gamma[q][r])^2 vn[q][r]
///                  + sum_{(a,b) != (q,r)} (g[a][b] Gamma[q][r] / T)^2 vn[a][b]
/// ```
///
/// over unordered pairs, where `vn = max(n, 1)` is the guarded count. This
/// reduces to the binomial form `Gamma (1 - Gamma) / T` for unit gains.
pub fn estimate_gamma(
    raw: &CoincidenceCounts,
    options: &CorrectionOptions,
) -> Result<GammaEstimate> {
    let n = raw.n_sites();
    let corrected = correct_counts(raw, options)?;
    let mut total = 0.0;
    let mut populated = 0usize;
    for q in 0..n {
        for r in q..n {
            if raw.present[(q, r)] {
                total += corrected[(q, r)];
                if raw.counts[(q, r)] > 0 {
                    populated += 1;
                }
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::validation(
            "cannot estimate correlations from zero total counts",
        ));
    }

    let mut gamma = DMatrix::zeros(n, n);
    let mut sigma = DMatrix::from_element(n, n, f64::NAN);
    let mut low_stats = DMatrix::from_element(n, n, false);

    // sum over pairs of (g/T)^2 * guarded count, shared by every entry's
    // cross-normalization term.
    let mut cross_sum = 0.0;
    for q in 0..n {
        for r in q..n {
            if !raw.present[(q, r)] {
                continue;
            }
            let g = correction_gain(raw, options, q, r)?;
            cross_sum += (g / total).powi(2) * (raw.counts[(q, r)].max(1) as f64);
        }
    }

    for q in 0..n {
        for r in q..n {
            if !raw.present[(q, r)] {
                continue;
            }
            let g = correction_gain(raw, options, q, r)?;
            let vn = raw.counts[(q, r)].max(1) as f64;
            let value = corrected[(q, r)] / total;
            let own = (g / total).powi(2) * vn;
            // (1 - Gamma)^2 own-term plus Gamma^2 cross-terms; `cross_sum`
            // still includes this pair's own contribution, so remove it.
            let var = own * (1.0 - value).powi(2) + value.powi(2) * (cross_sum - own);
            let sd = var.max(0.0).sqrt();
            gamma[(q, r)] = value;
            gamma[(r, q)] = value;
            sigma[(q, r)] = sd;
            sigma[(r, q)] = sd;
            if raw.counts[(q, r)] == 0 {
                low_stats[(q, r)] = true;
                low_stats[(r, q)] = true;
            }
        }
    }

    let gamma = CorrelationMatrix::measured(
        gamma,
        raw.present.clone(),
        CorrelationMeta {
            input: None,
            indistinguishable: true,
            source: Source::Measured,
        },
    )?;
    Ok(GammaEstimate {
        gamma,
        sigma,
        low_stats,
        degenerate_normalization: populated == 1,
    })
}

/// Violation map with first-order error propagation and significances.
///
/// For each defined off-diagonal pair, `V = Gamma[q][r] - (2/3)
/// sqrt(Gamma[q][q] Gamma[r][r])` and
///
/// ```text
/// sigma_V^2 = sigma[q][r]^2
///           + ((1/3) sqrt(Gamma[r][r]/Gamma[q][q]) sigma[q][q])^2
///           + ((1/3) sqrt(Gamma[q][q]/Gamma[r][r]) sigma[r][r])^2
/// ```
///
/// with significance `n_sigma = max(0, -V/sigma_V)`. A diagonal estimate of
/// exactly zero makes the partial derivatives blow up; such entries keep
/// their (necessarily nonnegative) `V` but are flagged
/// [`EntryStatus::IndeterminateSigma`] with NaN error and zero significance.
pub fn violation_significance(est: &GammaEstimate) -> Result<ViolationMap> {
    let n = est.gamma.n_sites();
    if est.sigma.shape() != (n, n) {
        return Err(Error::validation("sigma shape does not match gamma"));
    }
    let mut v = DMatrix::from_element(n, n, f64::NAN);
    let mut sigma_v = DMatrix::from_element(n, n, f64::NAN);
    let mut n_sigma = DMatrix::from_element(n, n, f64::NAN);
    let mut status = DMatrix::from_element(n, n, EntryStatus::Undefined);

    for q in 0..n {
        for r in 0..n {
            if q == r {
                continue;
            }
            let inputs = (
                est.gamma.value(q, r),
                est.gamma.value(q, q),
                est.gamma.value(r, r),
            );
            let (Some(g_qr), Some(g_qq), Some(g_rr)) = inputs else {
                continue;
            };
            let value = g_qr - (2.0 / 3.0) * (g_qq * g_rr).sqrt();
            v[(q, r)] = value;
            if g_qq == 0.0 || g_rr == 0.0 {
                // V = Gamma[q][r] >= 0 here: no violation to quantify.
                status[(q, r)] = EntryStatus::IndeterminateSigma;
                n_sigma[(q, r)] = 0.0;
                continue;
            }
            let d_qq = (g_rr / g_qq).sqrt() / 3.0 * est.sigma[(q, q)];
            let d_rr = (g_qq / g_rr).sqrt() / 3.0 * est.sigma[(r, r)];
            let sd = (est.sigma[(q, r)].powi(2) + d_qq.powi(2) + d_rr.powi(2)).sqrt();
            sigma_v[(q, r)] = sd;
            n_sigma[(q, r)] = if value < 0.0 && sd > 0.0 { -value / sd } else { 0.0 };
            status[(q, r)] = EntryStatus::Defined;
        }
    }

    Ok(ViolationMap {
        v,
        sigma_v: Some(sigma_v),
        n_sigma: Some(n_sigma),
        status,
    })
}
