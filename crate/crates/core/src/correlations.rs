//! Two-photon correlation matrices, the similarity score, and the
//! classical-limit violation test.
//!
//! The correlation matrix entry `Gamma[q][r]` is the probability of detecting
//! a two-photon coincidence across output waveguides `q` and `r`, treated as
//! an unordered pair: the matrix is symmetric and the probabilities of the
//! unordered pairs `q <= r` sum to 1 (for simulated matrices). For two
//! indistinguishable photons launched into sites `q'` and `r'`,
//!
//! ```text
//! Gamma[q][r] = |U[q][q'] U[r][r'] + U[q][r'] U[r][q']|^2
//!               / ((1 + delta[q][r]) (1 + delta[q'][r']))
//! ```
//!
//! where `U` is the *single-photon* propagator — the two-photon interference
//! lives entirely in the amplitude sum. The `1/(1 + delta)` factors convert
//! ordered products to unordered-pair probabilities on both ends; they make
//! the formula agree entry by entry with direct evolution on the two-photon
//! Fock lattice, for doubly occupied inputs included. Distinguishable photons
//! take the same products with the interference term dropped (squares summed
//! instead of amplitudes).
//!
//! Any classical field obeys `Gamma[q][r] >= (2/3) sqrt(Gamma[q][q]
//! Gamma[r][r])` for `q != r`; the violation map reports
//! `V = Gamma[q][r] - (2/3) sqrt(Gamma[q][q] Gamma[r][r])`, negative only for
//! nonclassical light.
//!
//! Measured matrices may have holes (pairs that were never measured); those
//! entries are tracked as absent, excluded from similarity pairwise, and
//! propagate to undefined violation entries.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::evolution::EvolutionOperator;

/// Unitarity tolerance on propagators entering correlation formulas.
const UNITARITY_TOL: f64 = 1e-10;

/// Where a correlation matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Simulated,
    Measured,
}

/// Provenance carried alongside a correlation matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationMeta {
    /// Input site pair (internal indices, sorted), when known.
    pub input: Option<(usize, usize)>,
    /// True for indistinguishable (interfering) photons.
    pub indistinguishable: bool,
    pub source: Source,
}

/// Symmetric nonnegative matrix of unordered two-photon detection
/// probabilities, with a presence mask for measured data holes.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    gamma: DMatrix<f64>,
    present: DMatrix<bool>,
    pub meta: CorrelationMeta,
}

impl CorrelationMatrix {
    /// Wrap a fully populated simulated matrix; enforces symmetry,
    /// nonnegativity, and unordered-pair normalization within 1e-10.
    pub fn simulated(gamma: DMatrix<f64>, meta: CorrelationMeta) -> Result<Self> {
        let n = gamma.nrows();
        let m = CorrelationMatrix {
            present: DMatrix::from_element(n, n, true),
            gamma,
            meta,
        };
        m.validate()?;
        let total = m.pair_sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "simulated correlation matrix sums to {total}, expected 1"
            )));
        }
        Ok(m)
    }

    /// Wrap a measured matrix with a presence mask (`false` = never
    /// measured). No normalization is required: downstream analyses are
    /// scale-invariant.
    pub fn measured(
        gamma: DMatrix<f64>,
        present: DMatrix<bool>,
        meta: CorrelationMeta,
    ) -> Result<Self> {
        if present.shape() != gamma.shape() {
            return Err(Error::validation(
                "presence mask shape does not match matrix",
            ));
        }
        let m = CorrelationMatrix {
            gamma,
            present,
            meta,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.gamma.nrows();
        if n == 0 || self.gamma.ncols() != n {
            return Err(Error::validation("correlation matrix must be square"));
        }
        for q in 0..n {
            for r in 0..n {
                if self.present[(q, r)] != self.present[(r, q)] {
                    return Err(Error::validation("presence mask must be symmetric"));
                }
                if !self.present[(q, r)] {
                    continue;
                }
                let v = self.gamma[(q, r)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Validation(format!(
                        "correlation entry ({q},{r}) = {v} must be finite and >= 0"
                    )));
                }
                if v != self.gamma[(r, q)] {
                    return Err(Error::validation("correlation matrix must be symmetric"));
                }
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.gamma.nrows()
    }

    /// Full symmetric value matrix; entries where [`Self::is_present`] is
    /// false are meaningless.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn is_present(&self, q: usize, r: usize) -> bool {
        self.present[(q, r)]
    }

    pub fn present_mask(&self) -> &DMatrix<bool> {
        &self.present
    }

    /// Value at `(q, r)` if the pair was measured/simulated.
    pub fn value(&self, q: usize, r: usize) -> Option<f64> {
        self.present[(q, r)].then(|| self.gamma[(q, r)])
    }

    /// Sum of unordered-pair probabilities `q <= r` over present entries.
    pub fn pair_sum(&self) -> f64 {
        let n = self.n_sites();
        let mut total = 0.0;
        for q in 0..n {
            for r in q..n {
                if self.present[(q, r)] {
                    total += self.gamma[(q, r)];
                }
            }
        }
        total
    }
}

fn check_correlation_input(u: &EvolutionOperator, input: (usize, usize)) -> Result<()> {
    let n = u.dim();
    if input.0 >= n || input.1 >= n {
        return Err(Error::Validation(format!(
            "input pair ({}, {}) out of range for {n} sites",
            input.0, input.1
        )));
    }
    let defect = u.unitarity_defect();
    if defect > UNITARITY_TOL {
        return Err(Error::Validation(format!(
            "propagator is not unitary (defect {defect:.3e} > {UNITARITY_TOL:.0e})"
        )));
    }
    Ok(())
}

/// Correlation matrix of two indistinguishable photons launched into the
/// unordered pair `input = (q', r')`, from the single-photon propagator.
pub fn quantum_correlation(
    u: &EvolutionOperator,
    input: (usize, usize),
) -> Result<CorrelationMatrix> {
    check_correlation_input(u, input)?;
    let n = u.dim();
    let (qp, rp) = (input.0.min(input.1), input.0.max(input.1));
    let input_norm = if qp == rp { 2.0 } else { 1.0 };
    let mut gamma = DMatrix::zeros(n, n);
    for q in 0..n {
        for r in q..n {
            let amp = u.amplitude(q, qp) * u.amplitude(r, rp)
                + u.amplitude(q, rp) * u.amplitude(r, qp);
            let output_norm = if q == r { 2.0 } else { 1.0 };
            let v = amp.norm_sqr() / (output_norm * input_norm);
            gamma[(q, r)] = v;
            gamma[(r, q)] = v;
        }
    }
    CorrelationMatrix::simulated(
        gamma,
        CorrelationMeta {
            input: Some((qp, rp)),
            indistinguishable: true,
            source: Source::Simulated,
        },
    )
}

/// Correlation matrix of two distinguishable photons (no interference):
/// the incoherent sum of the two detection pathways. Identical to running
/// two independent single-photon walks and convolving the results.
pub fn distinguishable_correlation(
    u: &EvolutionOperator,
    input: (usize, usize),
) -> Result<CorrelationMatrix> {
    check_correlation_input(u, input)?;
    let n = u.dim();
    let (qp, rp) = (input.0.min(input.1), input.0.max(input.1));
    let mut gamma = DMatrix::zeros(n, n);
    for q in 0..n {
        for r in q..n {
            let direct = (u.amplitude(q, qp) * u.amplitude(r, rp)).norm_sqr();
            let swapped = (u.amplitude(q, rp) * u.amplitude(r, qp)).norm_sqr();
            let output_norm = if q == r { 2.0 } else { 1.0 };
            let v = (direct + swapped) / output_norm;
            gamma[(q, r)] = v;
            gamma[(r, q)] = v;
        }
    }
    CorrelationMatrix::simulated(
        gamma,
        CorrelationMeta {
            input: Some((qp, rp)),
            indistinguishable: false,
            source: Source::Simulated,
        },
    )
}

/// Similarity `S = (sum sqrt(a b))^2 / (sum a * sum b)` between two
/// nonnegative matrices, summed over all entries present in both. `S` is 1
/// exactly when the matrices are proportional on the shared support, 0 when
/// their supports are disjoint, and invariant under rescaling either side.
pub fn similarity(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<f64> {
    if a.n_sites() != b.n_sites() {
        return Err(Error::Validation(format!(
            "similarity dimension mismatch: {} vs {} sites",
            a.n_sites(),
            b.n_sites()
        )));
    }
    let n = a.n_sites();
    let mut cross = 0.0;
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for q in 0..n {
        for r in 0..n {
            if !(a.is_present(q, r) && b.is_present(q, r)) {
                continue;
            }
            let (va, vb) = (a.gamma[(q, r)], b.gamma[(q, r)]);
            cross += (va * vb).sqrt();
            sum_a += va;
            sum_b += vb;
        }
    }
    if sum_a <= 0.0 || sum_b <= 0.0 {
        return Err(Error::validation(
            "similarity needs a nonzero entry on the shared support of both matrices",
        ));
    }
    Ok(cross * cross / (sum_a * sum_b))
}

/// Status of one entry of a [`ViolationMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryStatus {
    /// `V` (and its error, when present) computed from complete inputs.
    Defined,
    /// Not applicable: the diagonal, or an input entry was absent.
    Undefined,
    /// `V` is defined but its error bar is not: a diagonal correlation is
    /// exactly zero, so the first-order propagation has a divergent partial
    /// derivative. `V` is necessarily >= 0 there, so no violation is lost.
    IndeterminateSigma,
}

/// Classical-limit test `V[q][r] = Gamma[q][r] - (2/3) sqrt(Gamma[q][q]
/// Gamma[r][r])` over all off-diagonal pairs, with optional propagated
/// errors and significances for count-derived input.
///
/// Undefined entries (diagonal, absent data) carry NaN in the value
/// matrices and [`EntryStatus::Undefined`] in the status matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationMap {
    pub(crate) v: DMatrix<f64>,
    pub(crate) sigma_v: Option<DMatrix<f64>>,
    pub(crate) n_sigma: Option<DMatrix<f64>>,
    pub(crate) status: DMatrix<EntryStatus>,
}

impl ViolationMap {
    pub fn n_sites(&self) -> usize {
        self.v.nrows()
    }

    /// Violation values; NaN where undefined.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Propagated standard deviations of `V`; `None` for noiseless input,
    /// NaN entries where undefined or indeterminate.
    pub fn sigma_v(&self) -> Option<&DMatrix<f64>> {
        self.sigma_v.as_ref()
    }

    /// Violation significance `max(0, -V/sigma_V)`; `None` for noiseless
    /// input, NaN where undefined, and 0 where sigma is indeterminate
    /// (there `V >= 0`, so nothing is suppressed).
    pub fn n_sigma(&self) -> Option<&DMatrix<f64>> {
        self.n_sigma.as_ref()
    }

    pub fn status(&self, q: usize, r: usize) -> EntryStatus {
        self.status[(q, r)]
    }

    /// Most negative defined `V` and where it occurs.
    pub fn min_violation(&self) -> Option<(usize, usize, f64)> {
        let n = self.n_sites();
        let mut best: Option<(usize, usize, f64)> = None;
        for q in 0..n {
            for r in q + 1..n {
                if self.status[(q, r)] == EntryStatus::Undefined {
                    continue;
                }
                let v = self.v[(q, r)];
                if best.is_none_or(|(_, _, b)| v < b) {
                    best = Some((q, r, v));
                }
            }
        }
        best
    }

    /// Largest defined significance, when significances were computed.
    pub fn max_n_sigma(&self) -> Option<(usize, usize, f64)> {
        let ns = self.n_sigma.as_ref()?;
        let n = self.n_sites();
        let mut best: Option<(usize, usize, f64)> = None;
        for q in 0..n {
            for r in q + 1..n {
                if self.status[(q, r)] != EntryStatus::Defined {
                    continue;
                }
                let s = ns[(q, r)];
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((q, r, s));
                }
            }
        }
        best
    }
}

/// Noiseless violation map of a correlation matrix: values only, no error
/// bars. Entries are defined where `q != r` and all three correlations
/// entering `V` are present.
pub fn violation_map(gamma: &CorrelationMatrix) -> ViolationMap {
    let n = gamma.n_sites();
    let mut v = DMatrix::from_element(n, n, f64::NAN);
    let mut status = DMatrix::from_element(n, n, EntryStatus::Undefined);
    for q in 0..n {
        for r in 0..n {
            if q == r {
                continue;
            }
            let inputs = (
                gamma.value(q, r),
                gamma.value(q, q),
                gamma.value(r, r),
            );
            if let (Some(g_qr), Some(g_qq), Some(g_rr)) = inputs {
                v[(q, r)] = g_qr - (2.0 / 3.0) * (g_qq * g_rr).sqrt();
                status[(q, r)] = EntryStatus::Defined;
            }
        }
    }
    ViolationMap {
        v,
        sigma_v: None,
        n_sigma: None,
        status,
    }
}
