//! Device specifications and walk Hamiltonians.
//!
//! A coupled waveguide array is described by per-site propagation constants
//! `beta` and per-edge coupling constants `coupling`. With the sign convention
//! used throughout this crate, site potentials enter the Hamiltonian as
//! `-beta[j]` and nearest-neighbour hopping as `-coupling[j]`, so every
//! propagator is `exp(-iHz)`.
//!
//! One photon walks on the chain itself (`H1`, tridiagonal, `N x N`). Two
//! indistinguishable photons walk on the triangular lattice of unordered site
//! pairs `(j, k)`, `j <= k`: hops that keep both photons on distinct sites
//! carry the amplitude `-C` of the physical edge, hops into or out of a doubly
//! occupied site pick up the bosonic factor `-sqrt(2) C`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest two-photon basis a `TwoPhotonHamiltonian` will be built for.
/// Guards against runaway memory in the dense exponential/eigendecomposition.
pub const DEFAULT_DIM_CAP: usize = 1_000_000;

/// Physical description of a waveguide array device.
///
/// Sites are indexed `0..n_sites` internally; `label_offset` is added only
/// when printing site labels for humans (a 21-guide device is conventionally
/// labelled `-10..=10`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeSpec {
    /// Number of waveguides `N`.
    pub n_sites: usize,
    /// Per-site propagation constants (mm^-1), length `N`.
    pub beta: Vec<f64>,
    /// Per-edge coupling constants (mm^-1), length `N - 1`, all `>= 0`.
    pub coupling: Vec<f64>,
    /// Propagation length `z` of the device (mm), `>= 0`.
    pub length_mm: f64,
    /// Added to internal site indices in human-readable output only.
    #[serde(default)]
    pub label_offset: i64,
}

impl LatticeSpec {
    /// Build a spec from explicit per-site/per-edge vectors.
    pub fn new(
        beta: Vec<f64>,
        coupling: Vec<f64>,
        length_mm: f64,
        label_offset: i64,
    ) -> Result<Self> {
        let spec = LatticeSpec {
            n_sites: beta.len(),
            beta,
            coupling,
            length_mm,
            label_offset,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform array: every site at `beta`, every edge at `coupling`.
    pub fn uniform(n_sites: usize, beta: f64, coupling: f64, length_mm: f64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::validation("n_sites must be >= 1"));
        }
        LatticeSpec::new(
            vec![beta; n_sites],
            vec![coupling; n_sites - 1],
            length_mm,
            0,
        )
    }

    /// Check all invariants; every constructor and ingest path calls this.
    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::validation("n_sites must be >= 1"));
        }
        if self.beta.len() != self.n_sites {
            return Err(Error::Validation(format!(
                "beta has {} entries, expected n_sites = {}",
                self.beta.len(),
                self.n_sites
            )));
        }
        if self.coupling.len() + 1 != self.n_sites {
            return Err(Error::Validation(format!(
                "coupling has {} entries, expected n_sites - 1 = {}",
                self.coupling.len(),
                self.n_sites - 1
            )));
        }
        if !self.beta.iter().all(|b| b.is_finite()) {
            return Err(Error::validation("beta entries must be finite"));
        }
        if !self.coupling.iter().all(|c| c.is_finite() && *c >= 0.0) {
            return Err(Error::validation(
                "coupling entries must be finite and >= 0",
            ));
        }
        if !(self.length_mm.is_finite() && self.length_mm >= 0.0) {
            return Err(Error::validation("length_mm must be finite and >= 0"));
        }
        Ok(())
    }

    /// Human-readable label of an internal site index.
    pub fn label(&self, site: usize) -> i64 {
        site as i64 + self.label_offset
    }

    /// True when every site and every edge carry the same constants, which
    /// makes the single-photon dynamics depend on `(C, z)` only through the
    /// product `Cz` (up to a global phase).
    pub fn is_uniform(&self) -> bool {
        self.beta.windows(2).all(|w| w[0] == w[1])
            && self.coupling.windows(2).all(|w| w[0] == w[1])
    }
}

/// Accepts either a single float (broadcast) or a full vector in spec JSON.
#[derive(Deserialize)]
#[serde(untagged)]
enum Broadcast {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Broadcast {
    fn expand(self, len: usize) -> Vec<f64> {
        match self {
            Broadcast::Scalar(v) => vec![v; len],
            Broadcast::Vector(v) => v,
        }
    }
}

#[derive(Deserialize)]
struct LatticeSpecFile {
    n_sites: usize,
    beta: Broadcast,
    coupling: Broadcast,
    length_mm: f64,
    #[serde(default)]
    label_offset: i64,
}

impl<'de> Deserialize<'de> for LatticeSpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let raw = LatticeSpecFile::deserialize(deserializer)?;
        let spec = LatticeSpec {
            n_sites: raw.n_sites,
            beta: raw.beta.expand(raw.n_sites),
            coupling: raw.coupling.expand(raw.n_sites.saturating_sub(1)),
            length_mm: raw.length_mm,
            label_offset: raw.label_offset,
        };
        spec.validate().map_err(serde::de::Error::custom)?;
        Ok(spec)
    }
}

/// Single-photon walk Hamiltonian: real symmetric tridiagonal, `N x N`.
///
/// Diagonal entry `j` is `-beta[j]`, entries `(j, j+1)` and `(j+1, j)` are
/// `-coupling[j]`; symmetry is exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleHamiltonian {
    matrix: DMatrix<f64>,
}

impl SingleHamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Build the single-photon Hamiltonian of a device.
pub fn build_single_hamiltonian(spec: &LatticeSpec) -> Result<SingleHamiltonian> {
    spec.validate()?;
    let n = spec.n_sites;
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = -spec.beta[j];
    }
    for j in 0..n - 1 {
        let c = -spec.coupling[j];
        h[(j, j + 1)] = c;
        h[(j + 1, j)] = c;
    }
    Ok(SingleHamiltonian { matrix: h })
}

/// Number of unordered site pairs `(j, k)`, `j <= k`, over `n` sites.
pub fn two_photon_dim(n_sites: usize) -> usize {
    n_sites * (n_sites + 1) / 2
}

/// Linear index of the unordered pair `(j, k)` in the canonical two-photon
/// basis: row-major over `j <= k`, i.e. `(0,0), (0,1), ..., (1,1), (1,2), ...`.
pub fn fock_index(j: usize, k: usize, n_sites: usize) -> Result<usize> {
    if j > k || k >= n_sites {
        return Err(Error::Validation(format!(
            "invalid pair ({j}, {k}) for {n_sites} sites: need 0 <= j <= k < n_sites"
        )));
    }
    Ok(j * n_sites - j * (j + 1) / 2 + k)
}

/// Inverse of [`fock_index`]: recover the pair `(j, k)` from a linear index.
pub fn fock_pair(index: usize, n_sites: usize) -> Result<(usize, usize)> {
    let dim = two_photon_dim(n_sites);
    if index >= dim {
        return Err(Error::Validation(format!(
            "fock index {index} out of range for dimension {dim}"
        )));
    }
    // Closed-form row from the quadratic row-offset formula, then a guard
    // step against float rounding at row boundaries.
    let b = 2.0 * n_sites as f64 + 1.0;
    let mut j = ((b - (b * b - 8.0 * index as f64).sqrt()) / 2.0).floor() as usize;
    let offset = |j: usize| j * n_sites - j * (j + 1) / 2 + j;
    while j > 0 && offset(j) > index {
        j -= 1;
    }
    while j + 1 < n_sites && offset(j + 1) <= index {
        j += 1;
    }
    let k = index - (j * n_sites - j * (j + 1) / 2);
    debug_assert!(j <= k && k < n_sites);
    Ok((j, k))
}

/// Two-photon walk Hamiltonian on the symmetric Fock basis, `D x D` with
/// `D = N(N+1)/2`. Entry `(s, t)` is the bosonic hopping amplitude between
/// unordered pairs `s = (j, k)` and `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonHamiltonian {
    matrix: DMatrix<f64>,
    n_sites: usize,
}

impl TwoPhotonHamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Basis pair of a linear index.
    pub fn pair(&self, index: usize) -> Result<(usize, usize)> {
        fock_pair(index, self.n_sites)
    }

    /// Linear index of a basis pair.
    pub fn index(&self, j: usize, k: usize) -> Result<usize> {
        fock_index(j, k, self.n_sites)
    }

    /// All basis pairs in canonical order.
    pub fn basis(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_sites;
        (0..n).flat_map(move |j| (j..n).map(move |k| (j, k)))
    }
}

/// Build the two-photon Hamiltonian with the default dimension cap.
pub fn build_two_photon_hamiltonian(spec: &LatticeSpec) -> Result<TwoPhotonHamiltonian> {
    build_two_photon_hamiltonian_capped(spec, DEFAULT_DIM_CAP)
}

/// Build the two-photon Hamiltonian, refusing dimensions above `dim_cap`.
///
/// Matrix elements follow from applying the number-conserving hopping terms
/// to each occupation state: a hop from site `a` to site `b` has amplitude
/// `-C_edge * sqrt(n_a) * sqrt(n_b + 1)`, which reduces to `-C` between
/// singly occupied pairs and `-sqrt(2) C` on edges touching a doubly
/// occupied site.
pub fn build_two_photon_hamiltonian_capped(
    spec: &LatticeSpec,
    dim_cap: usize,
) -> Result<TwoPhotonHamiltonian> {
    spec.validate()?;
    let n = spec.n_sites;
    let dim = two_photon_dim(n);
    if dim > dim_cap {
        return Err(Error::Resource(format!(
            "two-photon dimension {dim} exceeds cap {dim_cap}"
        )));
    }
    let mut h = DMatrix::zeros(dim, dim);

    for j in 0..n {
        for k in j..n {
            let s = fock_index(j, k, n)?;
            h[(s, s)] = -(spec.beta[j] + spec.beta[k]);

            // Occupation of the source state; two photons total.
            let occ = |site: usize| -> f64 {
                if j == k && site == j {
                    2.0
                } else if site == j || site == k {
                    1.0
                } else {
                    0.0
                }
            };

            // Hop one photon from `a` to `b` across each physical edge.
            for e in 0..n - 1 {
                for (a, b) in [(e, e + 1), (e + 1, e)] {
                    let n_a = occ(a);
                    if n_a == 0.0 {
                        continue;
                    }
                    let n_b = occ(b);
                    let amp = -spec.coupling[e] * n_a.sqrt() * (n_b + 1.0).sqrt();
                    // Target occupation: remove one photon at `a`, add at `b`.
                    let spectator = if j == k {
                        a // the photon that did not move sits at a == j == k
                    } else if a == j {
                        k
                    } else {
                        j
                    };
                    let (tj, tk) = if spectator <= b {
                        (spectator, b)
                    } else {
                        (b, spectator)
                    };
                    let t = fock_index(tj, tk, n)?;
                    h[(t, s)] = amp;
                }
            }
        }
    }

    Ok(TwoPhotonHamiltonian { matrix: h, n_sites: n })
}

/// Count states of `n_photons` photons over `n_sites` sites.
///
/// Distinguishable photons live in the tensor-product space of dimension
/// `N^n`; indistinguishable photons in the symmetric subspace of dimension
/// `binomial(N + n - 1, n)`.
pub fn hilbert_dim(n_photons: u32, n_sites: u64, distinguishable: bool) -> Result<u128> {
    if n_photons == 0 {
        return Err(Error::validation("n_photons must be >= 1"));
    }
    if n_sites == 0 {
        return Err(Error::validation("n_sites must be >= 1"));
    }
    let overflow = || Error::resource("Hilbert-space dimension overflows u128");
    if distinguishable {
        let mut dim: u128 = 1;
        for _ in 0..n_photons {
            dim = dim.checked_mul(n_sites as u128).ok_or_else(overflow)?;
        }
        Ok(dim)
    } else {
        // binomial(N + n - 1, n), exact: the running product is divisible
        // by i at every step.
        let mut dim: u128 = 1;
        for i in 1..=n_photons as u128 {
            dim = dim
                .checked_mul(n_sites as u128 - 1 + i)
                .ok_or_else(overflow)?
                / i;
        }
        Ok(dim)
    }
}

/// Draw a disordered copy of `template`: each `beta[j]` and `coupling[j]` is
/// independently shifted by uniform noise on `[-sigma, +sigma]`; couplings
/// that land negative are clamped to zero. Deterministic for a fixed seed.
pub fn sample_disordered_spec(
    template: &LatticeSpec,
    sigma_beta: f64,
    sigma_coupling: f64,
    seed: u64,
) -> Result<LatticeSpec> {
    template.validate()?;
    if !(sigma_beta.is_finite() && sigma_beta >= 0.0)
        || !(sigma_coupling.is_finite() && sigma_coupling >= 0.0)
    {
        return Err(Error::validation("disorder sigmas must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = template.clone();
    for b in &mut spec.beta {
        *b += sigma_beta * rng.random_range(-1.0..=1.0);
    }
    for c in &mut spec.coupling {
        *c = (*c + sigma_coupling * rng.random_range(-1.0..=1.0)).max(0.0);
    }
    Ok(spec)
}
