//! Simulation and analysis of continuous-time quantum walks of one and two
//! indistinguishable photons in evanescently coupled waveguide arrays.
//!
//! A waveguide array is a chain of `N` optical channels with nearest-neighbour
//! tunnelling; the propagation distance `z` plays the role of time. One photon
//! walks on the chain itself, two indistinguishable photons walk on the
//! triangular lattice of unordered site pairs. The crate covers:
//!
//! - [`lattice`] — device specs, single- and two-photon Hamiltonians, the
//!   symmetric Fock basis, Hilbert-space dimension counting, disorder sampling;
//! - [`evolution`] — unitary propagators `exp(-iHz)` by spectral decomposition
//!   and state evolution;
//! - [`correlations`] — quantum and distinguishable two-photon correlation
//!   matrices, the similarity score, and the classical-limit violation map;
//! - [`measurement`] — coincidence-count ingestion, detector corrections,
//!   probability estimation with Poisson errors, violation significance;
//! - [`calibration`] — least-squares fitting of coupling constant and
//!   effective length from a measured output intensity pattern;
//! - [`ensemble`] — disorder-averaged walks and localization statistics;
//! - [`io`] / [`render`] — the CSV/JSON file formats and PPM heatmaps used by
//!   the command-line front end.

pub mod calibration;
pub mod correlations;
pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod io;
pub mod lattice;
pub mod measurement;
pub mod render;

pub use calibration::{fit_coupling, CalibrationResult, FitOptions};
pub use correlations::{
    distinguishable_correlation, quantum_correlation, similarity, violation_map,
    CorrelationMatrix, CorrelationMeta, EntryStatus, Source, ViolationMap,
};
pub use ensemble::{disorder_ensemble, EnsembleOptions, EnsembleResult};
pub use error::{Error, Result};
pub use evolution::{
    evolve_two_photon, participation_ratio, propagation_profile, propagator,
    single_photon_distribution, AmplitudeVector, EvolutionOperator, SpectralDecomposition,
};
pub use lattice::{
    build_single_hamiltonian, build_two_photon_hamiltonian, fock_index, fock_pair, hilbert_dim,
    sample_disordered_spec, two_photon_dim, LatticeSpec, SingleHamiltonian, TwoPhotonHamiltonian,
    DEFAULT_DIM_CAP,
};
pub use measurement::{
    correct_counts, estimate_gamma, violation_significance, CoincidenceCounts, CorrectionOptions,
    GammaEstimate,
};
