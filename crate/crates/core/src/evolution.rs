//! Unitary propagators `exp(-iHz)` and state evolution.
//!
//! Every Hamiltonian in this crate is real symmetric, so the matrix
//! exponential is computed exactly through the spectral decomposition
//! `H = V diag(lambda) V^T`:
//!
//! ```text
//! U(z) = V diag(exp(-i lambda z)) V^T
//! ```
//!
//! This is unconditionally stable, gives free access to the spectrum, and
//! makes propagators for many `z` values cheap once `H` is decomposed — the
//! calibration grid search leans on that. Because `H` is real symmetric,
//! `U` is complex *symmetric* (`U = U^T`, not merely Hermitian-conjugate);
//! the construction below preserves that exactly, bit for bit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, TwoPhotonHamiltonian};

/// Complex state vector over the relevant basis: sites for one photon,
/// unordered site pairs in canonical order for two.
pub type AmplitudeVector = DVector<Complex64>;

/// Eigendecomposition of a real symmetric Hamiltonian, kept around so that
/// propagators for many propagation lengths share one `O(D^3)` factorization.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Decompose a real symmetric matrix. Symmetry is required exactly
    /// (every Hamiltonian builder guarantees it); non-finite entries are a
    /// numerical error.
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() == 0 {
            return Err(Error::validation("Hamiltonian must be square and non-empty"));
        }
        if !h.iter().all(|v| v.is_finite()) {
            return Err(Error::numerical("Hamiltonian has non-finite entries"));
        }
        for a in 0..h.nrows() {
            for b in a + 1..h.ncols() {
                if h[(a, b)] != h[(b, a)] {
                    return Err(Error::validation("Hamiltonian must be symmetric"));
                }
            }
        }
        let eig = nalgebra::SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::numerical("symmetric eigendecomposition did not converge"))?;

        // Sort the spectrum ascending (with matching eigenvector columns) so
        // diagnostics and downstream sums are reproducible and readable.
        let dim = h.nrows();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&m| eig.eigenvalues[m]));
        let mut eigenvectors = DMatrix::zeros(dim, dim);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Spectrum in ascending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Full propagator `exp(-iHz)` for one propagation length.
    pub fn propagator(&self, z_mm: f64) -> Result<EvolutionOperator> {
        validate_z(z_mm)?;
        let dim = self.dim();
        if z_mm == 0.0 {
            return Ok(EvolutionOperator {
                matrix: DMatrix::identity(dim, dim),
                z_mm,
            });
        }
        let phases: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l * z_mm))
            .collect();
        // U_ab = sum_m V_am e^{-i lambda_m z} V_bm. Accumulating the real
        // product V_am * V_bm before the phase keeps U exactly symmetric.
        let mut u = DMatrix::zeros(dim, dim);
        for m in 0..dim {
            let col = self.eigenvectors.column(m);
            let ph = phases[m];
            for b in 0..dim {
                let vb = col[b];
                if vb == 0.0 {
                    continue;
                }
                for a in 0..=b {
                    let p = col[a] * vb;
                    u[(a, b)] += Complex64::new(ph.re * p, ph.im * p);
                }
            }
        }
        for b in 0..dim {
            for a in 0..b {
                u[(b, a)] = u[(a, b)];
            }
        }
        Ok(EvolutionOperator { matrix: u, z_mm })
    }

    /// Evolve the basis state `delta_input` for length `z` without forming
    /// the full propagator: `O(D^2)` instead of `O(D^3)`.
    pub fn evolve_basis_state(&self, input: usize, z_mm: f64) -> Result<AmplitudeVector> {
        validate_z(z_mm)?;
        let dim = self.dim();
        if input >= dim {
            return Err(Error::Validation(format!(
                "basis index {input} out of range for dimension {dim}"
            )));
        }
        let mut amp = DVector::from_element(dim, Complex64::ZERO);
        if z_mm == 0.0 {
            amp[input] = Complex64::ONE;
            return Ok(amp);
        }
        for m in 0..dim {
            let col = self.eigenvectors.column(m);
            let w = Complex64::from_polar(1.0, -self.eigenvalues[m] * z_mm) * col[input];
            if w == Complex64::ZERO {
                continue;
            }
            for a in 0..dim {
                amp[a] += w * col[a];
            }
        }
        Ok(amp)
    }
}

/// Unitary walk operator `exp(-iHz)` for a fixed propagation length.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOperator {
    matrix: DMatrix<Complex64>,
    z_mm: f64,
}

impl EvolutionOperator {
    /// Wrap an externally assembled operator (composed products, file
    /// input). Only shape and finiteness are checked here; analyses that
    /// require unitarity re-validate it against their own tolerance.
    pub fn from_matrix(matrix: DMatrix<Complex64>, z_mm: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::validation("operator must be square and non-empty"));
        }
        if !matrix.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::numerical("operator has non-finite entries"));
        }
        validate_z(z_mm)?;
        Ok(EvolutionOperator { matrix, z_mm })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Propagation length this operator was built for.
    pub fn z_mm(&self) -> f64 {
        self.z_mm
    }

    /// Transition amplitude from basis state `from` to basis state `to`.
    pub fn amplitude(&self, to: usize, from: usize) -> Complex64 {
        self.matrix[(to, from)]
    }

    /// Apply the operator to a state vector.
    pub fn apply(&self, state: &AmplitudeVector) -> Result<AmplitudeVector> {
        if state.len() != self.dim() {
            return Err(Error::Validation(format!(
                "state has {} entries, operator dimension is {}",
                state.len(),
                self.dim()
            )));
        }
        Ok(&self.matrix * state)
    }

    /// `max |U†U - I|` over all entries; < 1e-12 for every propagator this
    /// crate produces, up to the two-photon dimension of the 21-guide device.
    pub fn unitarity_defect(&self) -> f64 {
        let dim = self.dim();
        let gram = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for a in 0..dim {
            for b in 0..dim {
                let target = if a == b { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((gram[(a, b)] - target).norm());
            }
        }
        worst
    }
}

fn validate_z(z_mm: f64) -> Result<()> {
    if !(z_mm.is_finite() && z_mm >= 0.0) {
        return Err(Error::validation("propagation length must be finite and >= 0"));
    }
    Ok(())
}

/// Propagator `exp(-iHz)` of a real symmetric Hamiltonian.
///
/// `z = 0` short-circuits to the exact identity. For many lengths of the
/// same Hamiltonian, build one [`SpectralDecomposition`] instead.
pub fn propagator(h: &DMatrix<f64>, z_mm: f64) -> Result<EvolutionOperator> {
    SpectralDecomposition::new(h)?.propagator(z_mm)
}

/// Output probability distribution of a single photon injected at
/// `input_site`: `p_q = |U_{q, input}|^2`. Sums to 1 within 1e-10.
pub fn single_photon_distribution(u: &EvolutionOperator, input_site: usize) -> Result<Vec<f64>> {
    if input_site >= u.dim() {
        return Err(Error::Validation(format!(
            "input site {input_site} out of range for {} sites",
            u.dim()
        )));
    }
    Ok(u.matrix
        .column(input_site)
        .iter()
        .map(|a| a.norm_sqr())
        .collect())
}

/// Evolve the two-photon basis state at linear Fock index `input`:
/// the `input` column of `exp(-iH2 z)` over the unordered-pair basis.
pub fn evolve_two_photon(
    h2: &TwoPhotonHamiltonian,
    z_mm: f64,
    input: usize,
) -> Result<AmplitudeVector> {
    if input >= h2.dim() {
        return Err(Error::Validation(format!(
            "fock index {input} out of range for dimension {}",
            h2.dim()
        )));
    }
    SpectralDecomposition::new(h2.matrix())?.evolve_basis_state(input, z_mm)
}

/// Single-photon intensity profile along the device: row `i` is the output
/// distribution at `z_i = length * i / (n_slices - 1)`, so the first row is
/// the launch plane and the last row the output facet. `n_slices >= 2`.
pub fn propagation_profile(
    spec: &LatticeSpec,
    input_site: usize,
    n_slices: usize,
) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if input_site >= spec.n_sites {
        return Err(Error::Validation(format!(
            "input site {input_site} out of range for {} sites",
            spec.n_sites
        )));
    }
    if n_slices < 2 {
        return Err(Error::validation("propagation profile needs >= 2 z-slices"));
    }
    let h = crate::lattice::build_single_hamiltonian(spec)?;
    let decomp = SpectralDecomposition::new(h.matrix())?;
    let mut profile = DMatrix::zeros(n_slices, spec.n_sites);
    for i in 0..n_slices {
        let z = spec.length_mm * i as f64 / (n_slices - 1) as f64;
        let amp = decomp.evolve_basis_state(input_site, z)?;
        for q in 0..spec.n_sites {
            profile[(i, q)] = amp[q].norm_sqr();
        }
    }
    Ok(profile)
}

/// Participation ratio of a probability distribution: `1 / sum_q p_q^2`
/// after normalization — an effective number of occupied sites. Equals 1
/// for a delta distribution and `N` for the uniform one; it shrinks when
/// disorder localizes the walk.
pub fn participation_ratio(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::validation("distribution must be non-empty"));
    }
    if !p.iter().all(|v| v.is_finite() && *v >= 0.0) {
        return Err(Error::validation(
            "distribution entries must be finite and >= 0",
        ));
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::validation("distribution must have positive mass"));
    }
    let sum_sq: f64 = p.iter().map(|v| v * v).sum();
    Ok(total * total / sum_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_single_hamiltonian, build_two_photon_hamiltonian, fock_index};

    fn device_spec() -> LatticeSpec {
        LatticeSpec::uniform(21, 0.0, 5.0, 0.782).unwrap()
    }

    #[test]
    fn zero_length_is_exact_identity() {
        let h = build_single_hamiltonian(&device_spec()).unwrap();
        let u = propagator(h.matrix(), 0.0).unwrap();
        assert_eq!(u.matrix(), &DMatrix::identity(21, 21));
    }

    #[test]
    fn directional_coupler_closed_form() {
        // N = 2, beta = 0: U = cos(Cz) I + i sin(Cz) sigma_x.
        let c = 5.0;
        for &z in &[0.05, 0.1, 0.157, 0.3] {
            let spec = LatticeSpec::uniform(2, 0.0, c, z).unwrap();
            let h = build_single_hamiltonian(&spec).unwrap();
            let u = propagator(h.matrix(), z).unwrap();
            let theta = c * z;
            assert!((u.amplitude(0, 0) - Complex64::new(theta.cos(), 0.0)).norm() < 1e-12);
            assert!((u.amplitude(1, 1) - Complex64::new(theta.cos(), 0.0)).norm() < 1e-12);
            assert!((u.amplitude(0, 1) - Complex64::new(0.0, theta.sin())).norm() < 1e-12);
            assert!((u.amplitude(1, 0) - Complex64::new(0.0, theta.sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn propagators_unitary_up_to_device_fock_dimension() {
        let spec = device_spec();
        let h1 = build_single_hamiltonian(&spec).unwrap();
        let u1 = propagator(h1.matrix(), spec.length_mm).unwrap();
        assert!(u1.unitarity_defect() < 1e-12, "N = 21: {}", u1.unitarity_defect());

        let h2 = build_two_photon_hamiltonian(&spec).unwrap();
        let u2 = propagator(h2.matrix(), spec.length_mm).unwrap();
        assert_eq!(u2.dim(), 231);
        assert!(u2.unitarity_defect() < 1e-12, "D = 231: {}", u2.unitarity_defect());
    }

    #[test]
    fn propagator_exactly_complex_symmetric() {
        let spec = LatticeSpec::new(
            vec![0.4, -0.3, 1.1, 0.0, 2.2],
            vec![5.0, 4.2, 0.3, 1.9],
            0.7,
            0,
        )
        .unwrap();
        let h = build_single_hamiltonian(&spec).unwrap();
        let u = propagator(h.matrix(), spec.length_mm).unwrap();
        assert_eq!(u.matrix(), &u.matrix().transpose());
    }

    #[test]
    fn composition_of_propagators() {
        let spec = LatticeSpec::new(
            vec![0.1, 0.0, -0.2, 0.5, 0.0, 0.3],
            vec![5.0, 3.0, 4.0, 2.5, 3.3],
            1.0,
            0,
        )
        .unwrap();
        let h = build_single_hamiltonian(&spec).unwrap();
        let decomp = SpectralDecomposition::new(h.matrix()).unwrap();
        let (z1, z2) = (0.31, 0.47);
        let u1 = decomp.propagator(z1).unwrap();
        let u2 = decomp.propagator(z2).unwrap();
        let u12 = decomp.propagator(z1 + z2).unwrap();
        let product = u1.matrix() * u2.matrix();
        let worst = (product - u12.matrix())
            .iter()
            .map(|d| d.norm())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-10, "composition defect {worst}");
    }

    #[test]
    fn evolve_basis_state_matches_propagator_column() {
        let spec = device_spec();
        let h = build_single_hamiltonian(&spec).unwrap();
        let decomp = SpectralDecomposition::new(h.matrix()).unwrap();
        let u = decomp.propagator(spec.length_mm).unwrap();
        for input in [0, 10, 20] {
            let amp = decomp.evolve_basis_state(input, spec.length_mm).unwrap();
            let worst = (0..21)
                .map(|q| (amp[q] - u.amplitude(q, input)).norm())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-12, "input {input}: {worst}");
        }
    }

    #[test]
    fn eigenvalues_sorted_and_correct_for_free_photon() {
        // Uniform chain spectrum: lambda_m = -2C cos(m pi / (N+1)).
        let n = 21;
        let c = 5.0;
        let spec = LatticeSpec::uniform(n, 0.0, c, 1.0).unwrap();
        let h = build_single_hamiltonian(&spec).unwrap();
        let decomp = SpectralDecomposition::new(h.matrix()).unwrap();
        let mut expected: Vec<f64> = (1..=n)
            .map(|m| -2.0 * c * (m as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        for (got, want) in decomp.eigenvalues().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn single_photon_distribution_normalized_delta_at_zero() {
        let spec = device_spec();
        let h = build_single_hamiltonian(&spec).unwrap();
        let u0 = propagator(h.matrix(), 0.0).unwrap();
        let p = single_photon_distribution(&u0, 10).unwrap();
        assert_eq!(p[10], 1.0);
        assert_eq!(p.iter().sum::<f64>(), 1.0);

        let u = propagator(h.matrix(), spec.length_mm).unwrap();
        let p = single_photon_distribution(&u, 10).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(single_photon_distribution(&u, 21).is_err());
    }

    #[test]
    fn central_input_ballistic_lobes() {
        // Uniform array, central launch: distribution is mirror symmetric
        // and dominated by the two ballistic side lobes, not the center.
        let spec = device_spec();
        let h = build_single_hamiltonian(&spec).unwrap();
        let u = propagator(h.matrix(), spec.length_mm).unwrap();
        let p = single_photon_distribution(&u, 10).unwrap();
        for q in 0..21 {
            assert!((p[q] - p[20 - q]).abs() < 1e-10, "asymmetry at {q}");
        }
        let (argmax, max) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(q, v)| (q, *v))
            .unwrap();
        assert_ne!(argmax, 10, "max {max} should sit on a side lobe");
    }

    #[test]
    fn two_photon_trivial_and_hom() {
        let c = 5.0;
        // Cz = pi/4 puts the directional coupler at its 50:50 point.
        let z = std::f64::consts::FRAC_PI_4 / c;
        let spec = LatticeSpec::uniform(2, 0.0, c, z).unwrap();
        let h2 = build_two_photon_hamiltonian(&spec).unwrap();

        let amp0 = evolve_two_photon(&h2, 0.0, fock_index(0, 1, 2).unwrap()).unwrap();
        assert_eq!(amp0[0], Complex64::ZERO);
        assert_eq!(amp0[1], Complex64::ONE);
        assert_eq!(amp0[2], Complex64::ZERO);

        let amp = evolve_two_photon(&h2, z, fock_index(0, 1, 2).unwrap()).unwrap();
        assert!(amp[1].norm_sqr() < 1e-12, "coincidences survive: {}", amp[1].norm_sqr());
        assert!((amp[0].norm_sqr() - 0.5).abs() < 1e-10);
        assert!((amp[2].norm_sqr() - 0.5).abs() < 1e-10);

        assert!(evolve_two_photon(&h2, z, 3).is_err());
    }

    #[test]
    fn two_photon_closed_form_coupler() {
        // N = 2 Fock lattice is a 3-site chain with coupling sqrt(2) C:
        // from (0,1), amp(0,1) = cos(2Cz) and amp(0,0) = amp(1,1)
        // = i sin(2Cz)/sqrt(2).
        let c = 1.3;
        for &z in &[0.0f64, 0.11, 0.37, 0.9, 1.7] {
            let spec = LatticeSpec::uniform(2, 0.0, c, z.max(0.1)).unwrap();
            let h2 = build_two_photon_hamiltonian(&spec).unwrap();
            let amp = evolve_two_photon(&h2, z, 1).unwrap();
            let th = 2.0 * c * z;
            let expect_mixed = Complex64::new(th.cos(), 0.0);
            let expect_pair = Complex64::new(0.0, th.sin() / 2f64.sqrt());
            assert!((amp[1] - expect_mixed).norm() < 1e-12, "z = {z}");
            assert!((amp[0] - expect_pair).norm() < 1e-12, "z = {z}");
            assert!((amp[2] - expect_pair).norm() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn evolution_preserves_norm() {
        let spec = device_spec();
        let h2 = build_two_photon_hamiltonian(&spec).unwrap();
        let amp = evolve_two_photon(&h2, spec.length_mm, fock_index(10, 11, 21).unwrap()).unwrap();
        assert!((amp.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn profile_shape_and_normalization() {
        let spec = device_spec();
        let profile = propagation_profile(&spec, 10, 50).unwrap();
        assert_eq!((profile.nrows(), profile.ncols()), (50, 21));
        assert_eq!(profile[(0, 10)], 1.0);
        for i in 0..50 {
            let row_sum: f64 = profile.row(i).iter().sum();
            assert!((row_sum - 1.0).abs() < 1e-10, "row {i} sums to {row_sum}");
        }
        assert!(propagation_profile(&spec, 21, 50).is_err());
        assert!(propagation_profile(&spec, 10, 1).is_err());
    }

    #[test]
    fn participation_ratio_limits() {
        let mut delta = vec![0.0; 21];
        delta[3] = 1.0;
        assert!((participation_ratio(&delta).unwrap() - 1.0).abs() < 1e-12);
        let uniform = vec![1.0 / 21.0; 21];
        assert!((participation_ratio(&uniform).unwrap() - 21.0).abs() < 1e-9);
        // Scale invariance: normalization happens internally.
        let scaled = vec![3.0; 21];
        assert!((participation_ratio(&scaled).unwrap() - 21.0).abs() < 1e-9);
        assert!(participation_ratio(&[]).is_err());
        assert!(participation_ratio(&[0.0, 0.0]).is_err());
        assert!(participation_ratio(&[0.5, -0.1]).is_err());
    }

    #[test]
    fn asymmetric_or_nonfinite_inputs_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(matches!(
            SpectralDecomposition::new(&m),
            Err(Error::Validation(_))
        ));
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = f64::NAN;
        assert!(matches!(
            SpectralDecomposition::new(&m),
            Err(Error::Numerical(_))
        ));
        let h = DMatrix::zeros(2, 2);
        assert!(propagator(&h, -1.0).is_err());
        assert!(propagator(&h, f64::NAN).is_err());
    }
}
