//! Structural invariants of the walk engine, checked over deterministic
//! parameter sweeps and randomized (proptest) inputs.

mod common;

use corrwalk_core::io::{
    format_gamma_csv, format_gamma_json, format_vector_csv, parse_gamma_csv, parse_gamma_json,
    parse_vector_csv,
};
use corrwalk_core::{
    build_single_hamiltonian, distinguishable_correlation, fock_index, fock_pair, hilbert_dim,
    participation_ratio, propagator, quantum_correlation, sample_disordered_spec, similarity,
    single_photon_distribution, two_photon_dim, violation_map, CorrelationMatrix, CorrelationMeta,
    LatticeSpec, Source,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn device_propagator(spec: &LatticeSpec) -> corrwalk_core::EvolutionOperator {
    let h = build_single_hamiltonian(spec).unwrap();
    propagator(h.matrix(), spec.length_mm).unwrap()
}

#[test]
fn distinguishable_photons_never_violate_the_classical_bound() {
    // The classical-limit inequality is derived for distinguishable pairs, so
    // no uniform lattice, input pair, or length may dip below zero (up to
    // rounding): the dichotomy with the quantum case rests on this.
    for &n in &[2usize, 3, 5, 8, 13, 21] {
        for &cz in &[0.2f64, 0.5, 0.782, 1.5] {
            let spec = LatticeSpec::uniform(n, 0.0, 1.0, cz).unwrap();
            let u = device_propagator(&spec);
            for qp in 0..n {
                for rp in qp..n {
                    let gamma = distinguishable_correlation(&u, (qp, rp)).unwrap();
                    let map = violation_map(&gamma);
                    if let Some((q, r, v)) = map.min_violation() {
                        assert!(
                            v >= -1e-10,
                            "N={n}, Cz={cz}, input ({qp},{rp}): distinguishable V({q},{r}) = {v}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn global_site_potential_shift_is_unobservable() {
    // Adding a constant to every propagation constant multiplies the
    // propagator by a global phase; every probability output must be
    // unchanged.
    let base = sample_disordered_spec(&common::device(), 1.0, 0.5, 7).unwrap();
    let mut shifted = base.clone();
    for b in &mut shifted.beta {
        *b += 17.3;
    }
    let u0 = device_propagator(&base);
    let u1 = device_propagator(&shifted);

    let p0 = single_photon_distribution(&u0, 10).unwrap();
    let p1 = single_photon_distribution(&u1, 10).unwrap();
    for (a, b) in p0.iter().zip(&p1) {
        assert!((a - b).abs() < 1e-10, "single-photon probabilities moved");
    }

    for &input in &[(10usize, 11usize), (9, 11), (7, 7)] {
        let g0 = quantum_correlation(&u0, input).unwrap();
        let g1 = quantum_correlation(&u1, input).unwrap();
        let d0 = distinguishable_correlation(&u0, input).unwrap();
        let d1 = distinguishable_correlation(&u1, input).unwrap();
        let worst_q = (g0.gamma() - g1.gamma())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let worst_d = (d0.gamma() - d1.gamma())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst_q < 1e-10, "quantum Γ moved by {worst_q} under β shift");
        assert!(worst_d < 1e-10, "distinguishable Γ moved by {worst_d}");
    }
}

#[test]
fn mirror_symmetry_commutes_with_evolution() {
    // Reversing the site order of a uniform array is a symmetry: walks from
    // mirrored inputs are mirror images of each other.
    let spec = common::device();
    let n = spec.n_sites;
    let u = device_propagator(&spec);

    for input in [0usize, 4, 10] {
        let p = single_photon_distribution(&u, input).unwrap();
        let q = single_photon_distribution(&u, n - 1 - input).unwrap();
        for site in 0..n {
            assert!(
                (p[site] - q[n - 1 - site]).abs() < 1e-10,
                "mirrored launches disagree at site {site}"
            );
        }
    }

    let g = quantum_correlation(&u, (9, 11)).unwrap();
    let g_mirror = quantum_correlation(&u, (n - 1 - 11, n - 1 - 9)).unwrap();
    for q in 0..n {
        for r in 0..n {
            let direct = g.value(q, r).unwrap();
            let mirrored = g_mirror.value(n - 1 - q, n - 1 - r).unwrap();
            assert!(
                (direct - mirrored).abs() < 1e-10,
                "Γ({q},{r}) = {direct} vs mirrored {mirrored}"
            );
        }
    }
}

#[test]
fn correlation_normalization_holds_across_random_devices() {
    // Σ_{q≤r} Γ = 1 for both particle types on arbitrary disordered arrays.
    for seed in 0..100u64 {
        let n = 3 + (seed as usize % 9);
        let template = LatticeSpec::uniform(n, 0.5, 1.0, 0.6 + 0.01 * seed as f64).unwrap();
        let spec = sample_disordered_spec(&template, 0.8, 0.4, seed).unwrap();
        let u = device_propagator(&spec);
        let input = ((seed as usize) % n, (seed as usize / 3) % n);

        let gq = quantum_correlation(&u, input).unwrap();
        let gd = distinguishable_correlation(&u, input).unwrap();
        assert!(
            (gq.pair_sum() - 1.0).abs() < 1e-10,
            "quantum Γ mass = {} for seed {seed}",
            gq.pair_sum()
        );
        assert!(
            (gd.pair_sum() - 1.0).abs() < 1e-10,
            "distinguishable Γ mass = {} for seed {seed}",
            gd.pair_sum()
        );
    }
}

/// Build a measured-source matrix from unordered-pair values and a mask.
fn measured_from_pairs(n: usize, entries: &[(usize, usize, f64)]) -> CorrelationMatrix {
    let mut gamma = DMatrix::zeros(n, n);
    let mut present = DMatrix::from_element(n, n, false);
    for &(q, r, v) in entries {
        gamma[(q, r)] = v;
        gamma[(r, q)] = v;
        present[(q, r)] = true;
        present[(r, q)] = true;
    }
    CorrelationMatrix::measured(
        gamma,
        present,
        CorrelationMeta {
            input: None,
            indistinguishable: true,
            source: Source::Measured,
        },
    )
    .unwrap()
}

proptest! {
    #[test]
    fn fock_indexing_is_a_bijection(n in 1usize..40, raw_index in 0usize..1000) {
        let dim = two_photon_dim(n);
        let index = raw_index % dim;
        let (j, k) = fock_pair(index, n).unwrap();
        prop_assert!(j <= k && k < n);
        prop_assert_eq!(fock_index(j, k, n).unwrap(), index);
    }

    #[test]
    fn fock_index_covers_the_triangle_in_order(n in 1usize..25) {
        let mut expected = 0usize;
        for j in 0..n {
            for k in j..n {
                prop_assert_eq!(fock_index(j, k, n).unwrap(), expected);
                expected += 1;
            }
        }
        prop_assert_eq!(expected, two_photon_dim(n));
    }

    #[test]
    fn hilbert_dimensions_are_consistent(n_sites in 1u64..500) {
        // One particle: statistics are irrelevant. Two indistinguishable
        // particles: the unordered-pair count. Never more states than the
        // distinguishable labelling.
        prop_assert_eq!(hilbert_dim(1, n_sites, false).unwrap(), n_sites as u128);
        prop_assert_eq!(hilbert_dim(1, n_sites, true).unwrap(), n_sites as u128);
        let pairs = hilbert_dim(2, n_sites, false).unwrap();
        prop_assert_eq!(pairs, (n_sites * (n_sites + 1) / 2) as u128);
        for photons in 1u32..5 {
            let bose = hilbert_dim(photons, n_sites, false).unwrap();
            let dist = hilbert_dim(photons, n_sites, true).unwrap();
            prop_assert!(bose <= dist);
        }
    }

    #[test]
    fn vector_csv_round_trips_exactly(values in prop::collection::vec(-1e12f64..1e12, 1..40)) {
        let text = format_vector_csv(&values);
        let back = parse_vector_csv(&text).unwrap();
        prop_assert_eq!(back, values);
    }

    #[test]
    fn gamma_formats_round_trip_exactly(
        n in 2usize..7,
        seeds in prop::collection::vec((0.0f64..1.0, any::<bool>()), 36),
    ) {
        let mut entries = Vec::new();
        let mut i = 0;
        for q in 0..n {
            for r in q..n {
                let (v, keep) = seeds[i];
                i += 1;
                if keep {
                    entries.push((q, r, v));
                }
            }
        }
        prop_assume!(!entries.is_empty());
        let gamma = measured_from_pairs(n, &entries);

        let csv = format_gamma_csv(&gamma);
        let from_csv = parse_gamma_csv(&csv).unwrap();
        prop_assert_eq!(from_csv.gamma(), gamma.gamma());
        prop_assert_eq!(from_csv.present_mask(), gamma.present_mask());
        prop_assert_eq!(format_gamma_csv(&from_csv), csv, "CSV encoding must be byte-stable");

        let json = format_gamma_json(&gamma);
        let from_json = parse_gamma_json(&json).unwrap();
        prop_assert_eq!(from_json.gamma(), gamma.gamma());
        prop_assert_eq!(from_json.present_mask(), gamma.present_mask());
    }

    #[test]
    fn similarity_is_scale_invariant_and_bounded(
        scale in 0.01f64..100.0,
        seeds in prop::collection::vec(0.001f64..1.0, 20),
    ) {
        let n = 4;
        let mut a_entries = Vec::new();
        let mut b_entries = Vec::new();
        let mut i = 0;
        for q in 0..n {
            for r in q..n {
                a_entries.push((q, r, seeds[i]));
                b_entries.push((q, r, seeds[i + 10]));
                i += 1;
            }
        }
        let a = measured_from_pairs(n, &a_entries);
        let b = measured_from_pairs(n, &b_entries);
        let b_scaled = measured_from_pairs(
            n,
            &b_entries.iter().map(|&(q, r, v)| (q, r, v * scale)).collect::<Vec<_>>(),
        );

        let s = similarity(&a, &b).unwrap();
        let s_scaled = similarity(&a, &b_scaled).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s), "similarity {s} out of range");
        prop_assert!((s - s_scaled).abs() < 1e-12, "{s} vs scaled {s_scaled}");
        prop_assert!((similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn participation_ratio_counts_occupied_sites(
        p in prop::collection::vec(0.0f64..1.0, 1..30),
    ) {
        prop_assume!(p.iter().sum::<f64>() > 1e-9);
        let pr = participation_ratio(&p).unwrap();
        prop_assert!(pr >= 1.0 - 1e-12, "participation ratio {pr} below 1");
        prop_assert!(
            pr <= p.len() as f64 + 1e-12,
            "participation ratio {pr} above site count {}",
            p.len()
        );
    }
}
