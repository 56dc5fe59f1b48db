use std::collections::BTreeSet;

use fragci::cisolve::{fci_solve, DEFAULT_FCI_BUDGET};
use fragci::detcore::{diagonal_element, Determinant, OccupationVector, Sector};
use fragci::hamio::{parse_fcidump_str, ClusterHamiltonian, SampleSet};
use fragci::lucjsim::{
    double_factorize_t2, inject_readout_noise, lucj_from_factorization, mp2_amplitudes,
    prepare_lucj_state, sample_counts, Connectivity, Statevector, DEFAULT_STATEVECTOR_BUDGET,
};
use fragci::sqdengine::{
    diagnostics_jsonl, extend_subspace, postselect_and_recover, postselect_only,
    run_configuration_recovery, run_configuration_recovery_with, run_sqd, RecoveryConfig,
    SqdError,
};
use nalgebra::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> ClusterHamiltonian<f64> {
    let path = format!("{}/tests/fixtures/{name}.fcidump", env!("CARGO_MANIFEST_DIR"));
    parse_fcidump_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn sector(ham: &ClusterHamiltonian<f64>) -> Sector {
    Sector::new(ham.norb(), ham.n_alpha(), ham.n_beta()).unwrap()
}

/// Exact ground state as a sampleable statevector, plus its energy.
fn fci_state(ham: &ClusterHamiltonian<f64>) -> (f64, Statevector<f64>) {
    let sol = fci_solve(ham, DEFAULT_FCI_BUDGET).unwrap();
    let s = sector(ham);
    let mut psi = Statevector::basis_state(s, s.hartree_fock()).unwrap();
    for i in 0..psi.dim() {
        psi.amps[i] = Complex::new(sol.vector.coeff_of(&psi.determinant(i)), 0.0);
    }
    (sol.energy, psi)
}

fn lucj_samples(ham: &ClusterHamiltonian<f64>, shots: u64, seed: u64) -> SampleSet {
    let df = double_factorize_t2(&mp2_amplitudes(ham, None).unwrap()).unwrap();
    let p = lucj_from_factorization(&df, &Connectivity::AllToAll, df.len().max(1)).unwrap();
    let psi = prepare_lucj_state(sector(ham), &p, DEFAULT_STATEVECTOR_BUDGET).unwrap();
    sample_counts(&psi, shots, seed)
}

fn hf_energy(ham: &ClusterHamiltonian<f64>) -> f64 {
    diagonal_element(ham, &sector(ham).hartree_fock())
}

#[test]
fn noiseless_fci_samples_close_on_h4() {
    let ham = fixture("h4_chain");
    let (e_fci, psi) = fci_state(&ham);
    let raw = sample_counts(&psi, 100_000, 1);
    let out = run_configuration_recovery(&ham, &raw, &RecoveryConfig::default()).unwrap();
    assert!((out.e_best - e_fci).abs() < 1e-6, "{} vs {e_fci}", out.e_best);
    assert!(out.state.iteration <= 5);
}

#[test]
fn reference_only_samples_converge_to_hf() {
    let ham = fixture("h4_chain");
    let s = sector(&ham);
    let mut raw = SampleSet::new(8);
    raw.add(s.hartree_fock().to_bits(4), 100);
    let cfg = RecoveryConfig {
        n_batches: 1,
        ..Default::default()
    };
    let out = run_configuration_recovery(&ham, &raw, &cfg).unwrap();
    assert!((out.e_best - hf_energy(&ham)).abs() < 1e-12);
    assert!(out.state.converged);
    assert_eq!(out.state.iteration, 2);
    assert_eq!(out.diagnostics.len(), 2);
}

#[test]
fn persistent_nonconvergence_stops_at_max_iters() {
    let ham = fixture("h6_chain");
    let raw = inject_readout_noise(&lucj_samples(&ham, 20_000, 2), 0.1, 3).unwrap();
    let cfg = RecoveryConfig {
        samples_per_batch: 3,
        n_batches: 2,
        e_tol: 1e-300,
        occ_tol: 1e-300,
        ..Default::default()
    };
    let out = run_configuration_recovery(&ham, &raw, &cfg).unwrap();
    assert_eq!(out.state.iteration, 5);
    assert_eq!(out.diagnostics.len(), 5);
    assert!(!out.state.converged);
}

#[test]
fn noisy_samples_are_fully_recovered() {
    let ham = fixture("h4_chain");
    let s = sector(&ham);
    let (e_fci, psi) = fci_state(&ham);
    let raw = inject_readout_noise(&sample_counts(&psi, 100_000, 5), 0.05, 6).unwrap();
    let bad = raw
        .iter()
        .filter(|(b, _)| !Determinant::from_bits(*b, 4).in_sector(&s))
        .count();
    assert!(bad > 0);
    let occ = OccupationVector::from_determinant(&s.hartree_fock(), 4);
    let rec = postselect_and_recover(&raw, &occ, s, 7).unwrap();
    assert!(rec.iter().all(|(d, _)| d.in_sector(&s)));
    assert_eq!(rec.iter().map(|x| x.1).sum::<u64>(), raw.total_shots());

    let out = run_configuration_recovery(&ham, &raw, &RecoveryConfig::default()).unwrap();
    assert!((out.e_best - e_fci).abs() < 1e-4);
    let base = postselect_only(&raw, s);
    assert!(base.total_shots() < raw.total_shots());
    let b = run_configuration_recovery(&ham, &base, &RecoveryConfig::default()).unwrap();
    assert!(b.e_best >= e_fci - 1e-10);
}

#[test]
fn closed_shell_dominant_set_augments_to_nine() {
    let ham = fixture("h4_chain");
    let s = sector(&ham);
    let mut raw = SampleSet::new(8);
    raw.add(s.hartree_fock().to_bits(4), 10);
    let cfg = RecoveryConfig {
        n_batches: 1,
        ..Default::default()
    };
    let out = run_configuration_recovery(&ham, &raw, &cfg).unwrap();
    let ext = extend_subspace(&ham, &out.best, &cfg).unwrap();
    assert_eq!(ext.selected, 1);
    assert_eq!(ext.vector.basis.dim(), 9);
}

#[test]
fn selection_error_names_largest_coefficient() {
    let ham = fixture("h4_chain");
    let mut raw = SampleSet::new(8);
    raw.add(sector(&ham).hartree_fock().to_bits(4), 1);
    let out = run_configuration_recovery(&ham, &raw, &RecoveryConfig::default()).unwrap();
    let cfg = RecoveryConfig {
        ext_dominance_threshold: 2.0,
        ..Default::default()
    };
    match extend_subspace(&ham, &out.best, &cfg) {
        Err(SqdError::Selection { max_coeff, .. }) => assert!((max_coeff - 1.0).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
}

/// HF plus one paired double: a product space too small to hold the ground
/// state, which single excitations can enlarge.
fn truncated_h4_samples() -> SampleSet {
    let mut raw = SampleSet::new(8);
    raw.add(Determinant::new(0b0011, 0b0011).to_bits(4), 90);
    raw.add(Determinant::new(0b0101, 0b0101).to_bits(4), 10);
    raw
}

#[test]
fn extension_strictly_improves_a_truncated_subspace() {
    let ham = fixture("h4_chain");
    let (e_fci, _) = fci_state(&ham);
    let cfg = RecoveryConfig::default();
    let sol = run_sqd(&ham, &truncated_h4_samples(), &cfg).unwrap();
    assert!(sol.e_sqd - e_fci > 1e-6);
    assert!(sol.e_ext - e_fci < sol.e_sqd - e_fci);
    assert!(sol.e_ext >= e_fci - 1e-10);
    assert!(sol.stats.sqd_dim < 36);
    assert!(sol.stats.ext_dim.unwrap() < 36);
}

#[test]
fn variational_ladder_on_every_fixture() {
    for name in ["h2", "h4_chain", "h6_chain"] {
        let ham = fixture(name);
        let (e_fci, _) = fci_state(&ham);
        let raw = inject_readout_noise(&lucj_samples(&ham, 20_000, 11), 0.02, 12).unwrap();
        let cfg = RecoveryConfig {
            samples_per_batch: 200,
            ext_dominance_threshold: 0.0,
            ..Default::default()
        };
        let sol = run_sqd(&ham, &raw, &cfg).unwrap();
        let e_hf = hf_energy(&ham);
        assert!(e_hf >= sol.e_sqd - 1e-10, "{name}");
        assert!(sol.e_sqd >= sol.e_ext - 1e-10, "{name}");
        assert!(sol.e_ext >= e_fci - 1e-10, "{name}");
        for rec in &sol.diagnostics {
            for &e in &rec.batch_energies {
                assert!(e >= e_fci - 1e-10);
            }
        }
        let tr = sol.rdm1.trace();
        assert!((tr - ham.n_elec() as f64).abs() < 1e-8);
    }
}

#[test]
fn best_energy_is_minimum_over_all_batches() {
    let ham = fixture("h6_chain");
    let raw = inject_readout_noise(&lucj_samples(&ham, 10_000, 21), 0.05, 22).unwrap();
    let cfg = RecoveryConfig {
        samples_per_batch: 40,
        n_batches: 4,
        ..Default::default()
    };
    let out = run_configuration_recovery(&ham, &raw, &cfg).unwrap();
    let min = out
        .diagnostics
        .iter()
        .flat_map(|r| r.batch_energies.iter().copied())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(out.e_best, min);
    let mut last = f64::INFINITY;
    for r in &out.diagnostics {
        assert!(r.e_best <= last);
        last = r.e_best;
    }
}

#[test]
fn carryover_is_contained_in_next_batches() {
    let ham = fixture("h6_chain");
    let raw = inject_readout_noise(&lucj_samples(&ham, 10_000, 31), 0.05, 32).unwrap();
    for accumulate in [false, true] {
        let cfg = RecoveryConfig {
            samples_per_batch: 30,
            n_batches: 3,
            e_tol: 1e-300,
            accumulate_carryover: accumulate,
            ..Default::default()
        };
        let mut prev: Option<Vec<Determinant>> = None;
        let mut checked = 0;
        run_configuration_recovery_with(&ham, &raw, &cfg, |batches, state| {
            if let Some(carry) = &prev {
                for b in batches {
                    for d in carry {
                        assert!(b.basis().contains(d));
                        checked += 1;
                    }
                }
                if accumulate {
                    let now: BTreeSet<_> = state.carryover.iter().collect();
                    assert!(carry.iter().all(|d| now.contains(d)));
                }
            }
            prev = Some(state.carryover.clone());
        })
        .unwrap();
        assert!(checked > 0);
    }
}

#[test]
fn diagnostics_are_identical_across_thread_counts() {
    let ham = fixture("h6_chain");
    let raw = inject_readout_noise(&lucj_samples(&ham, 10_000, 41), 0.05, 42).unwrap();
    let cfg = RecoveryConfig {
        samples_per_batch: 60,
        n_batches: 6,
        seed: 9,
        ..Default::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let out = run_configuration_recovery(&ham, &raw, &cfg).unwrap();
                (out.e_best.to_bits(), diagnostics_jsonl(&out.diagnostics))
            })
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(1));
    let other = RecoveryConfig { seed: 10, ..cfg.clone() };
    let b = run_configuration_recovery(&ham, &raw, &other).unwrap();
    assert_ne!(diagnostics_jsonl(&b.diagnostics), a.1);
}

#[test]
fn subspace_cap_truncates_batches() {
    let ham = fixture("h6_chain");
    let raw = lucj_samples(&ham, 10_000, 51);
    let cfg = RecoveryConfig {
        subspace_cap: 50,
        ..Default::default()
    };
    let out = run_configuration_recovery(&ham, &raw, &cfg).unwrap();
    assert!(out.diagnostics.iter().all(|r| r.batch_dims.iter().all(|&d| d <= 50)));
}

#[test]
fn invalid_inputs_rejected() {
    let ham = fixture("h4_chain");
    let raw = truncated_h4_samples();
    for cfg in [
        RecoveryConfig { n_batches: 0, ..Default::default() },
        RecoveryConfig { samples_per_batch: 0, ..Default::default() },
        RecoveryConfig { e_tol: 0.0, ..Default::default() },
        RecoveryConfig { carryover_threshold: -1.0, ..Default::default() },
    ] {
        assert!(matches!(run_configuration_recovery(&ham, &raw, &cfg), Err(SqdError::Config(_))));
    }
    assert!(matches!(
        run_configuration_recovery(&ham, &SampleSet::new(8), &RecoveryConfig::default()),
        Err(SqdError::NoSamples)
    ));
    let mut wrong = SampleSet::new(6);
    wrong.add(0b000111, 3);
    assert!(matches!(
        run_configuration_recovery(&ham, &wrong, &RecoveryConfig::default()),
        Err(SqdError::Register { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recovery_lands_every_shot_in_sector(
        seed in any::<u64>(),
        norb in 1usize..9,
        fa in 0.0f64..1.0,
        fb in 0.0f64..1.0,
        n_strings in 1usize..40,
    ) {
        let na = ((fa * (norb + 1) as f64) as usize).min(norb);
        let nb = ((fb * (norb + 1) as f64) as usize).min(norb);
        let s = Sector::new(norb, na, nb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = SampleSet::new(2 * norb);
        for _ in 0..n_strings {
            let bits = rng.random::<u128>() & ((1u128 << (2 * norb)) - 1);
            raw.add(bits, rng.random_range(1..20));
        }
        let occ = OccupationVector {
            alpha: (0..norb).map(|_| rng.random::<f64>()).collect(),
            beta: (0..norb).map(|_| if rng.random::<bool>() { 0.0 } else { 1.0 }).collect(),
        };
        let out = postselect_and_recover(&raw, &occ, s, seed).unwrap();
        prop_assert!(out.iter().all(|(d, _)| d.in_sector(&s)));
        prop_assert_eq!(out.iter().map(|x| x.1).sum::<u64>(), raw.total_shots());
        prop_assert_eq!(&out, &postselect_and_recover(&raw, &occ, s, seed).unwrap());
        for (bits, c) in raw.iter() {
            let d = Determinant::from_bits(bits, norb);
            if d.in_sector(&s) {
                let got = out.iter().find(|x| x.0 == d).map(|x| x.1).unwrap();
                prop_assert!(got >= c);
            }
        }
    }
}
