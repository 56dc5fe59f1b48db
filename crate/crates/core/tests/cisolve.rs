use fragci::cisolve::{
    build_projected_hamiltonian, compute_rdms, davidson_ground_state, energy_from_rdms,
    fci_solve, solve_subspace, CiError, CiVector, DavidsonOptions, HamiltonianOperator,
    ProductHamiltonian, SparseSymMatrix, SubspaceBasis, DEFAULT_FCI_BUDGET,
};
use fragci::detcore::{enumerate_space, Determinant, Sector};
use fragci::hamio::{parse_fcidump_str, ClusterHamiltonian};
use fragci::oracle::{brute_force_rdms, dense_ground_state, fock_sector_matrix, random_hamiltonian};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> ClusterHamiltonian<f64> {
    let path = format!("{}/tests/fixtures/{name}.fcidump", env!("CARGO_MANIFEST_DIR"));
    parse_fcidump_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn reference(name: &str, key: &str) -> f64 {
    let text = include_str!("fixtures/reference_energies.json");
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    v[name][key].as_f64().unwrap()
}

fn sector(ham: &ClusterHamiltonian<f64>) -> Sector {
    Sector::new(ham.norb(), ham.n_alpha(), ham.n_beta()).unwrap()
}

#[test]
fn fci_matches_dense_oracle_on_random_small_hamiltonians() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..24 {
        let m = 2 + k % 3;
        let na = rng.random_range(0..=m);
        let nb = rng.random_range(0..=m);
        let ham = random_hamiltonian(&mut rng, m, na, nb);
        let (_, dense) = fock_sector_matrix(&ham);
        let (e_ref, _) = dense_ground_state(&dense);
        let sol = fci_solve(&ham, DEFAULT_FCI_BUDGET).unwrap();
        assert!((sol.energy - e_ref).abs() < 1e-10, "{} vs {e_ref}", sol.energy);
    }
}

#[test]
fn h4_fci_matches_oracle_and_reference() {
    let ham = fixture("h4_chain");
    let (_, dense) = fock_sector_matrix(&ham);
    let (e_ref, _) = dense_ground_state(&dense);
    let sol = fci_solve(&ham, DEFAULT_FCI_BUDGET).unwrap();
    assert!((sol.energy - e_ref).abs() < 1e-10);
    assert!((sol.energy - reference("h4_chain", "e_fci")).abs() < 1e-8);
    let e_rdm = energy_from_rdms(&ham, &sol.rdm1, &sol.rdm2).unwrap();
    assert!((e_rdm - sol.energy).abs() < 1e-10);
    let pt = sol.rdm2.partial_trace();
    let n = ham.n_elec() as f64;
    assert!((pt - &sol.rdm1 * (n - 1.0)).amax() < 1e-10);
}

#[test]
fn rdms_match_brute_force_operator_expectations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (m, na, nb) in [(3, 1, 2), (4, 2, 2), (4, 3, 1)] {
        let dets = enumerate_space(m, na, nb).unwrap();
        let basis = SubspaceBasis::new(Sector::new(m, na, nb).unwrap(), dets.clone()).unwrap();
        let mut c = DVector::from_fn(dets.len(), |_, _| rng.random_range(-1.0..1.0));
        c /= c.norm();
        let v = CiVector::new(basis, c.clone()).unwrap();
        let (g1, g2) = compute_rdms(&v);
        let bits: Vec<u128> = dets.iter().map(|d| d.to_bits(m)).collect();
        let (r1, r2) = brute_force_rdms(m, &bits, c.as_slice());
        assert!((&g1 - &r1).amax() < 1e-12);
        let dev = g2.as_slice().iter().zip(&r2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "2-RDM deviation {dev}");
        assert!((g1.trace() - (na + nb) as f64).abs() < 1e-10);
    }
}

#[test]
fn single_determinant_rdms() {
    let s = Sector::new(4, 2, 2).unwrap();
    let v = CiVector::<f64>::single(s, s.hartree_fock()).unwrap();
    let (g1, _) = compute_rdms(&v);
    for p in 0..4 {
        let expect = if p < 2 { 2.0 } else { 0.0 };
        assert_eq!(g1[(p, p)], expect);
    }
    let ham = fixture("h4_chain");
    let (g1, g2) = compute_rdms(&v);
    let e = energy_from_rdms(&ham, &g1, &g2).unwrap();
    assert!((e - reference("h4_chain", "e_hf")).abs() < 1e-9);
    let zero = fragci::cisolve::Rdm2::zeros(4);
    let e0 = energy_from_rdms(&ham, &nalgebra::DMatrix::zeros(4, 4), &zero).unwrap();
    assert_eq!(e0, ham.e0());
}

#[test]
fn projected_matrix_equals_dense_rows() {
    let ham = fixture("h4_chain");
    let (_, dense) = fock_sector_matrix(&ham);
    let all = enumerate_space(4, 2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut idx: Vec<usize> = (0..all.len()).collect();
    idx.shuffle(&mut rng);
    let mut pick: Vec<usize> = idx[..10].to_vec();
    pick.sort();
    let basis = SubspaceBasis::new(sector(&ham), pick.iter().map(|&i| all[i]).collect()).unwrap();
    let h = build_projected_hamiltonian(&ham, &basis).unwrap();
    for (a, &i) in pick.iter().enumerate() {
        for (b, &j) in pick.iter().enumerate() {
            assert!((h.get(a, b) - dense[(i, j)]).abs() < 1e-12);
        }
    }
    let full = SubspaceBasis::full(sector(&ham)).unwrap();
    let hf = build_projected_hamiltonian(&ham, &full).unwrap().to_dense();
    assert!((hf - &dense).amax() < 1e-12);
}

#[test]
fn hf_projection_is_hf_energy() {
    let ham = fixture("h4_chain");
    let s = sector(&ham);
    let basis = SubspaceBasis::new(s, vec![s.hartree_fock()]).unwrap();
    let h = build_projected_hamiltonian(&ham, &basis).unwrap();
    assert_eq!(h.dim(), 1);
    assert!((h.get(0, 0) - reference("h4_chain", "e_hf")).abs() < 1e-9);
    let (e, v) = davidson_ground_state(&h, None, &DavidsonOptions::default()).unwrap();
    assert_eq!(e, h.get(0, 0));
    assert_eq!(v[0], 1.0);
}

#[test]
fn empty_subspace_rejected() {
    let s = Sector::new(4, 2, 2).unwrap();
    assert!(matches!(SubspaceBasis::new(s, vec![]), Err(CiError::EmptySubspace)));
}

#[test]
fn two_orbital_diagonal_hamiltonian() {
    let mut ham = ClusterHamiltonian::<f64>::zeros(2, 1, 1).unwrap();
    ham.set_e0(0.25);
    ham.set_h(0, 0, -1.0);
    ham.set_h(1, 1, -0.4);
    let sol = fci_solve(&ham, 100).unwrap();
    let diag: Vec<f64> = enumerate_space(2, 1, 1)
        .unwrap()
        .iter()
        .map(|d| fragci::detcore::diagonal_element(&ham, d))
        .collect();
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((sol.energy - min).abs() < 1e-14);
}

#[test]
fn budget_exceeded_advises_sqd() {
    let ham = ClusterHamiltonian::<f64>::zeros(12, 6, 6).unwrap();
    let err = fci_solve(&ham, 1000).unwrap_err();
    assert!(err.to_string().contains("SQD"));
}

#[test]
fn h6_davidson_matches_dense_and_product_matches_sparse() {
    let ham = fixture("h6_chain");
    let full = SubspaceBasis::full(sector(&ham)).unwrap();
    assert_eq!(full.dim(), 400);
    let sparse = build_projected_hamiltonian(&ham, &full).unwrap();
    let (alphas, betas) = full.as_product().unwrap();
    let product = ProductHamiltonian::new(&ham, &alphas, &betas);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut y1 = vec![0.0; 400];
    let mut y2 = vec![0.0; 400];
    sparse.apply(&x, &mut y1);
    product.apply(&x, &mut y2);
    let dev = y1.iter().zip(&y2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-12, "{dev}");
    assert_eq!(sparse.diagonal(), product.diagonal());

    let (e_dense, _) = dense_ground_state(&sparse.to_dense());
    let forced = DavidsonOptions {
        dense_fallback: 0,
        ..Default::default()
    };
    let (e_dav, v) = davidson_ground_state(&product, None, &forced).unwrap();
    assert!((e_dav - e_dense).abs() < 1e-10);
    assert!((v.norm() - 1.0).abs() < 1e-10);
    assert!((e_dav - reference("h6_chain", "e_fci")).abs() < 1e-8);
    // Small restart window exercises the thick restart.
    let tight = DavidsonOptions {
        dense_fallback: 0,
        max_subspace: 4,
        ..Default::default()
    };
    let (e_r, _) = davidson_ground_state(&sparse, None, &tight).unwrap();
    assert!((e_r - e_dense).abs() < 1e-10);
}

#[test]
fn davidson_reports_nonconvergence() {
    let ham = fixture("h6_chain");
    let full = SubspaceBasis::full(sector(&ham)).unwrap();
    let h = build_projected_hamiltonian(&ham, &full).unwrap();
    let opts = DavidsonOptions {
        dense_fallback: 0,
        max_iter: 2,
        ..Default::default()
    };
    match davidson_ground_state(&h, None, &opts) {
        Err(CiError::Convergence { iterations: 2, residual }) => assert!(residual > 0.0),
        other => panic!("expected convergence error, got {other:?}"),
    }
}

#[test]
fn f32_fci_tracks_f64() {
    let ham = fixture("h4_chain");
    let e64 = fci_solve(&ham, DEFAULT_FCI_BUDGET).unwrap().energy;
    let e32 = fci_solve(&ham.cast::<f32>(), DEFAULT_FCI_BUDGET).unwrap().energy;
    assert!((e64 - e32 as f64).abs() < 1e-4);
}

fn random_sparse_symmetric(seed: u64, n: usize) -> SparseSymMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<(u32, f64)>> = (0..n).map(|i| vec![(i as u32, i as f64 * 0.01 + rng.random_range(-1.0..1.0))]).collect();
    for _ in 0..4 * n {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || rows[i].iter().any(|e| e.0 == j as u32) {
            continue;
        }
        let v = rng.random_range(-0.2..0.2);
        rows[i].push((j as u32, v));
        rows[j].push((i as u32, v));
    }
    for r in &mut rows {
        r.sort_by_key(|e| e.0);
    }
    SparseSymMatrix::from_rows(rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn davidson_equals_dense_on_random_sparse(seed in any::<u64>(), n in 20usize..160) {
        let h = random_sparse_symmetric(seed, n);
        let (e_ref, _) = dense_ground_state(&h.to_dense());
        let opts = DavidsonOptions { dense_fallback: 0, ..Default::default() };
        let (e, v) = davidson_ground_state(&h, None, &opts).unwrap();
        prop_assert!((e - e_ref).abs() < 1e-10, "{} vs {}", e, e_ref);
        prop_assert!((v.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn subspace_energies_are_variational_and_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ham = random_hamiltonian(&mut rng, 4, 2, 2);
        let s = sector(&ham);
        let all = enumerate_space(4, 2, 2).unwrap();
        let e_fci = fci_solve(&ham, 1000).unwrap().energy;
        let mut order: Vec<Determinant> = all.clone();
        order.shuffle(&mut rng);
        let k = rng.random_range(1..all.len());
        let small = SubspaceBasis::new(s, order[..k].to_vec()).unwrap();
        let k2 = rng.random_range(k..=all.len());
        let big = SubspaceBasis::new(s, order[..k2].to_vec()).unwrap();
        let opts = DavidsonOptions::default();
        let (e_s, v_s) = solve_subspace(&ham, &small, &opts, None).unwrap();
        let (e_b, _) = solve_subspace(&ham, &big, &opts, None).unwrap();
        prop_assert!(e_s >= e_fci - 1e-10);
        prop_assert!(e_s >= e_b - 1e-10);
        let (g1, g2) = compute_rdms(&v_s);
        prop_assert!((energy_from_rdms(&ham, &g1, &g2).unwrap() - e_s).abs() < 1e-8);
        prop_assert!((g1.clone() - g1.transpose()).amax() < 1e-12);
        let ev = g1.symmetric_eigen().eigenvalues;
        prop_assert!(ev.iter().all(|&x| x > -1e-10 && x < 2.0 + 1e-8));
        let pt = g2.partial_trace();
        prop_assert!((pt - compute_rdms(&v_s).0 * 3.0).amax() < 1e-8);
    }
}
