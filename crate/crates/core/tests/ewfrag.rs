use fragci::cisolve::{fci_solve, DEFAULT_FCI_BUDGET};
use fragci::detcore::diagonal_element;
use fragci::ewfrag::{
    build_clusters, extract_cluster_hamiltonian, orthogonalize_localize, schmidt_bath,
    EmbeddingSystem, EwfCluster, EwfError, FragmentSpec,
};
use fragci::hamio::{load_meanfield_bundle, MeanFieldBundle};
use nalgebra::{DMatrix, DVector};

fn bundle(name: &str) -> MeanFieldBundle<f64> {
    let path = format!("{}/tests/fixtures/{name}.bundle.json", env!("CARGO_MANIFEST_DIR"));
    load_meanfield_bundle(path, &Default::default()).unwrap()
}

fn system(name: &str) -> EmbeddingSystem<f64> {
    EmbeddingSystem::from_bundle(&bundle(name)).unwrap()
}

fn orthonormality(c: &DMatrix<f64>) -> f64 {
    (c.transpose() * c - DMatrix::identity(c.ncols(), c.ncols())).amax()
}

#[test]
fn identity_overlap_gives_identity_transform() {
    let mut mf = bundle("h4_chain");
    mf.overlap = DMatrix::identity(4, 4);
    let t = orthogonalize_localize(&mf).unwrap().t;
    assert!((t - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
}

#[test]
fn two_orbital_inverse_square_root_closed_form() {
    let s = 0.37;
    let mut mf = bundle("h4_chain");
    mf.n_ao = 2;
    mf.ao_atoms = vec![0, 1];
    mf.overlap = DMatrix::from_row_slice(2, 2, &[1.0, s, s, 1.0]);
    let t = orthogonalize_localize(&mf).unwrap().t;
    let a = 1.0 / (1.0 + s).sqrt();
    let b = 1.0 / (1.0 - s).sqrt();
    let want = DMatrix::from_row_slice(2, 2, &[a + b, a - b, a - b, a + b]) * 0.5;
    assert!((&t - want).amax() < 1e-14);
    let check = t.transpose() * &mf.overlap * &t;
    assert!((check - DMatrix::identity(2, 2)).amax() < 1e-12);
}

#[test]
fn ill_conditioned_overlap_rejected() {
    let mut mf = bundle("h4_chain");
    mf.overlap = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, 1e-11]));
    assert!(matches!(orthogonalize_localize(&mf), Err(EwfError::IllConditioned { .. })));
}

#[test]
fn local_density_keeps_electron_count_and_hf_energy() {
    for name in ["h4_chain", "h6_chain"] {
        let mf = bundle(name);
        let sys = EmbeddingSystem::from_bundle(&mf).unwrap();
        assert!((sys.density.trace() - mf.n_elec as f64).abs() < 1e-8);
        assert!((sys.e_hf - mf.reference.e_hf.unwrap()).abs() < 1e-8);
        let t = &sys.local.t;
        assert!((t.transpose() * &mf.overlap * t - DMatrix::identity(mf.n_ao, mf.n_ao)).amax() < 1e-10);
    }
}

#[test]
fn bonded_pair_toy_density_has_analytic_bath() {
    // two separated two-orbital bonds, each a doubly occupied mixture
    let theta: f64 = 0.6;
    let (c, s) = (theta.cos(), theta.sin());
    let mut d = DMatrix::<f64>::zeros(4, 4);
    for (i, j) in [(0, 1), (2, 3)] {
        d[(i, i)] = 2.0 * c * c;
        d[(j, j)] = 2.0 * s * s;
        d[(i, j)] = 2.0 * c * s;
        d[(j, i)] = 2.0 * c * s;
    }
    let space = schmidt_bath(&d, &[0]).unwrap();
    assert_eq!(space.bath.ncols(), 1);
    assert!((space.singular_values[0] - 2.0 * c * s).abs() < 1e-14);
    assert!((space.bath[(1, 0)].abs() - 1.0).abs() < 1e-14);
    assert_eq!(space.env_occ.ncols(), 1);
    assert_eq!(space.env_vir.ncols(), 1);
}

#[test]
fn non_idempotent_environment_rejected() {
    let d = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0]));
    assert!(matches!(schmidt_bath(&d, &[0]), Err(EwfError::NonIdempotent { .. })));
}

fn check_cluster_geometry(sys: &EmbeddingSystem<f64>, cl: &EwfCluster<f64>) {
    let c = &cl.coeffs;
    assert!(orthonormality(c) < 1e-10);
    assert!((c.transpose() * &cl.frozen_occ).amax() < 1e-10);
    assert!((c.transpose() * &cl.frozen_vir).amax() < 1e-10);
    assert!(cl.n_bath() <= cl.fragment.len());
    let p = &cl.projector;
    assert!((p * p - p).amax() < 1e-10);
    assert!((p - p.transpose()).amax() < 1e-14);
    assert!((p.trace() - cl.fragment.len() as f64).abs() < 1e-10);
    assert_eq!(c.ncols() + cl.frozen_occ.ncols() + cl.frozen_vir.ncols(), sys.n_basis());
}

#[test]
fn per_atom_clusters_reproduce_mean_field_energy() {
    let sys = system("h6_chain");
    let spec = FragmentSpec::per_atom(&sys.local.atoms).unwrap();
    assert_eq!(spec.len(), 6);
    let e_hf = bundle("h6_chain").reference.e_hf.unwrap();
    for eta in [1e-5, 1e-3, 2.0, 0.0] {
        let clusters = build_clusters(&sys, &spec, eta).unwrap();
        for cl in &clusters {
            check_cluster_geometry(&sys, cl);
            let ex = extract_cluster_hamiltonian(&sys, cl).unwrap();
            let hf = ex.ham.n_alpha();
            let det = fragci::detcore::Determinant::hartree_fock(hf, hf);
            let e = diagonal_element(&ex.ham, &det);
            assert!((e - e_hf).abs() < 1e-8, "eta {eta} cluster {}: {e} vs {e_hf}", cl.index);
        }
    }
}

#[test]
fn eta_limits() {
    let sys = system("h6_chain");
    let spec = FragmentSpec::per_atom(&sys.local.atoms).unwrap();
    for cl in build_clusters(&sys, &spec, 2.0).unwrap() {
        assert_eq!(cl.n_bno_occ + cl.n_bno_vir, 0);
        assert_eq!(cl.n_mo(), cl.fragment.len() + cl.n_bath());
    }
    for cl in build_clusters(&sys, &spec, 0.0).unwrap() {
        assert_eq!(cl.n_mo(), 6);
        assert_eq!(cl.frozen_occ.ncols() + cl.frozen_vir.ncols(), 0);
    }
    assert!(matches!(build_clusters(&sys, &spec, -1.0), Err(EwfError::Threshold(_))));
}

#[test]
fn retained_natural_orbitals_are_nested_in_eta() {
    let sys = system("h6_chain");
    let spec = FragmentSpec::per_atom(&sys.local.atoms).unwrap();
    let etas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let runs: Vec<Vec<EwfCluster<f64>>> = etas.iter().map(|&e| build_clusters(&sys, &spec, e).unwrap()).collect();
    for w in runs.windows(2) {
        for (big, small) in w[0].iter().zip(&w[1]) {
            assert!(small.n_bno_vir >= big.n_bno_vir);
            assert!(small.n_bno_occ >= big.n_bno_occ);
            // every orbital of the looser cluster lies in the tighter one
            let proj = &small.coeffs * small.coeffs.transpose();
            let resid = &big.coeffs - &proj * &big.coeffs;
            assert!(resid.amax() < 1e-8);
        }
    }
}

#[test]
fn whole_system_fragment_is_exact() {
    for name in ["h4_chain", "h6_chain"] {
        let sys = system(name);
        let n = sys.n_basis();
        let cl = &build_clusters(&sys, &FragmentSpec::whole(n), 1e-5).unwrap()[0];
        assert_eq!(cl.n_mo(), n);
        assert_eq!(cl.n_bath(), 0);
        let ex = extract_cluster_hamiltonian(&sys, cl).unwrap();
        let e = fci_solve(&ex.ham, DEFAULT_FCI_BUDGET).unwrap().energy;
        let want = bundle(name).reference.e_fci.unwrap();
        assert!((e - want).abs() < 1e-8, "{name}: {e} vs {want}");
    }
}

#[test]
fn empty_cluster_rejected() {
    let sys = system("h4_chain");
    let mut cl = build_clusters(&sys, &FragmentSpec::whole(4), 1e-5).unwrap().remove(0);
    cl.frozen_occ = cl.coeffs.columns(0, 2).into_owned();
    cl.frozen_vir = cl.coeffs.columns(2, 2).into_owned();
    cl.coeffs = DMatrix::zeros(4, 0);
    cl.n_occ = 0;
    assert!(matches!(extract_cluster_hamiltonian(&sys, &cl), Err(EwfError::EmptyActive(_))));
}

/// Spin-orbital MP2 one-particle density over canonical occupied `co` and
/// virtual `cv` orbitals, spin-summed into spatial blocks.
fn oracle_mp2_blocks(sys: &EmbeddingSystem<f64>, co: &DMatrix<f64>, cv: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let canon = |c: &DMatrix<f64>| {
        let e = (c.transpose() * &sys.fock * c).symmetric_eigen();
        (c * &e.eigenvectors, e.eigenvalues)
    };
    let (co, eo) = canon(co);
    let (cv, ev) = canon(cv);
    let (no, nv) = (co.ncols(), cv.ncols());
    let n = sys.n_basis();
    // (pq|rs) over arbitrary orbital columns by direct summation
    let mo = |a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize, c: &DMatrix<f64>, k: usize, d: &DMatrix<f64>, l: usize| {
        let mut s = 0.0;
        for p in 0..n {
            for q in 0..n {
                let x = a[(p, i)] * b[(q, j)];
                if x == 0.0 {
                    continue;
                }
                for r in 0..n {
                    for t in 0..n {
                        s += x * c[(r, k)] * d[(t, l)] * sys.eri[((p * n + q) * n + r) * n + t];
                    }
                }
            }
        }
        s
    };
    // spin orbitals: index 2k + spin
    let nso_o = 2 * no;
    let nso_v = 2 * nv;
    let mut t = vec![0.0; nso_o * nso_o * nso_v * nso_v];
    let idx = |i: usize, j: usize, a: usize, b: usize| ((i * nso_o + j) * nso_v + a) * nso_v + b;
    for i in 0..nso_o {
        for j in 0..nso_o {
            for a in 0..nso_v {
                for b in 0..nso_v {
                    // ⟨ij|ab⟩ = (ia|jb) with spin deltas
                    let g = |i: usize, j: usize, a: usize, b: usize| {
                        if i % 2 != a % 2 || j % 2 != b % 2 {
                            0.0
                        } else {
                            mo(&co, i / 2, &cv, a / 2, &co, j / 2, &cv, b / 2)
                        }
                    };
                    let anti = g(i, j, a, b) - g(i, j, b, a);
                    let den = eo[i / 2] + eo[j / 2] - ev[a / 2] - ev[b / 2];
                    t[idx(i, j, a, b)] = anti / den;
                }
            }
        }
    }
    let mut dv = DMatrix::zeros(nv, nv);
    for a in 0..nso_v {
        for b in 0..nso_v {
            if a % 2 != b % 2 {
                continue;
            }
            let mut s = 0.0;
            for i in 0..nso_o {
                for j in 0..nso_o {
                    for c in 0..nso_v {
                        s += t[idx(i, j, a, c)] * t[idx(i, j, b, c)];
                    }
                }
            }
            dv[(a / 2, b / 2)] += 0.5 * s;
        }
    }
    let mut dq = DMatrix::identity(no, no) * 2.0;
    for i in 0..nso_o {
        for j in 0..nso_o {
            if i % 2 != j % 2 {
                continue;
            }
            let mut s = 0.0;
            for k in 0..nso_o {
                for a in 0..nso_v {
                    for b in 0..nso_v {
                        s += t[idx(i, k, a, b)] * t[idx(j, k, a, b)];
                    }
                }
            }
            dq[(i / 2, j / 2)] -= 0.5 * s;
        }
    }
    (&co * dq * co.transpose(), &cv * dv * cv.transpose())
}

#[test]
fn natural_orbital_occupations_match_dense_mp2_oracle() {
    let sys = system("h6_chain");
    let spec = FragmentSpec::per_atom(&sys.local.atoms).unwrap();
    let eta = 1e-5;
    let clusters = build_clusters(&sys, &spec, eta).unwrap();
    for (group, cl) in spec.groups.iter().zip(&clusters) {
        let dmet = schmidt_bath(&sys.density, group).unwrap();
        let k = dmet.cluster_columns(sys.n_basis());
        let e = (k.transpose() * &sys.density * &k).symmetric_eigen();
        let pick = |want_occ: bool| {
            let cols: Vec<usize> = (0..k.ncols()).filter(|&i| (e.eigenvalues[i] > 1.0) == want_occ).collect();
            &k * DMatrix::from_fn(k.ncols(), cols.len(), |i, j| e.eigenvectors[(i, cols[j])])
        };
        let (c_occ, c_vir) = (pick(true), pick(false));
        let cat = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
            m.columns_mut(0, a.ncols()).copy_from(a);
            m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
            m
        };
        // virtual natural orbitals: cluster occupied, all virtuals
        let (_, dv) = oracle_mp2_blocks(&sys, &c_occ, &cat(&c_vir, &dmet.env_vir));
        let mut occ_v: Vec<f64> = (dmet.env_vir.transpose() * &dv * &dmet.env_vir)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        occ_v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let (dq, _) = oracle_mp2_blocks(&sys, &cat(&c_occ, &dmet.env_occ), &c_vir);
        let mut occ_o: Vec<f64> = (dmet.env_occ.transpose() * &dq * &dmet.env_occ)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        occ_o.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(occ_v.len(), cl.vir_bno_occupations.len());
        for (a, b) in occ_v.iter().zip(&cl.vir_bno_occupations) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        for (a, b) in occ_o.iter().zip(&cl.occ_bno_occupations) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert_eq!(occ_v.iter().filter(|&&x| x >= eta).count(), cl.n_bno_vir);
        assert_eq!(occ_o.iter().filter(|&&x| x <= 2.0 - eta).count(), cl.n_bno_occ);
    }
}

#[test]
fn single_precision_embedding_tracks_double() {
    let mf = bundle("h4_chain");
    let mf32: MeanFieldBundle<f32> = fragci::hamio::parse_meanfield_bundle(
        &fragci::hamio::meanfield_bundle_string(&mf),
        &fragci::hamio::BundleTolerances {
            orthonormality: 1e-5,
            electron_count: 1e-5,
            idempotency: 1e-4,
        },
    )
    .unwrap();
    let sys = EmbeddingSystem::from_bundle(&mf32).unwrap();
    assert!((sys.e_hf as f64 - mf.reference.e_hf.unwrap()).abs() < 1e-4);
}
