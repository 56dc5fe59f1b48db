//! Brute-force reference implementations for tests.
//!
//! Everything here works on raw Jordan–Wigner occupation bitstrings and
//! dense matrices, sharing no code with the production kernels beyond the
//! integral container. Spin-orbital `p` of alpha is qubit `p`, of beta is
//! qubit `M + p`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::hamio::ClusterHamiltonian;

/// Applies `a_k` to a Fock state, returning the sign and the new state.
pub fn annihilate(state: u128, k: usize) -> Option<(f64, u128)> {
    if state >> k & 1 == 0 {
        return None;
    }
    let below = (state & ((1u128 << k) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, state ^ (1u128 << k)))
}

/// Applies `a†_k` to a Fock state.
pub fn create(state: u128, k: usize) -> Option<(f64, u128)> {
    if state >> k & 1 == 1 {
        return None;
    }
    let below = (state & ((1u128 << k) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, state | (1u128 << k)))
}

/// Applies a product of ladder operators, rightmost first. Each entry is
/// `(spin-orbital, is_creation)` in written order.
pub fn apply_string(state: u128, ops: &[(usize, bool)]) -> Option<(f64, u128)> {
    let mut s = state;
    let mut sign = 1.0;
    for &(k, dag) in ops.iter().rev() {
        let (f, t) = if dag { create(s, k)? } else { annihilate(s, k)? };
        sign *= f;
        s = t;
    }
    Some((sign, s))
}

/// Sector basis in the same order as `detcore::enumerate_space`, built by
/// brute-force filtering of every `2M`-bit integer.
pub fn sector_basis(norb: usize, n_alpha: usize, n_beta: usize) -> Vec<u128> {
    let m = (1u128 << norb) - 1;
    let mut v: Vec<u128> = (0..(1u128 << (2 * norb)))
        .filter(|&s| {
            (s & m).count_ones() as usize == n_alpha
                && (s >> norb).count_ones() as usize == n_beta
        })
        .collect();
    v.sort_by_key(|&s| (s & m, s >> norb));
    v
}

/// Dense Hamiltonian over the sector from second-quantized operator
/// application, `Ĥ = E0 + Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ`.
pub fn fock_sector_matrix(ham: &ClusterHamiltonian<f64>) -> (Vec<u128>, DMatrix<f64>) {
    let n = ham.norb();
    let basis = sector_basis(n, ham.n_alpha(), ham.n_beta());
    let index: HashMap<u128, usize> = basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let d = basis.len();
    let mut h = DMatrix::zeros(d, d);
    let so = |p: usize, spin: usize| p + spin * n;
    for (j, &ket) in basis.iter().enumerate() {
        h[(j, j)] += ham.e0();
        for sg in 0..2 {
            for p in 0..n {
                for q in 0..n {
                    let v = ham.h_elem(p, q);
                    if v == 0.0 {
                        continue;
                    }
                    if let Some((f, bra)) = apply_string(ket, &[(so(p, sg), true), (so(q, sg), false)]) {
                        h[(index[&bra], j)] += f * v;
                    }
                }
            }
        }
        for sg in 0..2 {
            for tg in 0..2 {
                for p in 0..n {
                    for q in 0..n {
                        for r in 0..n {
                            for s in 0..n {
                                let v = ham.eri(p, q, r, s);
                                if v == 0.0 {
                                    continue;
                                }
                                let ops = [
                                    (so(p, sg), true),
                                    (so(r, tg), true),
                                    (so(s, tg), false),
                                    (so(q, sg), false),
                                ];
                                if let Some((f, bra)) = apply_string(ket, &ops) {
                                    h[(index[&bra], j)] += 0.5 * f * v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (basis, h)
}

/// Lowest eigenpair of a dense symmetric matrix, with the largest-magnitude
/// component made positive.
pub fn dense_ground_state(h: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = h.clone().symmetric_eigen();
    let (k, &e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    let mut v = eig.eigenvectors.column(k).into_owned();
    let imax = v.iamax();
    if v[imax] < 0.0 {
        v.neg_mut();
    }
    (e, v)
}

/// Spin-summed 1- and 2-RDMs of a sector vector from explicit operator
/// strings: `γ_pr = Σ ⟨a†_pσ a_rσ⟩`, `Γ_prqs = Σ ⟨a†_pσ a†_qτ a_sτ a_rσ⟩`.
pub fn brute_force_rdms(
    norb: usize,
    basis: &[u128],
    v: &[f64],
) -> (DMatrix<f64>, Vec<f64>) {
    let n = norb;
    let index: HashMap<u128, usize> = basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let expect = |ops: &[(usize, bool)]| -> f64 {
        let mut acc = 0.0;
        for (j, &ket) in basis.iter().enumerate() {
            if let Some((f, bra)) = apply_string(ket, ops) {
                if let Some(&i) = index.get(&bra) {
                    acc += v[i] * f * v[j];
                }
            }
        }
        acc
    };
    let so = |p: usize, spin: usize| p + spin * n;
    let mut g1 = DMatrix::zeros(n, n);
    for p in 0..n {
        for r in 0..n {
            for sg in 0..2 {
                g1[(p, r)] += expect(&[(so(p, sg), true), (so(r, sg), false)]);
            }
        }
    }
    let mut g2 = vec![0.0; n.pow(4)];
    for p in 0..n {
        for r in 0..n {
            for q in 0..n {
                for s in 0..n {
                    let mut acc = 0.0;
                    for sg in 0..2 {
                        for tg in 0..2 {
                            acc += expect(&[
                                (so(p, sg), true),
                                (so(q, tg), true),
                                (so(s, tg), false),
                                (so(r, sg), false),
                            ]);
                        }
                    }
                    g2[((p * n + r) * n + q) * n + s] = acc;
                }
            }
        }
    }
    (g1, g2)
}

/// Random Hamiltonian with symmetric `h` and eight-fold symmetric `eri`.
pub fn random_hamiltonian<R: Rng>(
    rng: &mut R,
    norb: usize,
    n_alpha: usize,
    n_beta: usize,
) -> ClusterHamiltonian<f64> {
    let mut ham = ClusterHamiltonian::zeros(norb, n_alpha, n_beta).unwrap();
    ham.set_e0(rng.random_range(-1.0..1.0));
    for p in 0..norb {
        for r in 0..=p {
            let diag = if p == r { -2.0 + 0.5 * p as f64 } else { 0.0 };
            ham.set_h(p, r, diag + rng.random_range(-0.3..0.3));
        }
    }
    for p in 0..norb {
        for r in 0..=p {
            for q in 0..norb {
                for s in 0..=q {
                    if (q, s) > (p, r) {
                        continue;
                    }
                    let base = if p == r && q == s { 0.5 } else { 0.0 };
                    ham.set_eri(p, r, q, s, base + rng.random_range(-0.1..0.1));
                }
            }
        }
    }
    ham
}

/// MP2 correlation energy from the antisymmetrized spin-orbital formula
/// `¼ Σ |⟨ij||ab⟩|² / (ε_i + ε_j − ε_a − ε_b)` over a closed-shell reference
/// with `n_occ` doubly occupied orbitals.
pub fn spin_orbital_mp2(ham: &ClusterHamiltonian<f64>, eps: &[f64], n_occ: usize) -> f64 {
    let n = ham.norb();
    // spin-orbital k: spatial k / 2, spin k % 2
    let nso = 2 * n;
    let occ: Vec<usize> = (0..nso).filter(|k| k / 2 < n_occ).collect();
    let vir: Vec<usize> = (0..nso).filter(|k| k / 2 >= n_occ).collect();
    // ⟨pq|rs⟩ = (pr|qs) δ_spin(p,r) δ_spin(q,s)
    let phys = |p: usize, q: usize, r: usize, s: usize| -> f64 {
        if p % 2 != r % 2 || q % 2 != s % 2 {
            0.0
        } else {
            ham.eri(p / 2, r / 2, q / 2, s / 2)
        }
    };
    let mut e = 0.0;
    for &i in &occ {
        for &j in &occ {
            for &a in &vir {
                for &b in &vir {
                    let anti = phys(i, j, a, b) - phys(i, j, b, a);
                    let den = eps[i / 2] + eps[j / 2] - eps[a / 2] - eps[b / 2];
                    e += 0.25 * anti * anti / den;
                }
            }
        }
    }
    e
}
