use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{CiError, CiVector};
use crate::detcore::{Determinant, OccupationVector};
use crate::hamio::ClusterHamiltonian;
use crate::scalar::Real;

/// Spin-summed one-body density `γ_pr = Σ_σ ⟨a†_pσ a_rσ⟩`.
pub type Rdm1<T> = DMatrix<T>;

/// Spin-summed two-body density `Γ_prqs = Σ_στ ⟨a†_pσ a†_qτ a_sτ a_rσ⟩`,
/// indexed like `(pr|qs)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rdm2<T> {
    norb: usize,
    data: Vec<T>,
}

impl<T: Real> Rdm2<T> {
    pub fn zeros(norb: usize) -> Self {
        Self {
            norb,
            data: vec![T::zero(); norb.pow(4)],
        }
    }

    pub fn from_vec(norb: usize, data: Vec<T>) -> Result<Self, CiError> {
        if data.len() != norb.pow(4) {
            return Err(CiError::Shape(format!(
                "{} entries for a {norb}-orbital 2-RDM",
                data.len()
            )));
        }
        Ok(Self { norb, data })
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    #[inline]
    fn idx(&self, p: usize, r: usize, q: usize, s: usize) -> usize {
        ((p * self.norb + r) * self.norb + q) * self.norb + s
    }

    #[inline]
    pub fn get(&self, p: usize, r: usize, q: usize, s: usize) -> T {
        self.data[self.idx(p, r, q, s)]
    }

    #[inline]
    pub fn add(&mut self, p: usize, r: usize, q: usize, s: usize, v: T) {
        let i = self.idx(p, r, q, s);
        self.data[i] += v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// `Σ_q Γ_prqq`, which equals `(N − 1) γ_pr`.
    pub fn partial_trace(&self) -> DMatrix<T> {
        let n = self.norb;
        DMatrix::from_fn(n, n, |p, r| (0..n).map(|q| self.get(p, r, q, q)).sum())
    }
}

/// Number of fixed-size chunks the accumulation is split into; independent
/// of the thread count so the reduction order never changes.
const CHUNKS: usize = 64;

/// An intermediate (N−1 or N−2 electron) string reached from a determinant
/// by annihilation, with the annihilated orbitals and signed amplitude.
struct Entry<T> {
    key: (u64, u64),
    first: u8,
    second: u8,
    amp: T,
}

#[inline]
fn below_parity(mask: u64, p: usize) -> bool {
    (mask & ((1u64 << p) - 1)).count_ones() % 2 == 1
}

/// Accumulates `Σ_K conj(x_K(e1)) x_K(e2)` over groups sharing a key.
fn accumulate_groups<T: Real, F>(mut entries: Vec<Entry<T>>, out_len: usize, place: F) -> Vec<T>
where
    F: Fn(&Entry<T>, &Entry<T>) -> usize + Sync,
{
    entries.sort_by_key(|e| e.key);
    let mut bounds = vec![0];
    for i in 1..entries.len() {
        if entries[i].key != entries[i - 1].key {
            bounds.push(i);
        }
    }
    bounds.push(entries.len());
    let groups: Vec<(usize, usize)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();
    let per = groups.len().div_ceil(CHUNKS).max(1);
    let partial: Vec<Vec<T>> = groups
        .par_chunks(per)
        .map(|chunk| {
            let mut acc = vec![T::zero(); out_len];
            for &(lo, hi) in chunk {
                let g = &entries[lo..hi];
                for e1 in g {
                    for e2 in g {
                        acc[place(e1, e2)] += e1.amp * e2.amp;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![T::zero(); out_len];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

fn one_body<T: Real>(v: &CiVector<T>) -> Rdm1<T> {
    let n = v.basis.sector().norb;
    let mut gamma = vec![T::zero(); n * n];
    for spin in 0..2 {
        let mut entries = Vec::new();
        for (d, c) in v.iter() {
            let (own, other) = if spin == 0 { (d.alpha, d.beta) } else { (d.beta, d.alpha) };
            for r in (0..n).filter(|&r| own >> r & 1 == 1) {
                let amp = if below_parity(own, r) { -c } else { c };
                entries.push(Entry {
                    key: (own ^ (1 << r), other),
                    first: r as u8,
                    second: 0,
                    amp,
                });
            }
        }
        let g = accumulate_groups(entries, n * n, |a, b| a.first as usize * n + b.first as usize);
        for (t, x) in gamma.iter_mut().zip(g) {
            *t += x;
        }
    }
    DMatrix::from_row_slice(n, n, &gamma)
}

/// Two-electron annihilations `a_s a_r` within one spin string.
fn same_spin_entries<T: Real>(v: &CiVector<T>, beta: bool) -> Vec<Entry<T>> {
    let n = v.basis.sector().norb;
    let mut entries = Vec::new();
    for (d, c) in v.iter() {
        let (own, other) = if beta { (d.beta, d.alpha) } else { (d.alpha, d.beta) };
        for r in (0..n).filter(|&r| own >> r & 1 == 1) {
            let m1 = own ^ (1 << r);
            let s1 = below_parity(own, r);
            for s in (0..n).filter(|&s| m1 >> s & 1 == 1) {
                let neg = s1 ^ below_parity(m1, s);
                entries.push(Entry {
                    key: (m1 ^ (1 << s), other),
                    first: r as u8,
                    second: s as u8,
                    amp: if neg { -c } else { c },
                });
            }
        }
    }
    entries
}

/// `a_sβ a_rα`; the alpha-count factor from passing the beta operator over
/// the alpha string is common to every determinant and drops out.
fn mixed_spin_entries<T: Real>(v: &CiVector<T>) -> Vec<Entry<T>> {
    let n = v.basis.sector().norb;
    let mut entries = Vec::new();
    for (d, c) in v.iter() {
        for r in (0..n).filter(|&r| d.alpha >> r & 1 == 1) {
            let sr = below_parity(d.alpha, r);
            for s in (0..n).filter(|&s| d.beta >> s & 1 == 1) {
                let neg = sr ^ below_parity(d.beta, s);
                entries.push(Entry {
                    key: (d.alpha ^ (1 << r), d.beta ^ (1 << s)),
                    first: r as u8,
                    second: s as u8,
                    amp: if neg { -c } else { c },
                });
            }
        }
    }
    entries
}

fn two_body<T: Real>(v: &CiVector<T>) -> Rdm2<T> {
    let n = v.basis.sector().norb;
    let n4 = n.pow(4);
    // bra entry (p, q) from a_q a_p, ket entry (r, s) from a_s a_r
    let place = move |bra: &Entry<T>, ket: &Entry<T>| {
        let (p, q) = (bra.first as usize, bra.second as usize);
        let (r, s) = (ket.first as usize, ket.second as usize);
        ((p * n + r) * n + q) * n + s
    };
    let mut data = vec![T::zero(); n4];
    for beta in [false, true] {
        let part = accumulate_groups(same_spin_entries(v, beta), n4, place);
        for (t, x) in data.iter_mut().zip(part) {
            *t += x;
        }
    }
    let ab = accumulate_groups(mixed_spin_entries(v), n4, place);
    // alpha-beta block at (p r q s), beta-alpha block is its (q s p r) image
    for p in 0..n {
        for r in 0..n {
            for q in 0..n {
                for s in 0..n {
                    let i = ((p * n + r) * n + q) * n + s;
                    let j = ((q * n + s) * n + p) * n + r;
                    data[i] += ab[i] + ab[j];
                }
            }
        }
    }
    Rdm2 { norb: n, data }
}

/// Spin-summed 1- and 2-RDMs of a CI vector.
pub fn compute_rdms<T: Real>(v: &CiVector<T>) -> (Rdm1<T>, Rdm2<T>) {
    (one_body(v), two_body(v))
}

/// Diagonal spin-orbital occupations `n_pσ = Σ_i |c_i|² x_pσ(i)`.
pub fn occupations<T: Real>(v: &CiVector<T>) -> OccupationVector {
    let n = v.basis.sector().norb;
    let dets: Vec<(&Determinant, f64)> = v
        .iter()
        .map(|(d, c)| (d, (c * c).to_f64_lossy()))
        .collect();
    let mut occ = OccupationVector::zeros(n);
    for (d, w) in dets {
        for p in 0..n {
            if d.alpha >> p & 1 == 1 {
                occ.alpha[p] += w;
            }
            if d.beta >> p & 1 == 1 {
                occ.beta[p] += w;
            }
        }
    }
    occ
}

/// `E0 + Σ h_pr γ_pr + ½ Σ (pr|qs) Γ_prqs`.
pub fn energy_from_rdms<T: Real>(
    ham: &ClusterHamiltonian<T>,
    gamma: &Rdm1<T>,
    gamma2: &Rdm2<T>,
) -> Result<T, CiError> {
    let n = ham.norb();
    if gamma.nrows() != n || gamma.ncols() != n || gamma2.norb() != n {
        return Err(CiError::Shape(format!(
            "RDMs over {}x{} / {} orbitals for a {n}-orbital Hamiltonian",
            gamma.nrows(),
            gamma.ncols(),
            gamma2.norb()
        )));
    }
    let mut e1 = T::zero();
    for p in 0..n {
        for r in 0..n {
            e1 += ham.h_elem(p, r) * gamma[(p, r)];
        }
    }
    let mut e2 = T::zero();
    for (g, v) in gamma2.as_slice().iter().zip(ham.eri_slice()) {
        e2 += *g * *v;
    }
    Ok(ham.e0() + e1 + e2 * T::lit(0.5))
}
