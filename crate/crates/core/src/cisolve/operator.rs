use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{CiError, SubspaceBasis};
use crate::detcore::{
    diagonal_element, single_spin_element, slater_condon_unchecked, string_parity, Determinant,
};
use crate::hamio::ClusterHamiltonian;
use crate::scalar::Real;

/// A real symmetric operator that can be applied to vectors.
pub trait HamiltonianOperator<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn diagonal(&self) -> Vec<T>;

    /// `y = H x`.
    fn apply(&self, x: &[T], y: &mut [T]);

    fn to_dense(&self) -> DMatrix<T> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            self.apply(&e, &mut col);
            e[j] = T::zero();
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

/// Compressed sparse rows of a symmetric matrix, both triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Real> SparseSymMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<(u32, T)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entry `(i, j)`, or zero when structurally absent.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&(j as u32)) {
            Ok(k) => self.vals[lo + k],
            Err(_) => T::zero(),
        }
    }

    pub fn is_stored(&self, i: usize, j: usize) -> bool {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].binary_search(&(j as u32)).is_ok()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &v)| (c as usize, v))
    }
}

impl<T: Real> HamiltonianOperator<T> for SparseSymMatrix<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        });
    }

    fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Same-spin double excitations of `mask`: targets only.
fn double_targets(mask: u64, norb: usize, out: &mut Vec<u64>) {
    let empty = !mask & crate::detcore::low_mask(norb);
    let occ: Vec<usize> = (0..norb).filter(|&p| mask >> p & 1 == 1).collect();
    let vir: Vec<usize> = (0..norb).filter(|&p| empty >> p & 1 == 1).collect();
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    out.push(mask ^ (1 << i) ^ (1 << j) ^ (1 << a) ^ (1 << b));
                }
            }
        }
    }
}

fn single_targets(mask: u64, norb: usize, out: &mut Vec<u64>) {
    let empty = !mask & crate::detcore::low_mask(norb);
    for i in (0..norb).filter(|&p| mask >> p & 1 == 1) {
        for a in (0..norb).filter(|&p| empty >> p & 1 == 1) {
            out.push(mask ^ (1 << i) ^ (1 << a));
        }
    }
}

/// Every determinant connected to `d` by at most a double excitation.
fn connected_candidates(d: &Determinant, norb: usize) -> Vec<Determinant> {
    let mut sa = Vec::new();
    let mut sb = Vec::new();
    let mut da = Vec::new();
    let mut db = Vec::new();
    single_targets(d.alpha, norb, &mut sa);
    single_targets(d.beta, norb, &mut sb);
    double_targets(d.alpha, norb, &mut da);
    double_targets(d.beta, norb, &mut db);
    let mut out = Vec::with_capacity(1 + sa.len() + sb.len() + da.len() + db.len() + sa.len() * sb.len());
    out.push(*d);
    out.extend(sa.iter().chain(&da).map(|&a| Determinant::new(a, d.beta)));
    out.extend(sb.iter().chain(&db).map(|&b| Determinant::new(d.alpha, b)));
    for &a in &sa {
        for &b in &sb {
            out.push(Determinant::new(a, b));
        }
    }
    out
}

#[inline]
fn within_double(a: &Determinant, b: &Determinant) -> bool {
    (a.alpha ^ b.alpha).count_ones() + (a.beta ^ b.beta).count_ones() <= 4
}

/// Projected Hamiltonian `P_S Ĥ P_S` as a sparse symmetric matrix. Every
/// pair within a double excitation is stored, including exact zeros.
pub fn build_projected_hamiltonian<T: Real>(
    ham: &ClusterHamiltonian<T>,
    basis: &SubspaceBasis,
) -> Result<SparseSymMatrix<T>, CiError> {
    let s = basis.sector();
    if s.norb != ham.norb() || s.n_alpha != ham.n_alpha() || s.n_beta != ham.n_beta() {
        return Err(CiError::Sector(format!(
            "basis sector ({}, {}, {}) vs Hamiltonian ({}, {}, {})",
            s.norb,
            s.n_alpha,
            s.n_beta,
            ham.norb(),
            ham.n_alpha(),
            ham.n_beta()
        )));
    }
    let dets = basis.dets();
    let d = dets.len();
    let m = s.norb;
    let (na, nb) = (s.n_alpha as u128, s.n_beta as u128);
    let vir = |n: u128| m as u128 - n;
    let c2 = |x: u128| x * x.saturating_sub(1) / 2;
    let n_candidates = 1
        + na * vir(na)
        + nb * vir(nb)
        + c2(na) * c2(vir(na))
        + c2(nb) * c2(vir(nb))
        + na * vir(na) * nb * vir(nb);
    let pairwise = (d as u128) <= n_candidates;
    let rows: Vec<Vec<(u32, T)>> = dets
        .par_iter()
        .map(|a| {
            let mut row: Vec<(u32, T)> = if pairwise {
                dets.iter()
                    .enumerate()
                    .filter(|(_, b)| within_double(a, b))
                    .map(|(j, b)| (j as u32, slater_condon_unchecked(ham, a, b)))
                    .collect()
            } else {
                connected_candidates(a, m)
                    .iter()
                    .filter_map(|b| {
                        basis
                            .index_of(b)
                            .map(|j| (j as u32, slater_condon_unchecked(ham, a, b)))
                    })
                    .collect()
            };
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect();
    Ok(SparseSymMatrix::from_rows(rows))
}

/// Matrix-free Hamiltonian over a product basis `A × B` of alpha and beta
/// strings, applied through per-spin string tables.
pub struct ProductHamiltonian<'a, T: Real> {
    ham: &'a ClusterHamiltonian<T>,
    nb: usize,
    /// Same-spin Hamiltonian rows over the alpha strings.
    ha: Vec<Vec<(u32, T)>>,
    hb: Vec<Vec<(u32, T)>>,
    /// `(j, p, q, sign)` with `⟨i|a†_p a_q|j⟩ = sign`, diagonal included.
    ea: Vec<Vec<(u32, u8, u8, T)>>,
    eb: Vec<Vec<(u32, u8, u8, T)>>,
    diag: Vec<T>,
}

fn spin_tables<T: Real>(
    ham: &ClusterHamiltonian<T>,
    strings: &[u64],
) -> (Vec<Vec<(u32, T)>>, Vec<Vec<(u32, u8, u8, T)>>) {
    let m = ham.norb();
    let find = |x: u64| strings.binary_search(&x).ok();
    strings
        .par_iter()
        .map(|&x| {
            let mut targets = vec![x];
            single_targets(x, m, &mut targets);
            double_targets(x, m, &mut targets);
            let mut h: Vec<(u32, T)> = targets
                .iter()
                .filter_map(|&y| find(y).map(|j| (j as u32, single_spin_element(ham, x, y))))
                .collect();
            h.sort_unstable_by_key(|e| e.0);
            let mut e = Vec::new();
            for p in (0..m).filter(|&p| x >> p & 1 == 1) {
                e.push((find(x).unwrap() as u32, p as u8, p as u8, T::one()));
                for q in (0..m).filter(|&q| x >> q & 1 == 0) {
                    let y = x ^ (1 << p) ^ (1 << q);
                    if let Some(j) = find(y) {
                        e.push((j as u32, p as u8, q as u8, T::lit(string_parity(y, q, p))));
                    }
                }
            }
            (h, e)
        })
        .unzip()
}

impl<'a, T: Real> ProductHamiltonian<'a, T> {
    /// Requires sorted, duplicate-free string lists.
    pub fn new(ham: &'a ClusterHamiltonian<T>, alphas: &[u64], betas: &[u64]) -> Self {
        let (ha, ea) = spin_tables(ham, alphas);
        let (hb, eb) = spin_tables(ham, betas);
        let diag = alphas
            .iter()
            .flat_map(|&a| betas.iter().map(move |&b| Determinant::new(a, b)))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|d| diagonal_element(ham, d))
            .collect();
        Self {
            ham,
            nb: betas.len(),
            ha,
            hb,
            ea,
            eb,
            diag,
        }
    }

    pub fn from_basis(ham: &'a ClusterHamiltonian<T>, basis: &SubspaceBasis) -> Option<Self> {
        basis.as_product().map(|(a, b)| Self::new(ham, &a, &b))
    }
}

impl<T: Real> HamiltonianOperator<T> for ProductHamiltonian<'_, T> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn diagonal(&self) -> Vec<T> {
        self.diag.clone()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let nb = self.nb;
        let e0 = self.ham.e0();
        let m = self.ham.norb();
        let eri = self.ham.eri_slice();
        y.par_chunks_mut(nb).enumerate().for_each(|(ia, yrow)| {
            for (ib, yi) in yrow.iter_mut().enumerate() {
                let mut acc = e0 * x[ia * nb + ib];
                for &(ja, v) in &self.ha[ia] {
                    acc += v * x[ja as usize * nb + ib];
                }
                for &(jb, v) in &self.hb[ib] {
                    acc += v * x[ia * nb + jb as usize];
                }
                for &(ja, p, q, s1) in &self.ea[ia] {
                    let base = (p as usize * m + q as usize) * m * m;
                    let xrow = &x[ja as usize * nb..(ja as usize + 1) * nb];
                    let mut inner = T::zero();
                    for &(jb, r, s, s2) in &self.eb[ib] {
                        inner += s2 * eri[base + r as usize * m + s as usize] * xrow[jb as usize];
                    }
                    acc += s1 * inner;
                }
                *yi = acc;
            }
        });
    }
}
