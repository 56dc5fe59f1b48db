use nalgebra::{DMatrix, DVector};

use super::{coulomb_exchange, transform_eri, EwfError};
use crate::hamio::MeanFieldBundle;
use crate::scalar::Real;

/// Largest accepted overlap condition number.
pub const MAX_CONDITION: f64 = 1e10;

/// Orthonormal localized orbitals `T` (AO rows) with the atom of each.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalBasis<T> {
    pub t: DMatrix<T>,
    pub atoms: Vec<usize>,
}

/// Symmetric orthogonalization `T = S^{-1/2}`; orbital `i` inherits the atom
/// label of AO `i`.
pub fn orthogonalize_localize<T: Real>(mf: &MeanFieldBundle<T>) -> Result<LocalBasis<T>, EwfError> {
    let eig = mf.overlap.clone().symmetric_eigen();
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    let cond = if lo > T::zero() { (hi / lo).to_f64_lossy() } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(EwfError::IllConditioned { cond });
    }
    let inv_sqrt = eig.eigenvalues.map(|x| T::one() / x.sqrt());
    let t = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    Ok(LocalBasis {
        t: (&t + t.transpose()) * T::lit(0.5),
        atoms: mf.ao_atoms.clone(),
    })
}

/// The full system expressed in the local basis.
#[derive(Clone, Debug)]
pub struct EmbeddingSystem<T> {
    pub local: LocalBasis<T>,
    pub n_elec: usize,
    pub e_nuc: T,
    /// Spin-summed density.
    pub density: DMatrix<T>,
    pub hcore: DMatrix<T>,
    /// Row-major `(pr|qs)`.
    pub eri: Vec<T>,
    /// `h + J[D] − ½K[D]`.
    pub fock: DMatrix<T>,
    /// `E_nuc + ½ tr(D (h + F))`.
    pub e_hf: T,
}

impl<T: Real> EmbeddingSystem<T> {
    pub fn from_bundle(mf: &MeanFieldBundle<T>) -> Result<Self, EwfError> {
        let local = orthogonalize_localize(mf)?;
        let t = &local.t;
        let st = &mf.overlap * t;
        let density = sym(&(st.transpose() * &mf.density * &st));
        let eig = density.clone().symmetric_eigen();
        let slack = crate::scalar::tol::<T>(1e-8).to_f64_lossy() * mf.n_ao as f64 * 16.0;
        for &x in eig.eigenvalues.iter() {
            let v = x.to_f64_lossy();
            if !(-slack..=2.0 + slack).contains(&v) {
                return Err(EwfError::NonIdempotent {
                    context: "local density",
                    eigenvalue: v,
                });
            }
        }
        let hcore = sym(&(t.transpose() * &mf.hcore * t));
        let n = mf.n_ao;
        let eri = transform_eri(&mf.eri, n, t);
        let (j, k) = coulomb_exchange(&eri, n, &density);
        let fock = sym(&(&hcore + j - k * T::lit(0.5)));
        let e_hf = mf.e_nuc + (density.component_mul(&(&hcore + &fock))).sum() * T::lit(0.5);
        Ok(Self {
            local,
            n_elec: mf.n_elec,
            e_nuc: mf.e_nuc,
            density,
            hcore,
            eri,
            fock,
            e_hf,
        })
    }

    pub fn n_basis(&self) -> usize {
        self.hcore.nrows()
    }

    /// Fock-diagonal rotation of the span of `c`, ascending energies.
    pub(crate) fn semicanonicalize(&self, c: &DMatrix<T>) -> (DMatrix<T>, DVector<T>) {
        if c.ncols() == 0 {
            return (c.clone(), DVector::zeros(0));
        }
        let f = sym(&(c.transpose() * &self.fock * c));
        let eig = f.symmetric_eigen();
        let mut order: Vec<usize> = (0..c.ncols()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let v = DMatrix::from_fn(c.ncols(), c.ncols(), |i, k| eig.eigenvectors[(i, order[k])]);
        let e = DVector::from_fn(c.ncols(), |k, _| eig.eigenvalues[order[k]]);
        (c * v, e)
    }
}

pub(crate) fn sym<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Löwdin re-orthonormalization of the columns of `c`.
pub(crate) fn lowdin<T: Real>(c: &DMatrix<T>) -> DMatrix<T> {
    if c.ncols() == 0 {
        return c.clone();
    }
    let s = sym(&(c.transpose() * c));
    let eig = eigh(s);
    let inv = eig.eigenvalues.map(|x| T::one() / x.sqrt());
    c * (&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose())
}

/// Orthonormal basis of the orthogonal complement of `span(c)` inside the
/// coordinate subspace `rows`, embedded into `n` dimensions.
pub(crate) fn complement<T: Real>(n: usize, rows: &[usize], c: &DMatrix<T>) -> DMatrix<T> {
    let k = rows.len();
    let ce = DMatrix::from_fn(k, c.ncols(), |i, j| c[(rows[i], j)]);
    let proj = DMatrix::<T>::identity(k, k) - &ce * ce.transpose();
    let eig = eigh(sym(&proj));
    let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > T::lit(0.5)).collect();
    let mut out = DMatrix::zeros(n, keep.len());
    for (col, &kk) in keep.iter().enumerate() {
        for (i, &r) in rows.iter().enumerate() {
            out[(r, col)] = eig.eigenvectors[(i, kk)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowdin_of_orthonormal_columns_is_identity_map() {
        let c = DMatrix::<f64>::identity(4, 2);
        assert!((lowdin(&c) - &c).amax() < 1e-15);
    }

    #[test]
    fn complement_spans_the_rest() {
        let v = DMatrix::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
        let z = complement(3, &[0, 1, 2], &v);
        assert_eq!(z.ncols(), 2);
        assert!((z.transpose() * &v).amax() < 1e-14);
        assert!((z.transpose() * &z - DMatrix::identity(2, 2)).amax() < 1e-14);
    }
}

/// Symmetric eigendecomposition that accepts empty matrices.
pub(crate) fn eigh<T: Real>(m: DMatrix<T>) -> nalgebra::SymmetricEigen<T, nalgebra::Dyn> {
    if m.nrows() == 0 {
        return nalgebra::SymmetricEigen {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        };
    }
    m.symmetric_eigen()
}
