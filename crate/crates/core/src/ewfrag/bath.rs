use nalgebra::DMatrix;

use super::local::{complement, eigh, sym};
use super::EwfError;
use crate::scalar::Real;

/// Singular values of the environment–fragment density block at or below
/// this are not bath.
pub const BATH_SINGULAR_CUTOFF: f64 = 1e-8;

/// Largest distance of an environment density eigenvalue from 0 or 2.
pub const ENV_IDEMPOTENCY_TOL: f64 = 1e-4;

/// Fragment, its Schmidt bath and the unentangled environment, as columns
/// over the local basis.
#[derive(Clone, Debug)]
pub struct DmetSpace<T> {
    pub fragment: Vec<usize>,
    pub bath: DMatrix<T>,
    pub singular_values: Vec<T>,
    pub env_occ: DMatrix<T>,
    pub env_vir: DMatrix<T>,
}

impl<T: Real> DmetSpace<T> {
    /// Fragment unit vectors followed by the bath.
    pub fn cluster_columns(&self, n: usize) -> DMatrix<T> {
        let nf = self.fragment.len();
        let mut c = DMatrix::zeros(n, nf + self.bath.ncols());
        for (k, &i) in self.fragment.iter().enumerate() {
            c[(i, k)] = T::one();
        }
        c.columns_mut(nf, self.bath.ncols()).copy_from(&self.bath);
        c
    }
}

/// Schmidt decomposition of the mean-field state with respect to one
/// fragment.
///
/// The bath is spanned by the left singular vectors of the
/// environment–fragment block of `density`; the rest of the environment is
/// split by its projected density into doubly occupied and empty orbitals.
pub fn schmidt_bath<T: Real>(density: &DMatrix<T>, fragment: &[usize]) -> Result<DmetSpace<T>, EwfError> {
    let n = density.nrows();
    let mut is_frag = vec![false; n];
    for &i in fragment {
        is_frag[i] = true;
    }
    let env: Vec<usize> = (0..n).filter(|&i| !is_frag[i]).collect();
    let ne = env.len();
    if ne == 0 {
        return Ok(DmetSpace {
            fragment: fragment.to_vec(),
            bath: DMatrix::zeros(n, 0),
            singular_values: Vec::new(),
            env_occ: DMatrix::zeros(n, 0),
            env_vir: DMatrix::zeros(n, 0),
        });
    }
    let block = DMatrix::from_fn(ne, fragment.len(), |e, f| density[(env[e], fragment[f])]);
    let svd = block.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut picks: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > T::lit(BATH_SINGULAR_CUTOFF))
        .collect();
    picks.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut bath = DMatrix::zeros(n, picks.len());
    for (col, &k) in picks.iter().enumerate() {
        for (e, &r) in env.iter().enumerate() {
            bath[(r, col)] = u[(e, k)];
        }
    }
    let singular_values = picks.iter().map(|&k| svd.singular_values[k]).collect();

    let z = complement(n, &env, &bath);
    let dz = sym(&(z.transpose() * density * &z));
    let eig = eigh(dz);
    let mut occ = Vec::new();
    let mut vir = Vec::new();
    for k in 0..z.ncols() {
        let x = eig.eigenvalues[k].to_f64_lossy();
        let dist = x.abs().min((2.0 - x).abs());
        if dist > ENV_IDEMPOTENCY_TOL {
            return Err(EwfError::NonIdempotent {
                context: "environment density",
                eigenvalue: x,
            });
        }
        if x > 1.0 {
            occ.push(k);
        } else {
            vir.push(k);
        }
    }
    let pick = |ks: &[usize]| {
        let v = DMatrix::from_fn(z.ncols(), ks.len(), |i, j| eig.eigenvectors[(i, ks[j])]);
        &z * v
    };
    Ok(DmetSpace {
        fragment: fragment.to_vec(),
        bath,
        singular_values,
        env_occ: pick(&occ),
        env_vir: pick(&vir),
    })
}
