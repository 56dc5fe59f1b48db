use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::local::{eigh, lowdin, sym};
use super::{schmidt_bath, transform_eri4, DmetSpace, EmbeddingSystem, EwfError, FragmentSpec, ENV_IDEMPOTENCY_TOL};
use crate::scalar::Real;

/// Default natural-orbital occupation cutoff.
pub const DEFAULT_ETA: f64 = 1e-5;

const MIN_DENOMINATOR: f64 = 1e-8;

/// Fragment plus DMET bath plus retained bath natural orbitals.
#[derive(Clone, Debug)]
pub struct EwfCluster<T> {
    pub index: usize,
    pub label: String,
    pub fragment: Vec<usize>,
    /// Cluster orbitals over the local basis: `n_occ` occupied then virtual,
    /// each block Fock-diagonal in ascending energy.
    pub coeffs: DMatrix<T>,
    pub n_occ: usize,
    pub orbital_energies: DVector<T>,
    pub bath_singular_values: Vec<f64>,
    /// Occupations of all occupied environment natural orbitals, ascending;
    /// the first `n_bno_occ` were retained.
    pub occ_bno_occupations: Vec<f64>,
    /// Occupations of all virtual environment natural orbitals, descending;
    /// the first `n_bno_vir` were retained.
    pub vir_bno_occupations: Vec<f64>,
    pub n_bno_occ: usize,
    pub n_bno_vir: usize,
    pub frozen_occ: DMatrix<T>,
    pub frozen_vir: DMatrix<T>,
    /// `Cᵀ Π_F C`: orthogonal projector onto the fragment, cluster basis.
    pub projector: DMatrix<T>,
}

impl<T: Real> EwfCluster<T> {
    pub fn n_mo(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn n_bath(&self) -> usize {
        self.bath_singular_values.len()
    }

    pub fn n_elec(&self) -> usize {
        2 * self.n_occ
    }
}

fn columns<T: Real>(c: &DMatrix<T>, ks: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(c.nrows(), ks.len(), |i, j| c[(i, ks[j])])
}

fn hcat<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut c = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    c.columns_mut(0, a.ncols()).copy_from(a);
    c.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    c
}

/// Unrelaxed MP2 one-particle density blocks `(occupied, virtual)` for
/// semicanonical `co`/`cv`, spin-summed, occupied block including the
/// reference `2δ`.
fn mp2_density<T: Real>(
    sys: &EmbeddingSystem<T>,
    co: &DMatrix<T>,
    eo: &DVector<T>,
    cv: &DMatrix<T>,
    ev: &DVector<T>,
    fragment: usize,
) -> Result<(DMatrix<T>, DMatrix<T>), EwfError> {
    let (no, nv) = (co.ncols(), cv.ncols());
    let n = sys.n_basis();
    let ovov = transform_eri4(&sys.eri, n, [co, cv, co, cv]);
    let mut t = vec![T::zero(); no * no * nv * nv];
    for i in 0..no {
        for j in 0..no {
            for a in 0..nv {
                for b in 0..nv {
                    let den = eo[i] + eo[j] - ev[a] - ev[b];
                    if den.abs().to_f64_lossy() < MIN_DENOMINATOR {
                        return Err(EwfError::Degenerate {
                            fragment,
                            denominator: den.to_f64_lossy(),
                        });
                    }
                    t[((i * no + j) * nv + a) * nv + b] = ovov[((i * nv + a) * no + j) * nv + b] / den;
                }
            }
        }
    }
    let ti = |i: usize, j: usize, a: usize, b: usize| t[((i * no + j) * nv + a) * nv + b];
    let two = T::lit(2.0);
    let mut dv = DMatrix::zeros(nv, nv);
    let mut dq = DMatrix::zeros(no, no);
    for i in 0..no {
        for j in 0..no {
            for a in 0..nv {
                for b in 0..nv {
                    let mut s = T::zero();
                    for c in 0..nv {
                        s += ti(i, j, c, a) * (two * ti(i, j, c, b) - ti(i, j, b, c));
                    }
                    dv[(b, a)] += s;
                }
            }
        }
    }
    for k in 0..no {
        for i in 0..no {
            for j in 0..no {
                let mut s = T::zero();
                for a in 0..nv {
                    for b in 0..nv {
                        s += ti(k, i, a, b) * (two * ti(k, j, a, b) - ti(k, j, b, a));
                    }
                }
                dq[(i, j)] += s;
            }
        }
    }
    let dv = &dv + dv.transpose();
    let dq = DMatrix::identity(no, no) * two - (&dq + dq.transpose());
    Ok((dq, dv))
}

/// Natural orbitals of `env` (columns, a subspace of `space`) under the
/// density `d` expressed over `space`; sorted by `order` applied to the
/// occupation.
fn env_natural_orbitals<T: Real>(
    space: &DMatrix<T>,
    d: &DMatrix<T>,
    env: &DMatrix<T>,
    descending: bool,
) -> (DMatrix<T>, Vec<f64>) {
    let x = space.transpose() * env;
    let de = sym(&(x.transpose() * d * &x));
    let eig = eigh(de);
    let mut order: Vec<usize> = (0..env.ncols()).collect();
    order.sort_by(|&a, &b| {
        let c = eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal);
        if descending {
            c.reverse()
        } else {
            c
        }
    });
    let v = columns(&eig.eigenvectors, &order);
    let occ = order.iter().map(|&k| eig.eigenvalues[k].to_f64_lossy()).collect();
    (env * v, occ)
}

/// Expands a DMET cluster with MP2 bath natural orbitals.
///
/// Virtual BNOs come from MP2 with the cluster's occupied orbitals and all
/// virtuals active; occupied BNOs from MP2 with all occupied orbitals and the
/// cluster's virtuals active. Environment natural orbitals are retained when
/// their occupation (clamped to `[0, 2]`) is at least `eta` (virtual) or at
/// most `2 − eta` (occupied).
pub fn bno_expand<T: Real>(
    sys: &EmbeddingSystem<T>,
    dmet: &DmetSpace<T>,
    eta: f64,
    index: usize,
    label: &str,
) -> Result<EwfCluster<T>, EwfError> {
    if !(0.0..=2.0).contains(&eta) {
        return Err(EwfError::Threshold(format!("eta = {eta} outside [0, 2]")));
    }
    let n = sys.n_basis();
    let k = dmet.cluster_columns(n);
    let dk = sym(&(k.transpose() * &sys.density * &k));
    let eig = eigh(dk);
    let mut occ_k = Vec::new();
    let mut vir_k = Vec::new();
    for i in 0..k.ncols() {
        let x = eig.eigenvalues[i].to_f64_lossy();
        if x.abs().min((2.0 - x).abs()) > ENV_IDEMPOTENCY_TOL {
            return Err(EwfError::NonIdempotent {
                context: "cluster density",
                eigenvalue: x,
            });
        }
        if x > 1.0 {
            occ_k.push(i);
        } else {
            vir_k.push(i);
        }
    }
    let cluster_occ = &k * columns(&eig.eigenvectors, &occ_k);
    let cluster_vir = &k * columns(&eig.eigenvectors, &vir_k);

    // virtual bath natural orbitals
    let (vir_nos, vir_occ) = if dmet.env_vir.ncols() == 0 {
        (DMatrix::zeros(n, 0), Vec::new())
    } else if cluster_occ.ncols() == 0 {
        (dmet.env_vir.clone(), vec![0.0; dmet.env_vir.ncols()])
    } else {
        let (co, eo) = sys.semicanonicalize(&cluster_occ);
        let (cv, ev) = sys.semicanonicalize(&hcat(&cluster_vir, &dmet.env_vir));
        let (_, dv) = mp2_density(sys, &co, &eo, &cv, &ev, index)?;
        env_natural_orbitals(&cv, &dv, &dmet.env_vir, true)
    };
    // occupied bath natural orbitals
    let (occ_nos, occ_occ) = if dmet.env_occ.ncols() == 0 {
        (DMatrix::zeros(n, 0), Vec::new())
    } else if cluster_vir.ncols() == 0 {
        (dmet.env_occ.clone(), vec![2.0; dmet.env_occ.ncols()])
    } else {
        let (co, eo) = sys.semicanonicalize(&hcat(&cluster_occ, &dmet.env_occ));
        let (cv, ev) = sys.semicanonicalize(&cluster_vir);
        let (dq, _) = mp2_density(sys, &co, &eo, &cv, &ev, index)?;
        env_natural_orbitals(&co, &dq, &dmet.env_occ, false)
    };
    let n_bno_vir = vir_occ.iter().take_while(|&&x| x.clamp(0.0, 2.0) >= eta).count();
    let n_bno_occ = occ_occ.iter().take_while(|&&x| x.clamp(0.0, 2.0) <= 2.0 - eta).count();

    let occ_all = lowdin(&hcat(&cluster_occ, &occ_nos.columns(0, n_bno_occ).into_owned()));
    let vir_all = lowdin(&hcat(&cluster_vir, &vir_nos.columns(0, n_bno_vir).into_owned()));
    let (co, eo) = sys.semicanonicalize(&occ_all);
    let (cv, ev) = sys.semicanonicalize(&vir_all);
    let coeffs = hcat(&co, &cv);
    let mut energies = DVector::zeros(coeffs.ncols());
    energies.rows_mut(0, eo.len()).copy_from(&eo);
    energies.rows_mut(eo.len(), ev.len()).copy_from(&ev);

    let frozen_occ = occ_nos.columns(n_bno_occ, occ_nos.ncols() - n_bno_occ).into_owned();
    let frozen_vir = vir_nos.columns(n_bno_vir, vir_nos.ncols() - n_bno_vir).into_owned();
    let cf = DMatrix::from_fn(dmet.fragment.len(), coeffs.ncols(), |f, j| coeffs[(dmet.fragment[f], j)]);
    let projector = sym(&(cf.transpose() * cf));
    Ok(EwfCluster {
        index,
        label: label.to_string(),
        fragment: dmet.fragment.clone(),
        n_occ: co.ncols(),
        coeffs,
        orbital_energies: energies,
        bath_singular_values: dmet.singular_values.iter().map(|x| x.to_f64_lossy()).collect(),
        occ_bno_occupations: occ_occ,
        vir_bno_occupations: vir_occ,
        n_bno_occ,
        n_bno_vir,
        frozen_occ,
        frozen_vir,
        projector,
    })
}

/// One cluster per fragment, built in parallel.
pub fn build_clusters<T: Real>(
    sys: &EmbeddingSystem<T>,
    spec: &FragmentSpec,
    eta: f64,
) -> Result<Vec<EwfCluster<T>>, EwfError> {
    spec.groups
        .par_iter()
        .enumerate()
        .map(|(x, group)| {
            let dmet = schmidt_bath(&sys.density, group)?;
            bno_expand(sys, &dmet, eta, x, &spec.labels[x])
        })
        .collect()
}
