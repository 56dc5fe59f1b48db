use nalgebra::DMatrix;

use super::local::sym;
use super::{coulomb_exchange, transform_eri, EmbeddingSystem, EwfCluster, EwfError};
use crate::hamio::{canonical_eri_index, ClusterHamiltonian};
use crate::scalar::Real;

/// A cluster Hamiltonian with the frozen-core potential it contains.
#[derive(Clone, Debug)]
pub struct ExtractedCluster<T> {
    pub ham: ClusterHamiltonian<T>,
    /// `Cᵀ (J − ½K)[γ_frozen] C`, already included in the one-body part.
    pub core_potential: DMatrix<T>,
}

/// Active-space Hamiltonian of a cluster.
///
/// The frozen occupied environment `γc` enters as the one-body potential
/// `J[γc] − ½K[γc]` and the constant
/// `E0 = E_nuc + tr(γc h) + ½ tr(γc (J − ½K)[γc])`.
pub fn extract_cluster_hamiltonian<T: Real>(
    sys: &EmbeddingSystem<T>,
    cluster: &EwfCluster<T>,
) -> Result<ExtractedCluster<T>, EwfError> {
    let m = cluster.n_mo();
    if m == 0 {
        return Err(EwfError::EmptyActive(cluster.index));
    }
    let n = sys.n_basis();
    let c = &cluster.coeffs;
    let core = &cluster.frozen_occ * cluster.frozen_occ.transpose() * T::lit(2.0);
    let n_core = core.trace().to_f64_lossy();
    let n_active = (c.transpose() * &sys.density * c).trace().to_f64_lossy();
    let even = |x: f64| (x / 2.0 - (x / 2.0).round()).abs() < 1e-6;
    if !even(n_core) || !even(n_active) {
        return Err(EwfError::ClosedShell(format!(
            "cluster {} holds {n_active:.8} electrons with {n_core:.8} frozen",
            cluster.index
        )));
    }
    if (n_active - cluster.n_elec() as f64).abs() > 1e-6 {
        return Err(EwfError::ClosedShell(format!(
            "cluster {} density carries {n_active:.8} electrons, orbitals expect {}",
            cluster.index,
            cluster.n_elec()
        )));
    }
    let (j, k) = coulomb_exchange(&sys.eri, n, &core);
    let v = sym(&(j - k * T::lit(0.5)));
    let half = T::lit(0.5);
    let e0 = sys.e_nuc + core.component_mul(&sys.hcore).sum() + core.component_mul(&v).sum() * half;
    let core_potential = sym(&(c.transpose() * &v * c));
    let h = sym(&(c.transpose() * &sys.hcore * c)) + &core_potential;
    let full = transform_eri(&sys.eri, n, c);
    let mut ham = ClusterHamiltonian::zeros(m, cluster.n_occ, cluster.n_occ)?;
    ham.set_e0(e0);
    for p in 0..m {
        for r in 0..=p {
            ham.set_h(p, r, h[(p, r)]);
        }
    }
    for p in 0..m {
        for r in 0..=p {
            for q in 0..m {
                for s in 0..=q {
                    if canonical_eri_index(p, r, q, s) == (p, r, q, s) {
                        ham.set_eri(p, r, q, s, full[((p * m + r) * m + q) * m + s]);
                    }
                }
            }
        }
    }
    Ok(ExtractedCluster { ham, core_potential })
}
