use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{project_cluster_rdms, AssembleError, ClusterResult};
use crate::cisolve::Rdm2;
use crate::hamio::{ClusterHamiltonian, ClusterRecord, RunManifest, SolverKind};
use crate::scalar::Real;
use crate::sqdengine::SubspaceStats;

/// One cluster's projected 2-RDM with the orbitals it lives on.
#[derive(Clone, Debug)]
pub struct Rdm2Block<T: Real> {
    pub id: String,
    pub coeffs: DMatrix<T>,
    pub gamma2: Rdm2<T>,
}

/// Global densities over the localized basis. The 2-RDM is kept as a sum of
/// cluster blocks, `Γ_glob = Σ_x (C_x ⊗ C_x ⊗ C_x ⊗ C_x) Γ̃_x`.
#[derive(Clone, Debug)]
pub struct GlobalRdms<T: Real> {
    pub gamma: DMatrix<T>,
    pub blocks: Vec<Rdm2Block<T>>,
}

impl<T: Real> GlobalRdms<T> {
    pub fn n_basis(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn trace(&self) -> T {
        self.gamma.trace()
    }

    /// Dense `Γ_glob`, `(pr|qs)` ordered. Only for small bases.
    pub fn dense_rdm2(&self) -> Rdm2<T> {
        let n = self.n_basis();
        let mut out = Rdm2::zeros(n);
        for b in &self.blocks {
            let ct = b.coeffs.transpose();
            let data = crate::ewfrag::transform_eri4(b.gamma2.as_slice(), b.coeffs.ncols(), [&ct; 4]);
            for (i, v) in data.into_iter().enumerate() {
                let (p, r, q, s) = (i / (n * n * n), (i / (n * n)) % n, (i / n) % n, i % n);
                out.add(p, r, q, s, v);
            }
        }
        out
    }
}

/// Energy attributed to one fragment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentEnergy {
    pub id: String,
    pub solver: SolverKind,
    pub n_mo: usize,
    /// `tr(γ̃ h)` with the bare one-electron operator.
    pub one_body: f64,
    /// `½ tr(γ̃ V_core)`: half of the interaction with the frozen environment.
    pub core: f64,
    /// `½ Σ Γ̃_prqs (pr|qs)`.
    pub two_body: f64,
    pub total: f64,
    /// Fragment electron count `tr(γ̃)`.
    pub electrons: f64,
    pub cluster_energy: f64,
    pub stats: Option<SubspaceStats>,
}

#[derive(Clone, Debug)]
pub struct Collation<T: Real> {
    pub e_nuc: f64,
    pub e_total: f64,
    pub fragments: Vec<FragmentEnergy>,
    pub rdms: GlobalRdms<T>,
}

fn fragment_energy<T: Real>(
    r: &ClusterResult<T>,
    ham: &ClusterHamiltonian<T>,
    gamma_cluster: &DMatrix<T>,
    gamma2: &Rdm2<T>,
) -> FragmentEnergy {
    let half = T::lit(0.5);
    let bare = ham.h() - &r.core_potential;
    let one = gamma_cluster.component_mul(&bare).sum();
    let core = gamma_cluster.component_mul(&r.core_potential).sum() * half;
    let mut two = T::zero();
    for (g, v) in gamma2.as_slice().iter().zip(ham.eri_slice()) {
        two += *g * *v;
    }
    two *= half;
    let f = |x: T| x.to_f64_lossy();
    FragmentEnergy {
        id: r.id.clone(),
        solver: r.solver,
        n_mo: r.n_mo(),
        one_body: f(one),
        core: f(core),
        two_body: f(two),
        total: f(one + core + two),
        electrons: f(gamma_cluster.trace()),
        cluster_energy: f(r.energy),
        stats: r.stats.clone(),
    }
}

/// Total embedded energy and global densities from per-cluster results.
///
/// `hamiltonian` supplies each cluster's active-space Hamiltonian (the one
/// its solver saw). The fold runs in manifest order.
pub fn collate_global_energy<T: Real>(
    manifest: &RunManifest,
    results: &[ClusterResult<T>],
    mut hamiltonian: impl FnMut(&ClusterRecord) -> Result<ClusterHamiltonian<T>, AssembleError>,
) -> Result<Collation<T>, AssembleError> {
    manifest.validate()?;
    let mut by_id: BTreeMap<&str, &ClusterResult<T>> = BTreeMap::new();
    for r in results {
        if manifest.cluster(&r.id).is_none() {
            return Err(AssembleError::UnknownCluster(r.id.clone()));
        }
        if by_id.insert(&r.id, r).is_some() {
            return Err(AssembleError::DuplicateResult(r.id.clone()));
        }
    }
    let missing: Vec<String> = manifest
        .clusters
        .iter()
        .filter(|c| !by_id.contains_key(c.id.as_str()))
        .map(|c| c.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(AssembleError::Incomplete(missing));
    }

    let n = manifest.n_basis;
    let mut gamma = DMatrix::<T>::zeros(n, n);
    let mut blocks = Vec::with_capacity(results.len());
    let mut fragments = Vec::with_capacity(results.len());
    let mut e_total = manifest.e_nuc;
    for rec in &manifest.clusters {
        let r = by_id[rec.id.as_str()];
        if r.coeffs.nrows() != n {
            return Err(AssembleError::Shape(format!(
                "cluster '{}' orbitals span {} basis functions, manifest has {n}",
                r.id,
                r.coeffs.nrows()
            )));
        }
        let rank = r.projector.trace().to_f64_lossy();
        if (rank - rec.fragment_orbitals.len() as f64).abs() > 1e-6 {
            return Err(AssembleError::Shape(format!(
                "cluster '{}' projector has trace {rank:.8}, fragment has {} orbitals",
                r.id,
                rec.fragment_orbitals.len()
            )));
        }
        let ham = hamiltonian(rec)?;
        if ham.norb() != r.n_mo() {
            return Err(AssembleError::Shape(format!(
                "cluster '{}' Hamiltonian has {} orbitals, result has {}",
                r.id,
                ham.norb(),
                r.n_mo()
            )));
        }
        let proj = project_cluster_rdms(r)?;
        let fe = fragment_energy(r, &ham, &proj.gamma_cluster, &proj.gamma2);
        e_total += fe.total;
        gamma += &proj.gamma;
        fragments.push(fe);
        blocks.push(Rdm2Block {
            id: r.id.clone(),
            coeffs: r.coeffs.clone(),
            gamma2: proj.gamma2,
        });
    }
    Ok(Collation {
        e_nuc: manifest.e_nuc,
        e_total,
        fragments,
        rdms: GlobalRdms { gamma, blocks },
    })
}

/// Collation reading each cluster's FCIDUMP relative to `manifest_dir`.
pub fn collate_from_files<T: Real>(
    manifest: &RunManifest,
    manifest_dir: &std::path::Path,
    results: &[ClusterResult<T>],
) -> Result<Collation<T>, AssembleError> {
    collate_global_energy(manifest, results, |rec| {
        let path = if rec.fcidump.is_absolute() {
            rec.fcidump.clone()
        } else {
            manifest_dir.join(&rec.fcidump)
        };
        Ok(crate::hamio::read_fcidump_file(path)?)
    })
}
