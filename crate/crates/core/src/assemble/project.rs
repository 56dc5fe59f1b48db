use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AssembleError;
use crate::cisolve::{Rdm1, Rdm2};
use crate::ewfrag::{EwfCluster, ExtractedCluster};
use crate::hamio::SolverKind;
use crate::scalar::Real;
use crate::sqdengine::SubspaceStats;

/// Correlated solution of one cluster, in its own orbital basis.
#[derive(Clone, Debug)]
pub struct ClusterResult<T: Real> {
    pub id: String,
    pub solver: SolverKind,
    /// Total cluster energy, frozen core included.
    pub energy: T,
    pub rdm1: Rdm1<T>,
    pub rdm2: Rdm2<T>,
    /// Cluster orbitals as columns over the global localized basis.
    pub coeffs: DMatrix<T>,
    /// Fragment projector in the cluster basis.
    pub projector: DMatrix<T>,
    /// Frozen-environment potential `J − ½K` in the cluster basis.
    pub core_potential: DMatrix<T>,
    pub stats: Option<SubspaceStats>,
}

impl<T: Real> ClusterResult<T> {
    /// Bundles a solved cluster with the geometry collation needs.
    #[allow(clippy::too_many_arguments)]
    pub fn from_solution(
        id: impl Into<String>,
        solver: SolverKind,
        cluster: &EwfCluster<T>,
        extracted: &ExtractedCluster<T>,
        energy: T,
        rdm1: Rdm1<T>,
        rdm2: Rdm2<T>,
        stats: Option<SubspaceStats>,
    ) -> Self {
        Self {
            id: id.into(),
            solver,
            energy,
            rdm1,
            rdm2,
            coeffs: cluster.coeffs.clone(),
            projector: cluster.projector.clone(),
            core_potential: extracted.core_potential.clone(),
            stats,
        }
    }

    pub fn n_mo(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn check_shapes(&self) -> Result<(), AssembleError> {
        let m = self.n_mo();
        let bad = |what: &str, r: usize, c: usize| {
            Err(AssembleError::Shape(format!(
                "cluster '{}': {what} is {r}x{c}, expected {m}x{m}",
                self.id
            )))
        };
        for (what, mat) in [
            ("1-RDM", &self.rdm1),
            ("projector", &self.projector),
            ("core potential", &self.core_potential),
        ] {
            if mat.nrows() != m || mat.ncols() != m {
                return bad(what, mat.nrows(), mat.ncols());
            }
        }
        if self.rdm2.norb() != m {
            return Err(AssembleError::Shape(format!(
                "cluster '{}': 2-RDM over {} orbitals, expected {m}",
                self.id,
                self.rdm2.norb()
            )));
        }
        Ok(())
    }

    pub fn to_record(&self) -> ClusterResultRecord {
        let flat = |m: &DMatrix<T>| m.iter().map(|x| x.to_f64_lossy()).collect();
        ClusterResultRecord {
            id: self.id.clone(),
            solver: self.solver,
            energy: self.energy.to_f64_lossy(),
            n_basis: self.coeffs.nrows(),
            n_mo: self.n_mo(),
            rdm1: flat(&self.rdm1),
            rdm2: self.rdm2.as_slice().iter().map(|x| x.to_f64_lossy()).collect(),
            coeffs: flat(&self.coeffs),
            projector: flat(&self.projector),
            core_potential: flat(&self.core_potential),
            stats: self.stats.clone(),
        }
    }

    pub fn from_record(r: &ClusterResultRecord) -> Result<Self, AssembleError> {
        let (n, m) = (r.n_basis, r.n_mo);
        let mat = |what: &str, v: &[f64], rows: usize| {
            if v.len() != rows * m {
                return Err(AssembleError::Shape(format!(
                    "cluster '{}': {what} has {} entries, expected {}",
                    r.id,
                    v.len(),
                    rows * m
                )));
            }
            Ok(DMatrix::from_iterator(rows, m, v.iter().map(|&x| T::lit(x))))
        };
        let rdm2 = Rdm2::from_vec(m, r.rdm2.iter().map(|&x| T::lit(x)).collect())
            .map_err(|e| AssembleError::Shape(format!("cluster '{}': {e}", r.id)))?;
        let out = Self {
            id: r.id.clone(),
            solver: r.solver,
            energy: T::lit(r.energy),
            rdm1: mat("1-RDM", &r.rdm1, m)?,
            rdm2,
            coeffs: mat("coefficients", &r.coeffs, n)?,
            projector: mat("projector", &r.projector, m)?,
            core_potential: mat("core potential", &r.core_potential, m)?,
            stats: r.stats.clone(),
        };
        out.check_shapes()?;
        Ok(out)
    }
}

/// Serializable form of [`ClusterResult`]; matrices are column-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterResultRecord {
    pub id: String,
    pub solver: SolverKind,
    pub energy: f64,
    pub n_basis: usize,
    pub n_mo: usize,
    pub rdm1: Vec<f64>,
    pub rdm2: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub projector: Vec<f64>,
    pub core_potential: Vec<f64>,
    #[serde(default)]
    pub stats: Option<SubspaceStats>,
}

/// Fragment-projected densities of one cluster.
///
/// `gamma` is already in the global basis; `gamma2` stays in the cluster
/// basis and is carried alongside the cluster columns.
#[derive(Clone, Debug)]
pub struct ProjectedRdms<T: Real> {
    pub gamma: DMatrix<T>,
    /// `½(P γ + γ P)` in the cluster basis.
    pub gamma_cluster: DMatrix<T>,
    pub gamma2: Rdm2<T>,
}

/// `½ Σ_t (P_pt Γ_trqs + Γ_ptqs P_tr)`.
pub(crate) fn project_rdm2<T: Real>(p: &DMatrix<T>, g: &Rdm2<T>) -> Rdm2<T> {
    let m = g.norb();
    let half = T::lit(0.5);
    let mut out = Rdm2::zeros(m);
    let src = g.as_slice();
    let m2 = m * m;
    let mut block = vec![T::zero(); m2];
    for pp in 0..m {
        for r in 0..m {
            block.iter_mut().for_each(|x| *x = T::zero());
            for t in 0..m {
                let a = p[(pp, t)];
                let b = p[(t, r)];
                if a == T::zero() && b == T::zero() {
                    continue;
                }
                let left = &src[(t * m + r) * m2..(t * m + r + 1) * m2];
                let right = &src[(pp * m + t) * m2..(pp * m + t + 1) * m2];
                for ((x, &l), &rr) in block.iter_mut().zip(left).zip(right) {
                    *x += a * l + rr * b;
                }
            }
            for q in 0..m {
                for s in 0..m {
                    out.add(pp, r, q, s, block[q * m + s] * half);
                }
            }
        }
    }
    out
}

/// Symmetrized fragment projection of a cluster's RDMs.
pub fn project_cluster_rdms<T: Real>(r: &ClusterResult<T>) -> Result<ProjectedRdms<T>, AssembleError> {
    r.check_shapes()?;
    let p = &r.projector;
    let pg = p * &r.rdm1;
    let gamma_cluster = (&pg + pg.transpose()) * T::lit(0.5);
    let gamma = &r.coeffs * &gamma_cluster * r.coeffs.transpose();
    Ok(ProjectedRdms {
        gamma,
        gamma_cluster,
        gamma2: project_rdm2(p, &r.rdm2),
    })
}
