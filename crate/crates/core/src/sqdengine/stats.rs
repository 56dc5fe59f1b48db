use serde::{Deserialize, Serialize};

use crate::detcore::{sector_dimension, Sector};
use crate::hamio::SolverKind;

/// Clusters with at least this many orbitals go to SQD.
pub const DEFAULT_DISPATCH_THRESHOLD: usize = 15;

pub fn dispatch_solver(n_mo: usize, threshold: usize) -> SolverKind {
    if n_mo < threshold {
        SolverKind::Fci
    } else {
        SolverKind::Sqd
    }
}

/// Subspace dimensions of one cluster solve against its full sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceStats {
    pub norb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub full_dim: u128,
    /// Largest batch subspace over all iterations.
    pub sqd_dim: usize,
    pub ext_dim: Option<usize>,
    /// Dominant determinants that seeded the augmentation.
    pub selected: Option<usize>,
    pub sqd_ratio: f64,
    pub ext_ratio: Option<f64>,
}

pub fn subspace_stats(
    sector: Sector,
    sqd_dim: usize,
    ext: Option<(usize, usize)>,
) -> SubspaceStats {
    let full_dim = sector_dimension(&sector);
    let ratio = |d: usize| d as f64 / full_dim as f64;
    SubspaceStats {
        norb: sector.norb,
        n_alpha: sector.n_alpha,
        n_beta: sector.n_beta,
        full_dim,
        sqd_dim,
        ext_dim: ext.map(|e| e.1),
        selected: ext.map(|e| e.0),
        sqd_ratio: ratio(sqd_dim),
        ext_ratio: ext.map(|e| ratio(e.1)),
    }
}
