//! Embedded wave-function fragmentation: a Löwdin-orthogonalized local
//! basis, per-fragment Schmidt baths, MP2 bath natural orbitals and cluster
//! Hamiltonians with the frozen environment folded in.

mod bath;
mod bno;
mod extract;
mod fragments;
mod integrals;
mod local;

pub use bath::{schmidt_bath, DmetSpace, BATH_SINGULAR_CUTOFF, ENV_IDEMPOTENCY_TOL};
pub use bno::{bno_expand, build_clusters, EwfCluster, DEFAULT_ETA};
pub use extract::{extract_cluster_hamiltonian, ExtractedCluster};
pub use fragments::FragmentSpec;
pub use integrals::{coulomb_exchange, transform_eri, transform_eri4};
pub use local::{orthogonalize_localize, EmbeddingSystem, LocalBasis, MAX_CONDITION};

#[derive(Debug, thiserror::Error)]
pub enum EwfError {
    #[error("overlap matrix is ill-conditioned (condition number {cond:e})")]
    IllConditioned { cond: f64 },
    #[error("{context}: density eigenvalue {eigenvalue} is not 0 or 2")]
    NonIdempotent { context: &'static str, eigenvalue: f64 },
    #[error("invalid fragmentation: {0}")]
    Fragment(String),
    #[error("near-zero MP2 denominator {denominator:e} in the bath expansion of fragment {fragment}")]
    Degenerate { fragment: usize, denominator: f64 },
    #[error("cluster {0} has no active orbitals")]
    EmptyActive(usize),
    #[error("closed-shell violation: {0}")]
    ClosedShell(String),
    #[error("invalid threshold: {0}")]
    Threshold(String),
    #[error(transparent)]
    HamIo(#[from] crate::hamio::HamIoError),
}
