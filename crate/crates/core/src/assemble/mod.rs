//! Fragment-projected collation of cluster densities into global energies,
//! and the conformer comparison report.

mod collate;
mod project;
mod report;

pub use collate::{collate_from_files, collate_global_energy, Collation, FragmentEnergy, GlobalRdms, Rdm2Block};
pub use project::{project_cluster_rdms, ClusterResult, ClusterResultRecord, ProjectedRdms};
pub use report::{
    delta_kcal, relative_energy_report, ConformerEnergy, EnergyReport, SolverCensus,
    KCAL_PER_HARTREE,
};

#[derive(Debug, thiserror::Error)]
pub enum AssembleError {
    #[error("missing results for clusters: {}", .0.join(", "))]
    Incomplete(Vec<String>),
    #[error("result for cluster '{0}' which is not in the manifest")]
    UnknownCluster(String),
    #[error("duplicate result for cluster '{0}'")]
    DuplicateResult(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    HamIo(#[from] crate::hamio::HamIoError),
}
