//! Sample-based quantum diagonalization: configuration recovery over noisy
//! bitstrings, batched subspace solves, single-excitation augmentation and
//! the FCI/SQD dispatcher.

mod config;
mod extend;
mod recovery;
mod run;
mod stats;

pub use config::RecoveryConfig;
pub use extend::{extend_subspace, ExtendedResult};
pub use recovery::{initial_occupations, postselect_and_recover, postselect_only, recover_half_string};
pub use run::{
    diagnostics_jsonl, run_configuration_recovery, run_configuration_recovery_with, run_sqd, BatchResult, IterationRecord,
    RecoveryOutcome, RecoveryState, SqdSolution,
};
pub use stats::{dispatch_solver, subspace_stats, SubspaceStats, DEFAULT_DISPATCH_THRESHOLD};

use crate::cisolve::CiError;

#[derive(Debug, thiserror::Error)]
pub enum SqdError {
    #[error("invalid recovery configuration: {0}")]
    Config(String),
    #[error("sample set is empty")]
    NoSamples,
    #[error("sample register has {got} qubits, sector needs {want}")]
    Register { got: usize, want: usize },
    #[error("no determinant reaches the dominance threshold {threshold:e} (largest |c| = {max_coeff:e})")]
    Selection { threshold: f64, max_coeff: f64 },
    #[error("iteration {iteration}, batch {batch}: {source}")]
    Solver {
        iteration: usize,
        batch: usize,
        #[source]
        source: CiError,
    },
    #[error(transparent)]
    Ci(#[from] CiError),
}
