//! Projected Hamiltonians over determinant subspaces, the Davidson ground
//! state solver, FCI, and spin-summed reduced density matrices.

mod basis;
mod davidson;
mod fci;
mod operator;
mod rdm;

pub use basis::{CiVector, SubspaceBasis};
pub use davidson::{davidson_ground_state, dense_ground_state, DavidsonOptions, DENSE_FALLBACK_DIM};
pub use fci::{fci_solve, solve_subspace, FciSolution, DEFAULT_FCI_BUDGET};
pub use operator::{
    build_projected_hamiltonian, HamiltonianOperator, ProductHamiltonian, SparseSymMatrix,
};
pub use rdm::{compute_rdms, energy_from_rdms, occupations, Rdm1, Rdm2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CiError {
    #[error("empty determinant subspace")]
    EmptySubspace,
    #[error("sector mismatch: {0}")]
    Sector(String),
    #[error("Davidson did not converge in {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("sector dimension {dim} exceeds the FCI budget of {budget} determinants; dispatch this cluster to SQD")]
    Capacity { dim: u128, budget: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Det(#[from] crate::detcore::DetError),
}
