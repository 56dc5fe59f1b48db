use nalgebra::DVector;

use super::{
    build_projected_hamiltonian, compute_rdms, davidson_ground_state, CiError, CiVector,
    DavidsonOptions, ProductHamiltonian, Rdm1, Rdm2, SubspaceBasis,
};
use crate::detcore::{sector_dimension, Determinant, Sector};
use crate::hamio::ClusterHamiltonian;
use crate::scalar::Real;

/// Default cap on the FCI determinant count.
pub const DEFAULT_FCI_BUDGET: usize = 2_000_000;

#[derive(Clone, Debug)]
pub struct FciSolution<T: Real> {
    pub energy: T,
    pub vector: CiVector<T>,
    pub rdm1: Rdm1<T>,
    pub rdm2: Rdm2<T>,
}

fn sector_of<T: Real>(ham: &ClusterHamiltonian<T>) -> Result<Sector, CiError> {
    Ok(Sector::new(ham.norb(), ham.n_alpha(), ham.n_beta())?)
}

/// Ground state of `ham` projected onto `basis`.
///
/// Product bases above the dense threshold are applied matrix-free through
/// string tables; everything else goes through the sparse projected matrix.
/// Without a guess the Hartree–Fock determinant seeds the iteration when it
/// is in the basis.
pub fn solve_subspace<T: Real>(
    ham: &ClusterHamiltonian<T>,
    basis: &SubspaceBasis,
    opts: &DavidsonOptions,
    guess: Option<&DVector<T>>,
) -> Result<(T, CiVector<T>), CiError> {
    let sector = sector_of(ham)?;
    if basis.sector() != sector {
        return Err(CiError::Sector(format!(
            "basis sector {:?} vs Hamiltonian sector {:?}",
            basis.sector(),
            sector
        )));
    }
    let hf_guess;
    let guess = match guess {
        Some(g) => Some(g),
        None => match basis.index_of(&Determinant::hartree_fock(sector.n_alpha, sector.n_beta)) {
            Some(i) => {
                let mut g = DVector::zeros(basis.dim());
                g[i] = T::one();
                hf_guess = g;
                Some(&hf_guess)
            }
            None => None,
        },
    };
    let product = if basis.dim() > opts.dense_fallback {
        ProductHamiltonian::from_basis(ham, basis)
    } else {
        None
    };
    let (e, c) = match product {
        Some(op) => davidson_ground_state(&op, guess, opts)?,
        None => {
            let h = build_projected_hamiltonian(ham, basis)?;
            davidson_ground_state(&h, guess, opts)?
        }
    };
    Ok((e, CiVector::new(basis.clone(), c)?))
}

/// Full configuration interaction in the Hamiltonian's sector, with RDMs.
pub fn fci_solve<T: Real>(
    ham: &ClusterHamiltonian<T>,
    budget: usize,
) -> Result<FciSolution<T>, CiError> {
    let sector = sector_of(ham)?;
    let dim = sector_dimension(&sector);
    if dim > budget as u128 {
        return Err(CiError::Capacity { dim, budget });
    }
    let basis = SubspaceBasis::full(sector)?;
    let (energy, vector) = solve_subspace(ham, &basis, &DavidsonOptions::default(), None)?;
    let (rdm1, rdm2) = compute_rdms(&vector);
    Ok(FciSolution {
        energy,
        vector,
        rdm1,
        rdm2,
    })
}
