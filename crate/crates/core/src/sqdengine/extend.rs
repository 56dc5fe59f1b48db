use nalgebra::DVector;

use super::{BatchResult, RecoveryConfig, SqdError};
use crate::cisolve::{compute_rdms, solve_subspace, CiVector, DavidsonOptions, Rdm1, Rdm2, SubspaceBasis};
use crate::detcore::connected_singles;
use crate::hamio::ClusterHamiltonian;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct ExtendedResult<T: Real> {
    pub energy: T,
    pub vector: CiVector<T>,
    pub rdm1: Rdm1<T>,
    pub rdm2: Rdm2<T>,
    /// Number of dominant determinants that were expanded.
    pub selected: usize,
}

/// Adds every single excitation of the dominant determinants of `best`
/// (`|c| ≥ ext_dominance_threshold`) and re-solves.
pub fn extend_subspace<T: Real>(
    ham: &ClusterHamiltonian<T>,
    best: &BatchResult<T>,
    cfg: &RecoveryConfig,
) -> Result<ExtendedResult<T>, SqdError> {
    let thr = T::lit(cfg.ext_dominance_threshold);
    let v = &best.vector;
    let sector = v.basis.sector();
    let dominant: Vec<_> = v.iter().filter(|(_, c)| c.abs() >= thr).map(|(d, _)| *d).collect();
    if dominant.is_empty() {
        return Err(SqdError::Selection {
            threshold: cfg.ext_dominance_threshold,
            max_coeff: v.max_abs().to_f64_lossy(),
        });
    }
    let mut dets = dominant.clone();
    for d in &dominant {
        dets.extend(connected_singles(d, sector.norb));
    }
    let basis = SubspaceBasis::new(sector, dets)?;
    let guess = DVector::from_fn(basis.dim(), |i, _| v.coeff_of(&basis.dets()[i]));
    let (energy, vector) = solve_subspace(ham, &basis, &DavidsonOptions::default(), Some(&guess))?;
    let (rdm1, rdm2) = compute_rdms(&vector);
    Ok(ExtendedResult {
        energy,
        vector,
        rdm1,
        rdm2,
        selected: dominant.len(),
    })
}
