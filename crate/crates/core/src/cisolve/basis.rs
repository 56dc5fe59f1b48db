use nalgebra::DVector;

use super::CiError;
use crate::detcore::{enumerate_space, enumerate_strings, Determinant, Sector};
use crate::scalar::Real;

/// Sorted, duplicate-free determinant list within one sector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceBasis {
    sector: Sector,
    dets: Vec<Determinant>,
}

impl SubspaceBasis {
    /// Sorts and deduplicates `dets`, rejecting empty input and members
    /// outside the sector.
    pub fn new(sector: Sector, mut dets: Vec<Determinant>) -> Result<Self, CiError> {
        if dets.is_empty() {
            return Err(CiError::EmptySubspace);
        }
        if let Some(d) = dets.iter().find(|d| !d.in_sector(&sector)) {
            return Err(CiError::Sector(format!(
                "({:#b}, {:#b}) not in sector ({}, {}) of {} orbitals",
                d.alpha, d.beta, sector.n_alpha, sector.n_beta, sector.norb
            )));
        }
        dets.sort_unstable();
        dets.dedup();
        Ok(Self { sector, dets })
    }

    /// Every determinant of the sector.
    pub fn full(sector: Sector) -> Result<Self, CiError> {
        let dets = enumerate_space(sector.norb, sector.n_alpha, sector.n_beta)?;
        Ok(Self { sector, dets })
    }

    /// The product of two string sets.
    pub fn product(sector: Sector, alphas: &[u64], betas: &[u64]) -> Result<Self, CiError> {
        let mut dets = Vec::with_capacity(alphas.len() * betas.len());
        for &a in alphas {
            for &b in betas {
                dets.push(Determinant::new(a, b));
            }
        }
        Self::new(sector, dets)
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    pub fn dets(&self) -> &[Determinant] {
        &self.dets
    }

    pub fn index_of(&self, d: &Determinant) -> Option<usize> {
        self.dets.binary_search(d).ok()
    }

    pub fn contains(&self, d: &Determinant) -> bool {
        self.index_of(d).is_some()
    }

    /// Distinct alpha and beta strings, ascending.
    pub fn strings(&self) -> (Vec<u64>, Vec<u64>) {
        let mut a: Vec<u64> = self.dets.iter().map(|d| d.alpha).collect();
        let mut b: Vec<u64> = self.dets.iter().map(|d| d.beta).collect();
        a.dedup();
        b.sort_unstable();
        b.dedup();
        (a, b)
    }

    /// The string factors when the basis is a full product `A × B`.
    pub fn as_product(&self) -> Option<(Vec<u64>, Vec<u64>)> {
        let (a, b) = self.strings();
        (a.len() * b.len() == self.dets.len()).then_some((a, b))
    }

    /// Whether the basis is the complete sector space.
    pub fn is_full_space(&self) -> bool {
        let na = enumerate_strings(self.sector.norb, self.sector.n_alpha).map_or(0, |v| v.len());
        let nb = enumerate_strings(self.sector.norb, self.sector.n_beta).map_or(0, |v| v.len());
        self.dets.len() == na * nb
    }
}

/// Normalized CI expansion over a subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct CiVector<T: Real> {
    pub basis: SubspaceBasis,
    pub coeffs: DVector<T>,
}

impl<T: Real> CiVector<T> {
    pub fn new(basis: SubspaceBasis, coeffs: DVector<T>) -> Result<Self, CiError> {
        if coeffs.len() != basis.dim() {
            return Err(CiError::Shape(format!(
                "{} coefficients for {} determinants",
                coeffs.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    /// Single determinant with unit weight.
    pub fn single(sector: Sector, d: Determinant) -> Result<Self, CiError> {
        let basis = SubspaceBasis::new(sector, vec![d])?;
        Ok(Self {
            basis,
            coeffs: DVector::from_element(1, T::one()),
        })
    }

    pub fn norm(&self) -> T {
        self.coeffs.norm()
    }

    pub fn coeff_of(&self, d: &Determinant) -> T {
        self.basis.index_of(d).map_or(T::zero(), |i| self.coeffs[i])
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> T {
        self.coeffs.amax()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Determinant, T)> {
        self.basis.dets().iter().zip(self.coeffs.iter().copied())
    }
}
