use serde::{Deserialize, Serialize};

use super::{DetError, MAX_ORBITALS};

/// Occupation bitmasks for the two spin sectors; bit `p` set means spatial
/// orbital `p` is occupied. Ordered lexicographically by `(alpha, beta)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Determinant {
    pub alpha: u64,
    pub beta: u64,
}

impl Determinant {
    #[inline]
    pub const fn new(alpha: u64, beta: u64) -> Self {
        Self { alpha, beta }
    }

    /// Closed-shell-like reference with the lowest orbitals filled.
    pub fn hartree_fock(n_alpha: usize, n_beta: usize) -> Self {
        Self::new(low_mask(n_alpha), low_mask(n_beta))
    }

    #[inline]
    pub fn n_alpha(&self) -> usize {
        self.alpha.count_ones() as usize
    }

    #[inline]
    pub fn n_beta(&self) -> usize {
        self.beta.count_ones() as usize
    }

    /// Packs into a `2M`-qubit register: alpha in bits `0..M`, beta in `M..2M`.
    #[inline]
    pub fn to_bits(&self, norb: usize) -> u128 {
        self.alpha as u128 | ((self.beta as u128) << norb)
    }

    #[inline]
    pub fn from_bits(bits: u128, norb: usize) -> Self {
        let m = low_mask(norb) as u128;
        Self::new((bits & m) as u64, ((bits >> norb) & m) as u64)
    }

    #[inline]
    pub fn in_sector(&self, s: &Sector) -> bool {
        let m = !low_mask(s.norb);
        self.alpha & m == 0
            && self.beta & m == 0
            && self.n_alpha() == s.n_alpha
            && self.n_beta() == s.n_beta
    }

    /// Occupied orbitals of one spin, ascending.
    pub fn occupied(mask: u64) -> impl Iterator<Item = usize> {
        BitIter(mask)
    }
}

/// All-ones mask over the lowest `n` bits.
#[inline]
pub const fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub(crate) struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = usize;
    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            let i = self.0.trailing_zeros() as usize;
            self.0 &= self.0 - 1;
            Some(i)
        }
    }
}

/// A fixed `(n_alpha, n_beta)` particle-number sector over `norb` orbitals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub norb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
}

impl Sector {
    pub fn new(norb: usize, n_alpha: usize, n_beta: usize) -> Result<Self, DetError> {
        if norb > MAX_ORBITALS {
            return Err(DetError::Capacity { norb });
        }
        if n_alpha > norb || n_beta > norb {
            return Err(DetError::Sector(format!(
                "({n_alpha}, {n_beta}) electrons in {norb} orbitals"
            )));
        }
        Ok(Self {
            norb,
            n_alpha,
            n_beta,
        })
    }

    pub fn n_elec(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    pub fn hartree_fock(&self) -> Determinant {
        Determinant::hartree_fock(self.n_alpha, self.n_beta)
    }
}
