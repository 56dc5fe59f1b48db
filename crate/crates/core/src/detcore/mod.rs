//! Bit-packed determinants, excitation bookkeeping and Slater–Condon rules.

mod determinant;
mod occupation;
mod slater;
mod strings;

pub use determinant::{low_mask, Determinant, Sector};
pub use occupation::OccupationVector;
pub use slater::{
    diagonal_element, excitation_degree_and_parity, slater_condon_element,
    slater_condon_unchecked, single_spin_element,
};
pub use strings::{
    binomial, connected_singles, enumerate_space, enumerate_strings, sector_dimension,
    single_excitations, string_parity,
};

/// Largest orbital count representable in one mask word.
pub const MAX_ORBITALS: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetError {
    #[error("{norb} orbitals exceed the {MAX_ORBITALS}-bit mask capacity")]
    Capacity { norb: usize },
    #[error("sector mismatch: {0}")]
    Sector(String),
}
