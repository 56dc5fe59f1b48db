use super::determinant::BitIter;
use super::strings::string_parity;
use super::{DetError, Determinant};
use crate::hamio::ClusterHamiltonian;
use crate::scalar::Real;

#[inline]
fn lowest_two(mask: u64) -> (usize, usize) {
    let i = mask.trailing_zeros() as usize;
    let j = (mask & (mask - 1)).trailing_zeros() as usize;
    (i, j)
}

/// Excitation degree between `a` and `b` and the fermionic sign of the
/// excitation taking `b` to `a`. The sign is `+1` for degree 0 and for
/// degree above 2.
pub fn excitation_degree_and_parity(a: &Determinant, b: &Determinant) -> (usize, i8) {
    let da = (a.alpha ^ b.alpha).count_ones() as usize;
    let db = (a.beta ^ b.beta).count_ones() as usize;
    let degree = (da + db) / 2;
    if degree == 0 || degree > 2 {
        return (degree, 1);
    }
    let mut sign = 1.0;
    for (bra, ket) in [(a.alpha, b.alpha), (a.beta, b.beta)] {
        sign *= spin_sign(bra, ket);
    }
    (degree, if sign > 0.0 { 1 } else { -1 })
}

/// Sign of the excitation taking `ket` to `bra` within one spin string,
/// holes and particles paired in ascending order.
#[inline]
fn spin_sign(bra: u64, ket: u64) -> f64 {
    let holes = ket & !bra;
    let parts = bra & !ket;
    match holes.count_ones() {
        0 => 1.0,
        1 => string_parity(ket, holes.trailing_zeros() as usize, parts.trailing_zeros() as usize),
        2 => {
            let (i, j) = lowest_two(holes);
            let (k, l) = lowest_two(parts);
            let s1 = string_parity(ket, i, k);
            let mid = ket ^ (1 << i) ^ (1 << k);
            s1 * string_parity(mid, j, l)
        }
        _ => 1.0,
    }
}

/// Matrix element of `Ĥ` between two determinants, checking that both lie
/// in the Hamiltonian's sector.
pub fn slater_condon_element<T: Real>(
    ham: &ClusterHamiltonian<T>,
    a: &Determinant,
    b: &Determinant,
) -> Result<T, DetError> {
    let sector = super::Sector::new(ham.norb(), ham.n_alpha(), ham.n_beta())?;
    for d in [a, b] {
        if !d.in_sector(&sector) {
            return Err(DetError::Sector(format!(
                "determinant ({:#b}, {:#b}) is not in the ({}, {}) sector of {} orbitals",
                d.alpha,
                d.beta,
                ham.n_alpha(),
                ham.n_beta(),
                ham.norb()
            )));
        }
    }
    Ok(slater_condon_unchecked(ham, a, b))
}

/// Diagonal element `⟨d|Ĥ|d⟩`.
pub fn diagonal_element<T: Real>(ham: &ClusterHamiltonian<T>, d: &Determinant) -> T {
    let mut e = ham.e0() + spin_diagonal(ham, d.alpha) + spin_diagonal(ham, d.beta);
    for i in BitIter(d.alpha) {
        for j in BitIter(d.beta) {
            e += ham.eri(i, i, j, j);
        }
    }
    e
}

/// Same-spin part of `⟨x|Ĥ|y⟩` for two strings of one spin: one-body
/// integrals plus the two-body interaction among electrons of that spin.
/// Excludes `E0` and any coupling to the other spin.
pub fn single_spin_element<T: Real>(ham: &ClusterHamiltonian<T>, x: u64, y: u64) -> T {
    match (x ^ y).count_ones() {
        0 => spin_diagonal(ham, x),
        2 => {
            let i = (y & !x).trailing_zeros() as usize;
            let k = (x & !y).trailing_zeros() as usize;
            let mut v = ham.h_elem(k, i);
            for j in BitIter(y & !(1 << i)) {
                v += ham.eri(k, i, j, j) - ham.eri(k, j, j, i);
            }
            v * T::lit(string_parity(y, i, k))
        }
        4 => same_spin_double(ham, x, y),
        _ => T::zero(),
    }
}

fn spin_diagonal<T: Real>(ham: &ClusterHamiltonian<T>, x: u64) -> T {
    let mut e = T::zero();
    for i in BitIter(x) {
        e += ham.h_elem(i, i);
        for j in BitIter(x & !((2u64 << i).wrapping_sub(1))) {
            e += ham.eri(i, i, j, j) - ham.eri(i, j, j, i);
        }
    }
    e
}

fn same_spin_double<T: Real>(ham: &ClusterHamiltonian<T>, x: u64, y: u64) -> T {
    let (i, j) = lowest_two(y & !x);
    let (k, l) = lowest_two(x & !y);
    let v = ham.eri(k, i, l, j) - ham.eri(k, j, l, i);
    v * T::lit(spin_sign(x, y))
}

/// `⟨a|Ĥ|b⟩` by the Slater–Condon rules without sector checks.
pub fn slater_condon_unchecked<T: Real>(
    ham: &ClusterHamiltonian<T>,
    a: &Determinant,
    b: &Determinant,
) -> T {
    let da = (a.alpha ^ b.alpha).count_ones();
    let db = (a.beta ^ b.beta).count_ones();
    match (da, db) {
        (0, 0) => diagonal_element(ham, a),
        (2, 0) => {
            let i = (b.alpha & !a.alpha).trailing_zeros() as usize;
            let k = (a.alpha & !b.alpha).trailing_zeros() as usize;
            let mut v = single_spin_element(ham, a.alpha, b.alpha);
            let mut cross = T::zero();
            for j in BitIter(b.beta) {
                cross += ham.eri(k, i, j, j);
            }
            v += cross * T::lit(string_parity(b.alpha, i, k));
            v
        }
        (0, 2) => {
            let i = (b.beta & !a.beta).trailing_zeros() as usize;
            let k = (a.beta & !b.beta).trailing_zeros() as usize;
            let mut v = single_spin_element(ham, a.beta, b.beta);
            let mut cross = T::zero();
            for j in BitIter(b.alpha) {
                cross += ham.eri(k, i, j, j);
            }
            v += cross * T::lit(string_parity(b.beta, i, k));
            v
        }
        (4, 0) => same_spin_double(ham, a.alpha, b.alpha),
        (0, 4) => same_spin_double(ham, a.beta, b.beta),
        (2, 2) => {
            let i = (b.alpha & !a.alpha).trailing_zeros() as usize;
            let k = (a.alpha & !b.alpha).trailing_zeros() as usize;
            let j = (b.beta & !a.beta).trailing_zeros() as usize;
            let l = (a.beta & !b.beta).trailing_zeros() as usize;
            let s = string_parity(b.alpha, i, k) * string_parity(b.beta, j, l);
            ham.eri(k, i, l, j) * T::lit(s)
        }
        _ => T::zero(),
    }
}
