use super::determinant::{low_mask, BitIter};
use super::{DetError, Determinant, Sector, MAX_ORBITALS};

/// `C(n, k)` as u128; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

pub fn sector_dimension(s: &Sector) -> u128 {
    binomial(s.norb, s.n_alpha) * binomial(s.norb, s.n_beta)
}

/// All `n`-bit-set masks over `norb` bits in ascending numeric order.
pub fn enumerate_strings(norb: usize, n: usize) -> Result<Vec<u64>, DetError> {
    if norb > MAX_ORBITALS {
        return Err(DetError::Capacity { norb });
    }
    if n > norb {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(binomial(norb, n) as usize);
    if n == 0 {
        out.push(0);
        return Ok(out);
    }
    let last = low_mask(n) << (norb - n);
    let mut x = low_mask(n);
    loop {
        out.push(x);
        if x == last {
            break;
        }
        // Gosper's hack: next larger integer with the same popcount.
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    Ok(out)
}

/// The full sector space in lexicographic `(alpha, beta)` order.
pub fn enumerate_space(
    norb: usize,
    n_alpha: usize,
    n_beta: usize,
) -> Result<Vec<Determinant>, DetError> {
    let s = Sector::new(norb, n_alpha, n_beta)?;
    let a = enumerate_strings(s.norb, s.n_alpha)?;
    let b = enumerate_strings(s.norb, s.n_beta)?;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in &a {
        for &y in &b {
            out.push(Determinant::new(x, y));
        }
    }
    Ok(out)
}

/// Sign of moving an electron from `from` to `to` in `mask`: `-1` to the
/// count of occupied orbitals strictly between them.
#[inline]
pub fn string_parity(mask: u64, from: usize, to: usize) -> f64 {
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    let between = low_mask(hi) & !low_mask(lo + 1);
    if (mask & between).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(target, hole, particle, sign)` for every single excitation of `mask`
/// within `norb` orbitals, ordered by hole then particle.
pub fn single_excitations(mask: u64, norb: usize) -> Vec<(u64, usize, usize, f64)> {
    let empty = !mask & low_mask(norb);
    let mut out = Vec::new();
    for i in BitIter(mask) {
        for a in BitIter(empty) {
            let target = mask ^ (1u64 << i) ^ (1u64 << a);
            out.push((target, i, a, string_parity(mask, i, a)));
        }
    }
    out
}

/// Every determinant one spin-conserving single excitation away from `d`:
/// alpha excitations first, then beta, each by hole then particle.
pub fn connected_singles(d: &Determinant, norb: usize) -> Vec<Determinant> {
    let mut out: Vec<Determinant> = single_excitations(d.alpha, norb)
        .into_iter()
        .map(|(a, ..)| Determinant::new(a, d.beta))
        .collect();
    out.extend(
        single_excitations(d.beta, norb)
            .into_iter()
            .map(|(b, ..)| Determinant::new(d.alpha, b)),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_sizes() {
        assert_eq!(enumerate_space(4, 2, 2).unwrap().len(), 36);
        let vac = enumerate_space(3, 0, 0).unwrap();
        assert_eq!(vac, vec![Determinant::new(0, 0)]);
        assert_eq!(enumerate_strings(12, 6).unwrap().len(), 924);
        assert_eq!(
            sector_dimension(&Sector::new(12, 6, 6).unwrap()),
            853_776
        );
        assert!(matches!(
            enumerate_space(65, 1, 1),
            Err(DetError::Capacity { norb: 65 })
        ));
    }

    #[test]
    fn full_width_strings() {
        assert_eq!(enumerate_strings(64, 64).unwrap(), vec![u64::MAX]);
        assert_eq!(enumerate_strings(64, 1).unwrap().len(), 64);
        assert_eq!(enumerate_strings(64, 63).unwrap().len(), 64);
    }

    #[test]
    fn space_is_sorted_and_unique() {
        let dets = enumerate_space(5, 2, 3).unwrap();
        assert_eq!(dets.len(), 100);
        assert!(dets.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn singles_count() {
        let d = Determinant::hartree_fock(2, 2);
        assert_eq!(connected_singles(&d, 4).len(), 8);
        let full = Determinant::new(0b1111, 0b0011);
        assert_eq!(connected_singles(&full, 4).len(), 4);
    }
}
