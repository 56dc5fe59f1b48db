use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SqdError;
use crate::detcore::{low_mask, Determinant, OccupationVector, Sector};
use crate::hamio::SampleSet;

/// Picks an index with probability proportional to `weights`, uniformly when
/// they sum to zero.
fn pick(rng: &mut ChaCha8Rng, cands: &[usize], weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        let mut u = rng.random::<f64>() * total;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                return cands[k];
            }
            u -= w;
        }
        // rounding: the last positive weight
        let k = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        cands[k]
    } else {
        cands[rng.random_range(0..cands.len())]
    }
}

/// Repairs one spin's string to exactly `target` electrons.
///
/// Surplus electrons are removed one at a time from occupied orbital `p`
/// with weight `1 − n_p`; missing ones are added to an empty orbital with
/// weight `n_p`.
pub fn recover_half_string(
    mut s: u64,
    norb: usize,
    target: usize,
    occ: &[f64],
    rng: &mut ChaCha8Rng,
) -> u64 {
    s &= low_mask(norb);
    while (s.count_ones() as usize) > target {
        let cands: Vec<usize> = (0..norb).filter(|&p| s >> p & 1 == 1).collect();
        let w: Vec<f64> = cands.iter().map(|&p| (1.0 - occ[p]).clamp(0.0, 1.0)).collect();
        s &= !(1 << pick(rng, &cands, &w));
    }
    while (s.count_ones() as usize) < target {
        let cands: Vec<usize> = (0..norb).filter(|&p| s >> p & 1 == 0).collect();
        let w: Vec<f64> = cands.iter().map(|&p| occ[p].clamp(0.0, 1.0)).collect();
        s |= 1 << pick(rng, &cands, &w);
    }
    s
}

fn check_register(raw: &SampleSet, sector: &Sector) -> Result<(), SqdError> {
    if raw.is_empty() {
        return Err(SqdError::NoSamples);
    }
    if raw.n_qubits() != 2 * sector.norb {
        return Err(SqdError::Register {
            got: raw.n_qubits(),
            want: 2 * sector.norb,
        });
    }
    Ok(())
}

/// Every shot mapped into the sector. In-sector shots pass through; each
/// out-of-sector shot is repaired independently, so repeated bitstrings may
/// land on different determinants. Returns merged counts in determinant
/// order.
pub fn postselect_and_recover(
    raw: &SampleSet,
    occ: &OccupationVector,
    sector: Sector,
    seed: u64,
) -> Result<Vec<(Determinant, u64)>, SqdError> {
    check_register(raw, &sector)?;
    let n = sector.norb;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: BTreeMap<Determinant, u64> = BTreeMap::new();
    for (bits, count) in raw.iter() {
        let d = Determinant::from_bits(bits, n);
        if d.in_sector(&sector) {
            *out.entry(d).or_insert(0) += count;
            continue;
        }
        for _ in 0..count {
            let a = recover_half_string(d.alpha, n, sector.n_alpha, &occ.alpha, &mut rng);
            let b = recover_half_string(d.beta, n, sector.n_beta, &occ.beta, &mut rng);
            *out.entry(Determinant::new(a, b)).or_insert(0) += 1;
        }
    }
    Ok(out.into_iter().collect())
}

/// Keeps only in-sector shots; the no-recovery baseline.
pub fn postselect_only(raw: &SampleSet, sector: Sector) -> SampleSet {
    let mut out = SampleSet::new(raw.n_qubits());
    for (bits, count) in raw.iter() {
        if Determinant::from_bits(bits, sector.norb).in_sector(&sector) {
            out.add(bits, count);
        }
    }
    out
}

/// Shot-weighted occupations of the in-sector shots, or the Hartree–Fock
/// pattern when there are none.
pub fn initial_occupations(raw: &SampleSet, sector: Sector) -> OccupationVector {
    let n = sector.norb;
    let good: Vec<(Determinant, f64)> = raw
        .iter()
        .map(|(b, c)| (Determinant::from_bits(b, n), c as f64))
        .filter(|(d, _)| d.in_sector(&sector))
        .collect();
    if good.is_empty() {
        OccupationVector::from_determinant(&sector.hartree_fock(), n)
    } else {
        OccupationVector::from_weighted(n, good.iter().map(|(d, w)| (d, *w)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamio::parse_bitstring;

    #[test]
    fn forced_flip_follows_degenerate_weights() {
        let s = parse_bitstring("1110").unwrap() as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let r = recover_half_string(s, 4, 2, &[1.0, 1.0, 0.0, 0.0], &mut rng);
            assert_eq!(r, parse_bitstring("1100").unwrap() as u64);
        }
    }

    #[test]
    fn deficit_sets_likely_orbitals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = recover_half_string(0b0001, 4, 2, &[1.0, 0.0, 0.0, 1.0], &mut rng);
        assert_eq!(r, 0b1001);
    }

    #[test]
    fn zero_weights_fall_back_to_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut seen = [false; 4];
        for _ in 0..200 {
            let r = recover_half_string(0, 4, 1, &[0.0; 4], &mut rng);
            assert_eq!(r.count_ones(), 1);
            seen[r.trailing_zeros() as usize] = true;
        }
        assert!(seen.iter().all(|&x| x));
    }

    #[test]
    fn in_sector_shots_pass_through() {
        let sector = Sector::new(2, 1, 1).unwrap();
        let mut raw = SampleSet::new(4);
        raw.add(Determinant::new(0b01, 0b10).to_bits(2), 7);
        let occ = OccupationVector::zeros(2);
        let out = postselect_and_recover(&raw, &occ, sector, 3).unwrap();
        assert_eq!(out, vec![(Determinant::new(0b01, 0b10), 7)]);
    }

    #[test]
    fn hf_fallback_when_nothing_in_sector() {
        let sector = Sector::new(3, 1, 1).unwrap();
        let mut raw = SampleSet::new(6);
        raw.add(0b111111, 4);
        let occ = initial_occupations(&raw, sector);
        assert_eq!(occ.alpha, vec![1.0, 0.0, 0.0]);
        assert_eq!(occ.beta, vec![1.0, 0.0, 0.0]);
    }
}
