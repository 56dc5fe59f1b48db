use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LucjError, Statevector};
use crate::hamio::SampleSet;
use crate::scalar::Real;

/// Draws `shots` bitstrings from the Born distribution of `psi`.
pub fn sample_counts<T: Real>(psi: &Statevector<T>, shots: u64, seed: u64) -> SampleSet {
    let probs = psi.probabilities();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let norb = psi.sector.norb;
    let mut counts = vec![0u64; probs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        counts[k] += 1;
    }
    let mut set = SampleSet::new(2 * norb);
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 {
            set.add(psi.determinant(k).to_bits(norb), c);
        }
    }
    set
}

/// Readout flip probabilities per bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Probability that a `0` is read as `1`.
    pub p01: f64,
    /// Probability that a `1` is read as `0`.
    pub p10: f64,
}

impl NoiseModel {
    pub fn uniform(eps: f64) -> Self {
        Self { p01: eps, p10: eps }
    }
}

/// Flips every bit of every shot independently with probability `eps`.
pub fn inject_readout_noise(s: &SampleSet, eps: f64, seed: u64) -> Result<SampleSet, LucjError> {
    inject_readout_noise_with(s, NoiseModel::uniform(eps), seed)
}

/// Asymmetric readout noise.
pub fn inject_readout_noise_with(
    s: &SampleSet,
    model: NoiseModel,
    seed: u64,
) -> Result<SampleSet, LucjError> {
    for p in [model.p01, model.p10] {
        if !(0.0..=1.0).contains(&p) {
            return Err(LucjError::Domain(format!("flip probability {p} outside [0, 1]")));
        }
    }
    let n = s.n_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SampleSet::new(n);
    for (bits, count) in s.iter() {
        for _ in 0..count {
            let mut x = bits;
            for q in 0..n {
                let p = if bits >> q & 1 == 1 { model.p10 } else { model.p01 };
                if rng.random::<f64>() < p {
                    x ^= 1u128 << q;
                }
            }
            out.add(x, 1);
        }
    }
    Ok(out)
}
