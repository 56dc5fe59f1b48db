use serde::{Deserialize, Serialize};

use super::Determinant;

/// Spin-orbital occupation numbers `n_pσ` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationVector {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl OccupationVector {
    pub fn zeros(norb: usize) -> Self {
        Self {
            alpha: vec![0.0; norb],
            beta: vec![0.0; norb],
        }
    }

    pub fn norb(&self) -> usize {
        self.alpha.len()
    }

    /// Occupations of a single determinant.
    pub fn from_determinant(d: &Determinant, norb: usize) -> Self {
        let bit = |m: u64, p: usize| ((m >> p) & 1) as f64;
        Self {
            alpha: (0..norb).map(|p| bit(d.alpha, p)).collect(),
            beta: (0..norb).map(|p| bit(d.beta, p)).collect(),
        }
    }

    /// Probability-weighted average over determinants.
    pub fn from_weighted<'a>(
        norb: usize,
        items: impl IntoIterator<Item = (&'a Determinant, f64)>,
    ) -> Self {
        let mut n = Self::zeros(norb);
        let mut total = 0.0;
        for (d, w) in items {
            total += w;
            for p in super::determinant::BitIter(d.alpha) {
                n.alpha[p] += w;
            }
            for p in super::determinant::BitIter(d.beta) {
                n.beta[p] += w;
            }
        }
        if total > 0.0 {
            n.scale(1.0 / total);
        }
        n
    }

    pub fn scale(&mut self, f: f64) {
        self.alpha.iter_mut().chain(self.beta.iter_mut()).for_each(|x| *x *= f);
    }

    /// Entrywise sum, used when averaging over batches.
    pub fn add_assign(&mut self, other: &Self) {
        for (x, y) in self.alpha.iter_mut().zip(&other.alpha) {
            *x += y;
        }
        for (x, y) in self.beta.iter_mut().zip(&other.beta) {
            *x += y;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .chain(self.beta.iter().zip(&other.beta))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Occupations with each spin's entries averaged into both spins.
    pub fn spin_averaged(&self) -> Self {
        let avg: Vec<f64> = self
            .alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Self {
            alpha: avg.clone(),
            beta: avg,
        }
    }

    pub fn sums(&self) -> (f64, f64) {
        (self.alpha.iter().sum(), self.beta.iter().sum())
    }

    pub fn is_valid(&self) -> bool {
        self.alpha.len() == self.beta.len()
            && self
                .alpha
                .iter()
                .chain(&self.beta)
                .all(|x| (0.0..=1.0).contains(x))
    }
}
