use serde::{Deserialize, Serialize};

use super::SqdError;

/// Default cap on a batch subspace dimension.
pub const DEFAULT_SUBSPACE_CAP: usize = 2_000_000;

/// Parameters of the self-consistent recovery loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    pub samples_per_batch: usize,
    pub n_batches: usize,
    /// Hartree.
    pub e_tol: f64,
    pub occ_tol: f64,
    pub max_iters: usize,
    /// Minimum `|c|` for a determinant to be carried into every batch of the
    /// next iteration.
    pub carryover_threshold: f64,
    /// Minimum `|c|` for a determinant to seed the single-excitation
    /// augmentation.
    pub ext_dominance_threshold: f64,
    pub seed: u64,
    /// Keep earlier carryover determinants instead of re-selecting.
    pub accumulate_carryover: bool,
    /// Merge alpha and beta half-strings into one pool when the sector is
    /// closed shell.
    pub spin_symmetrize: bool,
    pub subspace_cap: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            samples_per_batch: 3000,
            n_batches: 10,
            e_tol: 1e-8,
            occ_tol: 1e-5,
            max_iters: 5,
            carryover_threshold: 1e-4,
            ext_dominance_threshold: 1e-5,
            seed: 0,
            accumulate_carryover: false,
            spin_symmetrize: true,
            subspace_cap: DEFAULT_SUBSPACE_CAP,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<(), SqdError> {
        let bad = |m: String| Err(SqdError::Config(m));
        if self.samples_per_batch == 0 {
            return bad("samples_per_batch must be at least 1".into());
        }
        if self.n_batches == 0 {
            return bad("n_batches must be at least 1".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.subspace_cap == 0 {
            return bad("subspace_cap must be at least 1".into());
        }
        for (name, v) in [
            ("e_tol", self.e_tol),
            ("occ_tol", self.occ_tol),
            ("carryover_threshold", self.carryover_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        // zero is allowed here: it selects every determinant of the best batch
        if !(self.ext_dominance_threshold >= 0.0 && self.ext_dominance_threshold.is_finite()) {
            return bad(format!(
                "ext_dominance_threshold must be non-negative, got {}",
                self.ext_dominance_threshold
            ));
        }
        Ok(())
    }
}
