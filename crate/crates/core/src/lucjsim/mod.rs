//! LUCJ parameters from t2 amplitudes, exact statevector preparation over a
//! particle-number sector, and simulated (optionally noisy) measurement.

mod amplitudes;
mod factorization;
mod params;
mod sampling;
mod statevector;

pub use amplitudes::{mp2_amplitudes, AmplitudeSet};
pub use factorization::{
    chi, double_factorize_t2, reconstruct_t2, DfTerm, DoubleFactorization,
};
pub use params::{antisymmetric_log, lucj_from_factorization, Connectivity, LucjLayer, LucjParams};
pub use sampling::{inject_readout_noise, inject_readout_noise_with, sample_counts, NoiseModel};
pub use statevector::{prepare_lucj_state, Statevector, DEFAULT_STATEVECTOR_BUDGET};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LucjError {
    #[error("near-zero MP2 denominator {denominator:e} for (i={i}, j={j}, a={a}, b={b})")]
    Degenerate {
        i: usize,
        j: usize,
        a: usize,
        b: usize,
        denominator: f64,
    },
    #[error("t2 is not symmetric under (i,a)<->(j,b): max deviation {max_dev:e}")]
    Asymmetric { max_dev: f64 },
    #[error("matrix logarithm is ambiguous: {0}; re-gauge the orbital rotation")]
    Branch(String),
    #[error("sector dimension {dim} exceeds the statevector budget of {budget}")]
    Capacity { dim: u128, budget: usize },
    #[error("{0}")]
    Domain(String),
}
