//! Fragment embedding with exact and sample-based configuration interaction
//! cluster solvers.
//!
//! Numerical types are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the usual double-precision instantiations.

pub mod assemble;
pub mod cisolve;
pub mod detcore;
pub mod ewfrag;
pub mod hamio;
pub mod lucjsim;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod scalar;
pub mod sqdengine;

pub use scalar::Real;

pub type ClusterHamiltonian = hamio::ClusterHamiltonian<f64>;
pub type MeanFieldBundle = hamio::MeanFieldBundle<f64>;
pub type CiVector = cisolve::CiVector<f64>;
pub type FciSolution = cisolve::FciSolution<f64>;
pub type LucjParams = lucjsim::LucjParams<f64>;
pub type Statevector = lucjsim::Statevector<f64>;
pub type SqdSolution = sqdengine::SqdSolution<f64>;
pub type EmbeddingSystem = ewfrag::EmbeddingSystem<f64>;
pub type EwfCluster = ewfrag::EwfCluster<f64>;
pub type ClusterResult = assemble::ClusterResult<f64>;

pub type ClusterHamiltonian32 = hamio::ClusterHamiltonian<f32>;
pub type CiVector32 = cisolve::CiVector<f32>;
pub type Statevector32 = lucjsim::Statevector<f32>;
