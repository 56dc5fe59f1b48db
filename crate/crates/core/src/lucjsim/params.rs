use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{DoubleFactorization, LucjError};
use crate::scalar::Real;

/// Eigenvalues of the symmetric part of `U` closer than this to `−1` make
/// the logarithm branch ambiguous.
const BRANCH_MARGIN: f64 = 1e-8;

/// Which spin-orbital pairs may carry a density-density coupling.
/// Spin-orbital `pσ` is qubit `p + σM`; self-pairs are always allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// No truncation.
    #[default]
    AllToAll,
    /// Nearest neighbours along the qubit line `0 … 2M−1`.
    Line,
    /// Nearest neighbours within each spin chain plus the `pα–pβ` rungs.
    Ladder,
    /// Adjacency lists over spin-orbital indices, symmetrized.
    Explicit(Vec<Vec<usize>>),
}

impl Connectivity {
    pub fn allows(&self, a: usize, b: usize, norb: usize) -> bool {
        if a == b {
            return true;
        }
        match self {
            Connectivity::AllToAll => true,
            Connectivity::Line => a.abs_diff(b) == 1,
            Connectivity::Ladder => {
                let (pa, sa) = (a % norb, a / norb);
                let (pb, sb) = (b % norb, b / norb);
                if sa == sb {
                    pa.abs_diff(pb) == 1
                } else {
                    pa == pb
                }
            }
            Connectivity::Explicit(adj) => {
                adj.get(a).is_some_and(|l| l.contains(&b)) || adj.get(b).is_some_and(|l| l.contains(&a))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LucjLayer<T> {
    /// `M × M` antisymmetric generator, shared by both spins.
    pub k: DMatrix<T>,
    /// `2M × 2M` symmetric coupling over spin-orbitals.
    pub j: DMatrix<T>,
}

impl<T: Real> LucjLayer<T> {
    pub fn zero(norb: usize) -> Self {
        Self {
            k: DMatrix::zeros(norb, norb),
            j: DMatrix::zeros(2 * norb, 2 * norb),
        }
    }
}

/// `|Ψ⟩ = Π_μ e^{K̂_μ} e^{iĴ_μ} e^{−K̂_μ} |x_RHF⟩`, layer 0 leftmost.
#[derive(Clone, Debug, PartialEq)]
pub struct LucjParams<T> {
    pub norb: usize,
    pub layers: Vec<LucjLayer<T>>,
}

impl<T: Real> LucjParams<T> {
    pub fn identity(norb: usize) -> Self {
        Self {
            norb,
            layers: vec![LucjLayer::zero(norb)],
        }
    }
}

/// Principal logarithm of a proper orthogonal matrix: the antisymmetric
/// `K` with `exp(K) = U`.
///
/// With `S = (U + Uᵀ)/2` and `A = (U − Uᵀ)/2`, which commute,
/// `K = A · f(S)` where `f(c) = acos(c) / sqrt(1 − c²)`.
pub fn antisymmetric_log<T: Real>(u: &DMatrix<T>) -> Result<DMatrix<T>, LucjError> {
    let n = u.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if u.determinant() < T::zero() {
        return Err(LucjError::Branch("orbital rotation has determinant -1".into()));
    }
    let half = T::lit(0.5);
    let s = (u + u.transpose()) * half;
    let a = (u - u.transpose()) * half;
    let eig = s.symmetric_eigen();
    let mut f = eig.eigenvalues.clone();
    for c in f.iter_mut() {
        let x = c.clamp(-T::one(), T::one());
        if x < T::lit(-1.0 + BRANCH_MARGIN) {
            return Err(LucjError::Branch(format!(
                "rotation angle at pi (cos = {})",
                x.to_f64_lossy()
            )));
        }
        let d = T::one() - x;
        *c = if d < T::lit(1e-12) {
            T::one() + d / T::lit(3.0)
        } else {
            x.acos() / (d * (T::one() + x)).sqrt()
        };
    }
    let fs = &eig.eigenvectors * DMatrix::from_diagonal(&f) * eig.eigenvectors.transpose();
    let k = a * fs;
    Ok((&k - k.transpose()) * half)
}

/// LUCJ parameters from the leading `n_layers` factorization terms.
///
/// Each layer's `K` is the logarithm of the term's rotation. The spin-orbital
/// coupling is `J_{pσ,rτ} = ½ J_pr` for every spin pair, so that the phase
/// `Σ J_{pσ,rτ} n_pσ n_rτ` is `½ Σ J_pr N_p N_r`. Couplings between pairs the
/// connectivity does not allow are zeroed. An empty factorization gives a
/// single identity layer.
pub fn lucj_from_factorization<T: Real>(
    df: &DoubleFactorization<T>,
    connectivity: &Connectivity,
    n_layers: usize,
) -> Result<LucjParams<T>, LucjError> {
    let n = df.norb();
    if df.is_empty() {
        return Ok(LucjParams::identity(n));
    }
    if n_layers == 0 || n_layers > df.len() {
        return Err(LucjError::Domain(format!(
            "{n_layers} layers requested from {} factorization terms",
            df.len()
        )));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for term in &df.terms[..n_layers] {
        let k = antisymmetric_log(&term.u)?;
        let j = DMatrix::from_fn(2 * n, 2 * n, |a, b| {
            if connectivity.allows(a, b, n) {
                term.j[(a % n, b % n)] * T::lit(0.5)
            } else {
                T::zero()
            }
        });
        layers.push(LucjLayer { k, j });
    }
    Ok(LucjParams { norb: n, layers })
}
