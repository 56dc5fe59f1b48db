use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::LucjError;
use crate::hamio::ClusterHamiltonian;
use crate::scalar::Real;

/// Smallest admissible `|ε_i + ε_j − ε_a − ε_b|`.
const MIN_DENOMINATOR: f64 = 1e-8;

/// Closed-shell cluster amplitudes. Virtual indices are relative to the
/// first virtual orbital.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeSet<T> {
    pub n_occ: usize,
    pub n_virt: usize,
    pub t1: DMatrix<T>,
    /// `t_ij^ab` at `((i n_occ + j) n_virt + a) n_virt + b`.
    pub t2: Vec<T>,
    pub eps: DVector<T>,
    /// Correlation energy `Σ t_ij^ab [2(ia|jb) − (ib|ja)]` when computed.
    pub e_corr: Option<T>,
}

#[derive(Serialize, Deserialize)]
struct RawAmplitudes {
    n_occ: usize,
    n_virt: usize,
    #[serde(default)]
    t1: Vec<f64>,
    t2: Vec<f64>,
    #[serde(default)]
    eps: Vec<f64>,
}

impl<T: Real> AmplitudeSet<T> {
    #[inline]
    pub fn t2_index(&self, i: usize, j: usize, a: usize, b: usize) -> usize {
        ((i * self.n_occ + j) * self.n_virt + a) * self.n_virt + b
    }

    #[inline]
    pub fn t2(&self, i: usize, j: usize, a: usize, b: usize) -> T {
        self.t2[self.t2_index(i, j, a, b)]
    }

    pub fn norb(&self) -> usize {
        self.n_occ + self.n_virt
    }

    /// Largest violation of `t_ij^ab = t_ji^ba`.
    pub fn pair_asymmetry(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.n_occ {
            for j in 0..self.n_occ {
                for a in 0..self.n_virt {
                    for b in 0..self.n_virt {
                        dev = dev.max((self.t2(i, j, a, b) - self.t2(j, i, b, a)).abs());
                    }
                }
            }
        }
        dev
    }

    /// Reads an external amplitude file: JSON with `n_occ`, `n_virt` and
    /// dense row-major `t1` (optional), `t2` and `eps` (optional) blocks.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LucjError> {
        let text = std::fs::read_to_string(path).map_err(|e| LucjError::Domain(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, LucjError> {
        let raw: RawAmplitudes =
            serde_json::from_str(text).map_err(|e| LucjError::Domain(e.to_string()))?;
        let (no, nv) = (raw.n_occ, raw.n_virt);
        if raw.t2.len() != no * no * nv * nv {
            return Err(LucjError::Domain(format!(
                "t2 block has {} entries, header implies {}",
                raw.t2.len(),
                no * no * nv * nv
            )));
        }
        let t1 = if raw.t1.is_empty() {
            DMatrix::zeros(no, nv)
        } else if raw.t1.len() == no * nv {
            DMatrix::from_row_slice(no, nv, &raw.t1).map(T::lit)
        } else {
            return Err(LucjError::Domain("t1 block does not match the header".into()));
        };
        Ok(Self {
            n_occ: no,
            n_virt: nv,
            t1,
            t2: raw.t2.into_iter().map(T::lit).collect(),
            eps: DVector::from_iterator(raw.eps.len(), raw.eps.into_iter().map(T::lit)),
            e_corr: None,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawAmplitudes {
            n_occ: self.n_occ,
            n_virt: self.n_virt,
            t1: self.t1.transpose().iter().map(|x| x.to_f64_lossy()).collect(),
            t2: self.t2.iter().map(|x| x.to_f64_lossy()).collect(),
            eps: self.eps.iter().map(|x| x.to_f64_lossy()).collect(),
        };
        serde_json::to_string(&raw).expect("amplitudes serialize")
    }
}

/// First-order amplitudes `t_ij^ab = (ia|jb) / (ε_i + ε_j − ε_a − ε_b)` for
/// a closed-shell reference occupying the lowest `n_alpha` orbitals.
///
/// Orbital energies default to the diagonal of the reference Fock matrix.
pub fn mp2_amplitudes<T: Real>(
    ham: &ClusterHamiltonian<T>,
    eps: Option<&DVector<T>>,
) -> Result<AmplitudeSet<T>, LucjError> {
    if ham.n_alpha() != ham.n_beta() {
        return Err(LucjError::Domain(format!(
            "MP2 needs a closed-shell sector, got ({}, {})",
            ham.n_alpha(),
            ham.n_beta()
        )));
    }
    let n = ham.norb();
    let no = ham.n_alpha();
    let nv = n - no;
    let eps = match eps {
        Some(e) if e.len() == n => e.clone(),
        Some(e) => {
            return Err(LucjError::Domain(format!(
                "{} orbital energies for {n} orbitals",
                e.len()
            )))
        }
        None => ham.reference_fock().diagonal(),
    };
    let mut t2 = vec![T::zero(); no * no * nv * nv];
    let mut e = T::zero();
    let two = T::lit(2.0);
    for i in 0..no {
        for j in 0..no {
            for a in 0..nv {
                for b in 0..nv {
                    let (va, vb) = (no + a, no + b);
                    let den = eps[i] + eps[j] - eps[va] - eps[vb];
                    if den.abs().to_f64_lossy() < MIN_DENOMINATOR {
                        return Err(LucjError::Degenerate {
                            i,
                            j,
                            a: va,
                            b: vb,
                            denominator: den.to_f64_lossy(),
                        });
                    }
                    let iajb = ham.eri(i, va, j, vb);
                    let t = iajb / den;
                    t2[((i * no + j) * nv + a) * nv + b] = t;
                    e += t * (two * iajb - ham.eri(i, vb, j, va));
                }
            }
        }
    }
    Ok(AmplitudeSet {
        n_occ: no,
        n_virt: nv,
        t1: DMatrix::zeros(no, nv),
        t2,
        eps,
        e_corr: Some(e),
    })
}
