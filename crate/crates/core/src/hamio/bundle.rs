//! Mean-field bundle container.
//!
//! A JSON document with named dense matrices (row-major nested arrays):
//!
//! ```text
//! {
//!   "format": "fragci-meanfield", "version": 1, "label": "h6_chain",
//!   "n_ao": N, "n_mo": K, "n_elec": n, "e_nuc": E,
//!   "ao_atoms": [atom index per AO],            (optional)
//!   "overlap":  N x N,  "mo_coeff": N x K,  "mo_energy": K,
//!   "density":  N x N,  "hcore":    N x N,
//!   "eri":      N^4 flat, chemists' (mn|ls) row-major,
//!   "reference": {"e_hf": ..., "e_fci": ...}    (optional)
//! }
//! ```
//!
//! Every invariant is checked at load; violations are rejected.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::HamIoError;
use crate::scalar::Real;

pub const BUNDLE_FORMAT: &str = "fragci-meanfield";

/// Load-time validation tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BundleTolerances {
    pub orthonormality: f64,
    pub electron_count: f64,
    pub idempotency: f64,
}

impl Default for BundleTolerances {
    fn default() -> Self {
        Self {
            orthonormality: 1e-8,
            electron_count: 1e-8,
            idempotency: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEnergies {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_hf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_fci: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBundle {
    format: String,
    version: u32,
    #[serde(default)]
    label: String,
    n_ao: usize,
    n_mo: usize,
    n_elec: usize,
    e_nuc: f64,
    #[serde(default)]
    ao_atoms: Option<Vec<usize>>,
    overlap: Vec<Vec<f64>>,
    mo_coeff: Vec<Vec<f64>>,
    mo_energy: Vec<f64>,
    density: Vec<Vec<f64>>,
    hcore: Vec<Vec<f64>>,
    eri: Vec<f64>,
    #[serde(default)]
    reference: Option<ReferenceEnergies>,
}

/// Restricted closed-shell mean-field solution in an atomic-orbital basis.
#[derive(Clone, Debug)]
pub struct MeanFieldBundle<T> {
    pub label: String,
    pub n_ao: usize,
    pub n_elec: usize,
    pub e_nuc: T,
    /// Atom index of each AO.
    pub ao_atoms: Vec<usize>,
    pub overlap: DMatrix<T>,
    pub mo_coeff: DMatrix<T>,
    pub mo_energy: DVector<T>,
    pub density: DMatrix<T>,
    pub hcore: DMatrix<T>,
    /// `(mn|ls)` row-major over `n_ao^4`.
    pub eri: Vec<T>,
    pub reference: ReferenceEnergies,
}

fn dims_err(detail: String) -> HamIoError {
    HamIoError::Validation {
        invariant: "dimensions",
        detail,
    }
}

fn to_matrix<T: Real>(
    name: &str,
    rows: &[Vec<f64>],
    nr: usize,
    nc: usize,
) -> Result<DMatrix<T>, HamIoError> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(dims_err(format!("{name} is not {nr}x{nc}")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| T::lit(rows[i][j])))
}

fn from_matrix<T: Real>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].to_f64_lossy()).collect())
        .collect()
}

impl<T: Real> MeanFieldBundle<T> {
    pub fn n_mo(&self) -> usize {
        self.mo_coeff.ncols()
    }

    pub fn n_occ(&self) -> usize {
        self.n_elec / 2
    }

    /// Checks every invariant of a closed-shell restricted reference.
    pub fn validate(&self, tol: &BundleTolerances) -> Result<(), HamIoError> {
        let n = self.n_ao;
        let s = &self.overlap;
        let verr = |invariant: &'static str, detail: String| HamIoError::Validation {
            invariant,
            detail,
        };
        if self.n_elec % 2 != 0 {
            return Err(verr(
                "closed shell",
                format!("odd electron count {}", self.n_elec),
            ));
        }
        if (s - s.transpose()).amax() > T::symmetry_floor() {
            return Err(verr("overlap", "overlap matrix is not symmetric".into()));
        }
        let eig = s.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig <= T::zero() {
            return Err(verr(
                "overlap",
                format!("overlap is not positive definite (min eigenvalue {min_eig})"),
            ));
        }
        let ctsc = self.mo_coeff.transpose() * s * &self.mo_coeff;
        let dev = (&ctsc - DMatrix::<T>::identity(ctsc.nrows(), ctsc.ncols())).amax();
        if dev > T::lit(tol.orthonormality) {
            return Err(verr(
                "orthonormality",
                format!("|C^T S C - 1| = {dev:e}"),
            ));
        }
        let ne = (&self.density * s).trace();
        let dn = (ne - T::lit(self.n_elec as f64)).abs();
        if dn > T::lit(tol.electron_count) {
            return Err(verr(
                "electron count",
                format!("trace(D S) = {ne} but n_elec = {}", self.n_elec),
            ));
        }
        // Idempotency of D/2 in the symmetrically orthogonalized basis.
        let sqrt_s = {
            let mut e = eig.clone();
            e.eigenvalues.apply(|x| *x = x.sqrt());
            e.recompose()
        };
        let dt = &sqrt_s * &self.density * &sqrt_s;
        let dev = (&dt * &dt - &dt * T::lit(2.0)).amax();
        if dev > T::lit(tol.idempotency) {
            return Err(verr(
                "idempotency",
                format!("|D S D - 2 D| = {dev:e} in the orthogonal basis"),
            ));
        }
        if self.ao_atoms.len() != n {
            return Err(dims_err(format!(
                "ao_atoms has {} entries for {n} AOs",
                self.ao_atoms.len()
            )));
        }
        Ok(())
    }

    /// Mean-field energy `E_nuc + tr(D h) + ½ tr(D (J - ½K))`.
    pub fn hf_energy(&self) -> T {
        let n = self.n_ao;
        let d = &self.density;
        let half = T::lit(0.5);
        let mut e = self.e_nuc + (d * &self.hcore).trace();
        for m in 0..n {
            for nn in 0..n {
                let mut v = T::zero();
                for l in 0..n {
                    for s in 0..n {
                        let j = self.eri[((m * n + nn) * n + l) * n + s];
                        let k = self.eri[((m * n + s) * n + l) * n + nn];
                        v += d[(l, s)] * (j - half * k);
                    }
                }
                e += half * d[(m, nn)] * v;
            }
        }
        e
    }
}

pub fn parse_meanfield_bundle<T: Real>(
    text: &str,
    tol: &BundleTolerances,
) -> Result<MeanFieldBundle<T>, HamIoError> {
    let raw: RawBundle =
        serde_json::from_str(text).map_err(|e| HamIoError::Format {
            line: e.line(),
            msg: e.to_string(),
        })?;
    if raw.format != BUNDLE_FORMAT {
        return Err(HamIoError::Format {
            line: 0,
            msg: format!("unknown container format '{}'", raw.format),
        });
    }
    if raw.version != 1 {
        return Err(HamIoError::Format {
            line: 0,
            msg: format!("unsupported bundle version {}", raw.version),
        });
    }
    let n = raw.n_ao;
    let k = raw.n_mo;
    if raw.mo_energy.len() != k {
        return Err(dims_err(format!("mo_energy has {} entries", raw.mo_energy.len())));
    }
    if raw.eri.len() != n.pow(4) {
        return Err(dims_err(format!("eri has {} entries, need {}", raw.eri.len(), n.pow(4))));
    }
    let bundle = MeanFieldBundle {
        label: raw.label,
        n_ao: n,
        n_elec: raw.n_elec,
        e_nuc: T::lit(raw.e_nuc),
        ao_atoms: raw.ao_atoms.unwrap_or_else(|| (0..n).collect()),
        overlap: to_matrix("overlap", &raw.overlap, n, n)?,
        mo_coeff: to_matrix("mo_coeff", &raw.mo_coeff, n, k)?,
        mo_energy: DVector::from_iterator(k, raw.mo_energy.iter().map(|&x| T::lit(x))),
        density: to_matrix("density", &raw.density, n, n)?,
        hcore: to_matrix("hcore", &raw.hcore, n, n)?,
        eri: raw.eri.iter().map(|&x| T::lit(x)).collect(),
        reference: raw.reference.unwrap_or_default(),
    };
    bundle.validate(tol)?;
    Ok(bundle)
}

pub fn load_meanfield_bundle<T: Real>(
    path: impl AsRef<Path>,
    tol: &BundleTolerances,
) -> Result<MeanFieldBundle<T>, HamIoError> {
    let text = std::fs::read_to_string(path)?;
    parse_meanfield_bundle(&text, tol)
}

pub fn meanfield_bundle_string<T: Real>(b: &MeanFieldBundle<T>) -> String {
    let raw = RawBundle {
        format: BUNDLE_FORMAT.into(),
        version: 1,
        label: b.label.clone(),
        n_ao: b.n_ao,
        n_mo: b.n_mo(),
        n_elec: b.n_elec,
        e_nuc: b.e_nuc.to_f64_lossy(),
        ao_atoms: Some(b.ao_atoms.clone()),
        overlap: from_matrix(&b.overlap),
        mo_coeff: from_matrix(&b.mo_coeff),
        mo_energy: b.mo_energy.iter().map(|x| x.to_f64_lossy()).collect(),
        density: from_matrix(&b.density),
        hcore: from_matrix(&b.hcore),
        eri: b.eri.iter().map(|x| x.to_f64_lossy()).collect(),
        reference: Some(b.reference.clone()),
    };
    serde_json::to_string(&raw).expect("bundle serializes")
}

pub fn save_meanfield_bundle<T: Real>(
    b: &MeanFieldBundle<T>,
    path: impl AsRef<Path>,
) -> Result<(), HamIoError> {
    std::fs::write(path, meanfield_bundle_string(b))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_ao(density_scale: f64) -> String {
        // Orthonormal AOs, one doubly occupied orbital.
        format!(
            r#"{{"format":"fragci-meanfield","version":1,"n_ao":2,"n_mo":2,"n_elec":2,
            "e_nuc":0.5,"overlap":[[1,0],[0,1]],"mo_coeff":[[1,0],[0,1]],"mo_energy":[-0.5,0.3],
            "density":[[{},0],[0,0]],"hcore":[[-1,0.1],[0.1,-0.5]],
            "eri":[0.6,0,0,0.4, 0,0.1,0.1,0, 0,0.1,0.1,0, 0.4,0,0,0.7]}}"#,
            2.0 * density_scale
        )
    }

    #[test]
    fn accepts_idempotent_two_ao_bundle() {
        let b: MeanFieldBundle<f64> =
            parse_meanfield_bundle(&two_ao(1.0), &BundleTolerances::default()).unwrap();
        assert_eq!(b.n_occ(), 1);
        assert_eq!(b.ao_atoms, vec![0, 1]);
        // E = E_nuc + 2 h00 + (00|00)
        assert!((b.hf_energy() - (0.5 - 2.0 + 0.6)).abs() < 1e-14);
    }

    #[test]
    fn rejects_electron_count_breach() {
        let err = parse_meanfield_bundle::<f64>(&two_ao(1.25), &BundleTolerances::default())
            .unwrap_err();
        assert!(err.to_string().contains("electron count"), "{err}");
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let text = two_ao(1.0).replace(r#""mo_energy":[-0.5,0.3]"#, r#""mo_energy":[-0.5]"#);
        let err = parse_meanfield_bundle::<f64>(&text, &BundleTolerances::default()).unwrap_err();
        assert!(err.to_string().contains("dimensions"), "{err}");
    }
}
