//! Run manifest: the hand-off between fragmentation, cluster solves and
//! collation. Stored as JSON.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BundleTolerances, HamIoError};

/// Correlated solver assigned to a cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Fci,
    Sqd,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Fci => "FCI",
            SolverKind::Sqd => "SQD",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRecord {
    pub id: String,
    /// FCIDUMP path, relative to the manifest directory unless absolute.
    pub fcidump: PathBuf,
    /// Fragment orbitals as indices into the global localized basis.
    pub fragment_orbitals: Vec<usize>,
    pub n_mo: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub solver: SolverKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub label: String,
    /// Size of the localized basis the fragments partition.
    pub n_basis: usize,
    pub n_elec: usize,
    pub e_nuc: f64,
    /// Mean-field energy of the full system.
    pub e_hf: f64,
    pub dispatch_threshold: usize,
    #[serde(default)]
    pub tolerances: BundleTolerances,
    pub clusters: Vec<ClusterRecord>,
}

impl RunManifest {
    /// Checks unique ids and that fragments partition `0..n_basis`.
    pub fn validate(&self) -> Result<(), HamIoError> {
        let verr = |invariant: &'static str, detail: String| HamIoError::Validation {
            invariant,
            detail,
        };
        let mut ids = BTreeSet::new();
        for c in &self.clusters {
            if !ids.insert(c.id.as_str()) {
                return Err(verr("unique cluster ids", format!("duplicate id '{}'", c.id)));
            }
        }
        let mut seen = vec![None::<&str>; self.n_basis];
        for c in &self.clusters {
            for &o in &c.fragment_orbitals {
                let slot = seen.get_mut(o).ok_or_else(|| {
                    verr(
                        "fragment partition",
                        format!("cluster '{}' names orbital {o} of {}", c.id, self.n_basis),
                    )
                })?;
                if let Some(prev) = slot {
                    return Err(verr(
                        "fragment partition",
                        format!("orbital {o} is in clusters '{prev}' and '{}'", c.id),
                    ));
                }
                *slot = Some(c.id.as_str());
            }
        }
        if let Some(o) = seen.iter().position(|s| s.is_none()) {
            return Err(verr(
                "fragment partition",
                format!("orbital {o} belongs to no cluster"),
            ));
        }
        Ok(())
    }

    pub fn cluster(&self, id: &str) -> Option<&ClusterRecord> {
        self.clusters.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HamIoError> {
        let m: RunManifest = serde_json::from_str(text).map_err(|e| HamIoError::Format {
            line: e.line(),
            msg: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HamIoError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HamIoError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
