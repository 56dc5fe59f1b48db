use serde::{Deserialize, Serialize};

use super::FragmentEnergy;
use crate::hamio::SolverKind;

pub const KCAL_PER_HARTREE: f64 = 627.5094740631;

/// Number of clusters handled by each solver.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverCensus {
    pub fci: usize,
    pub sqd: usize,
}

impl SolverCensus {
    pub fn from_fragments(f: &[FragmentEnergy]) -> Self {
        let mut c = Self::default();
        for x in f {
            match x.solver {
                SolverKind::Fci => c.fci += 1,
                SolverKind::Sqd => c.sqd += 1,
            }
        }
        c
    }
}

/// Total energy of one conformer with its fragment breakdown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformerEnergy {
    pub label: String,
    pub energy: f64,
    #[serde(default)]
    pub fragments: Vec<FragmentEnergy>,
    #[serde(default)]
    pub census: SolverCensus,
}

impl ConformerEnergy {
    pub fn new(label: impl Into<String>, energy: f64) -> Self {
        Self {
            label: label.into(),
            energy,
            fragments: Vec::new(),
            census: SolverCensus::default(),
        }
    }

    pub fn with_fragments(mut self, fragments: Vec<FragmentEnergy>) -> Self {
        self.census = SolverCensus::from_fragments(&fragments);
        self.fragments = fragments;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub method: String,
    pub conformers: Vec<ConformerEnergy>,
    /// `(E_first − E_second)` in kcal/mol when two conformers are present.
    pub delta_kcal: Option<f64>,
    /// Hash of the diagnostics stream the energies came from.
    #[serde(default)]
    pub digest: Option<String>,
}

pub fn delta_kcal(e_a: f64, e_b: f64) -> f64 {
    (e_a - e_b) * KCAL_PER_HARTREE
}

/// Two-conformer comparison, `ΔE = (E_A − E_B) · 627.5094740631`.
pub fn relative_energy_report(a: ConformerEnergy, b: ConformerEnergy, method: &str) -> EnergyReport {
    EnergyReport {
        method: method.to_string(),
        delta_kcal: Some(delta_kcal(a.energy, b.energy)),
        conformers: vec![a, b],
        digest: None,
    }
}

impl EnergyReport {
    pub fn single(c: ConformerEnergy, method: &str) -> Self {
        Self {
            method: method.to_string(),
            conformers: vec![c],
            delta_kcal: None,
            digest: None,
        }
    }

    /// Method, one energy column per conformer, and ΔE.
    pub fn table(&self) -> String {
        let mut head = vec!["Method".to_string()];
        let mut row = vec![self.method.clone()];
        for c in &self.conformers {
            head.push(format!("E_{} [Eh]", c.label));
            row.push(format!("{:.4}", c.energy));
        }
        if let Some(d) = self.delta_kcal {
            head.push("ΔE [kcal/mol]".into());
            row.push(format!("{d:.2}"));
        }
        let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
        let rule = format!("|{}\n", "---|".repeat(head.len()));
        line(&head) + &rule + &line(&row)
    }

    /// Table plus the per-fragment breakdown of every conformer.
    pub fn render(&self) -> String {
        let mut out = self.table();
        for c in &self.conformers {
            if c.fragments.is_empty() {
                continue;
            }
            out += &format!(
                "\n{} ({} FCI, {} SQD clusters)\n| Cluster | Solver | MOs | Fragment energy [Eh] | Electrons |\n|---|---|---|---|---|\n",
                c.label, c.census.fci, c.census.sqd
            );
            for f in &c.fragments {
                out += &format!(
                    "| {} | {} | {} | {:.10} | {:.6} |\n",
                    f.id, f.solver, f.n_mo, f.total, f.electrons
                );
            }
        }
        if let Some(d) = &self.digest {
            out += &format!("\ndiagnostics sha256 {d}\n");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
