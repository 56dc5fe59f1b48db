use std::path::{Path, PathBuf};

use fragci::ewfrag::DEFAULT_ETA;
use fragci::lucjsim::{Connectivity, DEFAULT_STATEVECTOR_BUDGET};
use fragci::sqdengine::{RecoveryConfig, DEFAULT_DISPATCH_THRESHOLD};
use serde::{Deserialize, Serialize};

/// Environment variable that overrides the configured work directory.
pub const WORKDIR_ENV: &str = "FRAGCI_WORKDIR";

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{field}: {value} is out of range ({expected})")]
    Range {
        field: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("missing required setting '{0}'")]
    Missing(&'static str),
    #[error("contradictory settings: {0}")]
    Contradiction(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Fragmentation {
    /// One fragment per atom, from the bundle's AO labels.
    #[default]
    PerAtom,
    /// The whole basis as a single fragment.
    Whole,
    Explicit {
        groups: Vec<Vec<usize>>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SampleSource {
    /// Exact LUCJ statevector sampling.
    #[default]
    Simulator,
    /// `<dir>/<cluster id>.samples` files in the bitstring count format.
    Directory { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LucjSettings {
    /// Number of factorization terms used as circuit layers, clamped to the
    /// number available; all terms when unset. A single term is rank one in
    /// the (ia) pair index, so it carries no same-spin doubles.
    pub layers: Option<usize>,
    pub connectivity: Connectivity,
    /// Largest sector dimension the statevector simulator accepts.
    pub statevector_budget: usize,
}

impl Default for LucjSettings {
    fn default() -> Self {
        Self {
            layers: None,
            connectivity: Connectivity::AllToAll,
            statevector_budget: DEFAULT_STATEVECTOR_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub bundle: PathBuf,
    pub workdir: PathBuf,
    /// Conformer label in reports; defaults to the bundle file stem.
    pub label: Option<String>,
    pub method: String,
    pub fragmentation: Fragmentation,
    pub eta: f64,
    pub dispatch_threshold: usize,
    pub recovery: RecoveryConfig,
    pub samples: SampleSource,
    pub noise_eps: f64,
    pub shots: u64,
    pub seed: u64,
    pub workers: usize,
    pub lucj: LucjSettings,
    pub fci_budget: usize,
    /// Treat an SQD cluster whose recovery loop hit `max_iters` as a failure.
    pub require_convergence: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            workdir: PathBuf::from("fragci-run"),
            label: None,
            method: "SQD-EWF".into(),
            fragmentation: Fragmentation::PerAtom,
            eta: DEFAULT_ETA,
            dispatch_threshold: DEFAULT_DISPATCH_THRESHOLD,
            recovery: RecoveryConfig::default(),
            samples: SampleSource::Simulator,
            noise_eps: 0.0,
            shots: 1_000_000,
            seed: 0,
            workers: 1,
            lucj: LucjSettings::default(),
            fci_budget: fragci::cisolve::DEFAULT_FCI_BUDGET,
            require_convergence: false,
        }
    }
}

fn range(field: &'static str, value: impl ToString, expected: &'static str) -> ConfigError {
    ConfigError::Range {
        field,
        value: value.to_string(),
        expected,
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.bundle.as_os_str().is_empty() {
            return Err(ConfigError::Missing("bundle"));
        }
        if self.workdir.as_os_str().is_empty() {
            return Err(ConfigError::Missing("workdir"));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(range("eta", self.eta, "finite and >= 0"));
        }
        if self.dispatch_threshold < 1 {
            return Err(range("dispatch_threshold", self.dispatch_threshold, ">= 1"));
        }
        if !(0.0..=1.0).contains(&self.noise_eps) {
            return Err(range("noise_eps", self.noise_eps, "within [0, 1]"));
        }
        if self.workers < 1 {
            return Err(range("workers", self.workers, ">= 1"));
        }
        if self.lucj.layers == Some(0) {
            return Err(range("lucj.layers", 0, ">= 1"));
        }
        if self.fci_budget < 1 {
            return Err(range("fci_budget", self.fci_budget, ">= 1"));
        }
        self.recovery
            .validate()
            .map_err(|e| ConfigError::Contradiction(format!("recovery: {e}")))?;
        if self.recovery.seed != 0 {
            return Err(ConfigError::Contradiction(
                "recovery.seed is derived per cluster from the top-level seed; set `seed` instead".into(),
            ));
        }
        match &self.samples {
            SampleSource::Simulator => {
                if self.shots < self.recovery.samples_per_batch as u64 {
                    return Err(ConfigError::Contradiction(format!(
                        "shots ({}) must be at least recovery.samples_per_batch ({}) with the simulator source",
                        self.shots, self.recovery.samples_per_batch
                    )));
                }
            }
            SampleSource::Directory { path } => {
                if path.as_os_str().is_empty() {
                    return Err(ConfigError::Missing("samples.path"));
                }
                if self.noise_eps > 0.0 {
                    return Err(ConfigError::Contradiction(
                        "noise_eps only applies to simulator samples".into(),
                    ));
                }
            }
        }
        if let Fragmentation::Explicit { groups, labels: Some(l) } = &self.fragmentation {
            if l.len() != groups.len() {
                return Err(ConfigError::Contradiction(format!(
                    "{} fragment groups but {} labels",
                    groups.len(),
                    l.len()
                )));
            }
        }
        Ok(())
    }

    /// Resolves relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.bundle);
        fix(&mut self.workdir);
        if let SampleSource::Directory { path } = &mut self.samples {
            fix(path);
        }
    }

    /// Report label: explicit, else the bundle file name up to its first dot.
    pub fn conformer_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        self.bundle
            .file_name()
            .and_then(|s| s.to_str())
            .and_then(|s| s.split('.').next())
            .filter(|s| !s.is_empty())
            .unwrap_or("conformer")
            .to_string()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses TOML config text, applies defaults, and checks ranges and
/// consistency. Unknown keys are rejected.
pub fn validate_config(text: &str) -> Result<PipelineConfig, ConfigError> {
    let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file, resolving relative paths against its directory.
/// `FRAGCI_WORKDIR` overrides the work directory when set.
pub fn load_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    apply_workdir_env(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

pub fn apply_workdir_env(cfg: &mut PipelineConfig) {
    if let Some(w) = std::env::var_os(WORKDIR_ENV).filter(|w| !w.is_empty()) {
        cfg.workdir = PathBuf::from(w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_only_gives_defaults() {
        let cfg = validate_config("bundle = \"x.json\"").unwrap();
        assert_eq!(cfg.recovery, RecoveryConfig::default());
        assert_eq!(cfg.eta, 1e-5);
        assert_eq!(cfg.dispatch_threshold, 15);
        assert_eq!(cfg.fragmentation, Fragmentation::PerAtom);
    }

    #[test]
    fn named_errors() {
        assert!(matches!(validate_config(""), Err(ConfigError::Missing("bundle"))));
        assert!(matches!(
            validate_config("bundle = \"x\"\neta = -1.0"),
            Err(ConfigError::Range { field: "eta", .. })
        ));
        assert!(matches!(
            validate_config("bundle = \"x\"\ndispatch_threshold = 0"),
            Err(ConfigError::Range { field: "dispatch_threshold", .. })
        ));
        assert!(matches!(validate_config("bundle = \"x\"\nbogus = 1"), Err(ConfigError::Parse(_))));
        assert!(matches!(
            validate_config("bundle = \"x\"\nshots = 10"),
            Err(ConfigError::Contradiction(_))
        ));
        assert!(matches!(
            validate_config("bundle = \"x\"\n[recovery]\nmax_iters = 0"),
            Err(ConfigError::Contradiction(_))
        ));
    }

    #[test]
    fn tables_parse() {
        let cfg = validate_config(
            r#"
bundle = "b.json"
fragmentation = { mode = "explicit", groups = [[0, 1], [2, 3]] }
samples = { source = "directory", path = "s" }
[lucj]
connectivity = "ladder"
[recovery]
samples_per_batch = 100
"#,
        )
        .unwrap();
        assert_eq!(cfg.recovery.samples_per_batch, 100);
        assert_eq!(cfg.lucj.connectivity, Connectivity::Ladder);
        assert!(matches!(cfg.samples, SampleSource::Directory { .. }));
        let back = validate_config(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn label_from_bundle_name() {
        let cfg = PipelineConfig {
            bundle: "data/h6_chain.bundle.json".into(),
            ..Default::default()
        };
        assert_eq!(cfg.conformer_label(), "h6_chain");
    }
}
