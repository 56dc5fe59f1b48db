//! On-disk artifacts: FCIDUMP Hamiltonians, mean-field bundles, sample
//! files and run manifests.

mod bundle;
mod fcidump;
mod hamiltonian;
mod manifest;
mod samples;

pub use bundle::{
    load_meanfield_bundle, meanfield_bundle_string, parse_meanfield_bundle,
    save_meanfield_bundle, BundleTolerances, MeanFieldBundle, ReferenceEnergies, BUNDLE_FORMAT,
};
pub use fcidump::{
    fcidump_string, parse_fcidump, parse_fcidump_str, read_fcidump_file, write_fcidump,
    write_fcidump_file, FcidumpHeader,
};
pub use hamiltonian::{canonical_eri_index, eri_images, ClusterHamiltonian};
pub use manifest::{ClusterRecord, RunManifest, SolverKind};
pub use samples::{
    format_bitstring, load_samples, parse_bitstring, parse_samples, samples_string,
    save_samples, SampleSet, MAX_QUBITS,
};

#[derive(Debug, thiserror::Error)]
pub enum HamIoError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("index {index} at line {line} is outside [0, {norb}]")]
    Index { line: usize, index: i64, norb: usize },
    #[error(
        "inconsistent duplicate integral {indices:?} at line {line}: {second} vs {first} from line {first_line}"
    )]
    Inconsistent {
        line: usize,
        first_line: usize,
        indices: [usize; 4],
        first: f64,
        second: f64,
    },
    #[error("validation failed ({invariant}): {detail}")]
    Validation {
        invariant: &'static str,
        detail: String,
    },
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
