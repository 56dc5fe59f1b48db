use std::path::PathBuf;

use fragci::assemble::AssembleError;
use fragci::cisolve::CiError;
use fragci::ewfrag::EwfError;
use fragci::hamio::HamIoError;
use fragci::lucjsim::LucjError;
use fragci::sqdengine::SqdError;

use crate::config::ConfigError;

/// Process exit codes.
pub mod exit {
    pub const VALIDATION: i32 = 2;
    pub const CONVERGENCE: i32 = 3;
    pub const IO: i32 = 4;
    pub const OTHER: i32 = 1;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    Convergence,
    Io,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{stage}{}: {message}", cluster.as_ref().map(|c| format!(" [cluster {c}]")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        cluster: Option<String>,
        kind: FailureKind,
        message: String,
    },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => exit::VALIDATION,
            PipelineError::Io { .. } => exit::IO,
            PipelineError::Stage { kind, .. } => match kind {
                FailureKind::Validation => exit::VALIDATION,
                FailureKind::Convergence => exit::CONVERGENCE,
                FailureKind::Io => exit::IO,
                FailureKind::Numerical => exit::OTHER,
            },
        }
    }

    pub(crate) fn stage(stage: &'static str, cluster: Option<&str>, kind: FailureKind, message: impl ToString) -> Self {
        PipelineError::Stage {
            stage,
            cluster: cluster.map(str::to_string),
            kind,
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Classifies library errors for exit-code purposes.
pub(crate) trait Classify {
    fn kind(&self) -> FailureKind;
}

impl Classify for HamIoError {
    fn kind(&self) -> FailureKind {
        match self {
            HamIoError::Io(_) => FailureKind::Io,
            _ => FailureKind::Validation,
        }
    }
}

impl Classify for CiError {
    fn kind(&self) -> FailureKind {
        match self {
            CiError::Convergence { .. } => FailureKind::Convergence,
            CiError::Sector(_) | CiError::Shape(_) | CiError::Det(_) => FailureKind::Validation,
            _ => FailureKind::Numerical,
        }
    }
}

impl Classify for SqdError {
    fn kind(&self) -> FailureKind {
        match self {
            SqdError::Config(_) | SqdError::Register { .. } | SqdError::NoSamples => FailureKind::Validation,
            SqdError::Solver { source, .. } | SqdError::Ci(source) => source.kind(),
            _ => FailureKind::Numerical,
        }
    }
}

impl Classify for EwfError {
    fn kind(&self) -> FailureKind {
        match self {
            EwfError::HamIo(e) => e.kind(),
            EwfError::Fragment(_) | EwfError::Threshold(_) | EwfError::ClosedShell(_) | EwfError::IllConditioned { .. } => {
                FailureKind::Validation
            }
            _ => FailureKind::Numerical,
        }
    }
}

impl Classify for LucjError {
    fn kind(&self) -> FailureKind {
        match self {
            LucjError::Domain(_) => FailureKind::Validation,
            _ => FailureKind::Numerical,
        }
    }
}

impl Classify for AssembleError {
    fn kind(&self) -> FailureKind {
        match self {
            AssembleError::HamIo(e) => e.kind(),
            _ => FailureKind::Validation,
        }
    }
}
