use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fragci::assemble::{relative_energy_report, EnergyReport};
use fragci_cli::config::{apply_workdir_env, load_config, Fragmentation, PipelineConfig};
use fragci_cli::{collate_stage, fragment_stage, report_stage, run_pipeline_with_summary, solve_stage, PipelineError};

#[derive(Parser)]
#[command(name = "fragci", version, about = "Fragment embedding with FCI and sample-based CI cluster solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build clusters and write their Hamiltonians and the manifest.
    Fragment(Common),
    /// Solve clusters listed in the manifest.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Only these cluster ids (repeatable).
        #[arg(long = "cluster")]
        clusters: Vec<String>,
    },
    /// Project and sum cluster results into the total energy.
    Collate(Common),
    /// Fragment, solve, collate and report.
    Run(Common),
    /// Render the report of a run, or compare two conformer reports.
    Report {
        #[command(flatten)]
        common: Common,
        /// Two report.json files (first minus second).
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        compare: Option<Vec<PathBuf>>,
        /// Method name for the comparison table.
        #[arg(long, default_value = "SQD-EWF")]
        method: String,
        /// Write the comparison report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML pipeline config.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    workdir: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    /// per_atom or whole.
    #[arg(long)]
    fragmentation: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => {
                let mut c = PipelineConfig::default();
                apply_workdir_env(&mut c);
                c
            }
        };
        if let Some(b) = &self.bundle {
            cfg.bundle = b.clone();
        }
        if let Some(w) = &self.workdir {
            cfg.workdir = w.clone();
        }
        if self.label.is_some() {
            cfg.label = self.label.clone();
        }
        if let Some(f) = &self.fragmentation {
            cfg.fragmentation = match f.as_str() {
                "per_atom" => Fragmentation::PerAtom,
                "whole" => Fragmentation::Whole,
                other => {
                    return Err(fragci_cli::config::ConfigError::Parse(format!(
                        "unknown fragmentation '{other}' (per_atom or whole; explicit groups go in the config file)"
                    ))
                    .into())
                }
            };
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(if let Some(v) = self.$flag { cfg.$field = v; })*};
        }
        set!(eta => eta, threshold => dispatch_threshold, seed => seed, shots => shots, noise => noise_eps, workers => workers);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_report(p: &PathBuf) -> Result<EnergyReport, PipelineError> {
    let text = std::fs::read_to_string(p).map_err(|e| PipelineError::Io {
        path: p.clone(),
        source: e,
    })?;
    EnergyReport::from_json(&text).map_err(|e| PipelineError::Stage {
        stage: "report",
        cluster: None,
        kind: fragci_cli::FailureKind::Validation,
        message: format!("{}: {e}", p.display()),
    })
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Fragment(c) => {
            let m = fragment_stage(&c.resolve()?)?;
            for r in &m.clusters {
                println!("{}\t{} MOs\t{}", r.id, r.n_mo, r.solver);
            }
        }
        Command::Solve { common, clusters } => {
            let only = (!clusters.is_empty()).then_some(clusters.as_slice());
            let s = solve_stage(&common.resolve()?, only)?;
            println!("computed: {}", s.computed.join(" "));
            println!("reused: {}", s.reused.join(" "));
        }
        Command::Collate(c) => {
            let (_, s) = collate_stage(&c.resolve()?)?;
            println!("E_total = {:.10} Eh (trace {:.8})", s.e_total, s.trace);
        }
        Command::Run(c) => {
            let (report, s) = run_pipeline_with_summary(&c.resolve()?)?;
            log::info!("computed {} clusters, reused {}", s.computed.len(), s.reused.len());
            print!("{}", report.render());
        }
        Command::Report {
            common,
            compare,
            method,
            out,
        } => {
            let report = match compare {
                Some(paths) => {
                    let a = load_report(&paths[0])?;
                    let b = load_report(&paths[1])?;
                    let first = |r: EnergyReport, p: &PathBuf| {
                        r.conformers.into_iter().next().ok_or_else(|| PipelineError::Stage {
                            stage: "report",
                            cluster: None,
                            kind: fragci_cli::FailureKind::Validation,
                            message: format!("{} has no conformer", p.display()),
                        })
                    };
                    relative_energy_report(first(a, &paths[0])?, first(b, &paths[1])?, &method)
                }
                None => report_stage(&common.resolve()?)?,
            };
            if let Some(p) = out {
                std::fs::write(&p, report.to_json()).map_err(|e| PipelineError::Io { path: p, source: e })?;
            }
            print!("{}", report.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code().clamp(0, 255) as u8)
        }
    }
}

