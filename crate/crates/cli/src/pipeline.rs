use std::fs;
use std::path::{Path, PathBuf};

use fragci::assemble::{
    collate_global_energy, ClusterResult, ClusterResultRecord, Collation, ConformerEnergy, EnergyReport,
    FragmentEnergy,
};
use fragci::cisolve::{fci_solve, Rdm2};
use fragci::detcore::Sector;
use fragci::ewfrag::{build_clusters, extract_cluster_hamiltonian, EmbeddingSystem, FragmentSpec};
use fragci::hamio::{
    load_meanfield_bundle, load_samples, read_fcidump_file, write_fcidump_file, ClusterHamiltonian, ClusterRecord,
    RunManifest, SampleSet, SolverKind,
};
use fragci::lucjsim::{
    double_factorize_t2, inject_readout_noise, lucj_from_factorization, mp2_amplitudes, prepare_lucj_state,
    sample_counts,
};
use fragci::sqdengine::{diagnostics_jsonl, dispatch_solver, run_sqd, subspace_stats, RecoveryConfig};
use log::{info, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Fragmentation, PipelineConfig, SampleSource};
use crate::error::{Classify, FailureKind, PipelineError};

/// File layout of a run directory.
#[derive(Clone, Debug)]
pub struct Workdir {
    pub root: PathBuf,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn fcidump(&self, id: &str) -> PathBuf {
        self.root.join("clusters").join(format!("{id}.fcidump"))
    }

    pub fn geometry(&self, id: &str) -> PathBuf {
        self.root.join("clusters").join(format!("{id}.geometry.json"))
    }

    pub fn result(&self, id: &str) -> PathBuf {
        self.root.join("results").join(format!("{id}.json"))
    }

    pub fn diagnostics(&self, id: &str) -> PathBuf {
        self.root.join("diagnostics").join(format!("{id}.jsonl"))
    }

    pub fn collation(&self) -> PathBuf {
        self.root.join("collation.json")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn report_text(&self) -> PathBuf {
        self.root.join("report.md")
    }

    fn create(&self) -> Result<(), PipelineError> {
        for sub in ["clusters", "results", "diagnostics"] {
            let p = self.root.join(sub);
            fs::create_dir_all(&p).map_err(|e| PipelineError::io(&p, e))?;
        }
        Ok(())
    }
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    // write-then-rename so an interrupted run never leaves a truncated file
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| PipelineError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

/// Orbital geometry of one cluster, needed to map its RDMs back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterGeometry {
    pub id: String,
    pub label: String,
    pub fragment: Vec<usize>,
    pub n_basis: usize,
    pub n_mo: usize,
    pub n_occ: usize,
    pub n_bath: usize,
    pub n_bno_occ: usize,
    pub n_bno_vir: usize,
    /// Column-major `n_basis × n_mo`.
    pub coeffs: Vec<f64>,
    pub projector: Vec<f64>,
    pub core_potential: Vec<f64>,
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    m.iter().copied().collect()
}

/// Checkpoint of a solved cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointFile {
    /// Content hash of everything the result depends on.
    pub key: String,
    pub converged: Option<bool>,
    pub e_sqd: Option<f64>,
    pub e_ext: Option<f64>,
    pub diagnostics: String,
    pub result: ClusterResultRecord,
}

/// Collated totals written by the collate stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollationSummary {
    pub label: String,
    pub e_nuc: f64,
    pub e_hf: f64,
    pub e_total: f64,
    pub trace: f64,
    pub fragments: Vec<FragmentEnergy>,
    /// Column-major global 1-RDM over the localized basis.
    pub gamma: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveSummary {
    pub computed: Vec<String>,
    pub reused: Vec<String>,
}

fn fragment_spec(cfg: &PipelineConfig, sys: &EmbeddingSystem<f64>) -> Result<FragmentSpec, PipelineError> {
    let n = sys.n_basis();
    let spec = match &cfg.fragmentation {
        Fragmentation::PerAtom => FragmentSpec::per_atom(&sys.local.atoms),
        Fragmentation::Whole => Ok(FragmentSpec::whole(n)),
        Fragmentation::Explicit { groups, labels } => {
            let labels = labels
                .clone()
                .unwrap_or_else(|| (0..groups.len()).map(|i| format!("f{i}")).collect());
            FragmentSpec::explicit(groups.clone(), labels, n)
        }
    };
    spec.map_err(|e| PipelineError::stage("fragment", None, e.kind(), e))
}

/// Embeds the bundle, writes per-cluster FCIDUMP and geometry files and the
/// run manifest.
pub fn fragment_stage(cfg: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    let wd = Workdir::new(&cfg.workdir);
    wd.create()?;
    let mf = load_meanfield_bundle::<f64>(&cfg.bundle, &Default::default())
        .map_err(|e| PipelineError::stage("load bundle", None, e.kind(), e))?;
    let sys = EmbeddingSystem::from_bundle(&mf).map_err(|e| PipelineError::stage("fragment", None, e.kind(), e))?;
    let spec = fragment_spec(cfg, &sys)?;
    let clusters =
        build_clusters(&sys, &spec, cfg.eta).map_err(|e| PipelineError::stage("fragment", None, e.kind(), e))?;
    let mut records = Vec::with_capacity(clusters.len());
    for cl in &clusters {
        let id = format!("{:03}-{}", cl.index, cl.label);
        let ex = extract_cluster_hamiltonian(&sys, cl)
            .map_err(|e| PipelineError::stage("extract", Some(&id), e.kind(), e))?;
        let path = wd.fcidump(&id);
        write_fcidump_file(&ex.ham, &path).map_err(|e| PipelineError::stage("write fcidump", Some(&id), e.kind(), e))?;
        let geo = ClusterGeometry {
            id: id.clone(),
            label: cl.label.clone(),
            fragment: cl.fragment.clone(),
            n_basis: sys.n_basis(),
            n_mo: cl.n_mo(),
            n_occ: cl.n_occ,
            n_bath: cl.n_bath(),
            n_bno_occ: cl.n_bno_occ,
            n_bno_vir: cl.n_bno_vir,
            coeffs: flat(&cl.coeffs),
            projector: flat(&cl.projector),
            core_potential: flat(&ex.core_potential),
        };
        write(&wd.geometry(&id), &serde_json::to_string(&geo).expect("geometry serializes"))?;
        let solver = dispatch_solver(cl.n_mo(), cfg.dispatch_threshold);
        info!(
            "cluster {id}: {} MOs ({} fragment, {} bath, {}+{} BNO) -> {solver}",
            cl.n_mo(),
            cl.fragment.len(),
            cl.n_bath(),
            cl.n_bno_occ,
            cl.n_bno_vir
        );
        records.push(ClusterRecord {
            id: id.clone(),
            fcidump: PathBuf::from("clusters").join(format!("{id}.fcidump")),
            fragment_orbitals: cl.fragment.clone(),
            n_mo: cl.n_mo(),
            n_alpha: ex.ham.n_alpha(),
            n_beta: ex.ham.n_beta(),
            solver,
        });
    }
    let manifest = RunManifest {
        label: cfg.conformer_label(),
        n_basis: sys.n_basis(),
        n_elec: mf.n_elec,
        e_nuc: sys.e_nuc,
        e_hf: sys.e_hf,
        dispatch_threshold: cfg.dispatch_threshold,
        tolerances: Default::default(),
        clusters: records,
    };
    manifest.validate().map_err(|e| PipelineError::stage("fragment", None, e.kind(), e))?;
    write(&wd.manifest(), &manifest.to_json())?;
    Ok(manifest)
}

pub fn load_manifest(cfg: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    let wd = Workdir::new(&cfg.workdir);
    RunManifest::from_json(&read(&wd.manifest())?).map_err(|e| PipelineError::stage("load manifest", None, e.kind(), e))
}

/// Per-cluster seed; distinct clusters get unrelated streams.
pub fn cluster_seed(seed: u64, index: usize) -> u64 {
    let mut x = seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Serialize)]
struct SolverKeyParts<'a> {
    solver: SolverKind,
    seed: u64,
    fci_budget: usize,
    recovery: &'a RecoveryConfig,
    samples: &'a SampleSource,
    noise_eps: f64,
    shots: u64,
    lucj: &'a crate::config::LucjSettings,
}

fn checkpoint_key(
    cfg: &PipelineConfig,
    rec: &ClusterRecord,
    seed: u64,
    fcidump: &[u8],
    geometry: &[u8],
    samples: Option<&[u8]>,
) -> String {
    let parts = SolverKeyParts {
        solver: rec.solver,
        seed,
        fci_budget: cfg.fci_budget,
        recovery: &cfg.recovery,
        samples: &cfg.samples,
        noise_eps: cfg.noise_eps,
        shots: cfg.shots,
        lucj: &cfg.lucj,
    };
    let mut h = Sha256::new();
    h.update(b"fragci-cluster-result-v1\0");
    for chunk in [fcidump, geometry, serde_json::to_string(&parts).expect("key serializes").as_bytes()] {
        h.update((chunk.len() as u64).to_le_bytes());
        h.update(chunk);
    }
    if let Some(s) = samples {
        h.update((s.len() as u64).to_le_bytes());
        h.update(s);
    }
    hex::encode(h.finalize())
}

/// Simulated LUCJ measurement outcomes for one cluster.
pub fn simulate_samples(
    cfg: &PipelineConfig,
    ham: &ClusterHamiltonian<f64>,
    seed: u64,
) -> Result<SampleSet, PipelineError> {
    let err = |stage: &'static str, e: &dyn std::fmt::Display, kind| PipelineError::stage(stage, None, kind, e);
    let sector = Sector::new(ham.norb(), ham.n_alpha(), ham.n_beta())
        .map_err(|e| err("sample", &e, FailureKind::Validation))?;
    let amps = mp2_amplitudes(ham, None).map_err(|e| err("mp2", &e, e.kind()))?;
    let df = double_factorize_t2(&amps).map_err(|e| err("factorize", &e, e.kind()))?;
    let layers = cfg.lucj.layers.unwrap_or(usize::MAX).min(df.len()).max(1);
    let params =
        lucj_from_factorization(&df, &cfg.lucj.connectivity, layers).map_err(|e| err("lucj", &e, e.kind()))?;
    let psi = prepare_lucj_state(sector, &params, cfg.lucj.statevector_budget)
        .map_err(|e| err("statevector", &e, e.kind()))?;
    let raw = sample_counts(&psi, cfg.shots, seed);
    if cfg.noise_eps > 0.0 {
        inject_readout_noise(&raw, cfg.noise_eps, seed ^ 0xD1B5_4A32_D192_ED03).map_err(|e| err("noise", &e, e.kind()))
    } else {
        Ok(raw)
    }
}

fn load_geometry(wd: &Workdir, id: &str) -> Result<(ClusterGeometry, String), PipelineError> {
    let text = read(&wd.geometry(id))?;
    let geo: ClusterGeometry = serde_json::from_str(&text)
        .map_err(|e| PipelineError::stage("load geometry", Some(id), FailureKind::Validation, e))?;
    Ok((geo, text))
}

fn solve_cluster(
    cfg: &PipelineConfig,
    wd: &Workdir,
    index: usize,
    rec: &ClusterRecord,
) -> Result<bool, PipelineError> {
    let id = rec.id.as_str();
    let fcidump_path = wd.fcidump(id);
    let fcidump = fs::read(&fcidump_path).map_err(|e| PipelineError::io(&fcidump_path, e))?;
    let (geo, geo_text) = load_geometry(wd, id)?;
    let sample_file = match (&cfg.samples, rec.solver) {
        (SampleSource::Directory { path }, SolverKind::Sqd) => {
            let p = path.join(format!("{id}.samples"));
            Some((fs::read(&p).map_err(|e| PipelineError::io(&p, e))?, p))
        }
        _ => None,
    };
    let seed = cluster_seed(cfg.seed, index);
    let key = checkpoint_key(cfg, rec, seed, &fcidump, geo_text.as_bytes(), sample_file.as_ref().map(|s| s.0.as_slice()));
    let result_path = wd.result(id);
    if let Ok(text) = fs::read_to_string(&result_path) {
        match serde_json::from_str::<CheckpointFile>(&text) {
            Ok(ck) if ck.key == key => {
                write(&wd.diagnostics(id), &ck.diagnostics)?;
                info!("cluster {id}: reusing checkpoint");
                return Ok(false);
            }
            Ok(_) => info!("cluster {id}: checkpoint is stale, recomputing"),
            Err(e) => warn!("cluster {id}: unreadable checkpoint ({e}), recomputing"),
        }
    }

    let stage = |s: &'static str, kind: FailureKind, e: &dyn std::fmt::Display| PipelineError::stage(s, Some(id), kind, e);
    let ham: ClusterHamiltonian<f64> =
        read_fcidump_file(&fcidump_path).map_err(|e| stage("load fcidump", e.kind(), &e))?;
    let (energy, rdm1, rdm2, stats, converged, e_sqd, e_ext, diagnostics) = match rec.solver {
        SolverKind::Fci => {
            let s = fci_solve(&ham, cfg.fci_budget).map_err(|e| stage("fci", e.kind(), &e))?;
            let sector = s.vector.basis.sector();
            let dim = s.vector.basis.dim();
            let line = serde_json::json!({"cluster": id, "solver": "fci", "energy": s.energy, "dim": dim});
            (s.energy, s.rdm1, s.rdm2, Some(subspace_stats(sector, dim, None)), None, None, None, format!("{line}\n"))
        }
        SolverKind::Sqd => {
            let raw = match &sample_file {
                Some((_, p)) => load_samples(p).map_err(|e| stage("load samples", e.kind(), &e))?,
                None => simulate_samples(cfg, &ham, seed).map_err(|e| match e {
                    PipelineError::Stage { stage: s, kind, message, .. } => {
                        PipelineError::stage(s, Some(id), kind, message)
                    }
                    other => other,
                })?,
            };
            let rc = RecoveryConfig {
                seed,
                ..cfg.recovery.clone()
            };
            let s = run_sqd(&ham, &raw, &rc).map_err(|e| stage("sqd", e.kind(), &e))?;
            if !s.state.converged {
                if cfg.require_convergence {
                    return Err(stage(
                        "sqd",
                        FailureKind::Convergence,
                        &format!("recovery did not converge in {} iterations", cfg.recovery.max_iters),
                    ));
                }
                warn!("cluster {id}: recovery stopped at max_iters without converging");
            }
            let mut diag = diagnostics_jsonl(&s.diagnostics);
            diag += &serde_json::json!({
                "cluster": id, "solver": "sqd", "e_sqd": s.e_sqd, "e_ext": s.e_ext,
                "converged": s.state.converged, "stats": s.stats,
            })
            .to_string();
            diag.push('\n');
            (s.e_ext, s.rdm1, s.rdm2, Some(s.stats), Some(s.state.converged), Some(s.e_sqd), Some(s.e_ext), diag)
        }
    };
    let mat = |v: &[f64], rows: usize| DMatrix::from_column_slice(rows, geo.n_mo, v);
    let result = ClusterResult {
        id: id.to_string(),
        solver: rec.solver,
        energy,
        rdm1,
        rdm2: Rdm2::from_vec(geo.n_mo, rdm2.as_slice().to_vec()).map_err(|e| stage("result", FailureKind::Validation, &e))?,
        coeffs: mat(&geo.coeffs, geo.n_basis),
        projector: mat(&geo.projector, geo.n_mo),
        core_potential: mat(&geo.core_potential, geo.n_mo),
        stats,
    };
    result.check_shapes().map_err(|e| stage("result", FailureKind::Validation, &e))?;
    let ck = CheckpointFile {
        key,
        converged,
        e_sqd,
        e_ext,
        diagnostics,
        result: result.to_record(),
    };
    write(&wd.diagnostics(id), &ck.diagnostics)?;
    write(&result_path, &serde_json::to_string(&ck).expect("checkpoint serializes"))?;
    info!("cluster {id}: {} energy {:.10}", rec.solver, energy);
    Ok(true)
}

/// Solves every cluster (or only `only`), reusing checkpoints whose content
/// hash still matches. Clusters run on a pool of `cfg.workers` threads; the
/// first failure in manifest order is returned after all finish.
pub fn solve_stage(cfg: &PipelineConfig, only: Option<&[String]>) -> Result<SolveSummary, PipelineError> {
    let wd = Workdir::new(&cfg.workdir);
    wd.create()?;
    let manifest = load_manifest(cfg)?;
    if let Some(ids) = only {
        for id in ids {
            if manifest.cluster(id).is_none() {
                return Err(PipelineError::stage(
                    "solve",
                    Some(id),
                    FailureKind::Validation,
                    "not in the manifest",
                ));
            }
        }
    }
    let jobs: Vec<(usize, &ClusterRecord)> = manifest
        .clusters
        .iter()
        .enumerate()
        .filter(|(_, c)| only.is_none_or(|ids| ids.contains(&c.id)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::stage("solve", None, FailureKind::Numerical, e))?;
    let outcomes: Vec<Result<bool, PipelineError>> =
        pool.install(|| jobs.par_iter().map(|(i, rec)| solve_cluster(cfg, &wd, *i, rec)).collect());
    let mut summary = SolveSummary::default();
    let mut first_err = None;
    for ((_, rec), out) in jobs.iter().zip(outcomes) {
        match out {
            Ok(true) => summary.computed.push(rec.id.clone()),
            Ok(false) => summary.reused.push(rec.id.clone()),
            Err(e) => {
                warn!("{e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

fn load_results(wd: &Workdir, manifest: &RunManifest) -> Result<Vec<ClusterResult<f64>>, PipelineError> {
    let mut out = Vec::new();
    let mut missing = Vec::new();
    for rec in &manifest.clusters {
        let path = wd.result(&rec.id);
        if !path.exists() {
            missing.push(rec.id.clone());
            continue;
        }
        let ck: CheckpointFile = serde_json::from_str(&read(&path)?)
            .map_err(|e| PipelineError::stage("load result", Some(&rec.id), FailureKind::Validation, e))?;
        out.push(
            ClusterResult::from_record(&ck.result)
                .map_err(|e| PipelineError::stage("load result", Some(&rec.id), e.kind(), e))?,
        );
    }
    if !missing.is_empty() {
        return Err(PipelineError::stage(
            "collate",
            None,
            FailureKind::Validation,
            format!("missing results for clusters: {}", missing.join(", ")),
        ));
    }
    Ok(out)
}

/// Projects and sums all cluster results; writes `collation.json`.
pub fn collate_stage(cfg: &PipelineConfig) -> Result<(Collation<f64>, CollationSummary), PipelineError> {
    let wd = Workdir::new(&cfg.workdir);
    let manifest = load_manifest(cfg)?;
    let results = load_results(&wd, &manifest)?;
    let collation = collate_global_energy(&manifest, &results, |rec| Ok(read_fcidump_file(wd.root.join(&rec.fcidump))?))
        .map_err(|e| PipelineError::stage("collate", None, e.kind(), e))?;
    let summary = CollationSummary {
        label: manifest.label.clone(),
        e_nuc: manifest.e_nuc,
        e_hf: manifest.e_hf,
        e_total: collation.e_total,
        trace: collation.rdms.trace(),
        fragments: collation.fragments.clone(),
        gamma: flat(&collation.rdms.gamma),
    };
    write(&wd.collation(), &serde_json::to_string_pretty(&summary).expect("collation serializes"))?;
    Ok((collation, summary))
}

/// SHA-256 over all cluster diagnostics in manifest order.
pub fn diagnostics_digest(cfg: &PipelineConfig, manifest: &RunManifest) -> Result<String, PipelineError> {
    let wd = Workdir::new(&cfg.workdir);
    let mut h = Sha256::new();
    for rec in &manifest.clusters {
        let text = read(&wd.diagnostics(&rec.id))?;
        h.update(rec.id.as_bytes());
        h.update([0]);
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

/// Single-conformer report from `collation.json`; writes `report.json` and
/// `report.md`.
pub fn report_stage(cfg: &PipelineConfig) -> Result<EnergyReport, PipelineError> {
    let wd = Workdir::new(&cfg.workdir);
    let manifest = load_manifest(cfg)?;
    let summary: CollationSummary = serde_json::from_str(&read(&wd.collation())?)
        .map_err(|e| PipelineError::stage("report", None, FailureKind::Validation, e))?;
    let conformer = ConformerEnergy::new(summary.label.clone(), summary.e_total).with_fragments(summary.fragments);
    let mut report = EnergyReport::single(conformer, &cfg.method);
    report.digest = Some(diagnostics_digest(cfg, &manifest)?);
    write(&wd.report_json(), &report.to_json())?;
    write(&wd.report_text(), &report.render())?;
    Ok(report)
}

/// Fragment, solve, collate and report in one go, resuming from any
/// checkpoints already in the work directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<EnergyReport, PipelineError> {
    run_pipeline_with_summary(cfg).map(|r| r.0)
}

pub fn run_pipeline_with_summary(cfg: &PipelineConfig) -> Result<(EnergyReport, SolveSummary), PipelineError> {
    cfg.validate()?;
    fragment_stage(cfg)?;
    let summary = solve_stage(cfg, None)?;
    collate_stage(cfg)?;
    Ok((report_stage(cfg)?, summary))
}
