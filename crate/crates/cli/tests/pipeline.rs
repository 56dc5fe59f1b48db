use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use fragci::hamio::{read_fcidump_file, save_samples, SolverKind};
use fragci_cli::pipeline::{cluster_seed, simulate_samples, Workdir};
use fragci_cli::{
    collate_stage, exit, fragment_stage, load_manifest, run_pipeline, run_pipeline_with_summary, solve_stage,
    Fragmentation, PipelineConfig, SampleSource,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn reference(system: &str, key: &str) -> f64 {
    let text = fs::read_to_string(fixture("reference_energies.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v[system][key].as_f64().unwrap()
}

fn config(bundle: &str, workdir: &Path) -> PipelineConfig {
    PipelineConfig {
        bundle: fixture(bundle),
        workdir: workdir.to_path_buf(),
        ..Default::default()
    }
}

/// Small SQD settings for fast runs on 4-orbital clusters.
fn quick_sqd(mut cfg: PipelineConfig) -> PipelineConfig {
    cfg.dispatch_threshold = 1;
    cfg.shots = 20_000;
    cfg.recovery.samples_per_batch = 200;
    cfg.recovery.n_batches = 3;
    cfg
}

#[test]
fn whole_system_fci_run_reproduces_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("h4_chain.bundle.json", dir.path());
    cfg.fragmentation = Fragmentation::Whole;
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.conformers.len(), 1);
    assert_eq!(report.conformers[0].label, "h4_chain");
    assert!((report.conformers[0].energy - reference("h4_chain", "e_fci")).abs() < 1e-8);
    assert_eq!(report.conformers[0].census.fci, 1);
    let wd = Workdir::new(dir.path());
    for p in [wd.manifest(), wd.collation(), wd.report_json(), wd.report_text()] {
        assert!(p.exists(), "{} missing", p.display());
    }
    assert!(fs::read_to_string(wd.report_text()).unwrap().contains("| Method |"));
}

#[test]
fn dispatch_follows_cluster_size() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("h4_chain.bundle.json", dir.path());
    cfg.fragmentation = Fragmentation::Whole;
    cfg.dispatch_threshold = 4;
    let m = fragment_stage(&cfg).unwrap();
    assert_eq!(m.clusters[0].n_mo, 4);
    assert_eq!(m.clusters[0].solver, SolverKind::Sqd);
    cfg.dispatch_threshold = 5;
    assert_eq!(fragment_stage(&cfg).unwrap().clusters[0].solver, SolverKind::Fci);
    cfg.dispatch_threshold = 15;
    let m = fragment_stage(&cfg).unwrap();
    assert!(m.clusters.iter().all(|c| c.solver == SolverKind::Fci));
    assert_eq!(m.dispatch_threshold, 15);
}

#[test]
fn resume_recomputes_only_missing_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("h6_chain.bundle.json", dir.path());
    let (first, s1) = run_pipeline_with_summary(&cfg).unwrap();
    assert_eq!(s1.computed.len(), 6);
    assert!(s1.reused.is_empty());

    let manifest = load_manifest(&cfg).unwrap();
    let victim = manifest.clusters[2].id.clone();
    fs::remove_file(Workdir::new(dir.path()).result(&victim)).unwrap();
    let (second, s2) = run_pipeline_with_summary(&cfg).unwrap();
    assert_eq!(s2.computed, vec![victim]);
    assert_eq!(s2.reused.len(), 5);
    assert_eq!(first.to_json(), second.to_json());
}

#[test]
fn collate_reports_missing_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("h4_chain.bundle.json", dir.path());
    let m = fragment_stage(&cfg).unwrap();
    solve_stage(&cfg, Some(&[m.clusters[0].id.clone()])).unwrap();
    let err = collate_stage(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), exit::VALIDATION);
    let msg = err.to_string();
    for c in &m.clusters[1..] {
        assert!(msg.contains(&c.id), "{msg}");
    }
}

#[test]
fn stale_checkpoints_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_sqd(config("h4_chain.bundle.json", dir.path()));
    let (_, s) = run_pipeline_with_summary(&cfg).unwrap();
    assert_eq!(s.computed.len(), 4);
    cfg.seed = 7;
    let (_, s) = run_pipeline_with_summary(&cfg).unwrap();
    assert_eq!(s.computed.len(), 4);
    assert!(s.reused.is_empty());
}

#[test]
fn sqd_runs_are_deterministic_across_workdirs_and_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg_a = quick_sqd(config("h4_chain.bundle.json", a.path()));
    let mut cfg_b = quick_sqd(config("h4_chain.bundle.json", b.path()));
    cfg_b.workers = 4;
    let ra = run_pipeline(&cfg_a).unwrap();
    let rb = run_pipeline(&cfg_b).unwrap();
    assert!(ra.digest.is_some());
    assert_eq!(ra.to_json(), rb.to_json());
    assert_eq!(ra.conformers[0].census.sqd, 4);
}

#[test]
fn interrupted_run_resumes_to_identical_report() {
    let clean = tempfile::tempdir().unwrap();
    let resumed = tempfile::tempdir().unwrap();
    let reference = run_pipeline(&quick_sqd(config("h4_chain.bundle.json", clean.path()))).unwrap();

    let cfg = quick_sqd(config("h4_chain.bundle.json", resumed.path()));
    let m = fragment_stage(&cfg).unwrap();
    let first: Vec<String> = m.clusters.iter().take(2).map(|c| c.id.clone()).collect();
    let s = solve_stage(&cfg, Some(&first)).unwrap();
    assert_eq!(s.computed, first);
    let (report, s) = run_pipeline_with_summary(&cfg).unwrap();
    assert_eq!(s.reused, first);
    assert_eq!(s.computed.len(), 2);
    assert_eq!(report.to_json(), reference.to_json());
    let wd_a = Workdir::new(clean.path());
    let wd_b = Workdir::new(resumed.path());
    assert_eq!(fs::read(wd_a.report_text()).unwrap(), fs::read(wd_b.report_text()).unwrap());
}

#[test]
fn directory_samples_match_simulator_samples() {
    let sim = tempfile::tempdir().unwrap();
    let from_files = tempfile::tempdir().unwrap();
    let samples = tempfile::tempdir().unwrap();
    let mut cfg = quick_sqd(config("h4_chain.bundle.json", sim.path()));
    cfg.fragmentation = Fragmentation::Whole;
    let expected = run_pipeline(&cfg).unwrap();

    let m = load_manifest(&cfg).unwrap();
    for (i, rec) in m.clusters.iter().enumerate() {
        let ham = read_fcidump_file(sim.path().join(&rec.fcidump)).unwrap();
        let set = simulate_samples(&cfg, &ham, cluster_seed(cfg.seed, i)).unwrap();
        save_samples(&set, samples.path().join(format!("{}.samples", rec.id))).unwrap();
    }
    let mut cfg_files = cfg.clone();
    cfg_files.workdir = from_files.path().to_path_buf();
    cfg_files.samples = SampleSource::Directory {
        path: samples.path().to_path_buf(),
    };
    let got = run_pipeline(&cfg_files).unwrap();
    assert_eq!(got.conformers[0].energy, expected.conformers[0].energy);
    assert!((got.conformers[0].energy - reference("h4_chain", "e_fci")).abs() < 1e-6);
}

#[test]
fn missing_sample_file_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_sqd(config("h4_chain.bundle.json", dir.path()));
    cfg.samples = SampleSource::Directory {
        path: dir.path().join("nowhere"),
    };
    assert_eq!(run_pipeline(&cfg).unwrap_err().exit_code(), exit::IO);
}

fn fragci(args: &[&str], env: &[(&str, &Path)]) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fragci"));
    cmd.args(args).env("RUST_LOG", "error").env_remove("FRAGCI_WORKDIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("w");
    let work_s = work.to_str().unwrap();
    let h4 = fixture("h4_chain.bundle.json");
    let h4 = h4.to_str().unwrap();

    let out = fragci(&["run", "--bundle", h4, "--workdir", work_s, "--eta=-1"], &[]);
    assert_eq!(out.status.code(), Some(exit::VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));

    let out = fragci(&["run", "--bundle", "/nonexistent/b.json", "--workdir", work_s], &[]);
    assert_eq!(out.status.code(), Some(exit::IO));

    let cfg_path = dir.path().join("strict.toml");
    fs::write(
        &cfg_path,
        format!(
            "bundle = \"{h4}\"\nworkdir = \"{work_s}\"\ndispatch_threshold = 1\nshots = 5000\nrequire_convergence = true\n[recovery]\nsamples_per_batch = 100\nmax_iters = 1\n"
        ),
    )
    .unwrap();
    let out = fragci(&["run", "-c", cfg_path.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(exit::CONVERGENCE));

    let out = fragci(&["run", "--bundle", h4, "--workdir", work_s, "--fragmentation", "whole"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("E_h4_chain"));
}

#[test]
fn workdir_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    let h4 = fixture("h4_chain.bundle.json");
    fs::write(
        &cfg_path,
        format!("bundle = \"{}\"\nworkdir = \"configured\"\nfragmentation = {{ mode = \"whole\" }}\n", h4.display()),
    )
    .unwrap();
    let elsewhere = dir.path().join("from-env");
    let out = fragci(&["run", "-c", cfg_path.to_str().unwrap()], &[("FRAGCI_WORKDIR", &elsewhere)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Workdir::new(&elsewhere).report_json().exists());
    assert!(!dir.path().join("configured").exists());
}

#[test]
fn binary_compares_two_conformers() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |bundle: &str, label: &str, wd: &Path| {
        let out = fragci(
            &[
                "run",
                "--bundle",
                fixture(bundle).to_str().unwrap(),
                "--workdir",
                wd.to_str().unwrap(),
                "--fragmentation",
                "whole",
                "--label",
                label,
            ],
            &[],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run("h4_chain.bundle.json", "A", &a);
    run("h6_chain.bundle.json", "B", &b);
    let out_path = dir.path().join("cmp.json");
    let out = fragci(
        &[
            "report",
            "--compare",
            Workdir::new(&a).report_json().to_str().unwrap(),
            Workdir::new(&b).report_json().to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("| E_A [Eh] | E_B [Eh] | ΔE [kcal/mol] |"), "{stdout}");
    let report = fragci::assemble::EnergyReport::from_json(&fs::read_to_string(out_path).unwrap()).unwrap();
    let expected = fragci::assemble::delta_kcal(reference("h4_chain", "e_fci"), reference("h6_chain", "e_fci"));
    assert!((report.delta_kcal.unwrap() - expected).abs() < 1e-5);
}
