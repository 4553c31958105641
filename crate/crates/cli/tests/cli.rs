use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ghostdiff::analysis::Baseline;
use ghostdiff::GridAxis;
use ghostdiff_cli::compare::compare_files;
use ghostdiff_cli::output::pattern_tsv;
use ghostdiff_cli::runner::RunSummary;
use ghostdiff_cli::{run_experiment, ExperimentConfig, RunManifest, RunOptions};

const SMALL: &str = r#"
name = "small"

[grid]
n_points = 64
pixels_per_period = 8

[source]
delta_x_n_um = [4.0]
aperture_um = 80.0
master_seed = 7
n_frames = 400

[object]
kind = "square_phase_grating"
period_um = 12.5
groove_width_um = 4.2
phase_shift_pi = 0.84

[[estimators]]
kind = "mean_intensity"

[[estimators]]
kind = "fixed_pixel"
x1_um = [0.0, 2128.0]
normalize = true

[[estimators]]
kind = "spatial_average"
max_shift_um = 4256.0

[[estimators]]
kind = "autocorrelation"
x1_um = [0.0]

[[estimators]]
kind = "visibility"

[[estimators]]
kind = "gamma_oracle"
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ghostdiff"));
    c.env_remove("GHOSTDIFF_OUT_DIR");
    c
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn config_round_trips_through_toml() {
    let c = ExperimentConfig::from_toml(SMALL).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    assert_eq!(c.pitch().unwrap(), 1.5625);
}

#[test]
fn invalid_configs_name_the_field() {
    let cases = [
        (SMALL.replace("n_frames = 400", "n_frames = 0"), "source.n_frames"),
        (SMALL.replace("n_points = 64", "n_points = 1"), "grid"),
        (SMALL.replace("groove_width_um = 4.2", "groove_width_um = 13.0"), "object"),
        (SMALL.replace("x1_um = [0.0, 2128.0]", "x1_um = [1.0e6]"), "estimators[1].x1_um"),
        (SMALL.replace("master_seed = 7", "master_seed = 7\nfoo = 1"), "foo"),
    ];
    for (text, field) in cases {
        let e = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(e.field.contains(field), "expected {field}, got {e}");
    }
}

#[test]
fn zero_frame_run_is_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, SMALL.replace("n_frames = 400", "n_frames = 0")).unwrap();
    let out = dir.path().join("out");
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let diag: serde_json::Value = serde_json::from_str(stderr(&o).lines().last().unwrap()).unwrap();
    assert_eq!(diag["field"], "source.n_frames");
    assert!(!out.exists());
}

#[test]
fn run_writes_outputs_and_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let m = run_experiment(&cfg, &opts).unwrap();
    assert!(m.errors.is_empty(), "{:?}", m.errors);
    for f in [
        "dx4um/test_mean.tsv",
        "dx4um/reference_mean.tsv",
        "dx4um/ghost_x1_0um_norm.tsv",
        "dx4um/ghost_x1_2128um_norm.tsv",
        "dx4um/spatial_average.tsv",
        "dx4um/autocorr_x1_0um.tsv",
        "prediction.json",
        "summary.json",
    ] {
        let e = m.files.iter().find(|e| e.path == f).unwrap_or_else(|| panic!("{f} missing"));
        let bytes = fs::read(dir.path().join(f)).unwrap();
        assert_eq!(e.sha256, ghostdiff_cli::output::sha256_hex(&bytes));
    }
    let s: RunSummary = serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    let sweep = &s.sweeps[0];
    assert!(sweep.visibility.as_ref().unwrap().max_visibility <= 1.0);
    assert!(sweep.oracle.as_ref().unwrap().unmasked_points > 0);
    let on_disk: RunManifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk.config_sha256, m.config_sha256);
}

#[test]
fn outputs_are_identical_for_one_and_eight_workers() {
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let trees: Vec<_> = [1usize, 8]
        .iter()
        .map(|&w| {
            let dir = tempfile::tempdir().unwrap();
            let opts = RunOptions {
                workers: Some(w),
                out_dir: Some(dir.path().to_path_buf()),
                ..Default::default()
            };
            run_experiment(&cfg, &opts).unwrap();
            read_tree(dir.path())
                .into_iter()
                .filter(|(p, _)| p != "manifest.json")
                .collect::<Vec<_>>()
        })
        .collect();
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn seed_override_changes_the_draws() {
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let sums: Vec<String> = [None, Some(8)]
        .iter()
        .map(|&seed| {
            let dir = tempfile::tempdir().unwrap();
            let opts = RunOptions {
                seed,
                frames: Some(20),
                out_dir: Some(dir.path().to_path_buf()),
                ..Default::default()
            };
            let m = run_experiment(&cfg, &opts).unwrap();
            assert_eq!(m.n_frames, 20);
            m.files.iter().find(|f| f.path == "dx4um/test_mean.tsv").unwrap().sha256.clone()
        })
        .collect();
    assert_ne!(sums[0], sums[1]);
}

#[test]
fn output_directory_from_env_unless_flag_given() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, SMALL.replace("n_frames = 400", "n_frames = 10")).unwrap();
    let env_out = dir.path().join("env");
    let flag_out = dir.path().join("flag");
    let o = bin()
        .arg("run")
        .arg(&cfg)
        .env("GHOSTDIFF_OUT_DIR", &env_out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(env_out.join("manifest.json").exists());
    let o = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_out)
        .env("GHOSTDIFF_OUT_DIR", dir.path().join("unused"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(flag_out.join("manifest.json").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn presets_list_and_show() {
    let o = bin().args(["presets", "list"]).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ghostdiff_cli::presets::NAMES {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
    let o = bin().args(["presets", "show", "fig5"]).output().unwrap();
    let c = ExperimentConfig::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(c.source.full_frames, Some(18_000));
    let o = bin().args(["presets", "show", "fig4"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

fn write_prediction_and_pattern(dir: &Path, n: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let cfg = ghostdiff::OpticalConfig64::new(0.532, 50.0).unwrap();
    let g = ghostdiff::GratingSpec64::new(12.5, 4.2, 0.84 * std::f64::consts::PI).unwrap();
    let pred = ghostdiff::analysis::grating_coefficients(&g, &cfg, 2).unwrap();
    let axis = GridAxis::centered(n, 66.5).unwrap();
    let mut v = vec![0.0; n];
    for (eta, x) in pred.eta.iter().zip(&pred.x) {
        if let Some(i) = axis.index_of(x * 1000.0) {
            v[i] = *eta;
        }
    }
    let pat = dir.join("pattern.tsv");
    let pj = dir.join("prediction.json");
    fs::write(&pat, pattern_tsv(&ghostdiff::Pattern::new(axis, v), "x_um")).unwrap();
    fs::write(&pj, serde_json::to_string(&pred).unwrap()).unwrap();
    (pat, pj)
}

#[test]
fn compare_passes_on_the_prediction_itself() {
    let dir = tempfile::tempdir().unwrap();
    let (pat, pj) = write_prediction_and_pattern(dir.path(), 256);
    let r = compare_files(&pat, &pj, 0.0, None, Baseline::FlankMedian).unwrap();
    assert!(r.pass, "{r:?}");
    let o = bin().arg("compare").arg(&pat).arg(&pj).args(["--tol", "0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn compare_fails_on_missing_orders() {
    let dir = tempfile::tempdir().unwrap();
    // 100 pixels of 66.5 um reach +-3.3 mm: the second orders are off the pattern.
    let (pat, pj) = write_prediction_and_pattern(dir.path(), 100);
    let o = bin().arg("compare").arg(&pat).arg(&pj).args(["--tol", "0.5"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["missing_orders"], serde_json::json!([-2, 2]));
}
