use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radar_e2e::baseline::RocCurve;
use radar_e2e::config::{load_config, ExperimentConfig, Mode};
use radar_e2e::experiment::{git_blob_sha1, Manifest, MANIFEST_FILE, RECEIVER_FILE};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn smoke() -> PathBuf {
    configs_dir().join("desk/smoke.toml")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radar-e2e"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn every_shipped_config_loads_and_validates() {
    let mut n = 0;
    for sub in ["desk", "paper"] {
        for entry in std::fs::read_dir(configs_dir().join(sub)).unwrap() {
            let path = entry.unwrap().path();
            let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap();
            // the printed form parses back to the same settings
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
            n += 1;
        }
    }
    assert!(n >= 14);
}

#[test]
fn run_writes_consistent_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = cli(&["run", "--out", out.to_str().unwrap(), smoke().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_manifest(&out);
    assert_eq!(m.mode, Mode::Joint);
    assert_eq!(m.seed, 3);
    assert_eq!(m.operating_points.len(), 3);
    for f in &m.files {
        let bytes = std::fs::read(out.join(&f.path)).unwrap();
        assert_eq!(bytes.len(), f.bytes, "{}", f.path);
        assert_eq!(git_blob_sha1(&bytes), f.git_blob_sha1, "{}", f.path);
    }
    for name in ["transmitter.weights", "receiver.weights", "waveform.csv", "history.csv", "roc.csv"] {
        assert!(m.files.iter().any(|f| f.path == name), "{name} missing");
    }
    let roc = RocCurve::read_csv(&std::fs::read_to_string(out.join("roc.csv")).unwrap()).unwrap();
    roc.check().unwrap();
    assert!(roc.pd_band.is_some());

    // eval with the stored weights reproduces the ROC
    let eval_out = dir.path().join("eval");
    let o = cli(&[
        "eval",
        "--weights",
        out.join(RECEIVER_FILE).to_str().unwrap(),
        "--out",
        eval_out.to_str().unwrap(),
        smoke().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(out.join("roc.csv")).unwrap(),
        std::fs::read(eval_out.join("roc.csv")).unwrap()
    );
    assert_eq!(read_manifest(&eval_out).operating_points, m.operating_points);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let s = smoke();
    assert!(cli(&["run", "--seed", "11", "--out", a.to_str().unwrap(), s.to_str().unwrap()]).status.success());
    assert!(cli(&["run", "--out", b.to_str().unwrap(), s.to_str().unwrap()]).status.success());
    assert_eq!(read_manifest(&a).seed, 11);
    assert_ne!(std::fs::read(a.join("roc.csv")).unwrap(), std::fs::read(b.join("roc.csv")).unwrap());
}

#[test]
fn baseline_command_designs_waveform() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("base");
    let o = cli(&["baseline", "--strict", "--out", out.to_str().unwrap(), smoke().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_manifest(&out);
    assert_eq!(m.mode, Mode::Baseline);
    assert!(m.converged);
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let values: Vec<f64> = traj
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(values.len() > 1);
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    assert!(out.join("roc_closed_form.csv").exists());
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_rho = write_config(dir.path(), "[env]\nrho = 1.2\n");
    let o = cli(&["run", bad_rho.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("env.rho"));

    let unknown = write_config(dir.path(), "mode = \"joint\"\nlearning_rate = 3\n");
    assert_eq!(cli(&["run", unknown.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(cli(&["run", dir.path().join("missing.toml").to_str().unwrap()]).status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_radar-e2e"))
        .args(["baseline", smoke().to_str().unwrap()])
        .env("RADAR_E2E_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_weights_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("receiver.weights");
    std::fs::write(&w, b"not a weight file").unwrap();
    let o = cli(&["eval", "--weights", w.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap(), smoke().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_with_3() {
    // a waveform of zeros cannot be normalized
    let dir = tempfile::tempdir().unwrap();
    let wf = dir.path().join("zeros.csv");
    std::fs::write(&wf, "re,im\n0,0\n0,0\n0,0\n0,0\n").unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "mode = \"baseline\"\nk = 4\noutput_dir = \"{}\"\n[init]\nkind = \"file\"\npath = \"{}\"\n",
            dir.path().join("o").display(),
            wf.display()
        ),
    );
    let o = cli(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn strict_reports_non_convergence_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "mode = \"baseline\"\nk = 6\noutput_dir = \"{}\"\n[baseline]\nmax_iters = 1\ntol = 1e-300\n[eval]\nn_per_hyp = 1000\n",
            dir.path().join("o").display()
        ),
    );
    assert_eq!(cli(&["run", cfg.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(cli(&["run", "--strict", cfg.to_str().unwrap()]).status.code(), Some(4));
}
