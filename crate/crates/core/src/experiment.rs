//! Experiment runs: train or design, evaluate, and write artifacts.
//!
//! Every run writes into one output directory. Artifacts other than
//! `manifest.json` depend only on the configuration and seed, so two runs
//! with the same inputs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::baseline::{closed_form_roc, fmt17, optimal_waveform, RocCurve, SquareLaw, Termination};
use crate::channel::ChannelMixture;
use crate::config::{write_waveform_csv, ExperimentConfig, InitKind, Mode};
use crate::error::{Error, Result};
use crate::eval::{bootstrap_pd_band, pd_at_pfa, roc_from_scores, simulate_scores, Detector, ReceiverDetector};
use crate::net::{transmit, NetworkParams};
use crate::rng::RngStream;
use crate::signal::Waveform;
use crate::train::{alternate_training, History, TrainConfig};

pub const TRANSMITTER_FILE: &str = "transmitter.weights";
pub const RECEIVER_FILE: &str = "receiver.weights";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Confidence level of bootstrap Pd bands.
pub const BAND_LEVEL: f64 = 0.95;

/// False-alarm rates at which the manifest reports exact Pd.
pub const REPORT_PFAS: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// Pd of the Neyman-Pearson threshold test at a false-alarm rate, computed
/// from the raw test scores rather than interpolated from the ROC grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub pfa: f64,
    pub pd: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    /// SHA-1 of the file as a git blob object.
    pub git_blob_sha1: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub mode: Mode,
    pub seed: u64,
    pub init_waveform: String,
    pub wall_time_s: f64,
    pub threads: usize,
    /// False when training exhausted its rounds without plateauing, or the
    /// waveform design hit its iteration cap.
    pub converged: bool,
    pub operating_points: Vec<OperatingPoint>,
    pub files: Vec<FileEntry>,
    pub config: String,
}

impl Manifest {
    /// Reported Pd at `pfa`, if it is one of [`REPORT_PFAS`].
    pub fn pd_at(&self, pfa: f64) -> Option<f64> {
        self.operating_points.iter().find(|p| p.pfa == pfa).map(|p| p.pd)
    }
}

pub fn git_blob_sha1(content: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: content.len(),
            git_blob_sha1: git_blob_sha1(content),
        });
        Ok(())
    }

    fn finish(self, mut manifest: Manifest, started: Instant) -> Result<Manifest> {
        manifest.files = self.files;
        manifest.wall_time_s = started.elapsed().as_secs_f64();
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Protocol(e.to_string()))?;
        fs::write(self.dir.join(MANIFEST_FILE), json + "\n")?;
        Ok(manifest)
    }
}

fn init_description(cfg: &ExperimentConfig) -> String {
    match cfg.init.kind {
        InitKind::SteppedFrequency => format!("stepped_frequency(K={})", cfg.k),
        InitKind::File => format!("file:{}", cfg.init.path.as_deref().unwrap_or(Path::new("")).display()),
    }
}

fn manifest(cfg: &ExperimentConfig, command: &str) -> Result<Manifest> {
    Ok(Manifest {
        command: command.to_string(),
        mode: cfg.mode,
        seed: cfg.seed,
        init_waveform: init_description(cfg),
        wall_time_s: 0.0,
        threads: rayon::current_num_threads(),
        converged: true,
        operating_points: Vec::new(),
        files: Vec::new(),
        config: cfg.to_toml()?,
    })
}

/// `round,stage,mean_loss,scnr`; stages are `receiver`, `holdout` and
/// `transmitter`. SCNR is that of the waveform in use during the stage.
pub fn history_csv(history: &History) -> String {
    let mut s = String::from("round,stage,mean_loss,scnr\n");
    let mut scnr = history.initial_scnr;
    for r in &history.rounds {
        s.push_str(&format!("{},receiver,{},{}\n", r.round, fmt17(r.rx_loss), fmt17(scnr)));
        s.push_str(&format!("{},holdout,{},{}\n", r.round, fmt17(r.holdout_after), fmt17(scnr)));
        if !r.tx_loss.is_nan() {
            s.push_str(&format!("{},transmitter,{},{}\n", r.round, fmt17(r.tx_loss), fmt17(r.scnr)));
        }
        scnr = r.scnr;
    }
    s
}

fn roc_bytes(curve: &RocCurve) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    Ok(buf)
}

/// Monte Carlo ROC on the test environment, with a bootstrap band when
/// configured, and exact Pd at [`REPORT_PFAS`].
pub fn test_roc<D: Detector + ?Sized>(
    cfg: &ExperimentConfig,
    detector: &D,
    y: &Waveform,
    stream: &RngStream,
) -> Result<(RocCurve, Vec<OperatingPoint>)> {
    let mixture = ChannelMixture::single(&cfg.test_env()?)?;
    let scores = simulate_scores(detector, y, &mixture, cfg.eval.n_per_hyp, stream)?;
    let mut curve = roc_from_scores(&scores.h0, &scores.h1, cfg.eval.n_points)?;
    if cfg.eval.bootstrap > 0 {
        curve.pd_band = Some(bootstrap_pd_band(
            &curve,
            &scores.h1,
            cfg.eval.bootstrap,
            BAND_LEVEL,
            &stream.fork("bootstrap"),
        )?);
    }
    let points = REPORT_PFAS
        .iter()
        .map(|&pfa| {
            Ok(OperatingPoint {
                pfa,
                pd: pd_at_pfa(&scores.h0, &scores.h1, pfa)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((curve, points))
}

pub fn effective_train_config(cfg: &ExperimentConfig) -> TrainConfig {
    let mut train = cfg.train.clone();
    if cfg.mode == Mode::RxOnly {
        train.tx_steps = 0;
    }
    train
}

/// Runs the experiment described by `cfg` and writes its artifacts to
/// `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<Manifest> {
    match cfg.mode {
        Mode::Joint | Mode::RxOnly => run_training(cfg),
        Mode::Baseline => run_baseline(cfg),
    }
}

fn run_training(cfg: &ExperimentConfig) -> Result<Manifest> {
    let started = Instant::now();
    cfg.validate()?;
    let stream = RngStream::from_seed(cfg.seed);
    let x = cfg.init_waveform()?;
    let mixture = ChannelMixture::new(&cfg.training_envs()?)?;
    let train = effective_train_config(cfg);
    let system = alternate_training(&train, &cfg.policy, &cfg.architecture(), &mixture, &x, &stream.fork("train"))?;
    if !system.theta_t.is_finite() || !system.theta_r.is_finite() {
        return Err(Error::Domain("training produced non-finite weights".into()));
    }
    let y = system.waveform(&x)?;
    let detector = ReceiverDetector::new(&system.theta_r, cfg.k)?;
    let (curve, points) = test_roc(cfg, &detector, &y, &stream.fork("eval"))?;

    let mut out = Artifacts::new(&cfg.output_dir)?;
    let mut m = manifest(cfg, "run")?;
    m.operating_points = points;
    m.converged = train.stop_tol <= 0.0 || system.history.stopped_early;
    let mut buf = Vec::new();
    system.theta_t.write_to(&mut buf)?;
    out.write(TRANSMITTER_FILE, &buf)?;
    buf.clear();
    system.theta_r.write_to(&mut buf)?;
    out.write(RECEIVER_FILE, &buf)?;
    out.write("waveform.csv", write_waveform_csv(&y).as_bytes())?;
    out.write("history.csv", history_csv(&system.history).as_bytes())?;
    out.write("roc.csv", &roc_bytes(&curve)?)?;
    out.finish(m, started)
}

fn run_baseline(cfg: &ExperimentConfig) -> Result<Manifest> {
    let started = Instant::now();
    cfg.validate()?;
    let stream = RngStream::from_seed(cfg.seed);
    let env = cfg.test_env()?;
    let x = cfg.init_waveform()?;
    let opt = optimal_waveform(&env, &x, cfg.baseline.max_iters, cfg.baseline.tol)?;
    let detector = SquareLaw::for_env(&opt.waveform, &env)?;
    let (curve, points) = test_roc(cfg, &detector, &opt.waveform, &stream.fork("eval"))?;
    let theory = closed_form_roc(&opt.waveform, &env, cfg.eval.n_points, 1e-6)?;

    let mut out = Artifacts::new(&cfg.output_dir)?;
    let mut m = manifest(cfg, "baseline")?;
    m.operating_points = points;
    m.converged = opt.termination != Termination::MaxIters;
    out.write("waveform.csv", write_waveform_csv(&opt.waveform).as_bytes())?;
    let mut traj = String::from("iteration,objective\n");
    for (i, f) in opt.trajectory.iter().enumerate() {
        traj.push_str(&format!("{i},{}\n", fmt17(*f)));
    }
    out.write("trajectory.csv", traj.as_bytes())?;
    out.write("roc.csv", &roc_bytes(&curve)?)?;
    out.write("roc_closed_form.csv", &roc_bytes(&theory)?)?;
    out.finish(m, started)
}

/// Evaluates stored networks on the configured test environment. The
/// transmitter defaults to `transmitter.weights` next to the receiver file.
pub fn evaluate_weights(cfg: &ExperimentConfig, receiver: &Path, transmitter: Option<&Path>) -> Result<Manifest> {
    let started = Instant::now();
    cfg.validate()?;
    let sibling;
    let tx_path = match transmitter {
        Some(p) => p,
        None => {
            sibling = receiver.with_file_name(TRANSMITTER_FILE);
            &sibling
        }
    };
    let theta_r = load_weights(receiver)?;
    let theta_t = load_weights(tx_path)?;
    let x = cfg.init_waveform()?;
    let y = transmit(&theta_t, &x).map_err(|e| match e {
        Error::Dimension(msg) => Error::Config(format!("transmitter weights do not fit k = {}: {msg}", cfg.k)),
        other => other,
    })?;
    let detector = ReceiverDetector::new(&theta_r, cfg.k)
        .map_err(|e| Error::Config(format!("receiver weights do not fit k = {}: {e}", cfg.k)))?;
    let (curve, points) = test_roc(cfg, &detector, &y, &RngStream::from_seed(cfg.seed).fork("eval"))?;

    let mut out = Artifacts::new(&cfg.output_dir)?;
    let mut m = manifest(cfg, "eval")?;
    m.operating_points = points;
    out.write("roc.csv", &roc_bytes(&curve)?)?;
    out.finish(m, started)
}

fn load_weights(path: &Path) -> Result<NetworkParams> {
    NetworkParams::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read weights {}: {io}", path.display())),
        other => other,
    })
}

/// Process exit status for an error: 2 for bad input, 3 for numerical
/// failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parameter { .. } | Error::WeightFormat(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn git_blob_hash_matches_git() {
        // `printf 'hello\n' | git hash-object --stdin`
        assert_eq!(git_blob_sha1(b"hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
        assert_eq!(git_blob_sha1(b""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    }
}

