//! Experiment configuration: a TOML document of `key = value` pairs under
//! `[section]` headers. Every key is optional; missing keys take the
//! reference values (K = 8, M = 10, σ² = 0.3, Q_R = 5·10⁴, Q_T = 4·10⁵,
//! σα² = 50, σ²_c = 1/7, σn² = 1, ρ = 0.4).
//!
//! ```toml
//! mode = "joint"        # joint | rx_only | baseline
//! seed = 7
//! k = 8
//! m = 10
//!
//! [env]
//! shape_beta = 0.5
//!
//! [mixture]
//! betas = [0.5, 1.3]
//! weights = [0.5, 0.5]
//!
//! [train]
//! q_r = 5000
//! q_t = 40000
//!
//! [eval]
//! beta_test = 0.5
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::Activation;
use crate::signal::{EnvModel, Waveform};
use crate::train::{Architecture, PolicyConfig, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Alternating receiver and transmitter training.
    Joint,
    /// Receiver training only; the transmitter keeps its initial weights.
    RxOnly,
    /// Optimal waveform with the square-law detector, no learning.
    Baseline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub sigma_alpha_sq: f64,
    /// Power of every clutter cell, unless `clutter_powers` is given.
    pub clutter_power: f64,
    /// Explicit 2K−2 per-cell powers, ascending cell offset.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub clutter_powers: Vec<f64>,
    pub shape_beta: f64,
    pub sigma_n_sq: f64,
    pub rho: f64,
    pub prior_p1: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            sigma_alpha_sq: 50.0,
            clutter_power: 1.0 / 7.0,
            clutter_powers: Vec::new(),
            shape_beta: 2.0,
            sigma_n_sq: 1.0,
            rho: 0.4,
            prior_p1: 0.5,
        }
    }
}

impl EnvConfig {
    pub fn model(&self, k: usize, beta: f64) -> Result<EnvModel> {
        let clutter_powers = if self.clutter_powers.is_empty() {
            vec![self.clutter_power; 2 * k - 2]
        } else if self.clutter_powers.len() == 2 * k - 2 {
            self.clutter_powers.clone()
        } else {
            return Err(Error::param(
                "env.clutter_powers",
                format!("expected {} entries for K = {k}, got {}", 2 * k - 2, self.clutter_powers.len()),
            ));
        };
        let env = EnvModel {
            sigma_alpha_sq: self.sigma_alpha_sq,
            clutter_powers,
            shape_beta: beta,
            sigma_n_sq: self.sigma_n_sq,
            rho: self.rho,
            prior_p1: self.prior_p1,
        };
        env.validate().map_err(prefix("env"))?;
        Ok(env)
    }
}

/// Training shape parameters and their mixture weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    /// Empty means train on `env.shape_beta` alone.
    pub betas: Vec<f64>,
    /// Empty means equal weights.
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    SteppedFrequency,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub kind: InitKind,
    /// CSV with a `re,im` header and one chip per row (for `kind = "file"`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            kind: InitKind::SteppedFrequency,
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_per_hyp: usize,
    pub n_points: usize,
    /// Test-time clutter shape; defaults to `env.shape_beta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_test: Option<f64>,
    /// Bootstrap replicates for Pd bands; 0 disables.
    pub bootstrap: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_per_hyp: 200_000,
            n_points: 512,
            beta_test: None,
            bootstrap: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Waveform length.
    pub k: usize,
    /// Receiver hidden units.
    pub m: usize,
    /// Transmitter output activation before R2C.
    pub tx_output: Activation,
    pub env: EnvConfig,
    pub mixture: MixtureConfig,
    pub train: TrainConfig,
    pub policy: PolicyConfig,
    pub init: InitConfig,
    pub eval: EvalConfig,
    pub baseline: BaselineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Joint,
            seed: 0,
            output_dir: PathBuf::from("out"),
            k: 8,
            m: 10,
            tx_output: Activation::Identity,
            env: EnvConfig::default(),
            mixture: MixtureConfig::default(),
            train: TrainConfig::default(),
            policy: PolicyConfig::default(),
            init: InitConfig::default(),
            eval: EvalConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

fn prefix(section: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Parameter { name, reason } => Error::Config(format!("{section}.{name}: {reason}")),
        other => other,
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k: must be >= 1".into()));
        }
        if self.m == 0 {
            return Err(Error::Config("m: must be >= 1".into()));
        }
        self.env.model(self.k, self.env.shape_beta)?;
        self.training_envs()?;
        self.test_env()?;
        self.train.validate().map_err(prefix("train"))?;
        self.policy.validate().map_err(prefix("policy"))?;
        if self.eval.n_per_hyp == 0 {
            return Err(Error::Config("eval.n_per_hyp: must be >= 1".into()));
        }
        if self.eval.n_points < 2 {
            return Err(Error::Config("eval.n_points: must be >= 2".into()));
        }
        if self.eval.bootstrap == 1 {
            return Err(Error::Config("eval.bootstrap: use 0 (off) or >= 2 replicates".into()));
        }
        if self.init.kind == InitKind::File && self.init.path.is_none() {
            return Err(Error::Config("init.path: required when init.kind = \"file\"".into()));
        }
        if !(self.baseline.tol >= 0.0) {
            return Err(Error::Config("baseline.tol: must be >= 0".into()));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            k: self.k,
            hidden: self.m,
            tx_output: self.tx_output,
        }
    }

    /// Weighted training environments.
    pub fn training_envs(&self) -> Result<Vec<(EnvModel, f64)>> {
        let betas = if self.mixture.betas.is_empty() {
            vec![self.env.shape_beta]
        } else {
            self.mixture.betas.clone()
        };
        let weights = if self.mixture.weights.is_empty() {
            vec![1.0 / betas.len() as f64; betas.len()]
        } else if self.mixture.weights.len() == betas.len() {
            self.mixture.weights.clone()
        } else {
            return Err(Error::Config(format!(
                "mixture.weights: {} weights for {} betas",
                self.mixture.weights.len(),
                betas.len()
            )));
        };
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "mixture.weights: must be non-negative and sum to 1 (sum {total})"
            )));
        }
        betas
            .iter()
            .zip(weights)
            .map(|(&b, w)| {
                self.env
                    .model(self.k, b)
                    .map_err(|e| Error::Config(format!("mixture.betas: {e}")))
                    .map(|e| (e, w))
            })
            .collect()
    }

    pub fn beta_test(&self) -> f64 {
        self.eval.beta_test.unwrap_or(self.env.shape_beta)
    }

    /// Environment used for testing, independent of the training mixture.
    pub fn test_env(&self) -> Result<EnvModel> {
        self.env
            .model(self.k, self.beta_test())
            .map_err(|e| Error::Config(format!("eval.beta_test: {e}")))
    }

    pub fn init_waveform(&self) -> Result<Waveform> {
        make_init_waveform(self.init.kind, self.init.path.as_deref(), self.k)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text)
}

/// Quadratic-phase (discrete chirp) sequence `x_k = e^{jπ(k−1)²/K}/√K`.
pub fn stepped_frequency(k: usize) -> Result<Waveform> {
    if k == 0 {
        return Err(Error::Dimension("K must be >= 1".into()));
    }
    let amp = 1.0 / (k as f64).sqrt();
    let chips = (0..k)
        .map(|i| Complex64::from_polar(amp, PI * (i * i) as f64 / k as f64))
        .collect();
    let mut w = Waveform::new(chips)?;
    // unit power already; normalize only to set the flag
    w = w.normalize(0.0)?;
    Ok(w)
}

pub fn make_init_waveform(kind: InitKind, path: Option<&Path>, k: usize) -> Result<Waveform> {
    match kind {
        InitKind::SteppedFrequency => stepped_frequency(k),
        InitKind::File => {
            let path = path.ok_or_else(|| Error::Config("init.path: missing".into()))?;
            let w = read_waveform_csv(&std::fs::read_to_string(path)?)?;
            if w.len() != k {
                return Err(Error::Config(format!(
                    "init.path: waveform has {} chips, k = {k}",
                    w.len()
                )));
            }
            w.normalize(0.0)
        }
    }
}

/// `re,im` header then one chip per row.
pub fn read_waveform_csv(text: &str) -> Result<Waveform> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("re,im") {
        return Err(Error::Config("waveform CSV must start with `re,im`".into()));
    }
    let chips = lines
        .map(|l| {
            let mut it = l.split(',').map(|f| f.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(re)), Some(Ok(im)), None) => Ok(Complex64::new(re, im)),
                _ => Err(Error::Config(format!("bad waveform row `{l}`"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Waveform::new(chips)
}

pub fn write_waveform_csv(w: &Waveform) -> String {
    let mut s = String::from("re,im\n");
    for c in w.chips() {
        s.push_str(&format!(
            "{},{}\n",
            crate::baseline::fmt17(c.re),
            crate::baseline::fmt17(c.im)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_values() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.k, 8);
        assert_eq!(cfg.m, 10);
        assert_eq!(cfg.policy.sigma_sq, 0.3);
        assert_eq!(cfg.train.q_r, 50_000);
        assert_eq!(cfg.train.q_t, 400_000);
        let env = cfg.test_env().unwrap();
        assert_eq!(env, EnvModel::reference(8));
    }

    #[test]
    fn rho_out_of_range_is_rejected_with_field() {
        let err = ExperimentConfig::from_toml("[env]\nrho = 1.2\n").unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("rho"), "{err}");
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = ExperimentConfig::from_toml("[train]\netta = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("etta") && msg.contains("q_r"), "{msg}");
    }

    #[test]
    fn serialize_round_trip() {
        let text = "mode = \"rx_only\"\nseed = 3\n[mixture]\nbetas = [0.5, 1.3]\n[eval]\nbeta_test = 0.5\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.training_envs().unwrap().len(), 2);
        assert_eq!(again.test_env().unwrap().shape_beta, 0.5);
    }

    #[test]
    fn stepped_frequency_chips() {
        let one = stepped_frequency(1).unwrap();
        assert_eq!(one.chips(), &[Complex64::new(1.0, 0.0)]);
        for k in 1..20 {
            assert!((stepped_frequency(k).unwrap().power() - 1.0).abs() < 1e-12);
        }
        let w = stepped_frequency(8).unwrap();
        let expected = [0.0, 1.0, 4.0, 9.0, 16.0, 25.0, 36.0, 49.0];
        for (c, e) in w.chips().iter().zip(expected) {
            let target = Complex64::from_polar(1.0 / 8f64.sqrt(), PI * e / 8.0);
            assert!((c - target).norm() < 1e-14);
        }
    }

    #[test]
    fn waveform_csv_round_trip() {
        let w = stepped_frequency(5).unwrap();
        let back = read_waveform_csv(&write_waveform_csv(&w)).unwrap();
        assert_eq!(back.chips(), w.chips());
    }
}
