//! Alternating end-to-end training.
//!
//! The receiver is fitted by SGD on the empirical cross-entropy with the
//! transmitted waveform held fixed. The transmitter is then updated with
//! the score-function (REINFORCE) estimator under a Gaussian exploration
//! policy around its normalized output, using per-sample losses reported
//! back by the fixed receiver.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_batch_with, ChannelMixture, LabeledSample, CHUNK};
use crate::error::{Error, Result};
use crate::net::{
    self, c2r_into, check_receiver, clamp_p, cross_entropy, receiver_network, transmit,
    transmit_pass, transmitter_network, Activation, BackwardScratch, NetworkParams, ParamGrads,
};
use crate::rng::RngStream;
use crate::signal::Waveform;

/// Gaussian exploration policy `N(y | f_θT(x), σ²)` per real component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub sigma_sq: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { sigma_sq: 0.3 }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq > 0.0) || !self.sigma_sq.is_finite() {
            return Err(Error::param("sigma_sq", "policy variance must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Learning rate for both networks unless `eta_tx` is set.
    pub eta: f64,
    /// Separate transmitter learning rate.
    pub eta_tx: Option<f64>,
    /// Receiver batch size.
    pub q_r: usize,
    /// Transmitter batch size.
    pub q_t: usize,
    pub rx_steps: usize,
    pub tx_steps: usize,
    pub outer_iters: usize,
    /// Relative held-out loss improvement below which training stops.
    /// Zero or negative disables the plateau check.
    pub stop_tol: f64,
    /// Per-stage sample budget: steps are capped at `budget / batch`.
    pub sample_budget: Option<usize>,
    /// Subtract the batch-mean loss in the transmitter gradient.
    pub baseline_subtract: bool,
    /// Size of the fixed held-out set used for the stopping rule.
    pub holdout_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            eta_tx: None,
            q_r: 50_000,
            q_t: 400_000,
            rx_steps: 8,
            tx_steps: 1,
            outer_iters: 20,
            stop_tol: 1e-3,
            sample_budget: Some(400_000),
            baseline_subtract: false,
            holdout_size: 20_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::param("eta", "learning rate must be > 0"));
        }
        if let Some(e) = self.eta_tx {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::param("eta_tx", "learning rate must be > 0"));
            }
        }
        if self.q_r == 0 {
            return Err(Error::param("q_r", "must be >= 1"));
        }
        if self.q_t == 0 {
            return Err(Error::param("q_t", "must be >= 1"));
        }
        if self.holdout_size == 0 {
            return Err(Error::param("holdout_size", "must be >= 1"));
        }
        if self.sample_budget == Some(0) {
            return Err(Error::param("sample_budget", "must be >= 1"));
        }
        Ok(())
    }

    pub fn eta_tx(&self) -> f64 {
        self.eta_tx.unwrap_or(self.eta)
    }

    fn capped(&self, steps: usize, batch: usize) -> usize {
        match self.sample_budget {
            Some(b) if steps > 0 => steps.min((b / batch).max(1)),
            _ => steps,
        }
    }

    pub fn effective_rx_steps(&self) -> usize {
        self.capped(self.rx_steps, self.q_r)
    }

    pub fn effective_tx_steps(&self) -> usize {
        self.capped(self.tx_steps, self.q_t)
    }
}

/// Network sizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Architecture {
    /// Waveform length.
    pub k: usize,
    /// Receiver hidden units.
    pub hidden: usize,
    /// Transmitter output activation before R2C.
    pub tx_output: Activation,
}

/// Mean cross-entropy over `batch` and its gradient.
pub fn receiver_loss_and_grad(
    theta_r: &NetworkParams,
    batch: &[LabeledSample],
) -> Result<(f64, ParamGrads)> {
    if batch.is_empty() {
        return Err(Error::Config("empty receiver batch".into()));
    }
    let k = batch[0].z.len();
    check_receiver(theta_r, k)?;
    let q = batch.len() as f64;
    let partials: Vec<Result<(f64, ParamGrads)>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut trace = theta_r.new_trace();
            let mut scratch = BackwardScratch::default();
            let mut grads = theta_r.zero_grads();
            let mut input = vec![0.0; 2 * k];
            let mut loss = 0.0;
            for s in chunk {
                if s.z.len() != k {
                    return Err(Error::Dimension("received vectors differ in length".into()));
                }
                c2r_into(&s.z, &mut input);
                theta_r.forward_into(&input, &mut trace)?;
                let p = clamp_p(trace.output()[0]);
                let m = f64::from(s.m);
                loss += cross_entropy(s.m, p);
                let d_p = -(m / p - (1.0 - m) / (1.0 - p)) / q;
                theta_r.backward_accumulate(&trace, &[d_p], &mut grads, &mut scratch)?;
            }
            Ok((loss, grads))
        })
        .collect();
    let mut total = 0.0;
    let mut grads = theta_r.zero_grads();
    for part in partials {
        let (l, g) = part?;
        total += l;
        grads.add_assign(&g);
    }
    Ok((total / q, grads))
}

/// Fills `loss` on every sample with the receiver's instantaneous loss and
/// returns the batch mean.
pub fn receiver_losses(theta_r: &NetworkParams, batch: &mut [LabeledSample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let k = batch[0].z.len();
    check_receiver(theta_r, k)?;
    let sums: Vec<Result<f64>> = batch
        .par_chunks_mut(CHUNK)
        .map(|chunk| {
            let mut trace = theta_r.new_trace();
            let mut input = vec![0.0; 2 * k];
            let mut sum = 0.0;
            for s in chunk.iter_mut() {
                c2r_into(&s.z, &mut input);
                theta_r.forward_into(&input, &mut trace)?;
                let l = cross_entropy(s.m, trace.output()[0]);
                s.loss = Some(l);
                sum += l;
            }
            Ok(sum)
        })
        .collect();
    let mut total = 0.0;
    for s in sums {
        total += s?;
    }
    Ok(total / batch.len() as f64)
}

fn waveform_batch(
    y: &Waveform,
    q: usize,
    mixture: &ChannelMixture,
    stream: &RngStream,
) -> Result<Vec<LabeledSample>> {
    generate_batch_with(q, mixture, true, stream, false, |_| Ok(y.clone()))
}

/// Mean receiver loss on a balanced batch drawn from `stream`.
pub fn evaluate_receiver_loss(
    theta_r: &NetworkParams,
    y: &Waveform,
    mixture: &ChannelMixture,
    q: usize,
    stream: &RngStream,
) -> Result<f64> {
    let mut batch = waveform_batch(y, q, mixture, stream)?;
    receiver_losses(theta_r, &mut batch)
}

/// Supervised receiver training with the transmitter fixed.
#[derive(Clone, Debug)]
pub struct ReceiverRun {
    pub theta_r: NetworkParams,
    /// Training loss of each SGD step, before its update.
    pub losses: Vec<f64>,
}

pub fn train_receiver(
    theta_r: &NetworkParams,
    theta_t: &NetworkParams,
    x: &Waveform,
    mixture: &ChannelMixture,
    cfg: &TrainConfig,
    stream: &RngStream,
) -> Result<ReceiverRun> {
    let y = transmit(theta_t, x)?;
    let mut theta = theta_r.clone();
    let steps = cfg.effective_rx_steps();
    let mut losses = Vec::with_capacity(steps);
    for step in 0..steps {
        let batch = waveform_batch(&y, cfg.q_r, mixture, &stream.split(step as u64))?;
        let (loss, grads) = receiver_loss_and_grad(&theta, &batch)?;
        theta.apply_sgd(&grads, cfg.eta)?;
        losses.push(loss);
    }
    Ok(ReceiverRun {
        theta_r: theta,
        losses,
    })
}

/// One exploration draw: `y_q = mean + ε`, `ε ~ N(0, σ² I)` in C2R
/// coordinates, and the score `∇_mean log π = ε/σ²`. The draw is not
/// renormalized.
pub fn sample_policy<R: Rng + ?Sized>(
    mean_y: &Waveform,
    policy: &PolicyConfig,
    rng: &mut R,
) -> (Waveform, Vec<f64>) {
    let sd = policy.sigma_sq.sqrt();
    let mut score = Vec::with_capacity(2 * mean_y.len());
    let chips = mean_y
        .chips()
        .iter()
        .map(|c| {
            let er = sd * rng.sample::<f64, _>(StandardNormal);
            let ei = sd * rng.sample::<f64, _>(StandardNormal);
            score.push(er / policy.sigma_sq);
            score.push(ei / policy.sigma_sq);
            c + Complex64::new(er, ei)
        })
        .collect();
    // finite by construction
    let y = Waveform::new(chips).expect("finite perturbation of a finite waveform");
    (y, score)
}

/// Policy-gradient estimate with per-component standard errors.
#[derive(Clone, Debug)]
pub struct PolicyGradient {
    pub grads: ParamGrads,
    /// Estimated gradient with respect to the mean waveform (C2R coordinates).
    pub mean_grad: Vec<f64>,
    /// Standard error of each flattened parameter-gradient entry.
    pub std_error: Vec<f64>,
    pub mean_loss: f64,
}

/// `(1/Q) Σ l_q (∂mean/∂θT)ᵀ (y_q − mean)/σ²`, chained through the
/// normalization layer, R2C and the transmitter network.
pub fn transmitter_grad(
    theta_t: &NetworkParams,
    x: &Waveform,
    batch: &[LabeledSample],
    policy: &PolicyConfig,
    baseline_subtract: bool,
) -> Result<ParamGrads> {
    Ok(policy_gradient(theta_t, x, batch, policy, baseline_subtract, false)?.grads)
}

/// [`transmitter_grad`] plus standard errors.
pub fn transmitter_grad_with_stats(
    theta_t: &NetworkParams,
    x: &Waveform,
    batch: &[LabeledSample],
    policy: &PolicyConfig,
    baseline_subtract: bool,
) -> Result<PolicyGradient> {
    policy_gradient(theta_t, x, batch, policy, baseline_subtract, true)
}

fn policy_gradient(
    theta_t: &NetworkParams,
    x: &Waveform,
    batch: &[LabeledSample],
    policy: &PolicyConfig,
    baseline_subtract: bool,
    with_stats: bool,
) -> Result<PolicyGradient> {
    policy.validate()?;
    if batch.is_empty() {
        return Err(Error::Protocol("empty transmitter batch".into()));
    }
    let pass = transmit_pass(theta_t, x)?;
    let mean = net::c2r(pass.waveform.chips());
    let dim = mean.len();
    let q = batch.len() as f64;

    let mut losses = Vec::with_capacity(batch.len());
    for (i, s) in batch.iter().enumerate() {
        let l = s
            .loss
            .ok_or_else(|| Error::Protocol(format!("sample {i} has no receiver loss")))?;
        losses.push(l);
    }
    let mean_loss = losses.iter().sum::<f64>() / q;
    let offset = if baseline_subtract { mean_loss } else { 0.0 };

    // per-sample contributions l_q · ε_q/σ² in mean-waveform coordinates
    let mut sum = vec![0.0; dim];
    let mut sum_outer = if with_stats { vec![0.0; dim * dim] } else { Vec::new() };
    let mut yq = vec![0.0; dim];
    let mut contrib = vec![0.0; dim];
    for (s, &l) in batch.iter().zip(&losses) {
        let y = s
            .y_sampled
            .as_ref()
            .ok_or_else(|| Error::Protocol("sample has no transmitted waveform".into()))?;
        if y.len() * 2 != dim {
            return Err(Error::Dimension("sampled waveform length differs from mean".into()));
        }
        c2r_into(y.chips(), &mut yq);
        for j in 0..dim {
            contrib[j] = (l - offset) * (yq[j] - mean[j]) / policy.sigma_sq;
            sum[j] += contrib[j];
        }
        if with_stats {
            for a in 0..dim {
                for b in 0..dim {
                    sum_outer[a * dim + b] += contrib[a] * contrib[b];
                }
            }
        }
    }
    let mean_grad: Vec<f64> = sum.iter().map(|s| s / q).collect();
    let grads = pass.backward(theta_t, &mean_grad)?;

    let std_error = if with_stats {
        // Jacobian rows of each parameter w.r.t. the mean waveform
        let columns: Vec<Vec<f64>> = (0..dim)
            .map(|j| {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                pass.backward(theta_t, &e).map(|g| g.to_flat())
            })
            .collect::<Result<_>>()?;
        let mut cov = vec![0.0; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                cov[a * dim + b] = (sum_outer[a * dim + b] / q - mean_grad[a] * mean_grad[b]) * q / (q - 1.0).max(1.0);
            }
        }
        let n = theta_t.num_params();
        (0..n)
            .map(|i| {
                let mut v = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        v += columns[a][i] * cov[a * dim + b] * columns[b][i];
                    }
                }
                (v.max(0.0) / q).sqrt()
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(PolicyGradient {
        grads,
        mean_grad,
        std_error,
        mean_loss,
    })
}

/// Policy samples through the channel, scored by the fixed receiver.
pub fn transmitter_batch(
    theta_t: &NetworkParams,
    theta_r: &NetworkParams,
    x: &Waveform,
    mixture: &ChannelMixture,
    policy: &PolicyConfig,
    q: usize,
    stream: &RngStream,
) -> Result<Vec<LabeledSample>> {
    let mean = transmit(theta_t, x)?;
    let mut batch = generate_batch_with(q, mixture, true, stream, true, |rng| {
        Ok(sample_policy(&mean, policy, rng).0)
    })?;
    receiver_losses(theta_r, &mut batch)?;
    Ok(batch)
}

#[derive(Clone, Debug)]
pub struct TransmitterRun {
    pub theta_t: NetworkParams,
    /// Mean instantaneous loss of each step's policy batch.
    pub losses: Vec<f64>,
}

/// Policy-gradient transmitter training with the receiver fixed.
pub fn train_transmitter(
    theta_t: &NetworkParams,
    theta_r: &NetworkParams,
    x: &Waveform,
    mixture: &ChannelMixture,
    cfg: &TrainConfig,
    policy: &PolicyConfig,
    stream: &RngStream,
) -> Result<TransmitterRun> {
    let mut theta = theta_t.clone();
    let steps = cfg.effective_tx_steps();
    let mut losses = Vec::with_capacity(steps);
    for step in 0..steps {
        let batch = transmitter_batch(&theta, theta_r, x, mixture, policy, cfg.q_t, &stream.split(step as u64))?;
        let pg = policy_gradient(&theta, x, &batch, policy, cfg.baseline_subtract, false)?;
        theta.apply_sgd(&pg.grads, cfg.eta_tx())?;
        if !theta.is_finite() {
            return Err(Error::Domain("transmitter parameters became non-finite".into()));
        }
        losses.push(pg.mean_loss);
    }
    Ok(TransmitterRun {
        theta_t: theta,
        losses,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Mean training loss over the receiver stage.
    pub rx_loss: f64,
    /// Mean policy-batch loss over the transmitter stage (NaN if skipped).
    pub tx_loss: f64,
    /// Held-out loss before and after the receiver stage.
    pub holdout_before: f64,
    pub holdout_after: f64,
    /// SCNR of the mean waveform at the end of the round.
    pub scnr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct History {
    pub initial_scnr: f64,
    pub rounds: Vec<RoundRecord>,
    /// True when the plateau rule ended training before `outer_iters`.
    pub stopped_early: bool,
}

impl History {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct TrainedSystem {
    pub theta_t: NetworkParams,
    pub theta_r: NetworkParams,
    pub history: History,
}

impl TrainedSystem {
    pub fn waveform(&self, x: &Waveform) -> Result<Waveform> {
        transmit(&self.theta_t, x)
    }
}

/// Initial transmitter and receiver for a run seeded by `stream`.
pub fn init_networks(arch: &Architecture, stream: &RngStream) -> Result<(NetworkParams, NetworkParams)> {
    let theta_t = transmitter_network(arch.k, arch.tx_output, stream.fork("init-transmitter").seed)?;
    let theta_r = receiver_network(arch.k, arch.hidden, stream.fork("init-receiver").seed)?;
    Ok((theta_t, theta_r))
}

/// Receiver stage then transmitter stage, repeated for `outer_iters`
/// rounds or until the held-out loss plateaus.
pub fn alternate_training(
    cfg: &TrainConfig,
    policy: &PolicyConfig,
    arch: &Architecture,
    mixture: &ChannelMixture,
    x: &Waveform,
    stream: &RngStream,
) -> Result<TrainedSystem> {
    cfg.validate()?;
    policy.validate()?;
    if x.len() != arch.k || mixture.k() != arch.k {
        return Err(Error::Dimension(format!(
            "K = {} but init waveform has {} chips and channel {}",
            arch.k,
            x.len(),
            mixture.k()
        )));
    }
    let (mut theta_t, mut theta_r) = init_networks(arch, stream)?;
    let scnr_env = mixture.channels()[0].env().clone();
    let holdout = stream.fork("holdout");
    let mut history = History {
        initial_scnr: scnr_env.scnr(&transmit(&theta_t, x)?)?,
        ..History::default()
    };

    for round in 0..cfg.outer_iters {
        let round_stream = stream.fork("round").split(round as u64);
        let y = transmit(&theta_t, x)?;
        let holdout_before = evaluate_receiver_loss(&theta_r, &y, mixture, cfg.holdout_size, &holdout)?;

        let rx = train_receiver(&theta_r, &theta_t, x, mixture, cfg, &round_stream.fork("receiver"))?;
        theta_r = rx.theta_r;
        let holdout_after = evaluate_receiver_loss(&theta_r, &y, mixture, cfg.holdout_size, &holdout)?;

        let tx = train_transmitter(&theta_t, &theta_r, x, mixture, cfg, policy, &round_stream.fork("transmitter"))?;
        theta_t = tx.theta_t;

        let record = RoundRecord {
            round,
            rx_loss: mean_or_nan(&rx.losses),
            tx_loss: mean_or_nan(&tx.losses),
            holdout_before,
            holdout_after,
            scnr: scnr_env.scnr(&transmit(&theta_t, x)?)?,
        };
        log::info!(
            "round {round}: rx loss {:.5}, tx loss {:.5}, holdout {:.5} -> {:.5}, scnr {:.3}",
            record.rx_loss,
            record.tx_loss,
            holdout_before,
            holdout_after,
            record.scnr
        );
        let previous = history.rounds.last().map(|r| r.holdout_after);
        history.rounds.push(record);
        if let Some(prev) = previous {
            if cfg.stop_tol > 0.0 && (prev - holdout_after) / prev < cfg.stop_tol {
                history.stopped_early = round + 1 < cfg.outer_iters;
                break;
            }
        }
    }
    Ok(TrainedSystem {
        theta_t,
        theta_r,
        history,
    })
}

fn mean_or_nan(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::EnvModel;

    fn chirp(k: usize) -> Waveform {
        crate::config::stepped_frequency(k).unwrap()
    }

    #[test]
    fn forced_half_output_gives_ln2() {
        let mut rx = receiver_network(2, 3, 1).unwrap();
        for i in 0..rx.num_params() {
            rx.set_param(i, 0.0);
        }
        let z = vec![Complex64::new(1.0, -1.0); 2];
        for m in [0u8, 1] {
            let s = LabeledSample {
                m,
                z: z.clone(),
                y_sampled: None,
                loss: None,
                env: 0,
            };
            let (loss, _) = receiver_loss_and_grad(&rx, &[s]).unwrap();
            assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_losses_give_zero_gradient() {
        let x = chirp(2);
        let tx = transmitter_network(2, Activation::Identity, 3).unwrap();
        let mean = transmit(&tx, &x).unwrap();
        let mut rng = RngStream::from_seed(2).rng();
        let batch: Vec<LabeledSample> = (0..10)
            .map(|_| LabeledSample {
                m: 0,
                z: vec![Complex64::new(0.0, 0.0); 2],
                y_sampled: Some(sample_policy(&mean, &PolicyConfig::default(), &mut rng).0),
                loss: Some(0.0),
                env: 0,
            })
            .collect();
        let g = transmitter_grad(&tx, &x, &batch, &PolicyConfig::default(), false).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn missing_loss_is_protocol_error() {
        let x = chirp(2);
        let tx = transmitter_network(2, Activation::Identity, 3).unwrap();
        let batch = vec![LabeledSample {
            m: 1,
            z: vec![Complex64::new(0.0, 0.0); 2],
            y_sampled: Some(x.clone()),
            loss: None,
            env: 0,
        }];
        assert!(matches!(
            transmitter_grad(&tx, &x, &batch, &PolicyConfig::default(), false),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn degenerate_policy_returns_mean() {
        let mean = chirp(4);
        let mut rng = RngStream::from_seed(1).rng();
        let (y, score) = sample_policy(&mean, &PolicyConfig { sigma_sq: 1e-12 }, &mut rng);
        for (a, b) in y.chips().iter().zip(mean.chips()) {
            assert!((a - b).norm() < 1e-5);
        }
        // ε/σ² ~ N(0, 1/σ²): tiny σ gives ε ≈ 0 but a large score, check ε
        let eps: f64 = y.chips().iter().zip(mean.chips()).map(|(a, b)| (a - b).norm()).sum();
        assert!(eps < 1e-4);
        assert_eq!(score.len(), 8);
    }

    #[test]
    fn zero_steps_leave_params_unchanged() {
        let arch = Architecture {
            k: 4,
            hidden: 3,
            tx_output: Activation::Identity,
        };
        let (tx, rx) = init_networks(&arch, &RngStream::from_seed(5)).unwrap();
        let mix = ChannelMixture::single(&EnvModel::reference(4)).unwrap();
        let cfg = TrainConfig {
            rx_steps: 0,
            tx_steps: 0,
            q_r: 16,
            q_t: 16,
            ..TrainConfig::default()
        };
        let x = chirp(4);
        let s = RngStream::from_seed(1);
        assert_eq!(train_receiver(&rx, &tx, &x, &mix, &cfg, &s).unwrap().theta_r, rx);
        let run = train_transmitter(&tx, &rx, &x, &mix, &cfg, &PolicyConfig::default(), &s).unwrap();
        assert_eq!(run.theta_t, tx);
    }

    #[test]
    fn zero_outer_iters_returns_initial_networks() {
        let arch = Architecture {
            k: 4,
            hidden: 3,
            tx_output: Activation::Identity,
        };
        let mix = ChannelMixture::single(&EnvModel::reference(4)).unwrap();
        let cfg = TrainConfig {
            outer_iters: 0,
            ..TrainConfig::default()
        };
        let s = RngStream::from_seed(8);
        let out = alternate_training(&cfg, &PolicyConfig::default(), &arch, &mix, &chirp(4), &s).unwrap();
        let (tx, rx) = init_networks(&arch, &s).unwrap();
        assert_eq!(out.theta_t, tx);
        assert_eq!(out.theta_r, rx);
        assert!(out.history.is_empty());
    }

    #[test]
    fn budget_caps_steps() {
        let cfg = TrainConfig {
            q_r: 50_000,
            q_t: 400_000,
            rx_steps: 100,
            tx_steps: 100,
            sample_budget: Some(400_000),
            ..TrainConfig::default()
        };
        assert_eq!(cfg.effective_rx_steps(), 8);
        assert_eq!(cfg.effective_tx_steps(), 1);
        let uncapped = TrainConfig {
            sample_budget: None,
            ..cfg
        };
        assert_eq!(uncapped.effective_rx_steps(), 100);
    }
}
