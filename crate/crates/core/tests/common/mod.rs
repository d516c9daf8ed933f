//! Oracles shared by the integration tests and the acceptance suite.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radar_e2e::channel::LabeledSample;
use radar_e2e::net::{
    c2r, receiver_network, transmit, transmit_pass, transmitter_network, Activation, NetworkParams,
};
use radar_e2e::train::receiver_loss_and_grad;
use radar_e2e::Waveform;

/// Central-difference step for gradient probes.
pub const FD_STEP: f64 = 1e-6;

/// Denominator floor of the relative error. With h = 1e-6 the quotient
/// carries about eps·|f|/h ≈ 1e-10 of rounding noise for O(1) objectives,
/// so components far below the floor are compared on an absolute scale.
pub const REL_FLOOR: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Outcome of one gradient probe.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub analytic: f64,
    pub numeric: f64,
}

impl Probe {
    pub fn error(&self) -> f64 {
        relative_error(self.analytic, self.numeric)
    }

    /// True when the floor, not the gradient magnitude, set the denominator.
    pub fn floored(&self) -> bool {
        self.analytic.abs().max(self.numeric.abs()) < REL_FLOOR
    }
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(scale * rng.random_range(-1.0..1.0), scale * rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn central_difference(theta: &NetworkParams, i: usize, f: impl Fn(&NetworkParams) -> f64) -> f64 {
    let mut plus = theta.clone();
    plus.set_param(i, theta.param(i) + FD_STEP);
    let mut minus = theta.clone();
    minus.set_param(i, theta.param(i) - FD_STEP);
    (f(&plus) - f(&minus)) / (2.0 * FD_STEP)
}

/// Transmitter probe: random weights, input and projection `v`, objective
/// `⟨v, C2R(y)⟩` through the normalization layer, one random parameter.
/// `k = None` also randomizes the size and output activation.
pub fn transmitter_probe_k(seed: u64, k: Option<usize>) -> Probe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k, act) = match k {
        Some(k) => (k, Activation::Identity),
        None => {
            let act = if rng.random::<bool>() { Activation::Identity } else { Activation::Tanh };
            (rng.random_range(1..=8), act)
        }
    };
    let theta = transmitter_network(k, act, rng.random()).unwrap();
    let x = Waveform::unit_power(random_complex(&mut rng, k, 1.0)).unwrap();
    let v: Vec<f64> = (0..2 * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let objective = |t: &NetworkParams| -> f64 {
        let y = c2r(transmit(t, &x).unwrap().chips());
        y.iter().zip(&v).map(|(a, b)| a * b).sum()
    };
    let pass = transmit_pass(&theta, &x).unwrap();
    let grads = pass.backward(&theta, &v).unwrap().to_flat();
    let i = rng.random_range(0..theta.num_params());
    Probe {
        analytic: grads[i],
        numeric: central_difference(&theta, i, objective),
    }
}

/// Receiver probe: mean cross-entropy of a random 4-sample batch, one
/// random parameter. `k = None` also randomizes the size and hidden width.
pub fn receiver_probe_k(seed: u64, k: Option<usize>, hidden: Option<usize>) -> Probe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = k.unwrap_or_else(|| rng.random_range(1..=8));
    let hidden = hidden.unwrap_or_else(|| rng.random_range(1..=12));
    let theta = receiver_network(k, hidden, rng.random()).unwrap();
    let batch: Vec<LabeledSample> = (0..4)
        .map(|_| LabeledSample {
            m: rng.random_range(0..2),
            z: random_complex(&mut rng, k, 3.0),
            y_sampled: None,
            loss: None,
            env: 0,
        })
        .collect();
    let (_, grads) = receiver_loss_and_grad(&theta, &batch).unwrap();
    let i = rng.random_range(0..theta.num_params());
    Probe {
        analytic: grads.to_flat()[i],
        numeric: central_difference(&theta, i, |t| receiver_loss_and_grad(t, &batch).unwrap().0),
    }
}

pub fn transmitter_probe(seed: u64) -> f64 {
    transmitter_probe_k(seed, None).error()
}

pub fn receiver_probe(seed: u64) -> f64 {
    receiver_probe_k(seed, None, None).error()
}

pub mod policy {
    //! Common-random-number finite differences of the smoothed transmitter
    //! objective `E[l]` on a small instance with a frozen receiver.

    use num_complex::Complex64;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use rayon::prelude::*;

    use radar_e2e::channel::{ChannelDraws, ChannelMixture, PreparedChannel};
    use radar_e2e::net::{cross_entropy, receive, receiver_network, transmit, transmitter_network, Activation, NetworkParams};
    use radar_e2e::train::{transmitter_batch, transmitter_grad_with_stats, PolicyConfig};
    use radar_e2e::{EnvModel, RngStream, Waveform};

    pub const K: usize = 2;
    const STEP: f64 = 1e-4;

    struct Draw {
        m: u8,
        eps: Vec<Complex64>,
        channel: ChannelDraws,
    }

    pub struct Component {
        pub estimate: f64,
        pub std_error: f64,
        pub finite_difference: f64,
        pub fd_std_error: f64,
    }

    impl Component {
        pub fn relative_error(&self) -> f64 {
            (self.estimate - self.finite_difference).abs() / self.finite_difference.abs()
        }

        pub fn z(&self) -> f64 {
            (self.estimate - self.finite_difference) / self.std_error.hypot(self.fd_std_error)
        }
    }

    fn losses(theta_t: &NetworkParams, theta_r: &NetworkParams, x: &Waveform, ch: &PreparedChannel, draws: &[Draw]) -> Vec<f64> {
        let mean = transmit(theta_t, x).unwrap();
        draws
            .par_iter()
            .map(|d| {
                let y: Vec<Complex64> = mean.chips().iter().zip(&d.eps).map(|(a, e)| a + e).collect();
                let z = ch.compose(&y, d.m, &d.channel).unwrap();
                cross_entropy(d.m, receive(theta_r, &z).unwrap())
            })
            .collect()
    }

    /// Score-function estimate at `q_t` samples beside per-parameter CRN
    /// central differences over `q_fd` shared draws.
    pub fn compare(q_t: usize, q_fd: usize) -> Vec<Component> {
        let mixture = ChannelMixture::single(&EnvModel::reference(K)).unwrap();
        let ch = &mixture.channels()[0];
        let policy = PolicyConfig::default();
        // every chip has nonzero real and imaginary parts, so no weight is
        // disconnected from the input
        let x = Waveform::unit_power(vec![Complex64::new(0.8, -0.3), Complex64::new(-0.2, 0.5)]).unwrap();
        let theta_t = transmitter_network(K, Activation::Identity, 11).unwrap();
        let theta_r = receiver_network(K, 10, 12).unwrap();
        let stream = RngStream::from_seed(2024);

        let batch = transmitter_batch(&theta_t, &theta_r, &x, &mixture, &policy, q_t, &stream.fork("reinforce")).unwrap();
        let pg = transmitter_grad_with_stats(&theta_t, &x, &batch, &policy, false).unwrap();
        let estimate = pg.grads.to_flat();

        let mut rng = stream.fork("finite-difference").rng();
        let sd = policy.sigma_sq.sqrt();
        let draws: Vec<Draw> = (0..q_fd)
            .map(|i| Draw {
                m: (i % 2) as u8,
                eps: (0..K)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(sd * re, sd * im)
                    })
                    .collect(),
                channel: ch.draw(&mut rng),
            })
            .collect();

        (0..theta_t.num_params())
            .map(|i| {
                let mut plus = theta_t.clone();
                plus.set_param(i, theta_t.param(i) + STEP);
                let mut minus = theta_t.clone();
                minus.set_param(i, theta_t.param(i) - STEP);
                let lp = losses(&plus, &theta_r, &x, ch, &draws);
                let lm = losses(&minus, &theta_r, &x, ch, &draws);
                let n = q_fd as f64;
                let diffs: Vec<f64> = lp.iter().zip(&lm).map(|(a, b)| (a - b) / (2.0 * STEP)).collect();
                let fd = diffs.iter().sum::<f64>() / n;
                let var = diffs.iter().map(|d| (d - fd).powi(2)).sum::<f64>() / (n - 1.0);
                Component {
                    estimate: estimate[i],
                    std_error: pg.std_error[i],
                    finite_difference: fd,
                    fd_std_error: (var / n).sqrt(),
                }
            })
            .collect()
    }
}
