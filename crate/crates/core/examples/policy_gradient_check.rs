//! Compare the score-function transmitter gradient with central finite
//! differences of the smoothed objective on a K = 2 instance with a frozen,
//! randomly initialized receiver.
//!
//! The finite differences reuse one fixed set of exploration noise, labels
//! and channel draws for every perturbed parameter vector, so each quotient
//! is a pathwise estimate of the same gradient with its own standard error.
//! The last column is the discrepancy in units of the combined standard
//! error.
//!
//!     cargo run --release --example policy_gradient_check -- [Q_T] [Q_FD]

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use radar_e2e::channel::{ChannelDraws, ChannelMixture, PreparedChannel};
use radar_e2e::net::{cross_entropy, receive, receiver_network, transmit, transmitter_network, Activation, NetworkParams};
use radar_e2e::train::{transmitter_batch, transmitter_grad_with_stats, PolicyConfig};
use radar_e2e::{EnvModel, RngStream, Waveform};

struct Draw {
    m: u8,
    eps: Vec<Complex64>,
    channel: ChannelDraws,
}

fn smoothed_losses(
    theta_t: &NetworkParams,
    theta_r: &NetworkParams,
    x: &Waveform,
    channel: &PreparedChannel,
    draws: &[Draw],
) -> Vec<f64> {
    let mean = transmit(theta_t, x).unwrap();
    draws
        .par_iter()
        .map(|d| {
            let y: Vec<Complex64> = mean.chips().iter().zip(&d.eps).map(|(a, e)| a + e).collect();
            let z = channel.compose(&y, d.m, &d.channel).unwrap();
            cross_entropy(d.m, receive(theta_r, &z).unwrap())
        })
        .collect()
}

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("sample count")).collect();
    let q_t = args.first().copied().unwrap_or(1_000_000);
    let q_fd = args.get(1).copied().unwrap_or(200_000);
    let h = 1e-4;

    let k = 2;
    let mixture = ChannelMixture::single(&EnvModel::reference(k)).unwrap();
    let channel = &mixture.channels()[0];
    let policy = PolicyConfig::default();
    // every chip has nonzero real and imaginary parts, so no weight is
    // structurally disconnected from the input
    let x = Waveform::unit_power(vec![Complex64::new(0.8, -0.3), Complex64::new(-0.2, 0.5)]).unwrap();
    let theta_t = transmitter_network(k, Activation::Identity, 11).unwrap();
    let theta_r = receiver_network(k, 10, 12).unwrap();
    let stream = RngStream::from_seed(2024);

    let batch = transmitter_batch(&theta_t, &theta_r, &x, &mixture, &policy, q_t, &stream.fork("reinforce")).unwrap();
    let pg = transmitter_grad_with_stats(&theta_t, &x, &batch, &policy, false).unwrap();
    let estimate = pg.grads.to_flat();

    let mut rng = stream.fork("finite-difference").rng();
    let sd = policy.sigma_sq.sqrt();
    let draws: Vec<Draw> = (0..q_fd)
        .map(|i| Draw {
            m: (i % 2) as u8,
            eps: (0..k)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(sd * re, sd * im)
                })
                .collect(),
            channel: channel.draw(&mut rng),
        })
        .collect();

    println!(
        "{:>5} {:>12} {:>10} {:>12} {:>10} {:>8} {:>6}",
        "param", "reinforce", "se", "fin.diff", "fd se", "rel.err", "z"
    );
    for i in 0..theta_t.num_params() {
        let mut plus = theta_t.clone();
        plus.set_param(i, theta_t.param(i) + h);
        let mut minus = theta_t.clone();
        minus.set_param(i, theta_t.param(i) - h);
        let lp = smoothed_losses(&plus, &theta_r, &x, channel, &draws);
        let lm = smoothed_losses(&minus, &theta_r, &x, channel, &draws);
        let diffs: Vec<f64> = lp.iter().zip(&lm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let n = diffs.len() as f64;
        let fd = diffs.iter().sum::<f64>() / n;
        let fd_se = (diffs.iter().map(|d| (d - fd).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let se = pg.std_error[i];
        println!(
            "{i:>5} {:>12.4e} {:>10.2e} {:>12.4e} {:>10.2e} {:>8.3} {:>6.2}",
            estimate[i],
            se,
            fd,
            fd_se,
            (estimate[i] - fd).abs() / fd.abs(),
            (estimate[i] - fd) / se.hypot(fd_se),
        );
    }
}
