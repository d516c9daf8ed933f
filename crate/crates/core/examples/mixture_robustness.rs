//! Trains one system on a mixture of clutter shapes and one on a single
//! shape, then tests both in spiky clutter.
//!
//!     cargo run --release --example mixture_robustness -- [seed]

use radar_e2e::channel::ChannelMixture;
use radar_e2e::config::stepped_frequency;
use radar_e2e::eval::{pd_at_pfa, simulate_scores, ReceiverDetector};
use radar_e2e::net::Activation;
use radar_e2e::train::{alternate_training, Architecture, PolicyConfig, TrainConfig};
use radar_e2e::{EnvModel, RngStream};

const K: usize = 8;

fn pd_in(mixture: &ChannelMixture, test: &ChannelMixture, seed: u64) -> Vec<f64> {
    let x = stepped_frequency(K).unwrap();
    let cfg = TrainConfig {
        eta: 2.0,
        eta_tx: Some(0.2),
        q_r: 5000,
        q_t: 40_000,
        rx_steps: 80,
        tx_steps: 10,
        outer_iters: 20,
        stop_tol: 0.0,
        ..TrainConfig::default()
    };
    let arch = Architecture {
        k: K,
        hidden: 10,
        tx_output: Activation::Identity,
    };
    let sys = alternate_training(&cfg, &PolicyConfig::default(), &arch, mixture, &x, &RngStream::from_seed(seed)).unwrap();
    let y = sys.waveform(&x).unwrap();
    let det = ReceiverDetector::new(&sys.theta_r, K).unwrap();
    let s = simulate_scores(&det, &y, test, 200_000, &RngStream::from_seed(99)).unwrap();
    [1e-3, 1e-2, 1e-1].iter().map(|p| pd_at_pfa(&s.h0, &s.h1, *p).unwrap()).collect()
}

fn main() {
    let seed: u64 = std::env::args().nth(1).map(|a| a.parse().expect("seed")).unwrap_or(1);
    let env = |beta| EnvModel::reference(K).with_beta(beta);
    let test = ChannelMixture::single(&env(0.5)).unwrap();
    let mixture = ChannelMixture::new(&[(env(0.5), 0.5), (env(1.3), 0.5)]).unwrap();
    let single = ChannelMixture::single(&env(1.3)).unwrap();
    println!("tested at beta 0.5     Pd@1e-3  Pd@1e-2  Pd@1e-1");
    for (name, m) in [("trained on {0.5, 1.3}", &mixture), ("trained on 1.3", &single)] {
        let pd = pd_in(m, &test, seed);
        println!("{name:<22} {:>7.4} {:>8.4} {:>8.4}", pd[0], pd[1], pd[2]);
    }
}
