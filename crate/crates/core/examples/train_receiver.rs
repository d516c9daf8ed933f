//! Supervised receiver training with the stepped-frequency waveform held
//! fixed, then its ROC next to the square-law detector for the same
//! waveform.
//!
//!     cargo run --release --example train_receiver -- [beta]

use radar_e2e::baseline::SquareLaw;
use radar_e2e::channel::ChannelMixture;
use radar_e2e::config::stepped_frequency;
use radar_e2e::eval::{pd_at_pfa, simulate_scores, ReceiverDetector};
use radar_e2e::net::{receiver_network, transmitter_network, Activation};
use radar_e2e::train::{evaluate_receiver_loss, train_receiver, TrainConfig};
use radar_e2e::{EnvModel, RngStream};

fn main() {
    let beta: f64 = std::env::args().nth(1).map(|a| a.parse().expect("beta")).unwrap_or(2.0);
    let k = 8;
    let env = EnvModel::reference(k).with_beta(beta);
    let mixture = ChannelMixture::single(&env).unwrap();
    let x = stepped_frequency(k).unwrap();
    // the receiver only sees this network's output waveform
    let theta_t = transmitter_network(k, Activation::Identity, 1).unwrap();
    let y = radar_e2e::net::transmit(&theta_t, &x).unwrap();
    let cfg = TrainConfig {
        eta: 2.0,
        q_r: 5000,
        rx_steps: 400,
        sample_budget: None,
        ..TrainConfig::default()
    };
    let holdout = RngStream::from_seed(7);
    let mut theta_r = receiver_network(k, 10, 2).unwrap();
    for block in 0..4 {
        let run = train_receiver(&theta_r, &theta_t, &x, &mixture, &cfg, &RngStream::from_seed(10 + block)).unwrap();
        theta_r = run.theta_r;
        let loss = evaluate_receiver_loss(&theta_r, &y, &mixture, 50_000, &holdout).unwrap();
        println!("after {} steps: held-out cross-entropy {loss:.4}", (block + 1) * 400);
    }

    let stream = RngStream::from_seed(99);
    let learned = simulate_scores(&ReceiverDetector::new(&theta_r, k).unwrap(), &y, &mixture, 200_000, &stream).unwrap();
    let square = simulate_scores(&SquareLaw::for_env(&y, &env).unwrap(), &y, &mixture, 200_000, &stream).unwrap();
    for pfa in [1e-3, 1e-2, 1e-1] {
        println!(
            "Pfa {pfa:.0e}: learned receiver {:.4}, square law {:.4}",
            pd_at_pfa(&learned.h0, &learned.h1, pfa).unwrap(),
            pd_at_pfa(&square.h0, &square.h1, pfa).unwrap()
        );
    }
}
