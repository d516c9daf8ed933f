//! Alternating training of transmitter and receiver in Gaussian clutter,
//! compared against the optimal waveform with the square-law detector.
//!
//!     RUST_LOG=info cargo run --release --example joint_training -- [seed]

use radar_e2e::baseline::{closed_form_pd, optimal_waveform};
use radar_e2e::channel::ChannelMixture;
use radar_e2e::config::stepped_frequency;
use radar_e2e::eval::{pd_at_pfa, simulate_scores, ReceiverDetector};
use radar_e2e::net::Activation;
use radar_e2e::train::{alternate_training, Architecture, PolicyConfig, TrainConfig};
use radar_e2e::{EnvModel, RngStream};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let seed: u64 = std::env::args().nth(1).map(|a| a.parse().expect("seed")).unwrap_or(1);
    let k = 8;
    let env = EnvModel::reference(k);
    let mixture = ChannelMixture::single(&env).unwrap();
    let x = stepped_frequency(k).unwrap();
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
        k,
        hidden: 10,
        tx_output: Activation::Identity,
    };
    let sys = alternate_training(&cfg, &PolicyConfig::default(), &arch, &mixture, &x, &RngStream::from_seed(seed)).unwrap();
    println!("round  rx loss  tx loss     SCNR");
    for r in &sys.history.rounds {
        println!("{:>5} {:>8.4} {:>8.4} {:>8.3}", r.round, r.rx_loss, r.tx_loss, r.scnr);
    }

    let y = sys.waveform(&x).unwrap();
    let opt = optimal_waveform(&env, &x, 5000, 1e-12).unwrap();
    let s = simulate_scores(&ReceiverDetector::new(&sys.theta_r, k).unwrap(), &y, &mixture, 200_000, &RngStream::from_seed(99)).unwrap();
    println!("learned SCNR {:.3}, optimal {:.3}", env.scnr(&y).unwrap(), env.scnr(&opt.waveform).unwrap());
    for pfa in [1e-3, 1e-2, 1e-1] {
        println!(
            "Pfa {pfa:.0e}: learned {:.4}, optimal closed form {:.4}",
            pd_at_pfa(&s.h0, &s.h1, pfa).unwrap(),
            closed_form_pd(pfa, env.scnr(&opt.waveform).unwrap()).unwrap()
        );
    }
}
