//! Monte Carlo ROC of the square-law detector against the closed form, in
//! Gaussian and in spiky clutter where the closed form no longer applies.
//!
//!     cargo run --release --example square_law_roc -- [samples per hypothesis]

use radar_e2e::baseline::{closed_form_pd, optimal_waveform, SquareLaw};
use radar_e2e::channel::ChannelMixture;
use radar_e2e::config::stepped_frequency;
use radar_e2e::eval::{pd_at_pfa, simulate_scores};
use radar_e2e::{EnvModel, RngStream};

fn main() {
    let n: usize = std::env::args().nth(1).map(|a| a.parse().expect("sample count")).unwrap_or(100_000);
    for beta in [2.0, 0.5] {
        let env = EnvModel::reference(8).with_beta(beta);
        let opt = optimal_waveform(&env, &stepped_frequency(8).unwrap(), 5000, 1e-12).unwrap();
        let scnr = env.scnr(&opt.waveform).unwrap();
        let det = SquareLaw::for_env(&opt.waveform, &env).unwrap();
        let mixture = ChannelMixture::single(&env).unwrap();
        let s = simulate_scores(&det, &opt.waveform, &mixture, n, &RngStream::from_seed(1)).unwrap();
        println!("beta {beta}, SCNR {scnr:.3}");
        for pfa in [1e-3, 1e-2, 1e-1, 0.3] {
            println!(
                "  Pfa {pfa:<6} MC {:.4}  closed form {:.4}",
                pd_at_pfa(&s.h0, &s.h1, pfa).unwrap(),
                closed_form_pd(pfa, scnr).unwrap()
            );
        }
    }
}
