//! Designs the SCNR-maximizing unit-power waveform for the reference
//! environment, starting from the stepped-frequency sequence.
//!
//!     cargo run --release --example optimal_waveform -- [K]

use radar_e2e::baseline::{closed_form_pd, optimal_waveform};
use radar_e2e::config::stepped_frequency;
use radar_e2e::EnvModel;

fn main() {
    let k: usize = std::env::args().nth(1).map(|a| a.parse().expect("K")).unwrap_or(8);
    let env = EnvModel::reference(k);
    let init = stepped_frequency(k).unwrap();
    let opt = optimal_waveform(&env, &init, 5000, 1e-12).unwrap();
    println!(
        "SCNR {:.4} -> {:.4} after {} eigenvector steps and {} accepted steps in total ({:?})",
        env.scnr(&init).unwrap(),
        env.scnr(&opt.waveform).unwrap(),
        opt.fixed_point_steps,
        opt.trajectory.len() - 1,
        opt.termination
    );
    for pfa in [1e-3, 1e-2, 1e-1] {
        println!(
            "Pfa {pfa:.0e}: Pd {:.4} (stepped frequency {:.4})",
            closed_form_pd(pfa, env.scnr(&opt.waveform).unwrap()).unwrap(),
            closed_form_pd(pfa, env.scnr(&init).unwrap()).unwrap()
        );
    }
    println!("chip        re          im        |y|");
    for (i, c) in opt.waveform.chips().iter().enumerate() {
        println!("{i:>4} {:>10.6} {:>10.6} {:>10.6}", c.re, c.im, c.norm());
    }
}
