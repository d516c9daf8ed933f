//! Draws coherent Weibull clutter coefficients for several shape
//! parameters and compares their empirical statistics with the model.
//!
//!     cargo run --release --example channel_statistics -- [draws]

use radar_e2e::channel::draw_coherent_weibull;
use radar_e2e::RngStream;

fn main() {
    let n: usize = std::env::args().nth(1).map(|a| a.parse().expect("draw count")).unwrap_or(200_000);
    let power = 1.0 / 7.0;
    println!("{:>5} {:>10} {:>10} {:>12}", "beta", "E|g|^2", "target", "P(|g|^2>5p)");
    for (i, beta) in [0.25, 0.5, 1.0, 1.3, 2.0].into_iter().enumerate() {
        let mut rng = RngStream::from_seed(i as u64).rng();
        let p: Vec<f64> = (0..n)
            .map(|_| draw_coherent_weibull(beta, power, &mut rng).unwrap().norm_sqr())
            .collect();
        let mean = p.iter().sum::<f64>() / n as f64;
        // heavier tails put more mass far above the mean power
        let tail = p.iter().filter(|x| **x > 5.0 * power).count() as f64 / n as f64;
        println!("{beta:>5} {mean:>10.5} {power:>10.5} {tail:>12.5}");
    }
}
