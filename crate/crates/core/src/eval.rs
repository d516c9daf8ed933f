//! Monte Carlo ROC estimation for any detector.

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::baseline::{RocCurve, RocPoint, SquareLaw};
use crate::channel::{ChannelMixture, CHUNK};
use crate::error::{Error, Result};
use crate::net::{c2r, check_receiver, NetworkParams};
use crate::rng::RngStream;
use crate::signal::Waveform;

/// Maps a received vector to a statistic; larger means "target present".
pub trait Detector: Sync {
    fn score(&self, z: &[Complex64]) -> f64;
}

impl Detector for SquareLaw {
    fn score(&self, z: &[Complex64]) -> f64 {
        SquareLaw::score(self, z)
    }
}

/// Learned receiver. Scores are the output logit, a monotone transform of
/// `p` that keeps saturated outputs distinguishable.
pub struct ReceiverDetector<'a> {
    theta_r: &'a NetworkParams,
}

impl<'a> ReceiverDetector<'a> {
    pub fn new(theta_r: &'a NetworkParams, k: usize) -> Result<Self> {
        check_receiver(theta_r, k)?;
        Ok(Self { theta_r })
    }
}

impl Detector for ReceiverDetector<'_> {
    fn score(&self, z: &[Complex64]) -> f64 {
        let trace = self
            .theta_r
            .forward(&c2r(z))
            .expect("receiver dimensions checked at construction");
        self.theta_r.output_logit(&trace)[0]
    }
}

impl<F: Fn(&[Complex64]) -> f64 + Sync> Detector for F {
    fn score(&self, z: &[Complex64]) -> f64 {
        self(z)
    }
}

/// Raw detector outputs under each hypothesis.
#[derive(Clone, Debug, PartialEq)]
pub struct Scores {
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
}

/// Scores `n_per_hyp` channel draws under each hypothesis.
pub fn simulate_scores<D: Detector + ?Sized>(
    detector: &D,
    y: &Waveform,
    mixture: &ChannelMixture,
    n_per_hyp: usize,
    stream: &RngStream,
) -> Result<Scores> {
    if n_per_hyp == 0 {
        return Err(Error::Config("need at least one sample per hypothesis".into()));
    }
    if y.len() != mixture.k() {
        return Err(Error::Dimension(format!(
            "waveform length {} vs K = {}",
            y.len(),
            mixture.k()
        )));
    }
    let k = y.len();
    let run = |m: u8| -> Vec<f64> {
        let base = stream.split(u64::from(m));
        let chunks = n_per_hyp.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = base.split(c as u64).rng();
                let n = CHUNK.min(n_per_hyp - c * CHUNK);
                let mut white = vec![Complex64::new(0.0, 0.0); k];
                let mut z = vec![Complex64::new(0.0, 0.0); k];
                (0..n)
                    .map(|_| {
                        let e = mixture.pick(&mut rng);
                        mixture.channels()[e].simulate_into(y.chips(), m, &mut rng, &mut white, &mut z);
                        detector.score(&z)
                    })
                    .collect::<Vec<f64>>()
            })
            .flatten_iter()
            .collect()
    };
    Ok(Scores { h0: run(0), h1: run(1) })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Fraction of sorted `s` strictly above `t`.
fn frac_above(s: &[f64], t: f64) -> f64 {
    let idx = s.partition_point(|x| *x <= t);
    (s.len() - idx) as f64 / s.len() as f64
}

/// `(Pfa, Pd)` for the decision `score > threshold`.
pub fn operating_point(scores_h0: &[f64], scores_h1: &[f64], threshold: f64) -> (f64, f64) {
    let above = |s: &[f64]| s.iter().filter(|x| **x > threshold).count() as f64 / s.len() as f64;
    (above(scores_h0), above(scores_h1))
}

/// ROC over thresholds at `n_points` quantiles of the pooled scores, with
/// −∞ and +∞ endpoints.
pub fn roc_from_scores(scores_h0: &[f64], scores_h1: &[f64], n_points: usize) -> Result<RocCurve> {
    if scores_h0.is_empty() || scores_h1.is_empty() {
        return Err(Error::Domain("ROC needs scores under both hypotheses".into()));
    }
    if scores_h0.iter().chain(scores_h1).any(|s| s.is_nan()) {
        return Err(Error::Domain("NaN detector score".into()));
    }
    let h0 = sorted(scores_h0);
    let h1 = sorted(scores_h1);
    let pooled = sorted(&[scores_h0, scores_h1].concat());
    let n = pooled.len();
    let mut thresholds = vec![f64::NEG_INFINITY];
    for i in 0..n_points {
        let pos = if n_points > 1 {
            (i as f64 * (n - 1) as f64 / (n_points - 1) as f64).round() as usize
        } else {
            (n - 1) / 2
        };
        thresholds.push(pooled[pos]);
    }
    thresholds.push(f64::INFINITY);
    thresholds.dedup();
    let points = thresholds
        .into_iter()
        .map(|t| RocPoint {
            threshold: t,
            pfa: frac_above(&h0, t),
            pd: frac_above(&h1, t),
        })
        .collect();
    RocCurve::new(points)
}

/// Pd of the test whose threshold is the smallest H0 order statistic that
/// keeps the empirical false-alarm rate at or below `pfa`.
pub fn pd_at_pfa(scores_h0: &[f64], scores_h1: &[f64], pfa: f64) -> Result<f64> {
    if scores_h0.is_empty() || scores_h1.is_empty() {
        return Err(Error::Domain("need scores under both hypotheses".into()));
    }
    if !(0.0..=1.0).contains(&pfa) {
        return Err(Error::Domain(format!("pfa {pfa} outside [0, 1]")));
    }
    let mut h0 = scores_h0.to_vec();
    h0.sort_by(|a, b| b.total_cmp(a));
    let allowed = (pfa * h0.len() as f64).floor() as usize;
    if allowed >= h0.len() {
        return Ok(1.0);
    }
    let threshold = h0[allowed];
    Ok(scores_h1.iter().filter(|x| **x > threshold).count() as f64 / scores_h1.len() as f64)
}

/// Binomial standard error of an estimated probability.
pub fn pd_standard_error(pd: f64, n: usize) -> f64 {
    (pd * (1.0 - pd) / n as f64).sqrt()
}

/// Monte Carlo ROC of `detector` transmitting `y` through `mixture`.
pub fn evaluate_system<D: Detector + ?Sized>(
    detector: &D,
    y: &Waveform,
    mixture: &ChannelMixture,
    n_per_hyp: usize,
    n_points: usize,
    stream: &RngStream,
) -> Result<RocCurve> {
    let s = simulate_scores(detector, y, mixture, n_per_hyp, stream)?;
    roc_from_scores(&s.h0, &s.h1, n_points)
}

/// Percentile bootstrap band for Pd at each threshold of `curve`.
///
/// Resampling H1 scores with replacement only changes how many fall between
/// consecutive thresholds, so each replicate draws those bin counts from a
/// multinomial instead of touching individual scores.
pub fn bootstrap_pd_band(
    curve: &RocCurve,
    scores_h1: &[f64],
    replicates: usize,
    level: f64,
    stream: &RngStream,
) -> Result<Vec<(f64, f64)>> {
    if replicates < 2 || !(0.0 < level && level < 1.0) {
        return Err(Error::Config("bootstrap needs >= 2 replicates and level in (0, 1)".into()));
    }
    let h1 = sorted(scores_h1);
    let n = h1.len();
    let thresholds: Vec<f64> = curve.points.iter().map(|p| p.threshold).collect();
    // bin i holds scores in (t_i, t_{i+1}]; the last bin is above every threshold
    let above: Vec<usize> = thresholds.iter().map(|&t| n - h1.partition_point(|x| *x <= t)).collect();
    let bins: Vec<usize> = (0..above.len())
        .map(|i| above[i] - above.get(i + 1).copied().unwrap_or(0))
        .collect();
    let mut rng = stream.rng();
    let mut samples = vec![Vec::with_capacity(replicates); thresholds.len()];
    for _ in 0..replicates {
        let mut remaining = n as u64;
        let mut mass_left = n as f64;
        let mut counts = vec![0u64; bins.len()];
        for (i, &b) in bins.iter().enumerate() {
            if remaining == 0 || b == 0 {
                mass_left -= b as f64;
                continue;
            }
            let p = (b as f64 / mass_left).min(1.0);
            counts[i] = Binomial::new(remaining, p)
                .map_err(|e| Error::Domain(e.to_string()))?
                .sample(&mut rng);
            remaining -= counts[i];
            mass_left -= b as f64;
        }
        let mut tail = 0u64;
        for i in (0..bins.len()).rev() {
            tail += counts[i];
            samples[i].push(tail as f64 / n as f64);
        }
    }
    let lo_q = (1.0 - level) / 2.0;
    Ok(samples
        .into_iter()
        .map(|mut s| {
            s.sort_by(f64::total_cmp);
            let at = |q: f64| s[((q * (s.len() - 1) as f64).round() as usize).min(s.len() - 1)];
            (at(lo_q), at(1.0 - lo_q))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation() {
        let h0 = vec![0.0; 10];
        let h1 = vec![1.0; 10];
        assert_eq!(operating_point(&h0, &h1, 0.5), (0.0, 1.0));
        let roc = roc_from_scores(&h0, &h1, 16).unwrap();
        assert!(roc.points.iter().any(|p| p.pfa == 0.0 && p.pd == 1.0));
    }

    #[test]
    fn hand_counted_point() {
        assert_eq!(operating_point(&[0.1, 0.4], &[0.3, 0.9], 0.35), (0.5, 0.5));
    }

    #[test]
    fn identical_scores_sit_on_chance_line() {
        let s: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let roc = roc_from_scores(&s, &s, 32).unwrap();
        for p in &roc.points {
            assert_eq!(p.pfa, p.pd);
        }
        assert_eq!(roc.points.first().unwrap().pfa, 1.0);
        assert_eq!(roc.points.last().unwrap().pfa, 0.0);
    }

    #[test]
    fn empty_scores_rejected() {
        assert!(roc_from_scores(&[], &[1.0], 4).is_err());
        assert!(roc_from_scores(&[1.0], &[], 4).is_err());
    }

    #[test]
    fn pd_at_pfa_thresholding() {
        let h0: Vec<f64> = (0..100).map(f64::from).collect();
        let h1: Vec<f64> = (0..100).map(|i| f64::from(i) + 50.0).collect();
        // 10% of h0 above threshold 89 → h1 above 89: values 90..149 → 60
        assert!((pd_at_pfa(&h0, &h1, 0.1).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(pd_at_pfa(&h0, &h1, 1.0).unwrap(), 1.0);
    }
}
