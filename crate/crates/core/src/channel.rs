//! The stochastic radar channel: Swerling I target, coherent Weibull clutter
//! from the 2K−2 neighbouring range cells, and correlated Gaussian
//! interference.
//!
//! ```text
//! H0 (m = 0):  z =       Σ_{k≠0} γ_k J_k y + n
//! H1 (m = 1):  z = α y + Σ_{k≠0} γ_k J_k y + n
//! ```
//!
//! Complex Gaussians are circular: `CN(0, σ²)` has variance σ²/2 on each of
//! the real and imaginary parts.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Weibull};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::rng::RngStream;
use crate::signal::{clutter_cells, EnvModel, Waveform};

/// Samples per independently seeded chunk of a batch.
pub const CHUNK: usize = 1024;

/// One received vector with its hypothesis label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    /// 1 when a target is present.
    pub m: u8,
    pub z: Vec<Complex64>,
    /// Waveform actually transmitted, kept for transmitter training.
    pub y_sampled: Option<Waveform>,
    /// Instantaneous receiver loss, filled in by the receiver.
    pub loss: Option<f64>,
    /// Which mixture component produced the sample.
    pub env: usize,
}

fn cn<R: Rng + ?Sized>(rng: &mut R, std_per_component: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * std_per_component, im * std_per_component)
}

/// α ~ CN(0, σα²)
pub fn draw_target_gain<R: Rng + ?Sized>(env: &EnvModel, rng: &mut R) -> Complex64 {
    cn(rng, (env.sigma_alpha_sq / 2.0).sqrt())
}

/// Weibull scale `b` giving `E[r²] = b² Γ(1 + 2/β) = power`.
pub fn weibull_scale(beta: f64, power: f64) -> f64 {
    (power / libm::tgamma(1.0 + 2.0 / beta)).sqrt()
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.25..=2.0).contains(&beta) {
        return Err(Error::param("shape_beta", format!("{beta} outside [0.25, 2]")));
    }
    Ok(())
}

/// Weibull amplitude with a uniform, independent phase.
pub fn draw_coherent_weibull<R: Rng + ?Sized>(beta: f64, power: f64, rng: &mut R) -> Result<Complex64> {
    check_beta(beta)?;
    if !(power >= 0.0) {
        return Err(Error::param("clutter power", format!("{power} is negative")));
    }
    if power == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let dist = Weibull::new(weibull_scale(beta, power), beta)
        .map_err(|e| Error::param("clutter power", e.to_string()))?;
    Ok(coherent(&dist, rng))
}

fn coherent<R: Rng + ?Sized>(amplitude: &Weibull<f64>, rng: &mut R) -> Complex64 {
    let r = amplitude.sample(rng);
    let phase = TAU * rng.random::<f64>();
    Complex64::from_polar(r, phase)
}

/// `L w` for a given white vector `w`.
pub fn color_noise(chol_n: &Cholesky, w: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); w.len()];
    chol_n.mul_lower(w, &mut out);
    out
}

/// `L w` with `w` i.i.d. CN(0, 1).
pub fn draw_colored_noise<R: Rng + ?Sized>(chol_n: &Cholesky, rng: &mut R) -> Vec<Complex64> {
    let w: Vec<Complex64> = (0..chol_n.dim()).map(|_| cn(rng, std::f64::consts::FRAC_1_SQRT_2)).collect();
    color_noise(chol_n, &w)
}

/// Every random quantity behind one received vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDraws {
    pub alpha: Complex64,
    /// Clutter coefficients in storage order (k = −K+1..K−1, k ≠ 0).
    pub clutter: Vec<Complex64>,
    /// White CN(0,1) vector before coloring.
    pub white_noise: Vec<Complex64>,
}

impl ChannelDraws {
    pub fn zeros(k: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            alpha: zero,
            clutter: vec![zero; 2 * k - 2],
            white_noise: vec![zero; k],
        }
    }
}

/// An environment with its noise factor and clutter amplitude laws ready.
#[derive(Clone, Debug)]
pub struct PreparedChannel {
    env: EnvModel,
    chol_n: Cholesky,
    alpha_std: f64,
    clutter: Vec<Option<Weibull<f64>>>,
}

impl PreparedChannel {
    pub fn new(env: &EnvModel) -> Result<Self> {
        env.validate()?;
        let chol_n = Cholesky::factor(env.noise_covariance()?.matrix())?;
        let clutter = env
            .clutter_powers
            .iter()
            .map(|&p| {
                if p == 0.0 {
                    Ok(None)
                } else {
                    Weibull::new(weibull_scale(env.shape_beta, p), env.shape_beta)
                        .map(Some)
                        .map_err(|e| Error::param("clutter_powers", e.to_string()))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            env: env.clone(),
            chol_n,
            alpha_std: (env.sigma_alpha_sq / 2.0).sqrt(),
            clutter,
        })
    }

    pub fn env(&self) -> &EnvModel {
        &self.env
    }

    pub fn k(&self) -> usize {
        self.chol_n.dim()
    }

    pub fn noise_factor(&self) -> &Cholesky {
        &self.chol_n
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraws {
        let alpha = cn(rng, self.alpha_std);
        let clutter = self
            .clutter
            .iter()
            .map(|c| match c {
                Some(d) => coherent(d, rng),
                None => Complex64::new(0.0, 0.0),
            })
            .collect();
        let white_noise = (0..self.k())
            .map(|_| cn(rng, std::f64::consts::FRAC_1_SQRT_2))
            .collect();
        ChannelDraws {
            alpha,
            clutter,
            white_noise,
        }
    }

    /// Deterministic received vector for given draws.
    pub fn compose(&self, y: &[Complex64], m: u8, draws: &ChannelDraws) -> Result<Vec<Complex64>> {
        let k = self.k();
        if y.len() != k {
            return Err(Error::Dimension(format!("waveform length {} vs K = {k}", y.len())));
        }
        let mut z = vec![Complex64::new(0.0, 0.0); k];
        self.chol_n.mul_lower(&draws.white_noise, &mut z);
        for (cell, gamma) in clutter_cells(k).zip(&draws.clutter) {
            add_shifted(&mut z, y, cell, *gamma);
        }
        if m == 1 {
            for (zi, yi) in z.iter_mut().zip(y) {
                *zi += draws.alpha * yi;
            }
        }
        Ok(z)
    }

    /// Draws and composes in one pass, writing into `z`.
    pub fn simulate_into<R: Rng + ?Sized>(
        &self,
        y: &[Complex64],
        m: u8,
        rng: &mut R,
        white: &mut [Complex64],
        z: &mut [Complex64],
    ) {
        let k = self.k();
        debug_assert_eq!(y.len(), k);
        let alpha = cn(rng, self.alpha_std);
        z.fill(Complex64::new(0.0, 0.0));
        for (cell, law) in clutter_cells(k).zip(&self.clutter) {
            if let Some(d) = law {
                let gamma = coherent(d, rng);
                add_shifted(z, y, cell, gamma);
            }
        }
        for w in white.iter_mut() {
            *w = cn(rng, std::f64::consts::FRAC_1_SQRT_2);
        }
        for i in 0..k {
            let row = &self.chol_n.lower().row(i)[..=i];
            z[i] += row.iter().zip(&white[..=i]).map(|(a, b)| a * b).sum::<Complex64>();
        }
        if m == 1 {
            for (zi, yi) in z.iter_mut().zip(y) {
                *zi += alpha * yi;
            }
        }
    }

    pub fn simulate<R: Rng + ?Sized>(&self, y: &[Complex64], m: u8, rng: &mut R) -> Vec<Complex64> {
        let k = self.k();
        let mut white = vec![Complex64::new(0.0, 0.0); k];
        let mut z = vec![Complex64::new(0.0, 0.0); k];
        self.simulate_into(y, m, rng, &mut white, &mut z);
        z
    }
}

/// `z += gamma · J_cell y`
fn add_shifted(z: &mut [Complex64], y: &[Complex64], cell: isize, gamma: Complex64) {
    let k = y.len();
    if cell >= 0 {
        let c = cell as usize;
        for i in c..k {
            z[i] += gamma * y[i - c];
        }
    } else {
        let c = (-cell) as usize;
        for i in 0..k - c {
            z[i] += gamma * y[i + c];
        }
    }
}

/// One draw of the channel for waveform `y` under hypothesis `m`.
pub fn simulate_return<R: Rng + ?Sized>(
    y: &Waveform,
    m: u8,
    env: &EnvModel,
    rng: &mut R,
) -> Result<LabeledSample> {
    let ch = PreparedChannel::new(env)?;
    if y.len() != ch.k() {
        return Err(Error::Dimension(format!("waveform length {} vs K = {}", y.len(), ch.k())));
    }
    Ok(LabeledSample {
        m,
        z: ch.simulate(y.chips(), m, rng),
        y_sampled: None,
        loss: None,
        env: 0,
    })
}

/// Weighted set of environments that training or testing draws from.
#[derive(Clone, Debug)]
pub struct ChannelMixture {
    channels: Vec<PreparedChannel>,
    weights: Vec<f64>,
    index: Option<WeightedIndex<f64>>,
}

impl ChannelMixture {
    pub fn new(envs: &[(EnvModel, f64)]) -> Result<Self> {
        if envs.is_empty() {
            return Err(Error::Config("environment list is empty".into()));
        }
        let weights: Vec<f64> = envs.iter().map(|(_, w)| *w).collect();
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("mixture weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("mixture weights sum to {total}, not 1")));
        }
        let channels = envs
            .iter()
            .map(|(e, _)| PreparedChannel::new(e))
            .collect::<Result<Vec<_>>>()?;
        let k = channels[0].k();
        if channels.iter().any(|c| c.k() != k) {
            return Err(Error::Dimension("mixture environments disagree on K".into()));
        }
        let index = if channels.len() > 1 {
            Some(WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            channels,
            weights,
            index,
        })
    }

    pub fn single(env: &EnvModel) -> Result<Self> {
        Self::new(&[(env.clone(), 1.0)])
    }

    pub fn k(&self) -> usize {
        self.channels[0].k()
    }

    pub fn channels(&self) -> &[PreparedChannel] {
        &self.channels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.index {
            Some(ix) => ix.sample(rng),
            None => 0,
        }
    }

    /// Environment and label for each of `q` samples. Balanced batches split
    /// exactly ⌈q/2⌉ H0 / ⌊q/2⌋ H1 in shuffled order; otherwise each label
    /// is Bernoulli with the chosen environment's prior.
    pub fn assign<R: Rng + ?Sized>(&self, q: usize, balanced: bool, rng: &mut R) -> Vec<(usize, u8)> {
        let envs: Vec<usize> = (0..q).map(|_| self.pick(rng)).collect();
        let labels: Vec<u8> = if balanced {
            let mut l: Vec<u8> = (0..q).map(|i| u8::from(i >= q.div_ceil(2))).collect();
            l.shuffle(rng);
            l
        } else {
            envs.iter()
                .map(|&e| u8::from(rng.random::<f64>() < self.channels[e].env.prior_p1))
                .collect()
        };
        envs.into_iter().zip(labels).collect()
    }
}

/// Labeled batch where each sample's waveform comes from `waveform`, which
/// is called with that sample's chunk generator before the channel draws.
/// Chunks of [`CHUNK`] samples run on independent child streams.
pub fn generate_batch_with<F>(
    q: usize,
    mixture: &ChannelMixture,
    balanced: bool,
    stream: &RngStream,
    record_waveform: bool,
    waveform: F,
) -> Result<Vec<LabeledSample>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Waveform> + Sync,
{
    if q == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let plan = mixture.assign(q, balanced, &mut stream.rng());
    let k = mixture.k();
    let chunks: Vec<Result<Vec<LabeledSample>>> = plan
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut rng = stream.split(c as u64).rng();
            let mut white = vec![Complex64::new(0.0, 0.0); k];
            chunk
                .iter()
                .map(|&(e, m)| {
                    let y = waveform(&mut rng)?;
                    if y.len() != k {
                        return Err(Error::Dimension(format!(
                            "waveform length {} vs K = {k}",
                            y.len()
                        )));
                    }
                    let mut z = vec![Complex64::new(0.0, 0.0); k];
                    mixture.channels[e].simulate_into(y.chips(), m, &mut rng, &mut white, &mut z);
                    Ok(LabeledSample {
                        m,
                        z,
                        y_sampled: record_waveform.then_some(y),
                        loss: None,
                        env: e,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(q);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// `q` labeled samples of a fixed waveform drawn from a weighted mixture of
/// environments.
pub fn generate_batch(
    y: &Waveform,
    q: usize,
    envs: &[(EnvModel, f64)],
    balanced: bool,
    stream: &RngStream,
) -> Result<Vec<LabeledSample>> {
    let mixture = ChannelMixture::new(envs)?;
    generate_batch_with(q, &mixture, balanced, stream, false, |_| Ok(y.clone()))
}
