//! Fully connected feedforward networks with exact reverse-mode gradients,
//! plus the radar adapters around them: complex↔real packing, the
//! unit-power normalization layer, and the transmitter/receiver maps.
//!
//! Layer `i` computes `r_i = φ(W_i r_{i−1} + b_i)`; weights are stored
//! row-major, `outputs × inputs`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::signal::Waveform;

/// Receiver outputs are clamped to `[P_CLAMP, 1 − P_CLAMP]` before logs.
pub const P_CLAMP: f64 = 1e-12;

/// Pre-normalization norms at or below this are rejected.
pub const MIN_TRANSMIT_NORM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Activation::Identity),
            1 => Ok(Activation::Tanh),
            2 => Ok(Activation::Sigmoid),
            c => Err(Error::WeightFormat(format!("unknown activation code {c}"))),
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, r: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - r * r,
            Activation::Sigmoid => r * (1.0 - r),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs × inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    layers: Vec<Layer>,
}

/// Gradient container, shape-congruent with [`NetworkParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrads {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

/// All layer outputs of one forward pass; entry 0 is the input.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Glorot-uniform weights (`±√(6/(n_in+n_out))`) and zero biases.
pub fn init_network(dims: &[usize], activations: &[Activation], seed: u64) -> Result<NetworkParams> {
    if dims.len() < 2 || activations.len() != dims.len() - 1 {
        return Err(Error::Dimension(format!(
            "{} layer sizes need {} activations, got {}",
            dims.len(),
            dims.len().saturating_sub(1),
            activations.len()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::Dimension("layer sizes must be at least 1".into()));
    }
    let mut rng = RngStream::new(seed, 0x1417).rng();
    let layers = dims
        .windows(2)
        .zip(activations)
        .map(|(w, &act)| {
            let (n_in, n_out) = (w[0], w[1]);
            let a = (6.0 / (n_in + n_out) as f64).sqrt();
            let mut layer = Layer::zeros(n_in, n_out, act);
            layer.weights.iter_mut().for_each(|x| *x = rng.random_range(-a..=a));
            layer
        })
        .collect();
    Ok(NetworkParams { layers })
}

/// Transmitter shape: 2K → 2K (tanh) → 2K (`output`).
pub fn transmitter_network(k: usize, output: Activation, seed: u64) -> Result<NetworkParams> {
    init_network(&[2 * k, 2 * k, 2 * k], &[Activation::Tanh, output], seed)
}

/// Receiver shape: 2K → M (sigmoid) → 1 (sigmoid).
pub fn receiver_network(k: usize, hidden: usize, seed: u64) -> Result<NetworkParams> {
    init_network(&[2 * k, hidden, 1], &[Activation::Sigmoid, Activation::Sigmoid], seed)
}

impl NetworkParams {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension("network needs at least one layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Dimension("layer buffers do not match their sizes".into()));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Dimension(format!(
                    "layer outputs {} do not chain into inputs {}",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Flat parameter `i`: each layer's weights then its bias, layer by layer.
    pub fn param(&self, mut i: usize) -> f64 {
        for l in &self.layers {
            if i < l.weights.len() {
                return l.weights[i];
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                return l.bias[i];
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set_param(&mut self, mut i: usize, v: f64) {
        for l in &mut self.layers {
            if i < l.weights.len() {
                l.weights[i] = v;
                return;
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                l.bias[i] = v;
                return;
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    pub fn zero_grads(&self) -> ParamGrads {
        ParamGrads {
            weights: self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: self.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn new_trace(&self) -> Trace {
        Trace {
            activations: self.dims().into_iter().map(|d| vec![0.0; d]).collect(),
        }
    }

    pub fn forward(&self, r0: &[f64]) -> Result<Trace> {
        let mut trace = self.new_trace();
        self.forward_into(r0, &mut trace)?;
        Ok(trace)
    }

    /// Forward pass reusing the buffers of `trace`.
    pub fn forward_into(&self, r0: &[f64], trace: &mut Trace) -> Result<()> {
        if r0.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input length {} vs network input {}",
                r0.len(),
                self.input_dim()
            )));
        }
        if trace.activations.len() != self.layers.len() + 1 {
            *trace = self.new_trace();
        }
        trace.activations[0].copy_from_slice(r0);
        for (i, l) in self.layers.iter().enumerate() {
            let (prev, next) = trace.activations.split_at_mut(i + 1);
            let input = &prev[i];
            let out = &mut next[0];
            for (o, (row, b)) in out
                .iter_mut()
                .zip(l.weights.chunks_exact(l.inputs).zip(&l.bias))
            {
                let pre: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b;
                *o = l.activation.apply(pre);
            }
        }
        Ok(())
    }

    /// Pre-activation of the last layer for a completed forward `trace`.
    pub fn output_logit(&self, trace: &Trace) -> Vec<f64> {
        let l = &self.layers[self.layers.len() - 1];
        let input = &trace.activations[trace.activations.len() - 2];
        l.weights
            .chunks_exact(l.inputs)
            .zip(&l.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    /// Exact gradients for upstream gradient `d_output`, plus the gradient
    /// with respect to the network input.
    pub fn backward(&self, trace: &Trace, d_output: &[f64]) -> Result<(ParamGrads, Vec<f64>)> {
        let mut grads = self.zero_grads();
        let mut scratch = BackwardScratch::default();
        let d_in = self.backward_accumulate(trace, d_output, &mut grads, &mut scratch)?;
        Ok((grads, d_in.to_vec()))
    }

    /// Adds this sample's gradients into `grads`; returns the input gradient.
    pub fn backward_accumulate<'s>(
        &self,
        trace: &Trace,
        d_output: &[f64],
        grads: &mut ParamGrads,
        scratch: &'s mut BackwardScratch,
    ) -> Result<&'s [f64]> {
        if trace.activations.len() != self.layers.len() + 1 || d_output.len() != self.output_dim() {
            return Err(Error::Dimension("trace or upstream gradient does not fit network".into()));
        }
        if grads.weights.len() != self.layers.len() {
            return Err(Error::Dimension("gradient container does not fit network".into()));
        }
        scratch.delta.clear();
        scratch.delta.extend_from_slice(d_output);
        for (i, l) in self.layers.iter().enumerate().rev() {
            let out = &trace.activations[i + 1];
            let input = &trace.activations[i];
            // through the activation
            for (d, &r) in scratch.delta.iter_mut().zip(out) {
                *d *= l.activation.derivative_from_output(r);
            }
            let gw = &mut grads.weights[i];
            let gb = &mut grads.bias[i];
            for (o, &d) in scratch.delta.iter().enumerate() {
                gb[o] += d;
                if d != 0.0 {
                    for (g, x) in gw[o * l.inputs..(o + 1) * l.inputs].iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
            }
            scratch.next.clear();
            scratch.next.resize(l.inputs, 0.0);
            for (o, &d) in scratch.delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (n, w) in scratch.next.iter_mut().zip(&l.weights[o * l.inputs..(o + 1) * l.inputs]) {
                    *n += d * w;
                }
            }
            std::mem::swap(&mut scratch.delta, &mut scratch.next);
        }
        Ok(&scratch.delta)
    }

    /// `θ − η g`
    pub fn sgd_step(&self, grads: &ParamGrads, eta: f64) -> Result<NetworkParams> {
        let mut next = self.clone();
        next.apply_sgd(grads, eta)?;
        Ok(next)
    }

    pub fn apply_sgd(&mut self, grads: &ParamGrads, eta: f64) -> Result<()> {
        if !(eta >= 0.0) {
            return Err(Error::param("eta", "learning rate must be >= 0"));
        }
        if !grads.fits(self) {
            return Err(Error::Dimension("gradient shape does not match parameters".into()));
        }
        for (l, (gw, gb)) in self.layers.iter_mut().zip(grads.weights.iter().zip(&grads.bias)) {
            l.weights.iter_mut().zip(gw).for_each(|(w, g)| *w -= eta * g);
            l.bias.iter_mut().zip(gb).for_each(|(b, g)| *b -= eta * g);
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(WEIGHTS_MAGIC)?;
        w.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
        w.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        for d in self.dims() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for l in &self.layers {
            w.write_all(&[l.activation.code()])?;
        }
        for l in &self.layers {
            for x in l.weights.iter().chain(&l.bias) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let mut cur = Cursor { buf: &buf, pos: 0 };
        if cur.take(4)? != WEIGHTS_MAGIC {
            return Err(Error::WeightFormat("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != WEIGHTS_VERSION {
            return Err(Error::WeightFormat(format!("unsupported version {version}")));
        }
        let count = cur.u32()? as usize;
        if count == 0 || count > 1024 {
            return Err(Error::WeightFormat(format!("implausible layer count {count}")));
        }
        let dims = (0..=count).map(|_| cur.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let acts = (0..count)
            .map(|_| cur.take(1).and_then(|b| Activation::from_code(b[0])))
            .collect::<Result<Vec<_>>>()?;
        let mut layers = Vec::with_capacity(count);
        for (i, act) in acts.into_iter().enumerate() {
            let mut l = Layer::zeros(dims[i], dims[i + 1], act);
            for x in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *x = cur.f64()?;
            }
            layers.push(l);
        }
        if cur.pos != buf.len() {
            return Err(Error::WeightFormat(format!(
                "{} trailing bytes",
                buf.len() - cur.pos
            )));
        }
        Self::from_layers(layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = Vec::new();
        self.write_to(&mut bytes)?;
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

const WEIGHTS_MAGIC: &[u8; 4] = b"RNNW";
const WEIGHTS_VERSION: u32 = 1;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::WeightFormat("truncated file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[derive(Clone, Debug, Default)]
pub struct BackwardScratch {
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl ParamGrads {
    pub fn fits(&self, params: &NetworkParams) -> bool {
        self.weights.len() == params.layers.len()
            && params.layers.iter().enumerate().all(|(i, l)| {
                self.weights[i].len() == l.weights.len() && self.bias[i].len() == l.bias.len()
            })
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weights
            .iter_mut()
            .chain(self.bias.iter_mut())
            .flat_map(|v| v.iter_mut())
            .for_each(|x| *x *= s);
    }

    /// Flattened in the same order as [`NetworkParams::param`].
    pub fn to_flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.to_flat().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.to_flat().iter().all(|x| *x == 0.0)
    }
}

/// `[Re x₁, Im x₁, Re x₂, Im x₂, …]`
pub fn c2r(x: &[Complex64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * x.len()];
    c2r_into(x, &mut out);
    out
}

pub fn c2r_into(x: &[Complex64], out: &mut [f64]) {
    for (c, pair) in x.iter().zip(out.chunks_exact_mut(2)) {
        pair[0] = c.re;
        pair[1] = c.im;
    }
}

/// Merges consecutive pairs into complex numbers. Odd lengths are an error.
pub fn r2c(r: &[f64]) -> Result<Vec<Complex64>> {
    if r.len() % 2 != 0 {
        return Err(Error::Dimension(format!("odd real length {}", r.len())));
    }
    Ok(r.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

/// Everything from a transmitter forward pass needed to backpropagate
/// through the normalization layer.
#[derive(Clone, Debug)]
pub struct TransmitPass {
    pub waveform: Waveform,
    pub trace: Trace,
    /// `‖u‖` before normalization.
    pub norm: f64,
}

impl TransmitPass {
    /// Parameter gradient given `d_y`, the gradient with respect to the
    /// normalized waveform in C2R coordinates. The normalization Jacobian
    /// is `(I − ŷŷᵀ)/‖u‖`.
    pub fn backward(&self, theta_t: &NetworkParams, d_y: &[f64]) -> Result<ParamGrads> {
        let y = c2r(self.waveform.chips());
        if d_y.len() != y.len() {
            return Err(Error::Dimension("waveform gradient has wrong length".into()));
        }
        let radial: f64 = y.iter().zip(d_y).map(|(a, b)| a * b).sum();
        let d_u: Vec<f64> = d_y
            .iter()
            .zip(&y)
            .map(|(g, yi)| (g - radial * yi) / self.norm)
            .collect();
        Ok(theta_t.backward(&self.trace, &d_u)?.0)
    }
}

/// Forward transmitter pass that keeps its trace.
pub fn transmit_pass(theta_t: &NetworkParams, x: &Waveform) -> Result<TransmitPass> {
    if theta_t.input_dim() != 2 * x.len() || theta_t.output_dim() != 2 * x.len() {
        return Err(Error::Dimension(format!(
            "transmitter is {}→{}, waveform needs {}→{}",
            theta_t.input_dim(),
            theta_t.output_dim(),
            2 * x.len(),
            2 * x.len()
        )));
    }
    let trace = theta_t.forward(&c2r(x.chips()))?;
    let u = Waveform::new(r2c(trace.output())?)?;
    let norm = u.power().sqrt();
    let waveform = u.normalize(MIN_TRANSMIT_NORM)?;
    Ok(TransmitPass {
        waveform,
        trace,
        norm,
    })
}

/// `y = u/‖u‖` with `u = R2C(f_θT(C2R(x)))`.
pub fn transmit(theta_t: &NetworkParams, x: &Waveform) -> Result<Waveform> {
    Ok(transmit_pass(theta_t, x)?.waveform)
}

pub fn check_receiver(theta_r: &NetworkParams, k: usize) -> Result<()> {
    if theta_r.input_dim() != 2 * k || theta_r.output_dim() != 1 {
        return Err(Error::Dimension(format!(
            "receiver is {}→{}, expected {}→1",
            theta_r.input_dim(),
            theta_r.output_dim(),
            2 * k
        )));
    }
    Ok(())
}

/// Receiver output `p ∈ (0, 1)` for received vector `z`.
pub fn receive(theta_r: &NetworkParams, z: &[Complex64]) -> Result<f64> {
    check_receiver(theta_r, z.len())?;
    let trace = theta_r.forward(&c2r(z))?;
    Ok(trace.output()[0])
}

pub fn clamp_p(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// Instantaneous cross-entropy `−[m log p + (1−m) log(1−p)]` on the clamped output.
pub fn cross_entropy(m: u8, p: f64) -> f64 {
    let p = clamp_p(p);
    if m == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}
