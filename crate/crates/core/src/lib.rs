//! End-to-end learning for radar detection under non-Gaussian clutter.
//!
//! A transmitter network chooses a complex waveform, a simulated channel adds
//! target echo, coherent Weibull clutter and correlated noise, and a receiver
//! network decides whether a target is present. The two networks are trained
//! alternately: the receiver by supervised cross-entropy, the transmitter by a
//! Gaussian-policy gradient that needs no channel model. Gaussian-clutter
//! baselines (square-law detector, optimal waveform) and Monte Carlo ROC
//! estimation are provided for comparison.

pub mod baseline;
pub mod channel;
pub mod config;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod linalg;
pub mod net;
pub mod rng;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use signal::{EnvModel, Waveform};
