//! Waveforms, range-cell shifts, and the clutter and noise covariances of
//! the radar model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Cholesky};

/// Tolerance on `|‖y‖² − 1|` for a waveform flagged as normalized.
pub const UNIT_POWER_TOL: f64 = 1e-12;

/// Relative floor (times `trace / K`) below which a covariance is
/// regularized before solving.
pub const PD_REGULARIZATION: f64 = 1e-12;

/// Length-K complex chip vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    chips: Vec<Complex64>,
    normalized: bool,
}

impl Waveform {
    pub fn new(chips: Vec<Complex64>) -> Result<Self> {
        if chips.is_empty() {
            return Err(Error::Dimension("waveform needs at least one chip".into()));
        }
        if chips.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::param("waveform", "chips must be finite"));
        }
        Ok(Self {
            chips,
            normalized: false,
        })
    }

    /// Scales `chips` to unit power and flags the result as normalized.
    pub fn unit_power(chips: Vec<Complex64>) -> Result<Self> {
        let w = Self::new(chips)?;
        w.normalize(0.0)
    }

    /// Unit-power copy. Fails when the norm is at or below `min_norm`.
    pub fn normalize(&self, min_norm: f64) -> Result<Self> {
        let norm = self.power().sqrt();
        if !(norm > min_norm) || !norm.is_finite() {
            return Err(Error::NormalizationUnderflow {
                norm,
                min: min_norm,
            });
        }
        Ok(Self {
            chips: self.chips.iter().map(|c| c / norm).collect(),
            normalized: true,
        })
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chips(&self) -> &[Complex64] {
        &self.chips
    }

    pub fn into_chips(self) -> Vec<Complex64> {
        self.chips
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `‖y‖²`
    pub fn power(&self) -> f64 {
        linalg::norm_sqr(&self.chips)
    }
}

/// Hermitian positive semidefinite K×K matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(CMatrix);

impl CovarianceMatrix {
    /// Wraps `m` after checking Hermitian symmetry to 1e-12 elementwise.
    pub fn new(m: CMatrix) -> Result<Self> {
        let defect = m.hermitian_defect();
        if defect > 1e-12 {
            return Err(Error::param(
                "covariance",
                format!("not Hermitian (defect {defect:e})"),
            ));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn add(&self, other: &CovarianceMatrix) -> Result<CovarianceMatrix> {
        Ok(Self(self.0.add(&other.0)?))
    }

    /// Cholesky factor, with `PD_REGULARIZATION · trace/K` added to the
    /// diagonal when the smallest eigenvalue falls below that floor.
    pub fn regularized_cholesky(&self) -> Result<Cholesky> {
        let k = self.dim();
        let tau = PD_REGULARIZATION * self.0.trace().re / k as f64;
        if !(tau > 0.0) {
            return Err(Error::Conditioning("covariance has zero trace".into()));
        }
        if let Ok(chol) = Cholesky::factor(&self.0) {
            if smallest_eigenvalue_estimate(&self.0)? >= tau {
                return Ok(chol);
            }
        }
        let mut m = self.0.clone();
        m.add_diagonal(tau);
        Cholesky::factor(&m).map_err(|e| {
            Error::Conditioning(format!("covariance singular after regularization: {e}"))
        })
    }
}

fn smallest_eigenvalue_estimate(m: &CMatrix) -> Result<f64> {
    let k = m.dim();
    // fixed, generic start vector
    let start: Vec<Complex64> = (0..k)
        .map(|i| Complex64::from_polar(1.0, 0.7 + 1.3 * i as f64 + 0.11 * (i * i) as f64))
        .collect();
    let scale = m.trace().re / k as f64;
    let e = linalg::smallest_eigenpair(m, &start, 1e-9 * scale, 500)?;
    Ok(e.value)
}

/// Channel statistics for one clutter environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvModel {
    /// Target gain variance.
    pub sigma_alpha_sq: f64,
    /// Per-cell clutter powers for k = −K+1..−1, 1..K−1, ascending k.
    pub clutter_powers: Vec<f64>,
    /// Weibull shape of the clutter amplitude.
    pub shape_beta: f64,
    /// Signal-independent interference power.
    pub sigma_n_sq: f64,
    /// One-lag correlation of the interference.
    pub rho: f64,
    /// Prior probability of target presence.
    pub prior_p1: f64,
}

impl EnvModel {
    /// The reference environment: σα² = 50, every clutter cell at 1/7,
    /// σn² = 1, ρ = 0.4, Gaussian clutter (β = 2), equal priors.
    pub fn reference(k: usize) -> Self {
        Self {
            sigma_alpha_sq: 50.0,
            clutter_powers: vec![1.0 / 7.0; 2 * k.max(1) - 2],
            shape_beta: 2.0,
            sigma_n_sq: 1.0,
            rho: 0.4,
            prior_p1: 0.5,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.shape_beta = beta;
        self
    }

    /// Waveform length implied by the clutter power list.
    pub fn k(&self) -> usize {
        self.clutter_powers.len() / 2 + 1
    }

    /// Clutter power of range cell `k` (k ≠ 0, |k| < K).
    pub fn clutter_power(&self, k: isize) -> f64 {
        self.clutter_powers[clutter_index(k, self.k())]
    }

    pub fn validate(&self) -> Result<()> {
        if self.clutter_powers.len() % 2 != 0 {
            return Err(Error::param(
                "clutter_powers",
                format!("length {} is not 2K-2", self.clutter_powers.len()),
            ));
        }
        if !(self.sigma_alpha_sq >= 0.0) || !self.sigma_alpha_sq.is_finite() {
            return Err(Error::param("sigma_alpha_sq", "must be finite and >= 0"));
        }
        if self.clutter_powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::param("clutter_powers", "must be finite and >= 0"));
        }
        if !(0.25..=2.0).contains(&self.shape_beta) {
            return Err(Error::param(
                "shape_beta",
                format!("{} outside [0.25, 2]", self.shape_beta),
            ));
        }
        if !(self.sigma_n_sq > 0.0) || !self.sigma_n_sq.is_finite() {
            return Err(Error::param("sigma_n_sq", "must be finite and > 0"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::param("rho", format!("{} outside [0, 1)", self.rho)));
        }
        if !(self.prior_p1 > 0.0 && self.prior_p1 < 1.0) {
            return Err(Error::param("prior_p1", format!("{} outside (0, 1)", self.prior_p1)));
        }
        Ok(())
    }

    pub fn noise_covariance(&self) -> Result<CovarianceMatrix> {
        noise_covariance(self.sigma_n_sq, self.rho, self.k())
    }

    /// Ωc(y) + Ωn.
    pub fn total_covariance(&self, y: &Waveform) -> Result<CovarianceMatrix> {
        clutter_covariance(y, self)?.add(&self.noise_covariance()?)
    }

    /// σα² · y^H (Ωc(y) + Ωn)^{-1} y
    pub fn scnr(&self, y: &Waveform) -> Result<f64> {
        Ok(self.sigma_alpha_sq * whitened_quadratic(y, &self.total_covariance(y)?)?)
    }
}

/// Position of range cell `k` in the flat clutter-power list.
pub fn clutter_index(k: isize, len: usize) -> usize {
    let kk = len as isize;
    debug_assert!(k != 0 && k.abs() < kk);
    if k < 0 {
        (k + kk - 1) as usize
    } else {
        (k + kk - 2) as usize
    }
}

/// Range-cell offsets in storage order.
pub fn clutter_cells(len: usize) -> impl Iterator<Item = isize> {
    let kk = len as isize;
    (-kk + 1..kk).filter(|k| *k != 0)
}

/// `J_k y`: `out[i] = y[i − k]` where that index exists, zero elsewhere.
pub fn shift_apply(y: &[Complex64], k: isize) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); y.len()];
    shift_into(y, k, &mut out)?;
    Ok(out)
}

pub(crate) fn shift_into(y: &[Complex64], k: isize, out: &mut [Complex64]) -> Result<()> {
    let n = y.len();
    if k.unsigned_abs() >= n.max(1) {
        return Err(Error::InvalidShift { shift: k, len: n });
    }
    let zero = Complex64::new(0.0, 0.0);
    out.fill(zero);
    if k >= 0 {
        let k = k as usize;
        out[k..].copy_from_slice(&y[..n - k]);
    } else {
        let k = (-k) as usize;
        out[..n - k].copy_from_slice(&y[k..]);
    }
    Ok(())
}

/// `[Ωn]_{ij} = σn² ρ^{|i−j|}`
pub fn noise_covariance(sigma_n_sq: f64, rho: f64, k: usize) -> Result<CovarianceMatrix> {
    if rho >= 1.0 || rho < 0.0 || !rho.is_finite() {
        return Err(Error::NotPositiveDefinite(format!(
            "one-lag correlation {rho} outside [0, 1)"
        )));
    }
    if !(sigma_n_sq > 0.0) || !sigma_n_sq.is_finite() {
        return Err(Error::NotPositiveDefinite(format!(
            "noise power {sigma_n_sq} must be positive"
        )));
    }
    let m = CMatrix::from_fn(k, |i, j| {
        Complex64::new(sigma_n_sq * rho.powi(i.abs_diff(j) as i32), 0.0)
    });
    Ok(CovarianceMatrix(m))
}

/// `Ωc = Σ_{k≠0} σ²_{c,k} (J_k y)(J_k y)^H`
pub fn clutter_covariance(y: &Waveform, env: &EnvModel) -> Result<CovarianceMatrix> {
    let n = y.len();
    if env.clutter_powers.len() != 2 * n - 2 {
        return Err(Error::Dimension(format!(
            "waveform of length {n} needs {} clutter powers, got {}",
            2 * n - 2,
            env.clutter_powers.len()
        )));
    }
    let mut m = CMatrix::zeros(n);
    let mut shifted = vec![Complex64::new(0.0, 0.0); n];
    for (k, &power) in clutter_cells(n).zip(&env.clutter_powers) {
        if power == 0.0 {
            continue;
        }
        shift_into(y.chips(), k, &mut shifted)?;
        m.add_outer(&shifted, power);
    }
    Ok(CovarianceMatrix(m))
}

/// `y^H Ω^{-1} y`, via a Cholesky solve on the (regularized) covariance.
pub fn whitened_quadratic(y: &Waveform, omega: &CovarianceMatrix) -> Result<f64> {
    if y.len() != omega.dim() {
        return Err(Error::Dimension(format!(
            "waveform length {} vs covariance {}x{}",
            y.len(),
            omega.dim(),
            omega.dim()
        )));
    }
    let chol = omega.regularized_cholesky()?;
    let x = chol.solve(y.chips());
    Ok(linalg::inner(y.chips(), &x).re.max(0.0))
}
