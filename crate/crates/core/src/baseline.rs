//! Gaussian-clutter reference design: the square-law detector, its
//! closed-form ROC, and the unit-power waveform maximizing
//! `y^H (Ωc(y) + Ωn)^{-1} y`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, smallest_eigenpair};
use crate::signal::{clutter_cells, shift_into, whitened_quadratic, CovarianceMatrix, EnvModel, Waveform};

/// One operating point: decide H1 when score > `threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
}

/// Operating points ordered by increasing threshold.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    /// Optional per-point (lower, upper) Pd confidence band.
    pub pd_band: Option<Vec<(f64, f64)>>,
}

impl RocCurve {
    pub fn new(points: Vec<RocPoint>) -> Result<Self> {
        let curve = Self {
            points,
            pd_band: None,
        };
        curve.check()?;
        Ok(curve)
    }

    /// Probabilities in [0, 1], non-increasing as the threshold grows.
    pub fn check(&self) -> Result<()> {
        for p in &self.points {
            if !(0.0..=1.0).contains(&p.pfa) || !(0.0..=1.0).contains(&p.pd) {
                return Err(Error::Domain(format!("ROC point out of range: {p:?}")));
            }
        }
        for w in self.points.windows(2) {
            if w[1].threshold < w[0].threshold || w[1].pfa > w[0].pfa || w[1].pd > w[0].pd {
                return Err(Error::Domain(format!(
                    "ROC not monotone between {:?} and {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    /// Pd at `pfa` by linear interpolation between neighbouring points.
    pub fn pd_at(&self, pfa: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.is_empty() {
            return None;
        }
        // points run from high pfa to low pfa
        for w in pts.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            if lo.pfa <= pfa && pfa <= hi.pfa {
                if hi.pfa == lo.pfa {
                    return Some(hi.pd.max(lo.pd));
                }
                let t = (pfa - lo.pfa) / (hi.pfa - lo.pfa);
                return Some(lo.pd + t * (hi.pd - lo.pd));
            }
        }
        None
    }

    /// `threshold,pfa,pd` (plus `pd_lo,pd_hi` with a band), 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.pd_band {
            Some(_) => writeln!(w, "threshold,pfa,pd,pd_lo,pd_hi")?,
            None => writeln!(w, "threshold,pfa,pd")?,
        }
        for (i, p) in self.points.iter().enumerate() {
            write!(w, "{},{},{}", fmt17(p.threshold), fmt17(p.pfa), fmt17(p.pd))?;
            if let Some(band) = &self.pd_band {
                write!(w, ",{},{}", fmt17(band[i].0), fmt17(band[i].1))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let banded = match header {
            "threshold,pfa,pd" => false,
            "threshold,pfa,pd,pd_lo,pd_hi" => true,
            h => return Err(Error::Domain(format!("unexpected ROC header `{h}`"))),
        };
        let mut points = Vec::new();
        let mut band = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let v = line
                .split(',')
                .map(|f| f.parse::<f64>().map_err(|e| Error::Domain(format!("`{f}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != if banded { 5 } else { 3 } {
                return Err(Error::Domain(format!("bad ROC row `{line}`")));
            }
            points.push(RocPoint {
                threshold: v[0],
                pfa: v[1],
                pd: v[2],
            });
            if banded {
                band.push((v[3], v[4]));
            }
        }
        Ok(Self {
            points,
            pd_band: banded.then_some(band),
        })
    }
}

/// Scientific notation with 17 significant digits; round-trips any f64.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Precomputed square-law detector `|z^H Ω^{-1} y|²`.
#[derive(Clone, Debug)]
pub struct SquareLaw {
    filter: Vec<Complex64>,
    /// `y^H Ω^{-1} y`
    pub quadratic: f64,
}

impl SquareLaw {
    pub fn new(y: &Waveform, omega_total: &CovarianceMatrix) -> Result<Self> {
        if y.len() != omega_total.dim() {
            return Err(Error::Dimension("waveform and covariance sizes differ".into()));
        }
        let filter = omega_total.regularized_cholesky()?.solve(y.chips());
        let quadratic = linalg::inner(y.chips(), &filter).re;
        Ok(Self { filter, quadratic })
    }

    /// Detector designed for `env`: `Ω = Ωc(y) + Ωn`.
    pub fn for_env(y: &Waveform, env: &EnvModel) -> Result<Self> {
        Self::new(y, &env.total_covariance(y)?)
    }

    #[inline]
    pub fn score(&self, z: &[Complex64]) -> f64 {
        // z^H w
        let s: Complex64 = z.iter().zip(&self.filter).map(|(a, b)| a.conj() * b).sum();
        s.norm_sqr()
    }
}

/// `|z^H Ω^{-1} y|²`
pub fn square_law_score(z: &[Complex64], y: &Waveform, omega_total: &CovarianceMatrix) -> Result<f64> {
    if z.len() != y.len() {
        return Err(Error::Dimension("received vector and waveform lengths differ".into()));
    }
    Ok(SquareLaw::new(y, omega_total)?.score(z))
}

/// `Pd = Pfa^{1/(1+scnr)}`
pub fn closed_form_pd(pfa: f64, scnr: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa <= 1.0) {
        return Err(Error::Domain(format!("false-alarm probability {pfa} outside (0, 1]")));
    }
    if !(scnr >= 0.0) {
        return Err(Error::Domain(format!("SCNR {scnr} is negative")));
    }
    Ok(pfa.powf(1.0 / (1.0 + scnr)))
}

/// Closed-form square-law ROC for waveform `y` in `env`, at thresholds
/// spanning Pfa from 1 down to `min_pfa` log-uniformly.
pub fn closed_form_roc(y: &Waveform, env: &EnvModel, n_points: usize, min_pfa: f64) -> Result<RocCurve> {
    let sq = SquareLaw::for_env(y, env)?;
    let scnr = env.sigma_alpha_sq * sq.quadratic;
    let n = n_points.max(2);
    let points = (0..n)
        .map(|i| {
            let pfa = min_pfa.powf(i as f64 / (n - 1) as f64);
            // under H0 the statistic is exponential with mean y^H Ω^{-1} y
            let threshold = -sq.quadratic * pfa.ln();
            Ok(RocPoint {
                threshold,
                pfa,
                pd: closed_form_pd(pfa, scnr)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RocCurve::new(points)
}

/// `y^H (Ωc(y) + Ωn)^{-1} y`
pub fn waveform_objective(y: &Waveform, env: &EnvModel) -> Result<f64> {
    whitened_quadratic(y, &env.total_covariance(y)?)
}

/// Objective and its conjugate-Wirtinger gradient `g` (so that
/// `df = 2 Re(g^H dy)`), accounting for the dependence of `Ωc` on `y`.
pub fn waveform_objective_grad(y: &Waveform, env: &EnvModel) -> Result<(f64, Vec<Complex64>)> {
    let u = env.total_covariance(y)?.regularized_cholesky()?.solve(y.chips());
    let f = linalg::inner(y.chips(), &u).re;
    let k = y.len();
    let mut g = u.clone();
    let mut jy = vec![Complex64::new(0.0, 0.0); k];
    let mut jhu = vec![Complex64::new(0.0, 0.0); k];
    for cell in clutter_cells(k) {
        let p = env.clutter_power(cell);
        if p == 0.0 {
            continue;
        }
        shift_into(y.chips(), cell, &mut jy)?;
        // J_k^H = J_{-k}
        shift_into(&u, -cell, &mut jhu)?;
        let c = linalg::inner(&u, &jy);
        for (gi, v) in g.iter_mut().zip(&jhu) {
            *gi -= p * c * v;
        }
    }
    Ok((f, g))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// Objective change fell below the tolerance.
    Converged,
    /// No step along the projected gradient raised the objective.
    Stalled,
    /// Ran out of iterations.
    MaxIters,
}

#[derive(Clone, Debug)]
pub struct OptimalWaveform {
    pub waveform: Waveform,
    pub objective: f64,
    /// Objective of the initialization followed by every accepted iterate.
    pub trajectory: Vec<f64>,
    /// Accepted steps taken by the eigenvector iteration before refinement.
    pub fixed_point_steps: usize,
    pub termination: Termination,
}

impl OptimalWaveform {
    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxIters
    }
}

/// Residual tolerance of the inner eigenvector solve, relative to `trace/K`.
pub const EIGEN_TOL: f64 = 1e-12;

/// Unit-power waveform maximizing `y^H (Ωc(y) + Ωn)^{-1} y`.
///
/// Stage one is the fixed-point iteration: with `Ω_t = Ωc(y_t) + Ωn`, take
/// `y_{t+1}` as the minimum-eigenvalue eigenvector of `Ω_t` (inverse
/// iteration), stopping at the first step that would lower the objective.
/// That map ignores how `Ωc` moves with `y` and can stall far from a
/// stationary point, so stage two continues with projected gradient ascent
/// on the unit sphere, backtracking until each step increases the objective.
/// Each stage runs at most `max_iters` steps; both are monotone.
pub fn optimal_waveform(
    env: &EnvModel,
    init: &Waveform,
    max_iters: usize,
    tol: f64,
) -> Result<OptimalWaveform> {
    env.validate()?;
    let k = env.k();
    if init.len() != k {
        return Err(Error::Dimension(format!("init waveform has {} chips, K = {k}", init.len())));
    }
    let mut y = init.normalize(0.0)?;
    let mut f = waveform_objective(&y, env)?;
    let mut trajectory = vec![f];
    for _ in 0..max_iters {
        let omega = env.total_covariance(&y)?;
        let scale = omega.matrix().trace().re / k as f64;
        let eig = smallest_eigenpair(omega.matrix(), y.chips(), EIGEN_TOL * scale, 20_000)?;
        let candidate = Waveform::unit_power(eig.vector)?;
        let f_next = waveform_objective(&candidate, env)?;
        if f_next < f {
            break;
        }
        let change = f_next - f;
        y = candidate;
        f = f_next;
        trajectory.push(f);
        if change < tol {
            break;
        }
    }
    let fixed_point_steps = trajectory.len() - 1;

    let mut termination = Termination::MaxIters;
    let mut step = 1.0;
    'ascent: for _ in 0..max_iters {
        let (_, g) = waveform_objective_grad(&y, env)?;
        let radial = linalg::inner(y.chips(), &g).re;
        let tangent: Vec<Complex64> = g.iter().zip(y.chips()).map(|(gi, yi)| gi - radial * yi).collect();
        if linalg::norm_sqr(&tangent).sqrt() <= f64::EPSILON * f {
            termination = Termination::Converged;
            break;
        }
        loop {
            let moved: Vec<Complex64> = y.chips().iter().zip(&tangent).map(|(a, b)| a + step * b).collect();
            let candidate = Waveform::unit_power(moved)?;
            let f_next = waveform_objective(&candidate, env)?;
            if f_next > f {
                let change = f_next - f;
                y = candidate;
                f = f_next;
                trajectory.push(f);
                step *= 2.0;
                if change < tol {
                    termination = Termination::Converged;
                    break 'ascent;
                }
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                termination = Termination::Stalled;
                break 'ascent;
            }
        }
    }
    Ok(OptimalWaveform {
        waveform: y,
        objective: f,
        trajectory,
        fixed_point_steps,
        termination,
    })
}
