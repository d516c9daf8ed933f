//! Small dense complex linear algebra: Hermitian matrices, Cholesky
//! factorization, and inverse iteration. Sizes here are the waveform
//! length (tens of chips), so everything is plain row-major `Vec` storage.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix rows must all have length n".into()));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "cannot add {0}x{0} and {1}x{1} matrices",
                self.n, other.n
            )));
        }
        Ok(CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_diagonal(&mut self, d: f64) {
        for i in 0..self.n {
            self[(i, i)] += d;
        }
    }

    /// Adds `scale * v v^H`.
    pub fn add_outer(&mut self, v: &[Complex64], scale: f64) {
        debug_assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            if v[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let vi = v[i] * scale;
            for j in 0..self.n {
                self.data[i * self.n + j] += vi * v[j].conj();
            }
        }
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest elementwise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular factor `L` with `A = L L^H`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        let n = a.dim();
        let mut l = CMatrix::zeros(n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite(format!(
                    "non-positive pivot {d:e} at row {j}"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn lower(&self) -> &CMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn min_pivot(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.l[(i, i)].re.powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    /// `L w`, the map that colors white noise.
    pub fn mul_lower(&self, w: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        for i in 0..n {
            let row = &self.l.row(i)[..=i];
            out[i] = row.iter().zip(&w[..=i]).map(|(a, b)| a * b).sum();
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let l = &self.l;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[(i, k)] * x[k];
            }
            x[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[k];
            }
            x[i] = s / l[(i, i)].re;
        }
        x
    }
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `a^H b`
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Rotates `v` so its largest-modulus entry (lowest index on ties) is real
/// and positive. Eigenvectors come out with a canonical phase this way.
pub fn canonical_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > v[best].norm() * (1.0 + 1e-9) {
            best = i;
        }
    }
    let r = v[best].norm();
    if r > 0.0 {
        let rot = v[best].conj() / r;
        for c in v.iter_mut() {
            *c *= rot;
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest eigenpair of a Hermitian positive definite matrix by inverse
/// iteration with Cholesky solves. Stops once `||A v - lambda v|| <= tol`.
pub fn smallest_eigenpair(
    a: &CMatrix,
    start: &[Complex64],
    tol: f64,
    max_iters: usize,
) -> Result<Eigenpair> {
    let n = a.dim();
    if start.len() != n {
        return Err(Error::Dimension(format!(
            "start vector has length {}, matrix is {n}x{n}",
            start.len()
        )));
    }
    let chol = Cholesky::factor(a)?;
    let mut v: Vec<Complex64> = start.to_vec();
    let norm = norm_sqr(&v).sqrt();
    if !(norm > 0.0) {
        v = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    } else {
        v.iter_mut().for_each(|c| *c /= norm);
    }

    let rayleigh = |v: &[Complex64]| -> (f64, f64) {
        let av = a.mul_vec(v);
        let lambda = inner(v, &av).re;
        let res = av
            .iter()
            .zip(v)
            .map(|(x, y)| (x - y * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        (lambda, res)
    };

    let (mut lambda, mut residual) = rayleigh(&v);
    let mut iterations = 0;
    while residual > tol && iterations < max_iters {
        let mut w = chol.solve(&v);
        let norm = norm_sqr(&w).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Conditioning("inverse iteration diverged".into()));
        }
        w.iter_mut().for_each(|c| *c /= norm);
        v = w;
        (lambda, residual) = rayleigh(&v);
        iterations += 1;
    }
    canonical_phase(&mut v);
    Ok(Eigenpair {
        value: lambda,
        vector: v,
        residual,
        iterations,
        converged: residual <= tol,
    })
}
