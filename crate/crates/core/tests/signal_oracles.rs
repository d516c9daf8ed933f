use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use radar_e2e::linalg::{smallest_eigenpair, CMatrix, Cholesky};
use radar_e2e::signal::{
    clutter_cells, clutter_covariance, noise_covariance, shift_apply, whitened_quadratic, CovarianceMatrix,
};
use radar_e2e::{EnvModel, Waveform};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(J_k)_{ij} = 1` when `i − j = k`.
fn shift_matrix(k: isize, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i as isize - j as isize == k {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

fn to_na(m: &CMatrix) -> DMatrix<Complex64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m[(i, j)])
}

fn vec_na(v: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(v)
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn waveform_strategy(k: usize) -> impl Strategy<Value = Waveform> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), k)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| Waveform::unit_power(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
}

fn env_strategy(k: usize) -> impl Strategy<Value = EnvModel> {
    (
        prop::collection::vec(0.0f64..1.0, 2 * k - 2),
        0.1f64..3.0,
        0.0f64..0.95,
        0.1f64..100.0,
    )
        .prop_map(move |(powers, sn, rho, sa)| EnvModel {
            sigma_alpha_sq: sa,
            clutter_powers: powers,
            shape_beta: 2.0,
            sigma_n_sq: sn,
            rho,
            prior_p1: 0.5,
        })
}

#[test]
fn noise_covariance_entries() {
    let om = noise_covariance(2.0, 0.5, 4).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let want = 2.0 * 0.5f64.powi((i as i32 - j as i32).abs());
            assert!((om.matrix()[(i, j)] - c(want, 0.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn white_noise_covariance_is_scaled_identity() {
    let om = noise_covariance(1.5, 0.0, 3).unwrap();
    let want = DMatrix::<Complex64>::identity(3, 3) * c(1.5, 0.0);
    assert!(max_abs_diff(&to_na(om.matrix()), &want) < 1e-15);
}

#[test]
fn shift_beyond_length_is_rejected() {
    let y = vec![c(1.0, 0.0); 3];
    assert!(shift_apply(&y, 3).is_err());
    assert!(shift_apply(&y, -3).is_err());
    assert!(shift_apply(&y, 2).is_ok());
}

#[test]
fn reference_clutter_matches_brute_force_shift_sum() {
    let k = 8;
    let env = EnvModel::reference(k);
    let y = Waveform::unit_power((0..k).map(|i| c((i as f64).cos(), (0.3 * i as f64).sin())).collect()).unwrap();
    let yv = vec_na(y.chips());
    let mut oracle = DMatrix::<Complex64>::zeros(k, k);
    for cell in clutter_cells(k) {
        let jy = shift_matrix(cell, k) * &yv;
        oracle += &jy * jy.adjoint() * c(env.clutter_power(cell), 0.0);
    }
    let got = clutter_covariance(&y, &env).unwrap();
    assert!(max_abs_diff(&to_na(got.matrix()), &oracle) < 1e-14);
}

#[test]
fn cholesky_reconstructs_and_solves() {
    let k = 6;
    let env = EnvModel::reference(k);
    let y = Waveform::unit_power((0..k).map(|i| c(1.0, i as f64)).collect()).unwrap();
    let omega = env.total_covariance(&y).unwrap();
    let chol = Cholesky::factor(omega.matrix()).unwrap();
    let l = to_na(chol.lower());
    assert!(max_abs_diff(&(&l * l.adjoint()), &to_na(omega.matrix())) < 1e-12);
    let b: Vec<Complex64> = (0..k).map(|i| c(i as f64, -1.0)).collect();
    let x = chol.solve(&b);
    let oracle = to_na(omega.matrix()).lu().solve(&vec_na(&b)).unwrap();
    let err = (vec_na(&x) - oracle).norm();
    assert!(err < 1e-10, "{err}");
}

#[test]
fn non_positive_definite_is_rejected() {
    let m = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(1.0, 0.0)]]).unwrap();
    assert!(Cholesky::factor(&m).is_err());
}

#[test]
fn smallest_eigenpair_matches_nalgebra() {
    let k = 8;
    let env = EnvModel::reference(k);
    let y = radar_e2e::config::stepped_frequency(k).unwrap();
    let omega = env.total_covariance(&y).unwrap();
    let start = vec![c(1.0, 0.0); k];
    let eig = smallest_eigenpair(omega.matrix(), &start, 1e-12, 20_000).unwrap();
    let oracle = to_na(omega.matrix()).symmetric_eigen();
    let min = oracle.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(eig.converged);
    assert!((eig.value - min).abs() < 1e-10, "{} vs {min}", eig.value);
    // residual check against the oracle matrix
    let v = vec_na(&eig.vector);
    let r = to_na(omega.matrix()) * &v - &v * c(eig.value, 0.0);
    assert!(r.norm() < 1e-9);
}

#[test]
fn scnr_example_values() {
    // no clutter, white noise: y^H Ω^{-1} y = 1/σn²
    let mut env = EnvModel::reference(4);
    env.clutter_powers.iter_mut().for_each(|p| *p = 0.0);
    env.rho = 0.0;
    env.sigma_n_sq = 2.0;
    env.sigma_alpha_sq = 10.0;
    let y = radar_e2e::config::stepped_frequency(4).unwrap();
    assert!((env.scnr(&y).unwrap() - 5.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_apply_matches_matrix(y in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..10), shift in -9isize..10) {
        let y: Vec<Complex64> = y.into_iter().map(|(a, b)| c(a, b)).collect();
        let n = y.len();
        prop_assume!(shift.unsigned_abs() < n);
        let got = shift_apply(&y, shift).unwrap();
        let want = shift_matrix(shift, n) * vec_na(&y);
        for (g, w) in got.iter().zip(want.iter()) {
            prop_assert!((g - w).norm() == 0.0);
        }
    }

    #[test]
    fn total_covariance_is_hermitian_positive_definite(y in waveform_strategy(5), env in env_strategy(5)) {
        let omega = env.total_covariance(&y).unwrap();
        prop_assert!(omega.matrix().hermitian_defect() < 1e-12);
        let eig = to_na(omega.matrix()).symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(min > 0.0);
    }

    #[test]
    fn whitened_quadratic_matches_dense_inverse(y in waveform_strategy(6), env in env_strategy(6)) {
        let omega = env.total_covariance(&y).unwrap();
        let got = whitened_quadratic(&y, &omega).unwrap();
        let inv = to_na(omega.matrix()).try_inverse().unwrap();
        let yv = vec_na(y.chips());
        let want = (yv.adjoint() * inv * &yv)[(0, 0)].re;
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{} vs {}", got, want);
        let scnr = env.scnr(&y).unwrap();
        prop_assert!(scnr >= 0.0);
        prop_assert!((scnr - env.sigma_alpha_sq * want).abs() <= 1e-9 * scnr.max(1.0));
    }

    #[test]
    fn unit_power_after_normalization(v in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..16)) {
        let chips: Vec<Complex64> = v.into_iter().map(|(a, b)| c(a, b)).collect();
        prop_assume!(chips.iter().map(|x| x.norm_sqr()).sum::<f64>() > 1e-6);
        let w = Waveform::unit_power(chips).unwrap();
        prop_assert!((w.power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_sum_is_elementwise(y in waveform_strategy(4), env in env_strategy(4)) {
        let a = clutter_covariance(&y, &env).unwrap();
        let b = env.noise_covariance().unwrap();
        let sum = a.add(&b).unwrap();
        let want = to_na(a.matrix()) + to_na(b.matrix());
        prop_assert!(max_abs_diff(&to_na(sum.matrix()), &want) < 1e-15);
        let direct: CovarianceMatrix = env.total_covariance(&y).unwrap();
        prop_assert!(max_abs_diff(&to_na(direct.matrix()), &want) < 1e-14);
    }
}
