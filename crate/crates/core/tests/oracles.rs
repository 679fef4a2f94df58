//! Monte Carlo checks against closed-form moments.

use spectral_dp_core::bounds::{cor_subspace_bounds, theorem_bound_core};
use spectral_dp_core::dbm::{
    compare_sde_vs_matrix, compare_sde_vs_matrix_with, eigen_trajectories, integrate_eigen_sde_with,
    integrate_vector_flow_with, mc_frobenius_integral_check, mc_gap_tail, mc_spectral_tail, sample_bm_path,
    sample_bm_path_with, SdeOptions,
};
use spectral_dp_core::experiments::{
    mc_rank_k_utility, mc_subspace_utility, synthetic_spectrum, wishart_with_rng, SpectrumProfile,
};
use spectral_dp_core::linalg::{column_projector, eigvals_desc};
use spectral_dp_core::mechanism::gaussian_perturb;
use spectral_dp_core::rng::stream;
use spectral_dp_core::stats::{mean, sample_variance, MeanEstimate};
use spectral_dp_core::{PrivacyParams, Sequential, SymMatrix, TargetSpectrum};

fn unit_noise() -> PrivacyParams {
    // c^2 = 2 ln(1.25 / delta) = 2
    PrivacyParams::new(1.0, 1.25 / std::f64::consts::E).unwrap()
}

#[test]
fn increment_moments_single_step() {
    let n = 100_000;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    let mut trace = Vec::with_capacity(n);
    for t in 0..n {
        let mut rng = stream(17, t as u64);
        let path = sample_bm_path_with(3, 0.7, 1, &mut rng).unwrap();
        let b = path.endpoint();
        diag.push(b.get(1, 1));
        off.push(b.get(0, 2));
        trace.push(b.trace());
    }
    assert!((sample_variance(&diag) / (4.0 * 0.7) - 1.0).abs() < 0.03);
    assert!((sample_variance(&off) / (2.0 * 0.7) - 1.0).abs() < 0.03);
    assert!((sample_variance(&trace) / (4.0 * 3.0 * 0.7) - 1.0).abs() < 0.05);
}

#[test]
fn gaussian_noise_second_moment() {
    let d = 6;
    let m = SymMatrix::from_diag(&[3.0, 2.0, 1.0, 0.0, 0.0, -1.0]);
    let sq: Vec<f64> =
        (0..20_000).map(|s| gaussian_perturb(&m, &unit_noise(), s).sub(&m).unwrap().frobenius_norm().powi(2)).collect();
    let expected = 2.0 * (2.0 * (d * d) as f64 + 2.0 * d as f64);
    assert!((mean(&sq) / expected - 1.0).abs() < 0.05);
}

#[test]
fn rank_d_utility_is_noise_norm() {
    let d = 10;
    let m = synthetic_spectrum(d, &SpectrumProfile::UniformGap { gap: 5.0 }, 4).unwrap();
    let est = mc_rank_k_utility(&Sequential, &m, d, &unit_noise(), 20_000, 8).unwrap();
    assert!((est.mean_sq_frob / 440.0 - 1.0).abs() < 0.05, "{}", est.mean_sq_frob);
    assert!(est.mean_sq_frob >= est.mean_frob.powi(2) - 3.0 * est.stderr_sq);
}

#[test]
fn subspace_error_within_scaled_uniform_gap_bound() {
    let d = 20;
    let p = PrivacyParams::new(1.0, 0.01).unwrap();
    let profile = SpectrumProfile::UniformGap { gap: 50.0 };
    let m = synthetic_spectrum(d, &profile, 2).unwrap();
    let est = mc_subspace_utility(&Sequential, &m, 4, &p, 2000, 3).unwrap();
    let b = cor_subspace_bounds(&profile.eigenvalues(d).unwrap(), 4, &p).unwrap();
    assert!(est.mean_frob <= 8.0 * b.uniform_gap);
    assert!(est.max_frob <= 8f64.sqrt() + 1e-8);
}

#[test]
fn scalar_sde_is_brownian() {
    let finals: Vec<f64> = (0..20_000)
        .map(|t| {
            let mut rng = stream(21, t);
            let tr = integrate_eigen_sde_with(&[3.0], 0.8, 20, &mut rng, &SdeOptions::default(), false).unwrap();
            tr.final_values()[0]
        })
        .collect();
    assert!((mean(&finals) - 3.0).abs() < 0.05 * 3.0);
    assert!((sample_variance(&finals) / (4.0 * 0.8) - 1.0).abs() < 0.05);
}

/// For `d = 2` the squared gap of `diag(g0, 0) + B(t)` satisfies
/// `E[g^2] = g0^2 + 8T + 4 E[B_12^2] = g0^2 + 16T`, and the SDE with
/// repulsion `kappa` gives `g0^2 + (8 + 4 kappa) T`.
#[test]
fn two_dim_squared_gap_growth() {
    let (g0, horizon, n) = (20.0, 1.0, 20_000);
    let sq: Vec<f64> = (0..n)
        .map(|t| {
            let mut rng = stream(5, t);
            let tr =
                integrate_eigen_sde_with(&[g0, 0.0], horizon, 200, &mut rng, &SdeOptions::default(), false).unwrap();
            let g = tr.final_values();
            (g[0] - g[1]).powi(2)
        })
        .collect();
    let est = MeanEstimate::of(&sq);
    let oracle = g0 * g0 + 16.0 * horizon;
    assert!((est.mean - oracle).abs() <= 3.0 * est.stderr, "{est:?} vs {oracle}");
    // first-order mean gap: g0 + 2 * kappa * T / g0
    let gaps: Vec<f64> = sq.iter().map(|x| x.sqrt()).collect();
    let g = MeanEstimate::of(&gaps);
    assert!((g.mean - (g0 + 4.0 * horizon / g0)).abs() <= 3.0 * g.stderr + 0.01, "{g:?}");
}

#[test]
fn unit_repulsion_is_detectably_biased() {
    let unit = SdeOptions { repulsion: 1.0, noise: 1.0 };
    let biased = compare_sde_vs_matrix_with(&Sequential, &[10.0, 0.0], 0.5, 50, 20_000, 0, &unit).unwrap();
    assert!(biased.per_eigenvalue.iter().all(|c| !c.within(3.0)), "{biased:?}");
    let matched = compare_sde_vs_matrix(&Sequential, &[10.0, 0.0], 0.5, 50, 20_000, 0).unwrap();
    assert!(matched.per_eigenvalue.iter().all(|c| c.within(3.0)), "{matched:?}");
}

#[test]
fn scalar_sde_matches_matrix_path() {
    let c = compare_sde_vs_matrix(&Sequential, &[1.5], 1.0, 10, 5000, 3).unwrap();
    assert!(c.per_eigenvalue[0].within(3.0));
}

/// Small-noise rotation of the top eigenvector in `d = 2`: the angle is
/// Gaussian with variance `2T / g^2`, so `E ||P(T) - P(0)||_F^2 = 1 - exp(-4T / g^2)`.
#[test]
fn vector_flow_two_dim_rotation() {
    let (g, horizon) = (50.0, 1.0);
    let m = SymMatrix::from_diag(&[g, 0.0]);
    let vals: Vec<f64> = (0..20_000)
        .map(|t| {
            let mut rng = stream(9, t);
            let f = integrate_vector_flow_with(&m, horizon, 100, &mut rng, &SdeOptions::default()).unwrap();
            assert!(f.max_orthonormality_defect < 1e-8);
            let p0 = column_projector(&f.initial_eigenvectors, 1).unwrap();
            let p1 = column_projector(&f.eigenvectors, 1).unwrap();
            p1.sub(&p0).unwrap().frobenius_norm().powi(2)
        })
        .collect();
    let est = MeanEstimate::of(&vals);
    let oracle = 1.0 - (-4.0 * horizon / (g * g)).exp();
    assert!((est.mean - oracle).abs() <= 3.0 * est.stderr, "{est:?} vs {oracle}");
}

#[test]
fn weyl_sandwich_along_a_path() {
    let m = synthetic_spectrum(5, &SpectrumProfile::Geometric { top: 10.0, ratio: 0.5 }, 1).unwrap();
    let sigma = eigvals_desc(&m).unwrap();
    let path = sample_bm_path(5, 2.0, 60, 4).unwrap();
    let tr = eigen_trajectories(&m, &path).unwrap();
    for (g, b) in tr.gamma.iter().zip(&path.values) {
        let norm = spectral_dp_core::linalg::spectral_norm(b).unwrap();
        for (x, s) in g.iter().zip(&sigma) {
            assert!((x - s).abs() <= norm + 1e-9);
        }
    }
}

#[test]
fn far_gap_never_collapses() {
    let gap = 100.0 * 4.0 * 2f64.sqrt();
    let m = SymMatrix::from_diag(&[gap, 0.0]);
    let t = mc_gap_tail(&Sequential, &m, &[0], 1.0, 50, 2000, gap / 4.0, 1).unwrap();
    assert_eq!(t.empirical, 0.0);
}

#[test]
fn spectral_tail_example() {
    let t = mc_spectral_tail(&Sequential, 10, 1.0, 50, 2000, 8.0, 2).unwrap();
    assert!(t.empirical <= t.analytic);
    let zero = mc_spectral_tail(&Sequential, 10, 1.0, 5, 20, 0.0, 2).unwrap();
    assert_eq!(zero.analytic_clamped, 1.0);
    assert!(zero.analytic > 1.0);
}

#[test]
fn halving_horizon_shrinks_both_sides() {
    let m = SymMatrix::from_diag(&[40.0, 20.0, 0.0]);
    let target = TargetSpectrum::new(vec![1.0, 0.0, 0.0], 1).unwrap();
    let full = mc_frobenius_integral_check(&Sequential, &m, &target, 1.0, 100, 1000, 6).unwrap();
    let half = mc_frobenius_integral_check(&Sequential, &m, &target, 0.5, 100, 1000, 6).unwrap();
    assert!(half.lhs.mean < full.lhs.mean);
    assert!(half.rhs.mean < full.rhs.mean);
    assert!(full.dominated(3.0));
}

#[test]
fn theorem_core_for_projector_of_uniform_gaps() {
    // k = 1, lambda = e_1, sigma_i = g (d - i + 1): the only nonzero terms are
    // j > 1 with denominator sigma_1 - sigma_2 = g, so the sum is (d - 1) / g^2.
    let sigma: Vec<f64> = (0..6).map(|i| 3.0 * (6 - i) as f64).collect();
    let core = theorem_bound_core(&sigma, &TargetSpectrum::projector(6, 1).unwrap()).unwrap();
    assert!((core - 5.0 / 9.0).abs() < 1e-12);
}

#[test]
fn wishart_moments() {
    let (m, d, n) = (100, 5, 20_000);
    let mut sum = vec![0.0; d * d];
    for t in 0..n {
        let mut rng = stream(31, t);
        let w = wishart_with_rng(m, d, &mut rng).unwrap();
        for (s, x) in sum.iter_mut().zip(w.as_slice()) {
            *s += x;
        }
    }
    for i in 0..d {
        for j in 0..d {
            let avg = sum[i * d + j] / n as f64;
            let expected = if i == j { m as f64 } else { 0.0 };
            assert!((avg - expected).abs() <= 0.03 * m as f64, "({i},{j}) {avg}");
        }
    }
    let mut rng = stream(32, 0);
    let traces: Vec<f64> =
        (0..100).map(|_| wishart_with_rng(10_000, 10, &mut rng).unwrap().trace() / 100_000.0).collect();
    assert!((mean(&traces) - 1.0).abs() < 0.02);
}
