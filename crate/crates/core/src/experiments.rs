//! Monte Carlo utility estimates, Wishart gap experiments and synthetic
//! test spectra.
//!
//! Trial `t` of every estimator draws from `rng::stream(seed, t)`, so an
//! estimate depends only on its inputs, the seed and the trial count.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvals_desc, frobenius_distance, reconstruct, Matrix, SymMatrix};
use crate::mechanism::{
    check_rank, perturb_with_rng, rank_k_truncate, replace_spectrum, subspace_projector, PrivacyParams, TargetSpectrum,
};
use crate::rng;
use crate::stats;
use crate::trials::TrialExecutor;

pub const DEFAULT_UTILITY_TRIALS: usize = 2000;
pub const DEFAULT_WISHART_TRIALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Summary of per-trial Frobenius distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityEstimate {
    pub trials: usize,
    pub mean_frob: f64,
    pub mean_sq_frob: f64,
    pub stderr_frob: f64,
    pub stderr_sq: f64,
    pub quartiles: Quartiles,
    pub max_frob: f64,
}

impl UtilityEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let squares: Vec<f64> = samples.iter().map(|x| x * x).collect();
        let (q1, median, q3) = stats::quartiles(samples);
        UtilityEstimate {
            trials: samples.len(),
            mean_frob: stats::mean(samples),
            mean_sq_frob: stats::mean(&squares),
            stderr_frob: stats::std_error(samples),
            stderr_sq: stats::std_error(&squares),
            quartiles: Quartiles { q1, median, q3 },
            max_frob: samples.iter().copied().fold(0.0, f64::max),
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::input("trials must be positive"));
    }
    Ok(())
}

/// Per-trial `||post(M + c(G + G^T)) - truth||_F`.
fn utility_samples<E, F>(
    exec: &E,
    m: &SymMatrix,
    truth: &SymMatrix,
    privacy: &PrivacyParams,
    trials: usize,
    seed: u64,
    post: F,
) -> Result<Vec<f64>>
where
    E: TrialExecutor + ?Sized,
    F: Fn(&SymMatrix) -> Result<SymMatrix> + Sync + Send,
{
    check_trials(trials)?;
    let scale = privacy.noise_scale();
    exec.try_map_trials(trials, |t| {
        let mut rng = rng::stream(seed, t as u64);
        let released = post(&perturb_with_rng(m, scale, &mut rng))?;
        frobenius_distance(&released, truth)
    })
}

/// Estimates `E ||V_hat Lambda V_hat^T - V Lambda V^T||_F` and its square.
pub fn mc_utility<E: TrialExecutor + ?Sized>(
    exec: &E,
    m: &SymMatrix,
    target: &TargetSpectrum,
    privacy: &PrivacyParams,
    trials: usize,
    seed: u64,
) -> Result<UtilityEstimate> {
    let truth = replace_spectrum(m, target)?;
    let samples = utility_samples(exec, m, &truth, privacy, trials, seed, |mh| replace_spectrum(mh, target))?;
    Ok(UtilityEstimate::from_samples(&samples))
}

/// Estimates the rank-`k` approximation error against the clean rank-`k` truncation.
pub fn mc_rank_k_utility<E: TrialExecutor + ?Sized>(
    exec: &E,
    m: &SymMatrix,
    k: usize,
    privacy: &PrivacyParams,
    trials: usize,
    seed: u64,
) -> Result<UtilityEstimate> {
    let truth = rank_k_truncate(m, k)?;
    let samples = utility_samples(exec, m, &truth, privacy, trials, seed, |mh| rank_k_truncate(mh, k))?;
    Ok(UtilityEstimate::from_samples(&samples))
}

/// Estimates the distance between the released and clean top-`k` projectors.
/// The clean `k`-th gap must be strictly positive.
pub fn mc_subspace_utility<E: TrialExecutor + ?Sized>(
    exec: &E,
    m: &SymMatrix,
    k: usize,
    privacy: &PrivacyParams,
    trials: usize,
    seed: u64,
) -> Result<UtilityEstimate> {
    check_rank(k, m.dim())?;
    let sigma = eigvals_desc(m)?;
    if k < sigma.len() && !(sigma[k - 1] > sigma[k]) {
        return Err(Error::precondition(alloc::format!(
            "sigma_{k} = {} does not exceed sigma_{} = {}",
            sigma[k - 1],
            k + 1,
            sigma[k]
        )));
    }
    let truth = subspace_projector(m, k)?;
    let samples = utility_samples(exec, m, &truth, privacy, trials, seed, |mh| subspace_projector(mh, k))?;
    Ok(UtilityEstimate::from_samples(&samples))
}

/// `A^T A` for an `m x d` matrix `A` of standard normals drawn row by row.
pub fn wishart_sample(m: usize, d: usize, seed: u64) -> Result<SymMatrix> {
    let mut rng = rng::stream(seed, 0);
    wishart_with_rng(m, d, &mut rng)
}

pub fn wishart_with_rng<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> Result<SymMatrix> {
    if m == 0 || d == 0 {
        return Err(Error::input("Wishart sample needs m >= 1 and d >= 1"));
    }
    let mut acc = vec![0.0; d * d];
    let mut row = vec![0.0; d];
    for _ in 0..m {
        rng::fill_standard_normal(rng, &mut row);
        for i in 0..d {
            let a = row[i];
            let out = &mut acc[i * d..(i + 1) * d];
            for j in i..d {
                out[j] += a * row[j];
            }
        }
    }
    Ok(SymMatrix::from_upper_fn(d, |i, j| acc[i * d + j]))
}

/// One row of a [`GapTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub d: usize,
    pub m: usize,
    pub trials: usize,
    pub mean_min_gap: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTable {
    pub rows: Vec<GapRow>,
}

impl GapTable {
    pub const COLUMNS: [&'static str; 6] = ["d", "m", "trials", "mean_min_gap", "q1", "q3"];

    /// Least-squares slope of `ln(mean_min_gap)` against `ln(m)`.
    pub fn loglog_slope(&self) -> Option<f64> {
        if self.rows.len() < 2 || self.rows.iter().any(|r| !(r.mean_min_gap > 0.0)) {
            return None;
        }
        let x: Vec<f64> = self.rows.iter().map(|r| (r.m as f64).ln()).collect();
        let y: Vec<f64> = self.rows.iter().map(|r| r.mean_min_gap.ln()).collect();
        Some(stats::ols_slope(&x, &y))
    }
}

/// Per-trial `min_i (sigma_i - sigma_{i+1})` of Wishart samples with shape
/// `(m, d)`. Trials for a given `m` draw from `derive_seed(seed, m)`.
pub fn wishart_min_gaps<E: TrialExecutor + ?Sized>(
    exec: &E,
    d: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::input("minimum gap needs d >= 2"));
    }
    let family = rng::derive_seed(seed, m as u64);
    exec.try_map_trials(trials, |t| {
        let mut rng = rng::stream(family, t as u64);
        let sigma = eigvals_desc(&wishart_with_rng(m, d, &mut rng)?)?;
        Ok(sigma.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min))
    })
}

/// Mean and quartiles of the minimum eigenvalue gap for each `m` in `m_list`.
pub fn wishart_min_gap_experiment<E: TrialExecutor + ?Sized>(
    exec: &E,
    d: usize,
    m_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<GapTable> {
    if trials < 2 {
        return Err(Error::input("Wishart gap experiment needs at least two trials"));
    }
    let rows = m_list
        .iter()
        .map(|&m| {
            let gaps = wishart_min_gaps(exec, d, m, trials, seed)?;
            let (q1, _, q3) = stats::quartiles(&gaps);
            Ok(GapRow { d, m, trials, mean_min_gap: stats::mean(&gaps), q1, q3 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapTable { rows })
}

/// Eigenvalue profile for [`synthetic_spectrum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumProfile {
    /// `sigma_i = gap * (d - i + 1)`.
    UniformGap { gap: f64 },
    /// `sigma_i = top * ratio^(i - 1)` with `0 < ratio <= 1`.
    Geometric { top: f64, ratio: f64 },
    /// Explicit non-increasing eigenvalues.
    Custom(Vec<f64>),
}

impl SpectrumProfile {
    pub fn eigenvalues(&self, d: usize) -> Result<Vec<f64>> {
        let bad = |msg: String| Err(Error::input(msg));
        let values = match self {
            SpectrumProfile::UniformGap { gap } => {
                if !(*gap > 0.0) || !gap.is_finite() {
                    return bad(alloc::format!("uniform gap must be positive, got {gap}"));
                }
                (0..d).map(|i| gap * (d - i) as f64).collect()
            }
            SpectrumProfile::Geometric { top, ratio } => {
                if !(*ratio > 0.0 && *ratio <= 1.0) || !top.is_finite() {
                    return bad(alloc::format!(
                        "geometric profile needs finite top and ratio in (0, 1], got {top}, {ratio}"
                    ));
                }
                (0..d).map(|i| top * ratio.powi(i as i32)).collect()
            }
            SpectrumProfile::Custom(values) => {
                if values.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: values.len() });
                }
                crate::bounds::ensure_non_increasing(values)?;
                values.clone()
            }
        };
        if d == 0 {
            return bad("dimension must be positive".into());
        }
        Ok(values)
    }
}

/// Haar-distributed orthogonal matrix: Gram-Schmidt on a Gaussian matrix.
pub fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Matrix> {
    let mut data = vec![0.0; d * d];
    rng::fill_standard_normal(rng, &mut data);
    let mut q = Matrix::from_row_major(d, d, data)?;
    q.orthonormalize_columns()?;
    Ok(q)
}

/// `Q diag(sigma) Q^T` with `sigma` from `profile` and `Q` Haar-random
/// from `rng::stream(seed, 0)`.
pub fn synthetic_spectrum(d: usize, profile: &SpectrumProfile, seed: u64) -> Result<SymMatrix> {
    let sigma = profile.eigenvalues(d)?;
    let mut rng = rng::stream(seed, 0);
    let q = haar_orthogonal(d, &mut rng)?;
    reconstruct(&q, &sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trials::Sequential;

    fn privacy() -> PrivacyParams {
        PrivacyParams::new(1.0, 0.01).unwrap()
    }

    #[test]
    fn full_projector_has_zero_utility() {
        let m = synthetic_spectrum(5, &SpectrumProfile::UniformGap { gap: 3.0 }, 1).unwrap();
        let target = TargetSpectrum::projector(5, 5).unwrap();
        let est = mc_utility(&Sequential, &m, &target, &privacy(), 20, 2).unwrap();
        assert!(est.max_frob < 1e-12);
        let sub = mc_subspace_utility(&Sequential, &m, 5, &privacy(), 20, 2).unwrap();
        assert!(sub.max_frob < 1e-12);
    }

    #[test]
    fn doubling_epsilon_reduces_error_on_paired_seeds() {
        let m = synthetic_spectrum(6, &SpectrumProfile::UniformGap { gap: 40.0 }, 3).unwrap();
        let target = TargetSpectrum::projector(6, 2).unwrap();
        let lo = mc_utility(&Sequential, &m, &target, &PrivacyParams::new(1.0, 0.01).unwrap(), 200, 4).unwrap();
        let hi = mc_utility(&Sequential, &m, &target, &PrivacyParams::new(2.0, 0.01).unwrap(), 200, 4).unwrap();
        assert!(hi.mean_frob < lo.mean_frob);
    }

    #[test]
    fn zero_truth_rank_k_measures_noise() {
        let m = SymMatrix::zeros(4);
        let est = mc_rank_k_utility(&Sequential, &m, 2, &privacy(), 50, 5).unwrap();
        assert!(est.mean_frob > 0.0);
        assert!(est.quartiles.q1 <= est.quartiles.median && est.quartiles.median <= est.quartiles.q3);
    }

    #[test]
    fn subspace_rejects_degenerate_gap() {
        let m = SymMatrix::from_diag(&[3.0, 1.0, 1.0]);
        let err = mc_subspace_utility(&Sequential, &m, 2, &privacy(), 5, 0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn subspace_samples_bounded() {
        let m = SymMatrix::from_diag(&[3.0, 2.0, 1.0, 0.0]);
        let est = mc_subspace_utility(&Sequential, &m, 2, &privacy(), 100, 6).unwrap();
        assert!(est.max_frob <= 2.0 + 1e-8);
    }

    #[test]
    fn wishart_is_psd_and_two_dim_gap_is_direct() {
        let w = wishart_sample(7, 4, 9).unwrap();
        assert!(eigvals_desc(&w).unwrap().iter().all(|&x| x >= -1e-8));
        let gaps = wishart_min_gaps(&Sequential, 2, 5, 3, 1).unwrap();
        let family = rng::derive_seed(1, 5);
        for (t, g) in gaps.iter().enumerate() {
            let mut rng = rng::stream(family, t as u64);
            let s = eigvals_desc(&wishart_with_rng(5, 2, &mut rng).unwrap()).unwrap();
            assert_eq!(*g, s[0] - s[1]);
        }
        assert!(wishart_sample(0, 3, 0).is_err());
    }

    #[test]
    fn gap_table_slope() {
        let row = |m: usize, g: f64| GapRow { d: 2, m, trials: 2, mean_min_gap: g, q1: g, q3: g };
        let table = GapTable { rows: vec![row(100, 10.0), row(10_000, 100.0)] };
        assert!((table.loglog_slope().unwrap() - 0.5).abs() < 1e-12);
        assert!(wishart_min_gap_experiment(&Sequential, 3, &[10], 1, 0).is_err());
    }

    #[test]
    fn synthetic_profiles() {
        let m = synthetic_spectrum(4, &SpectrumProfile::UniformGap { gap: 50.0 }, 1).unwrap();
        let s = eigvals_desc(&m).unwrap();
        for (a, b) in s.iter().zip([200.0, 150.0, 100.0, 50.0]) {
            assert!((a - b).abs() < 1e-8);
        }
        let custom = SpectrumProfile::Custom(vec![3.0, 1.0, 0.0]);
        let a = synthetic_spectrum(3, &custom, 1).unwrap();
        let b = synthetic_spectrum(3, &custom, 2).unwrap();
        for (x, y) in eigvals_desc(&a).unwrap().iter().zip(eigvals_desc(&b).unwrap()) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!(frobenius_distance(&a, &b).unwrap() > 1e-3);
        let g = SpectrumProfile::Geometric { top: 8.0, ratio: 0.5 }.eigenvalues(4).unwrap();
        assert_eq!(g, vec![8.0, 4.0, 2.0, 1.0]);
        assert!(SpectrumProfile::UniformGap { gap: -1.0 }.eigenvalues(3).is_err());
        assert!(SpectrumProfile::Custom(vec![0.0, 1.0]).eigenvalues(2).is_err());
    }
}
