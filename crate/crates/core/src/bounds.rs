//! Eigenvalue-gap condition and closed-form utility bounds.
//!
//! All logarithms are natural. The utility theorem is stated up to a
//! constant; [`theorem_bound`] takes it explicitly ([`DEFAULT_THEOREM_CONSTANT`]
//! is 128). The corollary and prior-work comparators are constant-free and
//! only meant for ratios.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanism::{PrivacyParams, TargetSpectrum};

/// Constant multiplying the double sum in [`theorem_bound`].
pub const DEFAULT_THEOREM_CONSTANT: f64 = 128.0;

/// `c = sqrt(2 ln(1.25 / delta)) / epsilon`.
pub fn noise_scale(privacy: &PrivacyParams) -> f64 {
    privacy.noise_scale()
}

/// Right-hand side of the gap condition:
/// `8 sqrt(ln(1.25/delta)) / epsilon * sqrt(d) + 3 sqrt(max(ln(lambda1 k), 0))`.
pub fn assumption_threshold(d: usize, k: usize, lambda1: f64, privacy: &PrivacyParams) -> Result<f64> {
    validate_threshold_args(d, k, lambda1)?;
    let dimension_term = 8.0 * (1.25 / privacy.delta()).ln().sqrt() / privacy.epsilon() * (d as f64).sqrt();
    Ok(dimension_term + log_term(k, lambda1))
}

/// The same threshold written in terms of the diffusion horizon
/// `T = sqrt(2 ln(1.25/delta)) / epsilon`: `4 sqrt(2) T sqrt(d) + 3 sqrt(max(ln(lambda1 k), 0))`.
pub fn assumption_threshold_for_horizon(d: usize, k: usize, lambda1: f64, horizon: f64) -> Result<f64> {
    validate_threshold_args(d, k, lambda1)?;
    if !(horizon > 0.0) {
        return Err(Error::input(alloc::format!("horizon must be positive, got {horizon}")));
    }
    Ok(4.0 * core::f64::consts::SQRT_2 * horizon * (d as f64).sqrt() + log_term(k, lambda1))
}

fn validate_threshold_args(d: usize, k: usize, lambda1: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::input("dimension must be positive"));
    }
    if k == 0 || k > d {
        return Err(Error::input(alloc::format!("k = {k} outside [1, {d}]")));
    }
    if !(lambda1 * k as f64 > 0.0) || !lambda1.is_finite() {
        return Err(Error::input(alloc::format!("lambda1 * k must be positive, got lambda1 = {lambda1}")));
    }
    Ok(())
}

fn log_term(k: usize, lambda1: f64) -> f64 {
    3.0 * (lambda1 * k as f64).ln().max(0.0).sqrt()
}

/// Outcome of checking the gap condition on a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    /// `sigma_i - sigma_{i+1}`, length `d - 1`.
    pub gaps: Vec<f64>,
    /// Threshold at the requested `k`.
    pub threshold: f64,
    /// Requested rank cutoff.
    pub k: usize,
    /// Whether the condition holds at the requested `k`.
    pub satisfied: bool,
    /// Threshold for every `k` in `1..=d-1`.
    pub threshold_per_k: Vec<f64>,
    /// Whether gaps `1..=k` all clear the threshold for `k`, for `k` in `1..=d-1`.
    pub per_k_pass: Vec<bool>,
    /// Largest passing `k`, or zero if none pass.
    pub satisfied_up_to: usize,
}

/// Evaluates the gap condition for `(sigma, k, lambda1, privacy)` and for
/// every other cutoff `1..=d-1` at the same `lambda1`.
pub fn check_gaps(sigma: &[f64], k: usize, lambda1: f64, privacy: &PrivacyParams) -> Result<GapReport> {
    let d = sigma.len();
    ensure_non_increasing(sigma)?;
    if d < 2 {
        return Err(Error::input("gap check needs at least two eigenvalues"));
    }
    if k == 0 || k > d - 1 {
        return Err(Error::input(alloc::format!("k = {k} outside [1, {}]", d - 1)));
    }
    let gaps: Vec<f64> = sigma.windows(2).map(|w| w[0] - w[1]).collect();
    let threshold_per_k = (1..d).map(|kk| assumption_threshold(d, kk, lambda1, privacy)).collect::<Result<Vec<_>>>()?;
    let per_k_pass: Vec<bool> =
        threshold_per_k.iter().enumerate().map(|(idx, &t)| gaps[..=idx].iter().all(|&g| g >= t)).collect();
    let satisfied_up_to = per_k_pass.iter().rposition(|&p| p).map_or(0, |i| i + 1);
    Ok(GapReport {
        threshold: threshold_per_k[k - 1],
        satisfied: per_k_pass[k - 1],
        k,
        gaps,
        threshold_per_k,
        per_k_pass,
        satisfied_up_to,
    })
}

pub(crate) fn ensure_non_increasing(sigma: &[f64]) -> Result<()> {
    if sigma.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("eigenvalues must be finite"));
    }
    match sigma.windows(2).position(|w| w[0] < w[1]) {
        Some(i) => Err(Error::input(alloc::format!("eigenvalues increase between positions {} and {}", i + 1, i + 2))),
        None => Ok(()),
    }
}

/// `sum_{i<=k} sum_{j>i} (lambda_i - lambda_j)^2 / (sigma_i - max(sigma_j, sigma_{k+1}))^2`.
///
/// With `k = d` there is no `sigma_{k+1}` and the denominator is
/// `sigma_i - sigma_j`. Terms with a zero numerator are skipped; a
/// non-positive denominator under a nonzero numerator is a domain error
/// (indices reported 1-based).
pub fn theorem_bound_core(sigma: &[f64], target: &TargetSpectrum) -> Result<f64> {
    let d = sigma.len();
    if target.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: target.dim() });
    }
    ensure_non_increasing(sigma)?;
    let k = target.k();
    let lambda = target.lambdas();
    let floor = sigma.get(k).copied();
    let mut total = 0.0;
    for i in 0..k {
        for j in (i + 1)..d {
            let num = lambda[i] - lambda[j];
            if num == 0.0 {
                continue;
            }
            let competitor = floor.map_or(sigma[j], |f| sigma[j].max(f));
            let den = sigma[i] - competitor;
            if !(den > 0.0) {
                return Err(Error::Domain {
                    i: i + 1,
                    j: j + 1,
                    reason: alloc::format!("denominator {den} is not positive"),
                });
            }
            total += (num / den).powi(2);
        }
    }
    Ok(total)
}

/// `constant * theorem_bound_core * ln(1/delta) / epsilon^2`.
pub fn theorem_bound(sigma: &[f64], target: &TargetSpectrum, privacy: &PrivacyParams, constant: f64) -> Result<f64> {
    if !(constant > 0.0) {
        return Err(Error::input("bound constant must be positive"));
    }
    Ok(constant * theorem_bound_core(sigma, target)? * privacy.utility_factor())
}

fn kth_gap(sigma: &[f64], k: usize) -> Result<(f64, f64)> {
    let d = sigma.len();
    ensure_non_increasing(sigma)?;
    if k == 0 || k > d {
        return Err(Error::input(alloc::format!("k = {k} outside [1, {d}]")));
    }
    let sigma_k = sigma[k - 1];
    let next = sigma.get(k).copied().unwrap_or(0.0);
    let gap = sigma_k - next;
    if !(gap > 0.0) {
        return Err(Error::Domain { i: k, j: k + 1, reason: alloc::format!("gap {gap} is not positive") });
    }
    Ok((sigma_k, gap))
}

fn sqrt_factor(privacy: &PrivacyParams) -> f64 {
    (1.0 / privacy.delta()).ln().sqrt() / privacy.epsilon()
}

/// `sqrt(k d) * sigma_k / (sigma_k - sigma_{k+1}) * sqrt(ln(1/delta)) / epsilon`,
/// with `sigma_{d+1} = 0`.
pub fn cor_rank_k_bound(sigma: &[f64], k: usize, privacy: &PrivacyParams) -> Result<f64> {
    let (sigma_k, gap) = kth_gap(sigma, k)?;
    let d = sigma.len() as f64;
    Ok((k as f64 * d).sqrt() * sigma_k / gap * sqrt_factor(privacy))
}

/// Subspace-recovery comparators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubspaceBounds {
    /// `sqrt(k d) / (sigma_k - sigma_{k+1})` times the privacy factor.
    pub general: f64,
    /// `sqrt(d) / (sigma_k - sigma_{k+1})` times the privacy factor.
    pub uniform_gap: f64,
}

pub fn cor_subspace_bounds(sigma: &[f64], k: usize, privacy: &PrivacyParams) -> Result<SubspaceBounds> {
    let (_, gap) = kth_gap(sigma, k)?;
    let d = sigma.len() as f64;
    let f = sqrt_factor(privacy);
    Ok(SubspaceBounds { general: (k as f64 * d).sqrt() / gap * f, uniform_gap: d.sqrt() / gap * f })
}

/// Prior-work comparators used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineBounds {
    /// `k sqrt(d)` times the privacy factor.
    pub rank_k_prior: f64,
    /// `sqrt(k d) / (sigma_k - sigma_{k+1})` times the privacy factor.
    pub subspace_prior: f64,
}

pub fn baseline_bounds(sigma: &[f64], k: usize, privacy: &PrivacyParams) -> Result<BaselineBounds> {
    let (_, gap) = kth_gap(sigma, k)?;
    let d = sigma.len() as f64;
    let f = sqrt_factor(privacy);
    Ok(BaselineBounds { rank_k_prior: k as f64 * d.sqrt() * f, subspace_prior: (k as f64 * d).sqrt() / gap * f })
}

/// Markov tail `min(1, E[X^2] / s)`.
pub fn markov_tail(expected_sq: f64, s: f64) -> f64 {
    if expected_sq <= 0.0 {
        return 0.0;
    }
    (expected_sq / s).min(1.0)
}

/// Gap thresholds reported for three public benchmark datasets at
/// `epsilon = 1`, `delta = 0.01`, `lambda1 = sigma_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportedThreshold {
    pub dataset: &'static str,
    pub d: usize,
    pub sigma1: f64,
    pub k_max: usize,
    pub threshold: f64,
}

pub const REPORTED_THRESHOLDS: [ReportedThreshold; 3] = [
    ReportedThreshold { dataset: "census", d: 124, sigma1: 93730.0, k_max: 11, threshold: 442.0 },
    ReportedThreshold { dataset: "kddcup", d: 36, sigma1: 72670.0, k_max: 7, threshold: 250.0 },
    ReportedThreshold { dataset: "adult", d: 6, sigma1: 1195.0, k_max: 4, threshold: 103.4 },
];

/// The reported threshold whose dimension matches `d`, if any.
pub fn reported_threshold_for_dim(d: usize) -> Option<&'static ReportedThreshold> {
    REPORTED_THRESHOLDS.iter().find(|r| r.d == d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn p(eps: f64, delta: f64) -> PrivacyParams {
        PrivacyParams::new(eps, delta).unwrap()
    }

    fn unit() -> PrivacyParams {
        p(1.0, 1.25 / core::f64::consts::E)
    }

    fn inv_e() -> PrivacyParams {
        p(1.0, 1.0 / core::f64::consts::E)
    }

    #[test]
    fn noise_scale_values() {
        assert!((noise_scale(&unit()) - 2f64.sqrt()).abs() < 1e-12);
        assert!((noise_scale(&p(2.0, 1.25 / core::f64::consts::E)) - 2f64.sqrt() / 2.0).abs() < 1e-12);
        // sqrt(2 ln 125)
        assert!((noise_scale(&p(1.0, 0.01)) - 3.107_511_460_092_24).abs() < 1e-12);
    }

    #[test]
    fn threshold_values() {
        assert!((assumption_threshold(4, 1, 1.0, &unit()).unwrap() - 16.0).abs() < 1e-12);
        assert!((assumption_threshold(1, 1, 1.0, &unit()).unwrap() - 8.0).abs() < 1e-12);
        // 8 sqrt(ln 125) sqrt(124) + 3 sqrt(ln(93730 * 11))
        let census = assumption_threshold(124, 11, 93730.0, &p(1.0, 0.01)).unwrap();
        let expected = 8.0 * 125f64.ln().sqrt() * 124f64.sqrt() + 3.0 * (93730.0f64 * 11.0).ln().sqrt();
        assert!((census - expected).abs() < 1e-9);
        assert!((census - 206.9).abs() < 0.05, "{census}");
        assert!(assumption_threshold(4, 1, 0.0, &unit()).is_err());
        assert!(assumption_threshold(4, 1, -1.0, &unit()).is_err());
    }

    #[test]
    fn threshold_forms_agree() {
        let priv_ = p(0.7, 0.003);
        let a = assumption_threshold(17, 3, 42.0, &priv_).unwrap();
        let b = assumption_threshold_for_horizon(17, 3, 42.0, priv_.horizon()).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn gap_checks() {
        let r = check_gaps(&[100.0, 50.0, 0.0], 1, 1.0, &unit()).unwrap();
        assert!((r.threshold - 8.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(r.satisfied);
        assert_eq!(r.gaps, vec![50.0, 50.0]);

        let r = check_gaps(&[7.0, 7.0, 0.0], 1, 1.0, &unit()).unwrap();
        assert!(!r.satisfied);

        // lambda1 below 1/(d-1) keeps the log term at zero for every k.
        let d = 5;
        let t = assumption_threshold(d, 1, 0.1, &unit()).unwrap();
        let sigma: Vec<f64> = (0..d).map(|i| (d - 1 - i) as f64 * (t + 1.0)).collect();
        let r = check_gaps(&sigma, 2, 0.1, &unit()).unwrap();
        assert_eq!(r.satisfied_up_to, d - 1);
        assert!(r.per_k_pass.iter().all(|&b| b));

        assert!(check_gaps(&[1.0, 2.0, 0.0], 1, 1.0, &unit()).is_err());
        assert!(check_gaps(&[3.0, 2.0, 0.0], 3, 1.0, &unit()).is_err());
    }

    #[test]
    fn theorem_core_values() {
        let zero = TargetSpectrum::new(vec![0.0; 3], 1).unwrap();
        assert_eq!(theorem_bound_core(&[10.0, 5.0, 0.0], &zero).unwrap(), 0.0);
        let t = TargetSpectrum::new(vec![1.0, 0.0, 0.0], 1).unwrap();
        assert!((theorem_bound_core(&[10.0, 5.0, 0.0], &t).unwrap() - 0.08).abs() < 1e-15);
        let t = TargetSpectrum::new(vec![10.0, 5.0, 0.0], 2).unwrap();
        assert!((theorem_bound_core(&[10.0, 5.0, 0.0], &t).unwrap() - 3.0).abs() < 1e-15);

        let t = TargetSpectrum::new(vec![1.0, 0.0, 0.0], 1).unwrap();
        match theorem_bound_core(&[5.0, 5.0, 0.0], &t) {
            Err(Error::Domain { i: 1, j: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn theorem_bound_scaling() {
        let t = TargetSpectrum::new(vec![1.0, 0.0, 0.0], 1).unwrap();
        let b = theorem_bound(&[10.0, 5.0, 0.0], &t, &inv_e(), DEFAULT_THEOREM_CONSTANT).unwrap();
        assert!((b - 10.24).abs() < 1e-12);
        let b2 = theorem_bound(&[10.0, 5.0, 0.0], &t, &p(2.0, 1.0 / core::f64::consts::E), 128.0).unwrap();
        assert!((b2 - b / 4.0).abs() < 1e-12);
        let zero = TargetSpectrum::new(vec![0.0; 3], 1).unwrap();
        assert_eq!(theorem_bound(&[10.0, 5.0, 0.0], &zero, &p(0.1, 1e-9), 128.0).unwrap(), 0.0);
    }

    #[test]
    fn corollary_values() {
        let r = cor_rank_k_bound(&[10.0, 5.0, 0.0], 2, &inv_e()).unwrap();
        assert!((r - 6f64.sqrt()).abs() < 1e-12);
        let full = cor_rank_k_bound(&[10.0, 5.0, 2.0], 3, &inv_e()).unwrap();
        assert!((full - 3.0).abs() < 1e-12);
        let scaled = cor_rank_k_bound(&[70.0, 35.0, 0.0], 2, &inv_e()).unwrap();
        assert!((scaled - r).abs() < 1e-12);
        assert!(cor_rank_k_bound(&[5.0, 5.0, 0.0], 1, &inv_e()).is_err());

        let s = cor_subspace_bounds(&[10.0, 5.0, 0.0], 1, &inv_e()).unwrap();
        assert!((s.general - 3f64.sqrt() / 5.0).abs() < 1e-12);
        assert_eq!(s.general, s.uniform_gap);
        let priv_ = p(1.0, 0.01);
        let s = cor_subspace_bounds(&[10.0, 8.0, 0.0], 2, &priv_).unwrap();
        let f = 100f64.ln().sqrt();
        assert!((s.general - 6f64.sqrt() / 8.0 * f).abs() < 1e-12);
        assert!((s.uniform_gap - 3f64.sqrt() / 8.0 * f).abs() < 1e-12);
        assert!(s.general >= s.uniform_gap);
    }

    #[test]
    fn baseline_ratio() {
        // sigma_k - sigma_{k+1} = sigma_k gives the sqrt(k) improvement.
        let sigma = [9.0, 9.0, 9.0, 9.0, 0.0];
        let k = 4;
        let ours = cor_rank_k_bound(&sigma, k, &inv_e()).unwrap();
        let base = baseline_bounds(&sigma, k, &inv_e()).unwrap();
        assert!((ours / base.rank_k_prior - 1.0 / (k as f64).sqrt()).abs() < 1e-12);
        let b1 = baseline_bounds(&[3.0, 1.0, 0.0], 1, &inv_e()).unwrap();
        assert!((b1.rank_k_prior - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn markov_values() {
        assert_eq!(markov_tail(4.0, 8.0), 0.5);
        assert_eq!(markov_tail(4.0, 2.0), 1.0);
        assert_eq!(markov_tail(0.0, 3.0), 0.0);
    }
}
