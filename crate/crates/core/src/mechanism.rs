//! The Gaussian mechanism for symmetric matrices and its post-processings.
//!
//! The mechanism releases `M + c (G + G^T)` where `G` has i.i.d. standard
//! normal entries and `c = sqrt(2 ln(1.25 / delta)) / epsilon`. When `M` is
//! a covariance `A^T A` whose rows have norm at most one, this is
//! `(epsilon, delta)`-differentially private. Anything computed from the
//! released matrix alone (spectrum replacement, rank-k truncation, the top-k
//! projector) inherits the guarantee.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_projector, eigh_desc, reconstruct, SymMatrix};
use crate::rng;

/// Tolerance on row norms in [`sensitivity_check`].
pub const ROW_NORM_SLACK: f64 = 1e-12;

/// Privacy parameters `(epsilon, delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::input(alloc::format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::input(alloc::format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(PrivacyParams { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `c = sqrt(2 ln(1.25 / delta)) / epsilon`.
    pub fn noise_scale(&self) -> f64 {
        (2.0 * (1.25 / self.delta).ln()).sqrt() / self.epsilon
    }

    /// Diffusion time of the equivalent matrix Brownian motion. Equal to
    /// [`noise_scale`](Self::noise_scale): `M + B(T)` and `M + c (G + G^T)`
    /// have the same law when `T = c`.
    pub fn horizon(&self) -> f64 {
        self.noise_scale()
    }

    /// `ln(1 / delta) / epsilon^2`, the privacy factor in the utility bounds.
    pub fn utility_factor(&self) -> f64 {
        (1.0 / self.delta).ln() / (self.epsilon * self.epsilon)
    }
}

/// Prescribed output eigenvalues, non-increasing and zero past rank `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpectrum {
    lambdas: Vec<f64>,
    k: usize,
}

impl TargetSpectrum {
    pub fn new(lambdas: Vec<f64>, k: usize) -> Result<Self> {
        let d = lambdas.len();
        if d == 0 {
            return Err(Error::input("target spectrum is empty"));
        }
        if k == 0 || k > d {
            return Err(Error::input(alloc::format!("rank cutoff k = {k} outside [1, {d}]")));
        }
        if lambdas.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("target spectrum has non-finite values"));
        }
        if let Some(i) = lambdas.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::input(alloc::format!(
                "target spectrum increases between positions {} and {}",
                i + 1,
                i + 2
            )));
        }
        if let Some(i) = lambdas[k..].iter().position(|&x| x != 0.0) {
            return Err(Error::input(alloc::format!("target eigenvalue {} is nonzero beyond k = {k}", k + i + 1)));
        }
        Ok(TargetSpectrum { lambdas, k })
    }

    /// `k` ones followed by zeros: the target whose output is the top-k projector.
    pub fn projector(d: usize, k: usize) -> Result<Self> {
        let mut lambdas = vec![0.0; d];
        lambdas.iter_mut().take(k).for_each(|x| *x = 1.0);
        Self::new(lambdas, k)
    }

    /// The first `k` of the non-increasing `sigma`, zeros afterwards.
    pub fn truncated(sigma: &[f64], k: usize) -> Result<Self> {
        let lambdas = sigma.iter().enumerate().map(|(i, &s)| if i < k { s } else { 0.0 }).collect();
        Self::new(lambdas, k)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }
}

/// `M + c (G + G^T)` with `G` drawn from `rng::stream(seed, 0)`.
pub fn gaussian_perturb(m: &SymMatrix, privacy: &PrivacyParams, seed: u64) -> SymMatrix {
    let mut rng = rng::stream(seed, 0);
    perturb_with_rng(m, privacy.noise_scale(), &mut rng)
}

/// `M + scale (G + G^T)`. `G` is drawn row-major as a full `d x d` matrix.
pub fn perturb_with_rng<R: Rng + ?Sized>(m: &SymMatrix, scale: f64, rng: &mut R) -> SymMatrix {
    let d = m.dim();
    let mut g = vec![0.0; d * d];
    rng::fill_standard_normal(rng, &mut g);
    SymMatrix::from_upper_fn(d, |i, j| m.get(i, j) + scale * (g[i * d + j] + g[j * d + i]))
}

/// `V_hat diag(lambda) V_hat^T`, with `V_hat` the eigenvectors of `m_hat`.
pub fn replace_spectrum(m_hat: &SymMatrix, target: &TargetSpectrum) -> Result<SymMatrix> {
    if target.dim() != m_hat.dim() {
        return Err(Error::DimensionMismatch { expected: m_hat.dim(), found: target.dim() });
    }
    let spectrum = eigh_desc(m_hat)?;
    reconstruct(&spectrum.eigenvectors, &target.lambdas)
}

/// Keeps the top `k` eigenvalues of `m_hat` (by position in descending
/// order) and zeroes the rest.
pub fn rank_k_truncate(m_hat: &SymMatrix, k: usize) -> Result<SymMatrix> {
    check_rank(k, m_hat.dim())?;
    let spectrum = eigh_desc(m_hat)?;
    let mut values = spectrum.eigenvalues;
    values[k..].iter_mut().for_each(|x| *x = 0.0);
    reconstruct(&spectrum.eigenvectors, &values)
}

/// Projector onto the span of the top-`k` eigenvectors of `m_hat`.
pub fn subspace_projector(m_hat: &SymMatrix, k: usize) -> Result<SymMatrix> {
    check_rank(k, m_hat.dim())?;
    let spectrum = eigh_desc(m_hat)?;
    column_projector(&spectrum.eigenvectors, k)
}

pub(crate) fn check_rank(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        Err(Error::input(alloc::format!("k = {k} outside [1, {d}]")))
    } else {
        Ok(())
    }
}

/// Result of [`sensitivity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    /// Every row has Euclidean norm at most `1 + 1e-12`.
    pub within_bound: bool,
    pub max_row_norm: f64,
}

/// Checks that every data row has norm at most one, which bounds the
/// sensitivity of `A^T A` by one and makes the mechanism's calibration valid.
pub fn sensitivity_check<R: AsRef<[f64]>>(rows: &[R]) -> Sensitivity {
    let max_row_norm =
        rows.iter().map(|r| r.as_ref().iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0_f64, f64::max);
    Sensitivity { within_bound: max_row_norm <= 1.0 + ROW_NORM_SLACK, max_row_norm }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_distance;

    fn unit_scale_privacy() -> PrivacyParams {
        PrivacyParams::new(1.0, 1.25 / core::f64::consts::E).unwrap()
    }

    #[test]
    fn noise_scale_examples() {
        assert!((unit_scale_privacy().noise_scale() - 2f64.sqrt()).abs() < 1e-15);
        let p = PrivacyParams::new(1.0, 0.01).unwrap();
        assert_eq!(p.horizon(), p.noise_scale());
        assert!(PrivacyParams::new(0.0, 0.1).is_err());
        assert!(PrivacyParams::new(1.0, 1.0).is_err());
        assert!(PrivacyParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn target_validation() {
        assert!(TargetSpectrum::new(vec![3.0, 1.0, 0.0], 2).is_ok());
        assert!(TargetSpectrum::new(vec![1.0, 3.0, 0.0], 2).is_err());
        assert!(TargetSpectrum::new(vec![3.0, 1.0, 0.5], 2).is_err());
        assert!(TargetSpectrum::new(vec![3.0, 1.0], 3).is_err());
        assert!(TargetSpectrum::new(vec![3.0, 1.0], 0).is_err());
    }

    #[test]
    fn perturb_is_symmetric_and_seeded() {
        let m = SymMatrix::from_diag(&[3.0, 1.0, 0.0]);
        let p = unit_scale_privacy();
        let a = gaussian_perturb(&m, &p, 7);
        let b = gaussian_perturb(&m, &p, 7);
        let c = gaussian_perturb(&m, &p, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.get(i, j).to_bits(), a.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn replace_spectrum_examples() {
        let m = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let out = replace_spectrum(&m, &TargetSpectrum::new(vec![5.0, 0.0], 1).unwrap()).unwrap();
        for x in out.as_slice() {
            assert!((x - 2.5).abs() < 1e-12);
        }
        let same = replace_spectrum(&m, &TargetSpectrum::new(vec![3.0, 1.0], 2).unwrap()).unwrap();
        assert!(frobenius_distance(&same, &m).unwrap() < 1e-8 * (1.0 + m.frobenius_norm()));
        let id = replace_spectrum(&m, &TargetSpectrum::projector(2, 2).unwrap()).unwrap();
        assert_eq!(id, SymMatrix::identity(2));
        let bad = TargetSpectrum::projector(3, 1).unwrap();
        assert!(replace_spectrum(&m, &bad).is_err());
    }

    #[test]
    fn truncation_examples() {
        let m = SymMatrix::from_diag(&[3.0, 1.0, -2.0]);
        let t2 = rank_k_truncate(&m, 2).unwrap();
        assert!(frobenius_distance(&t2, &SymMatrix::from_diag(&[3.0, 1.0, 0.0])).unwrap() < 1e-12);
        let t1 = rank_k_truncate(&m, 1).unwrap();
        assert!(frobenius_distance(&t1, &SymMatrix::from_diag(&[3.0, 0.0, 0.0])).unwrap() < 1e-12);
        let t3 = rank_k_truncate(&m, 3).unwrap();
        assert!(frobenius_distance(&t3, &m).unwrap() < 1e-8);
        assert!(rank_k_truncate(&m, 0).is_err());
        assert!(rank_k_truncate(&m, 4).is_err());
    }

    #[test]
    fn projector_examples() {
        let p = subspace_projector(&SymMatrix::from_diag(&[3.0, 1.0]), 1).unwrap();
        assert!(frobenius_distance(&p, &SymMatrix::from_diag(&[1.0, 0.0])).unwrap() < 1e-12);
        let full = subspace_projector(&SymMatrix::from_diag(&[3.0, 1.0, 2.0]), 3).unwrap();
        assert_eq!(full, SymMatrix::identity(3));
        assert!(subspace_projector(&SymMatrix::identity(2), 3).is_err());
    }

    #[test]
    fn sensitivity_examples() {
        let s = sensitivity_check(&[[1.0, 0.0], [0.0, 1.0]]);
        assert!(s.within_bound);
        assert_eq!(s.max_row_norm, 1.0);
        let s = sensitivity_check(&[[1.0, 1.0]]);
        assert!(!s.within_bound);
        assert!((s.max_row_norm - 2f64.sqrt()).abs() < 1e-15);
        let s = sensitivity_check::<[f64; 2]>(&[]);
        assert!(s.within_bound);
        assert_eq!(s.max_row_norm, 0.0);
    }
}
