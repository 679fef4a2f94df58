//! Dyson Brownian motion.
//!
//! `B(t) = W(t) + W(t)^T` where `W` has independent standard Brownian
//! entries, so increments of `B` have diagonal variance `4 dt` and
//! off-diagonal variance `2 dt`. The eigenvalues `gamma_i(t)` of `M + B(t)`
//! follow
//!
//! ```text
//! d gamma_i = dB_ii + kappa * sum_{j != i} dt / (gamma_i - gamma_j)
//! ```
//!
//! where `kappa = E[dB_ij^2] / dt = 2` for this `B` ([`REPULSION`]). The
//! eigenvectors follow the Dyson vector flow driven by the same `dB_ij`.
//!
//! This module samples matrix paths, integrates both SDEs with
//! Euler-Maruyama, and estimates the tail probabilities and the Frobenius
//! integral that the utility analysis relies on. Extrema are taken over the
//! time grid only.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::Serialize;

use crate::bounds::{assumption_threshold_for_horizon, ensure_non_increasing};
use crate::error::{Error, Result};
use crate::linalg::{eigh_desc, eigvals_desc, reconstruct, spectral_norm, Matrix, SymMatrix};
use crate::mechanism::TargetSpectrum;
use crate::rng::{self, SimRng};
use crate::stats::{self, MeanEstimate};
use crate::trials::TrialExecutor;

/// Eigenvalue repulsion coefficient matching `B = W + W^T`.
pub const REPULSION: f64 = 2.0;

/// Relative gap floor for the SDE integrators: `1e-6 * (1 + |gamma_1(0)|)`.
pub const GAP_FLOOR_RELATIVE: f64 = 1e-6;

/// Sampled matrix Brownian motion on a uniform grid, `B(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BmPath {
    pub horizon: f64,
    pub steps: usize,
    /// `B(t_j)` for `j = 0..=steps`.
    pub values: Vec<SymMatrix>,
}

impl BmPath {
    /// A path that stays at zero.
    pub fn frozen(dim: usize, horizon: f64, steps: usize) -> Self {
        BmPath { horizon, steps, values: vec![SymMatrix::zeros(dim); steps + 1] }
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn times(&self) -> Vec<f64> {
        grid(self.horizon, self.steps)
    }

    pub fn endpoint(&self) -> &SymMatrix {
        self.values.last().expect("path has at least one point")
    }
}

fn grid(horizon: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|j| horizon * j as f64 / steps as f64).collect()
}

fn validate_grid(horizon: f64, steps: usize) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::input(alloc::format!("horizon must be positive, got {horizon}")));
    }
    if steps == 0 {
        return Err(Error::input("steps must be at least 1"));
    }
    Ok(())
}

/// One increment `dW + dW^T` with `dW_ij ~ N(0, dt)`, drawn row-major.
pub fn bm_increment<R: Rng + ?Sized>(dim: usize, dt: f64, rng: &mut R) -> SymMatrix {
    let mut w = vec![0.0; dim * dim];
    rng::fill_standard_normal(rng, &mut w);
    let s = dt.sqrt();
    SymMatrix::from_upper_fn(dim, |i, j| s * (w[i * dim + j] + w[j * dim + i]))
}

/// Streams `B(t_1), ..., B(t_n)` to `visit`, starting from `B(0) = 0`.
fn walk_path<R: Rng + ?Sized>(
    dim: usize,
    horizon: f64,
    steps: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, &SymMatrix) -> Result<()>,
) -> Result<()> {
    let dt = horizon / steps as f64;
    let mut b = SymMatrix::zeros(dim);
    for j in 1..=steps {
        b.add_assign(&bm_increment(dim, dt, rng));
        visit(j, &b)?;
    }
    Ok(())
}

/// Samples `B` on `steps` uniform steps of `[0, horizon]` from `stream(seed, 0)`.
pub fn sample_bm_path(dim: usize, horizon: f64, steps: usize, seed: u64) -> Result<BmPath> {
    validate_grid(horizon, steps)?;
    let mut rng = rng::stream(seed, 0);
    sample_bm_path_with(dim, horizon, steps, &mut rng)
}

pub fn sample_bm_path_with<R: Rng + ?Sized>(dim: usize, horizon: f64, steps: usize, rng: &mut R) -> Result<BmPath> {
    validate_grid(horizon, steps)?;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(SymMatrix::zeros(dim));
    walk_path(dim, horizon, steps, rng, |_, b| {
        values.push(b.clone());
        Ok(())
    })?;
    Ok(BmPath { horizon, steps, values })
}

/// Eigenvalue paths on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectories {
    pub times: Vec<f64>,
    /// `gamma[j][i]`: the `i`-th largest eigenvalue at `times[j]`.
    pub gamma: Vec<Vec<f64>>,
    /// Per adjacent pair `i`, the minimum of `gamma_i - gamma_{i+1}` over the grid.
    pub gap_infima: Vec<f64>,
    /// Maximum of `||B(t_j)||_2` over the grid, when the path is a matrix path.
    pub sup_spectral: Option<f64>,
    /// Number of gap-floor repairs performed by an SDE integrator.
    pub repairs: usize,
}

impl Trajectories {
    pub fn dim(&self) -> usize {
        self.gamma.first().map_or(0, Vec::len)
    }

    pub fn final_values(&self) -> &[f64] {
        self.gamma.last().map_or(&[], Vec::as_slice)
    }
}

fn gap_infima(gamma: &[Vec<f64>]) -> Vec<f64> {
    let d = gamma.first().map_or(0, Vec::len);
    (0..d.saturating_sub(1)).map(|i| gamma.iter().map(|g| g[i] - g[i + 1]).fold(f64::INFINITY, f64::min)).collect()
}

/// Eigenvalues of `M + B(t_j)` at every grid point of `path`.
pub fn eigen_trajectories(m: &SymMatrix, path: &BmPath) -> Result<Trajectories> {
    if m.dim() != path.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: path.dim() });
    }
    let mut gamma = Vec::with_capacity(path.values.len());
    let mut sup = 0.0_f64;
    for b in &path.values {
        gamma.push(eigvals_desc(&m.add(b)?)?);
        sup = sup.max(spectral_norm(b)?);
    }
    Ok(Trajectories { times: path.times(), gap_infima: gap_infima(&gamma), gamma, sup_spectral: Some(sup), repairs: 0 })
}

/// Eigenvector frames of `M + B(t_j)` with each column's sign chosen to
/// agree with the previous grid point.
pub fn aligned_eigenvectors(m: &SymMatrix, path: &BmPath) -> Result<Vec<Matrix>> {
    if m.dim() != path.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: path.dim() });
    }
    let mut frames: Vec<Matrix> = Vec::with_capacity(path.values.len());
    for b in &path.values {
        let mut v = eigh_desc(&m.add(b)?)?.eigenvectors;
        if let Some(prev) = frames.last() {
            align_signs(prev, &mut v);
        }
        frames.push(v);
    }
    Ok(frames)
}

/// Flips columns of `current` whose dot product with the matching column
/// of `previous` is negative.
pub fn align_signs(previous: &Matrix, current: &mut Matrix) {
    for j in 0..current.cols() {
        let dot: f64 = (0..current.rows()).map(|i| previous[(i, j)] * current[(i, j)]).sum();
        if dot < 0.0 {
            current.negate_column(j);
        }
    }
}

/// Empirical tail probability next to its analytic bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub empirical: f64,
    /// The bound as written; may exceed one.
    pub analytic: f64,
    pub analytic_clamped: f64,
    pub trials: usize,
    pub exceedances: usize,
    /// Binomial standard error of `empirical`.
    pub stderr: f64,
}

impl TailEstimate {
    fn from_events(exceedances: usize, trials: usize, analytic: f64) -> Self {
        let empirical = if trials == 0 { 0.0 } else { exceedances as f64 / trials as f64 };
        TailEstimate {
            empirical,
            analytic,
            analytic_clamped: analytic.min(1.0),
            trials,
            exceedances,
            stderr: stats::binomial_std_error(empirical, trials),
        }
    }

    /// `empirical <= analytic + slack * stderr`.
    pub fn within(&self, slack: f64) -> bool {
        self.empirical <= self.analytic + slack * self.stderr
    }
}

/// `2 sqrt(pi) exp(-alpha^2 / 32)`.
pub fn gap_tail_bound(alpha: f64) -> f64 {
    2.0 * core::f64::consts::PI.sqrt() * (-alpha * alpha / 32.0).exp()
}

/// `2 sqrt(pi) exp(-alpha^2 / (8 T^2))`.
pub fn spectral_tail_bound(alpha: f64, horizon: f64) -> f64 {
    2.0 * core::f64::consts::PI.sqrt() * (-alpha * alpha / (8.0 * horizon * horizon)).exp()
}

/// Per-trial margin `min_{i in pairs} (inf_t gap_i(t) - gap_i(0) / 2)`.
///
/// The gap-lemma event for `alpha` is `margin < -alpha`, so one set of
/// margins answers every `alpha`. `pairs` are 0-based: `i` names the gap
/// between the `i`-th and `(i+1)`-th largest eigenvalues. Each initial gap
/// must be at least `4 T sqrt(d)`.
pub fn gap_margins<E: TrialExecutor + ?Sized>(
    exec: &E,
    m: &SymMatrix,
    pairs: &[usize],
    horizon: f64,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    validate_grid(horizon, steps)?;
    let d = m.dim();
    let sigma = eigvals_desc(m)?;
    let required = 4.0 * horizon * (d as f64).sqrt();
    for &i in pairs {
        if i + 1 >= d {
            return Err(Error::input(alloc::format!("gap index {} out of range for d = {d}", i + 1)));
        }
        let g = sigma[i] - sigma[i + 1];
        if g < required {
            return Err(Error::precondition(alloc::format!(
                "initial gap {} is {g}, below 4 T sqrt(d) = {required}",
                i + 1
            )));
        }
    }
    if pairs.is_empty() {
        return Err(Error::input("no gap indices given"));
    }
    exec.try_map_trials(trials, |t| {
        let mut rng = rng::stream(seed, t as u64);
        let mut inf: Vec<f64> = pairs.iter().map(|&i| sigma[i] - sigma[i + 1]).collect();
        walk_path(d, horizon, steps, &mut rng, |_, b| {
            let g = eigvals_desc(&m.add(b)?)?;
            for (slot, &i) in inf.iter_mut().zip(pairs) {
                *slot = slot.min(g[i] - g[i + 1]);
            }
            Ok(())
        })?;
        Ok(pairs.iter().zip(&inf).map(|(&i, &lo)| lo - 0.5 * (sigma[i] - sigma[i + 1])).fold(f64::INFINITY, f64::min))
    })
}

/// Tail estimate for the gap lemma from precomputed margins.
pub fn gap_tail_from_margins(margins: &[f64], alpha: f64) -> TailEstimate {
    let hits = margins.iter().filter(|&&m| m < -alpha).count();
    TailEstimate::from_events(hits, margins.len(), gap_tail_bound(alpha))
}

/// Estimates `P(exists i in pairs: inf_t gap_i(t) < gap_i(0)/2 - alpha)`.
#[allow(clippy::too_many_arguments)]
pub fn mc_gap_tail<E: TrialExecutor + ?Sized>(
    exec: &E,
    m: &SymMatrix,
    pairs: &[usize],
    horizon: f64,
    steps: usize,
    trials: usize,
    alpha: f64,
    seed: u64,
) -> Result<TailEstimate> {
    let margins = gap_margins(exec, m, pairs, horizon, steps, trials, seed)?;
    Ok(gap_tail_from_margins(&margins, alpha))
}

/// Per-trial `sup_j ||B(t_j)||_2`.
pub fn spectral_sups<E: TrialExecutor + ?Sized>(
    exec: &E,
    dim: usize,
    horizon: f64,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    validate_grid(horizon, steps)?;
    exec.try_map_trials(trials, |t| {
        let mut rng = rng::stream(seed, t as u64);
        let mut sup = 0.0_f64;
        walk_path(dim, horizon, steps, &mut rng, |_, b| {
            sup = sup.max(spectral_norm(b)?);
            Ok(())
        })?;
        Ok(sup)
    })
}

/// Tail estimate for the spectral-norm lemma from precomputed suprema.
pub fn spectral_tail_from_sups(sups: &[f64], dim: usize, horizon: f64, alpha: f64) -> TailEstimate {
    let level = 2.0 * horizon * (dim as f64).sqrt() + alpha;
    let hits = sups.iter().filter(|&&s| s > level).count();
    TailEstimate::from_events(hits, sups.len(), spectral_tail_bound(alpha, horizon))
}

/// Estimates `P(sup_t ||B(t)||_2 > 2 T sqrt(d) + alpha)`.
pub fn mc_spectral_tail<E: TrialExecutor + ?Sized>(
    exec: &E,
    dim: usize,
    horizon: f64,
    steps: usize,
    trials: usize,
    alpha: f64,
    seed: u64,
) -> Result<TailEstimate> {
    let sups = spectral_sups(exec, dim, horizon, steps, trials, seed)?;
    Ok(spectral_tail_from_sups(&sups, dim, horizon, alpha))
}

/// Settings for the Euler-Maruyama integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeOptions {
    /// Drift coefficient `kappa` in `kappa * sum dt / (gamma_i - gamma_j)`.
    pub repulsion: f64,
    /// Multiplier on every Brownian increment; zero freezes the noise.
    pub noise: f64,
}

impl Default for SdeOptions {
    fn default() -> Self {
        SdeOptions { repulsion: REPULSION, noise: 1.0 }
    }
}

fn validate_start(sigma0: &[f64]) -> Result<()> {
    if sigma0.is_empty() {
        return Err(Error::input("empty initial spectrum"));
    }
    ensure_non_increasing(sigma0)?;
    if let Some(i) = sigma0.windows(2).position(|w| w[0] == w[1]) {
        return Err(Error::input(alloc::format!("initial eigenvalues {} and {} coincide", i + 1, i + 2)));
    }
    Ok(())
}

/// Restores descending order and pushes any pair closer than `floor` apart
/// symmetrically. Returns the applied permutation (new position -> old) and
/// the number of pairs pushed.
fn repair_gaps(gamma: &mut [f64], floor: f64, step: usize) -> Result<(Option<Vec<usize>>, usize)> {
    if gamma.iter().any(|x| !x.is_finite()) {
        return Err(Error::GapUnderflow { step, pair: 0 });
    }
    let d = gamma.len();
    let sorted = gamma.windows(2).all(|w| w[0] >= w[1]);
    let perm = if sorted {
        None
    } else {
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| gamma[b].total_cmp(&gamma[a]));
        let copy = gamma.to_vec();
        for (slot, &o) in gamma.iter_mut().zip(&order) {
            *slot = copy[o];
        }
        Some(order)
    };
    let mut pushes = 0;
    for _ in 0..(4 * d + 4) {
        let mut clean = true;
        for i in 0..d.saturating_sub(1) {
            if gamma[i] - gamma[i + 1] < floor {
                let mid = 0.5 * (gamma[i] + gamma[i + 1]);
                gamma[i] = mid + 0.5 * floor;
                gamma[i + 1] = mid - 0.5 * floor;
                pushes += 1;
                clean = false;
            }
        }
        if clean {
            return Ok((perm, pushes));
        }
    }
    let pair = (0..d - 1).find(|&i| gamma[i] - gamma[i + 1] < floor).unwrap_or(0);
    Err(Error::GapUnderflow { step, pair: pair + 1 })
}

/// Euler-Maruyama for the eigenvalue SDE started at the strictly decreasing `sigma0`.
pub fn integrate_eigen_sde(sigma0: &[f64], horizon: f64, steps: usize, seed: u64) -> Result<Trajectories> {
    let mut rng = rng::stream(seed, 0);
    integrate_eigen_sde_with(sigma0, horizon, steps, &mut rng, &SdeOptions::default(), true)
}

/// As [`integrate_eigen_sde`] with an explicit generator and options. With
/// `record = false` only the final point is kept in `gamma`.
pub fn integrate_eigen_sde_with<R: Rng + ?Sized>(
    sigma0: &[f64],
    horizon: f64,
    steps: usize,
    rng: &mut R,
    opts: &SdeOptions,
    record: bool,
) -> Result<Trajectories> {
    validate_grid(horizon, steps)?;
    validate_start(sigma0)?;
    let d = sigma0.len();
    let dt = horizon / steps as f64;
    let diag_sd = 2.0 * dt.sqrt() * opts.noise;
    let floor = GAP_FLOOR_RELATIVE * (1.0 + sigma0[0].abs());
    let mut gamma = sigma0.to_vec();
    let mut next = vec![0.0; d];
    let mut path = Vec::with_capacity(if record { steps + 1 } else { 1 });
    let mut infima: Vec<f64> = sigma0.windows(2).map(|w| w[0] - w[1]).collect();
    if record {
        path.push(gamma.clone());
    }
    let mut repairs = 0;
    for step in 1..=steps {
        for i in 0..d {
            let drift: f64 = (0..d).filter(|&j| j != i).map(|j| 1.0 / (gamma[i] - gamma[j])).sum();
            next[i] = gamma[i] + diag_sd * rng::standard_normal(rng) + opts.repulsion * drift * dt;
        }
        let (_, pushed) = repair_gaps(&mut next, floor, step)?;
        if pushed > 0 {
            repairs += 1;
        }
        core::mem::swap(&mut gamma, &mut next);
        for (slot, w) in infima.iter_mut().zip(gamma.windows(2)) {
            *slot = slot.min(w[0] - w[1]);
        }
        if record {
            path.push(gamma.clone());
        }
    }
    if !record {
        path.push(gamma);
    }
    Ok(Trajectories {
        times: if record { grid(horizon, steps) } else { vec![horizon] },
        gamma: path,
        gap_infima: infima,
        sup_spectral: None,
        repairs,
    })
}

/// Per-eigenvalue comparison between the SDE and the matrix path at time `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenComparison {
    pub sde: MeanEstimate,
    pub matrix: MeanEstimate,
    pub mean_diff: f64,
    /// `sqrt(se_sde^2 + se_matrix^2)`.
    pub combined_stderr: f64,
    /// `var_sde / var_matrix - 1`.
    pub variance_ratio_minus_one: f64,
}

impl EigenComparison {
    /// `|mean_diff| <= z * combined_stderr`.
    pub fn within(&self, z: f64) -> bool {
        self.mean_diff.abs() <= z * self.combined_stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdeComparison {
    pub trials: usize,
    pub steps: usize,
    pub per_eigenvalue: Vec<EigenComparison>,
    /// `max_i |mean_diff_i|`.
    pub discrepancy: f64,
    /// Total gap-floor repairs across SDE trials.
    pub repairs: usize,
}

/// Weak cross-check between [`integrate_eigen_sde`] and the eigenvalues of
/// `diag(sigma0) + B(T)`. The two sides use independent stream families
/// (`derive_seed(seed, 1)` and `derive_seed(seed, 2)`).
pub fn compare_sde_vs_matrix<E: TrialExecutor + ?Sized>(
    exec: &E,
    sigma0: &[f64],
    horizon: f64,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<SdeComparison> {
    compare_sde_vs_matrix_with(exec, sigma0, horizon, steps, trials, seed, &SdeOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn compare_sde_vs_matrix_with<E: TrialExecutor + ?Sized>(
    exec: &E,
    sigma0: &[f64],
    horizon: f64,
    steps: usize,
    trials: usize,
    seed: u64,
    opts: &SdeOptions,
) -> Result<SdeComparison> {
    validate_grid(horizon, steps)?;
    validate_start(sigma0)?;
    if trials < 2 {
        return Err(Error::input("comparison needs at least two trials"));
    }
    let d = sigma0.len();
    let start = SymMatrix::from_diag(sigma0);
    let sde_seed = rng::derive_seed(seed, 1);
    let matrix_seed = rng::derive_seed(seed, 2);
    let sde_runs = exec.try_map_trials(trials, |t| {
        let mut rng = rng::stream(sde_seed, t as u64);
        let tr = integrate_eigen_sde_with(sigma0, horizon, steps, &mut rng, opts, false)?;
        Ok((tr.final_values().to_vec(), tr.repairs))
    })?;
    let matrix_runs = exec.try_map_trials(trials, |t| {
        let mut rng = rng::stream(matrix_seed, t as u64);
        let mut end = SymMatrix::zeros(d);
        walk_path(d, horizon, steps, &mut rng, |j, b| {
            if j == steps {
                end = b.clone();
            }
            Ok(())
        })?;
        eigvals_desc(&start.add(&end)?)
    })?;
    let repairs = sde_runs.iter().map(|(_, r)| r).sum();
    let per_eigenvalue: Vec<EigenComparison> = (0..d)
        .map(|i| {
            let a: Vec<f64> = sde_runs.iter().map(|(g, _)| g[i]).collect();
            let b: Vec<f64> = matrix_runs.iter().map(|g| g[i]).collect();
            let sde = MeanEstimate::of(&a);
            let matrix = MeanEstimate::of(&b);
            let vb = stats::sample_variance(&b);
            EigenComparison {
                mean_diff: sde.mean - matrix.mean,
                combined_stderr: (sde.stderr.powi(2) + matrix.stderr.powi(2)).sqrt(),
                variance_ratio_minus_one: if vb > 0.0 { stats::sample_variance(&a) / vb - 1.0 } else { 0.0 },
                sde,
                matrix,
            }
        })
        .collect();
    let discrepancy = per_eigenvalue.iter().map(|c| c.mean_diff.abs()).fold(0.0, f64::max);
    Ok(SdeComparison { trials, steps, per_eigenvalue, discrepancy, repairs })
}

/// Output of [`integrate_vector_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFlow {
    /// Eigenvector estimates at `T`, one per column, ordered like `gamma`.
    pub eigenvectors: Matrix,
    pub initial_eigenvectors: Matrix,
    pub trajectories: Trajectories,
    /// Largest `||U^T U - I||_F` seen after any step.
    pub max_orthonormality_defect: f64,
}

/// Euler-Maruyama for the joint eigenvalue / eigenvector flow of `M + B(t)`.
///
/// Each step draws one symmetric increment `dB` (in the current eigenbasis)
/// and applies
///
/// ```text
/// du_i = sum_{j != i} dB_ij / (gamma_i - gamma_j) u_j
///        - (kappa / 2) sum_{j != i} dt / (gamma_i - gamma_j)^2 u_i
/// ```
///
/// alongside the eigenvalue update that uses the diagonal of the same `dB`.
/// Columns are re-orthonormalized (modified Gram-Schmidt) after every step.
pub fn integrate_vector_flow(m: &SymMatrix, horizon: f64, steps: usize, seed: u64) -> Result<VectorFlow> {
    let mut rng = rng::stream(seed, 0);
    integrate_vector_flow_with(m, horizon, steps, &mut rng, &SdeOptions::default())
}

pub fn integrate_vector_flow_with<R: Rng + ?Sized>(
    m: &SymMatrix,
    horizon: f64,
    steps: usize,
    rng: &mut R,
    opts: &SdeOptions,
) -> Result<VectorFlow> {
    validate_grid(horizon, steps)?;
    let spectrum = eigh_desc(m)?;
    validate_start(&spectrum.eigenvalues)?;
    let d = m.dim();
    let dt = horizon / steps as f64;
    let floor = GAP_FLOOR_RELATIVE * (1.0 + spectrum.eigenvalues[0].abs());
    let mut gamma = spectrum.eigenvalues.clone();
    let mut u = spectrum.eigenvectors.clone();
    let mut path = Vec::with_capacity(steps + 1);
    path.push(gamma.clone());
    let mut repairs = 0;
    let mut worst = u.orthonormality_defect();
    for step in 1..=steps {
        let db = bm_increment(d, dt, rng).scale(opts.noise);
        let mut next_u = Matrix::zeros(d, d);
        let mut next_gamma = vec![0.0; d];
        for i in 0..d {
            let mut drift = 0.0;
            let mut damping = 0.0;
            for j in (0..d).filter(|&j| j != i) {
                let inv = 1.0 / (gamma[i] - gamma[j]);
                drift += inv;
                damping += inv * inv;
            }
            next_gamma[i] = gamma[i] + db.get(i, i) + opts.repulsion * drift * dt;
            let keep = 1.0 - 0.5 * opts.repulsion * damping * dt;
            for r in 0..d {
                let mut x = keep * u[(r, i)];
                for j in (0..d).filter(|&j| j != i) {
                    x += db.get(i, j) / (gamma[i] - gamma[j]) * u[(r, j)];
                }
                next_u.set(r, i, x);
            }
        }
        let (perm, pushed) = repair_gaps(&mut next_gamma, floor, step)?;
        if pushed > 0 {
            repairs += 1;
        }
        if let Some(order) = perm {
            let mut permuted = Matrix::zeros(d, d);
            for (new, &old) in order.iter().enumerate() {
                for r in 0..d {
                    permuted.set(r, new, next_u[(r, old)]);
                }
            }
            next_u = permuted;
        }
        next_u.orthonormalize_columns().map_err(|_| Error::GapUnderflow { step, pair: 0 })?;
        worst = worst.max(next_u.orthonormality_defect());
        u = next_u;
        gamma = next_gamma;
        path.push(gamma.clone());
    }
    Ok(VectorFlow {
        eigenvectors: u,
        initial_eigenvectors: spectrum.eigenvectors,
        trajectories: Trajectories {
            times: grid(horizon, steps),
            gap_infima: gap_infima(&path),
            gamma: path,
            sup_spectral: None,
            repairs,
        },
        max_orthonormality_defect: worst,
    })
}

/// Both sides of the Frobenius-distance integral identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrobeniusIntegralCheck {
    pub trials: usize,
    /// `E ||Psi(T) - Psi(0)||_F^2` with `Psi(t) = U(t) Lambda U(t)^T`.
    pub lhs: MeanEstimate,
    /// Martingale term plus drift term.
    pub rhs: MeanEstimate,
    /// `2 int sum_i sum_{j != i} (l_i - l_j)^2 / max(D_ij^2, eta_ij^2) dt`.
    pub martingale_term: MeanEstimate,
    /// `T int sum_i (sum_{j != i} (l_i - l_j) / max(D_ij^2, eta_ij^2))^2 dt`.
    pub drift_term: MeanEstimate,
    /// `sqrt(se_lhs^2 + se_rhs^2)`.
    pub combined_stderr: f64,
}

impl FrobeniusIntegralCheck {
    /// `lhs <= rhs + z * combined_stderr`.
    pub fn dominated(&self, z: f64) -> bool {
        self.lhs.mean <= self.rhs.mean + z * self.combined_stderr
    }
}

/// Clamp levels `eta_ij = (sigma_i - max(sigma_j, sigma_{k+1})) / 4` for
/// `i < j`, `i < k` (0-based), zero for `i >= k`, mirrored for `i > j`.
pub fn eta_matrix(sigma: &[f64], k: usize) -> Vec<Vec<f64>> {
    let d = sigma.len();
    let floor = sigma.get(k).copied();
    let mut eta = vec![vec![0.0; d]; d];
    for i in 0..d.min(k) {
        for j in (i + 1)..d {
            let competitor = floor.map_or(sigma[j], |f| sigma[j].max(f));
            let value = 0.25 * (sigma[i] - competitor);
            eta[i][j] = value;
            eta[j][i] = value;
        }
    }
    eta
}

/// Integrands of the two rhs terms at one time point.
fn integrands(gamma: &[f64], lambda: &[f64], eta: &[Vec<f64>]) -> (f64, f64) {
    let d = gamma.len();
    let mut martingale = 0.0;
    let mut drift = 0.0;
    for i in 0..d {
        let mut inner = 0.0;
        for j in (0..d).filter(|&j| j != i) {
            let num = lambda[i] - lambda[j];
            if num == 0.0 {
                continue;
            }
            let gap = gamma[i] - gamma[j];
            let den = (gap * gap).max(eta[i][j] * eta[i][j]);
            martingale += num * num / den;
            inner += num / den;
        }
        drift += inner * inner;
    }
    (martingale, drift)
}

/// Monte Carlo estimate of both sides of the Frobenius-distance integral
/// identity along matrix paths `M + B(t)`.
///
/// The rhs integrals use left-point sums on the grid. `M` must satisfy the
/// gap condition at cutoff `k` with `lambda1` from `target` and the
/// `(epsilon, delta)` implied by the horizon (gaps `1..=min(k, d-1)`).
pub fn mc_frobenius_integral_check<E: TrialExecutor + ?Sized>(
    exec: &E,
    m: &SymMatrix,
    target: &TargetSpectrum,
    horizon: f64,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<FrobeniusIntegralCheck> {
    validate_grid(horizon, steps)?;
    let d = m.dim();
    if target.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: target.dim() });
    }
    let k = target.k();
    let lambda = target.lambdas();
    let clean = eigh_desc(m)?;
    let sigma = &clean.eigenvalues;
    let threshold = assumption_threshold_for_horizon(d, k, lambda[0], horizon)
        .map_err(|e| Error::precondition(alloc::format!("gap condition undefined: {e}")))?;
    for i in 0..k.min(d - 1) {
        let g = sigma[i] - sigma[i + 1];
        if g < threshold {
            return Err(Error::precondition(alloc::format!(
                "gap {} is {g}, below the threshold {threshold} implied by T = {horizon}",
                i + 1
            )));
        }
    }
    let eta = eta_matrix(sigma, k);
    let psi0 = reconstruct(&clean.eigenvectors, lambda)?;
    let dt = horizon / steps as f64;
    let samples = exec.try_map_trials(trials, |t| {
        let mut rng: SimRng = rng::stream(seed, t as u64);
        let (mut mart, mut drift) = integrands(sigma, lambda, &eta);
        let mut end = SymMatrix::zeros(d);
        walk_path(d, horizon, steps, &mut rng, |j, b| {
            if j < steps {
                let g = eigvals_desc(&m.add(b)?)?;
                let (a, c) = integrands(&g, lambda, &eta);
                mart += a;
                drift += c;
            } else {
                end = b.clone();
            }
            Ok(())
        })?;
        let spectrum = eigh_desc(&m.add(&end)?)?;
        let psi = reconstruct(&spectrum.eigenvectors, lambda)?;
        let lhs = psi.sub(&psi0)?.frobenius_norm().powi(2);
        let martingale = 2.0 * mart * dt;
        let drift_term = horizon * drift * dt;
        Ok([lhs, martingale, drift_term, martingale + drift_term])
    })?;
    let column = |c: usize| -> Vec<f64> { samples.iter().map(|s| s[c]).collect() };
    let lhs = MeanEstimate::of(&column(0));
    let rhs = MeanEstimate::of(&column(3));
    Ok(FrobeniusIntegralCheck {
        trials,
        lhs,
        rhs,
        martingale_term: MeanEstimate::of(&column(1)),
        drift_term: MeanEstimate::of(&column(2)),
        combined_stderr: (lhs.stderr.powi(2) + rhs.stderr.powi(2)).sqrt(),
    })
}
