//! Dataset preprocessing, covariance construction and gap reports.
//!
//! [`preprocess`] runs min-max normalization, then scales every row by one
//! common constant so the largest row norm is one, then centers columns.
//! Centering can push row norms back above one; the result records the
//! norm both before and after so callers can see the effect on the
//! sensitivity assumption.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::bounds::{check_gaps, reported_threshold_for_dim, ReportedThreshold};
use crate::error::{Error, Result};
use crate::linalg::{eigvals_desc, Matrix, SymMatrix};
use crate::mechanism::{PrivacyParams, ROW_NORM_SLACK};

/// A rectangular table of reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: usize,
    pub data: Vec<f64>,
}

impl Table {
    pub fn new(columns: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let cols = columns.len();
        if cols == 0 {
            if data.is_empty() {
                return Ok(Table { columns, rows: 0, data });
            }
            return Err(Error::input("table has data but no columns"));
        }
        if !data.len().is_multiple_of(cols) {
            return Err(Error::input(alloc::format!("{} values do not fill rows of {cols} columns", data.len())));
        }
        Ok(Table { rows: data.len() / cols, columns, data })
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }
}

/// Which pipeline stages have been applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Provenance {
    pub minmax_normalized: bool,
    pub row_scaled: bool,
    pub centered: bool,
}

/// Output of [`preprocess`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetMatrix {
    pub rows: usize,
    pub cols: usize,
    #[serde(skip)]
    pub data: Vec<f64>,
    pub provenance: Provenance,
    /// Largest row norm right after row scaling.
    pub max_row_norm: f64,
    /// Largest row norm after centering.
    pub max_row_norm_centered: f64,
    /// Common row multiplier, `1 / max row norm` measured after min-max.
    pub scale_constant: f64,
    pub warnings: Vec<String>,
}

impl DatasetMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

fn max_row_norm(data: &[f64], cols: usize) -> f64 {
    data.chunks(cols).map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

/// Min-max normalize, row-scale, center.
pub fn preprocess(table: &Table) -> Result<DatasetMatrix> {
    let (rows, cols) = (table.rows, table.cols());
    if rows == 0 || cols == 0 {
        return Err(Error::input("preprocessing needs at least one row and one column"));
    }
    if let Some(pos) = table.data.iter().position(|x| !x.is_finite()) {
        return Err(Error::input(alloc::format!(
            "non-finite value at row {}, column {}",
            pos / cols + 1,
            pos % cols + 1
        )));
    }
    let mut data = table.data.clone();
    let mut warnings = Vec::new();
    let mut provenance = Provenance::default();

    for j in 0..cols {
        let column = (0..rows).map(|i| data[i * cols + j]);
        let lo = column.clone().fold(f64::INFINITY, f64::min);
        let hi = column.fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        for i in 0..rows {
            let x = &mut data[i * cols + j];
            *x = if range > 0.0 { (*x - lo) / range } else { 0.0 };
        }
        if !(range > 0.0) {
            warnings.push(alloc::format!("column '{}' has zero range and was set to 0", table.columns[j]));
        }
    }
    provenance.minmax_normalized = true;

    let norm = max_row_norm(&data, cols);
    let scale_constant = if norm > 0.0 {
        1.0 / norm
    } else {
        warnings.push("all rows are zero after min-max; row scale left at 1".into());
        1.0
    };
    data.iter_mut().for_each(|x| *x *= scale_constant);
    provenance.row_scaled = true;
    let scaled_norm = max_row_norm(&data, cols);

    for j in 0..cols {
        let mean = (0..rows).map(|i| data[i * cols + j]).sum::<f64>() / rows as f64;
        for i in 0..rows {
            data[i * cols + j] -= mean;
        }
    }
    provenance.centered = true;
    let centered_norm = max_row_norm(&data, cols);
    if centered_norm > 1.0 + ROW_NORM_SLACK {
        warnings.push(alloc::format!(
            "max row norm after centering is {centered_norm}, above 1; the unit-sensitivity calibration no longer holds"
        ));
    }

    Ok(DatasetMatrix {
        rows,
        cols,
        data,
        provenance,
        max_row_norm: scaled_norm,
        max_row_norm_centered: centered_norm,
        scale_constant,
        warnings,
    })
}

/// `A^T A`.
pub fn covariance(a: &DatasetMatrix) -> Result<SymMatrix> {
    Ok(Matrix::from_row_major(a.rows, a.cols, a.data.clone())?.gram())
}

/// One `k` of a [`DatasetGapReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRowReport {
    pub k: usize,
    /// `sigma_k - sigma_{k+1}`; absent for `k = d`.
    pub gap: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
    /// `sqrt(sum_{i<=k} sigma_i^2) / sqrt(sum_i sigma_i^2)`.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetGapReport {
    pub eigenvalues: Vec<f64>,
    pub gaps: Vec<f64>,
    pub lambda1: f64,
    pub rows: Vec<GapRowReport>,
    /// Largest `k` for which the gap condition holds, zero if none.
    pub satisfied_up_to: usize,
    /// Published threshold for a dataset of the same dimension, if any.
    pub reported: Option<ReportedThreshold>,
    pub warnings: Vec<String>,
}

/// Eigenvalues, gaps, per-`k` thresholds (with `lambda1 = sigma_1`) and
/// cumulative energy of a covariance matrix.
pub fn dataset_gap_analysis(m: &SymMatrix, privacy: &PrivacyParams) -> Result<DatasetGapReport> {
    let sigma = eigvals_desc(m)?;
    let d = sigma.len();
    if d == 0 {
        return Err(Error::input("empty matrix"));
    }
    let lambda1 = sigma[0];
    let gaps: Vec<f64> = sigma.windows(2).map(|w| w[0] - w[1]).collect();
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    let mut partial = 0.0;
    let energies: Vec<f64> = sigma
        .iter()
        .map(|s| {
            partial += s * s;
            if total > 0.0 {
                (partial / total).sqrt()
            } else {
                1.0
            }
        })
        .collect();

    let mut warnings = Vec::new();
    let gap_report = if d >= 2 && lambda1 > 0.0 {
        Some(check_gaps(&sigma, 1, lambda1, privacy)?)
    } else {
        warnings.push(String::from("gap condition undefined: need d >= 2 and sigma_1 > 0"));
        None
    };
    let rows = (1..=d)
        .map(|k| {
            let (threshold, pass) = match &gap_report {
                Some(r) if k < d => (Some(r.threshold_per_k[k - 1]), Some(r.per_k_pass[k - 1])),
                _ => (None, None),
            };
            GapRowReport { k, gap: gaps.get(k - 1).copied(), threshold, pass, energy: energies[k - 1] }
        })
        .collect();
    Ok(DatasetGapReport {
        satisfied_up_to: gap_report.as_ref().map_or(0, |r| r.satisfied_up_to),
        eigenvalues: sigma,
        gaps,
        lambda1,
        rows,
        reported: reported_threshold_for_dim(d).copied(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(cols: usize, data: &[f64]) -> Table {
        let names = (0..cols).map(|j| alloc::format!("c{j}")).collect();
        Table::new(names, data.to_vec()).unwrap()
    }

    #[test]
    fn single_column_pipeline() {
        let a = preprocess(&table(1, &[0.0, 5.0, 10.0])).unwrap();
        assert_eq!(a.data, vec![-0.5, 0.0, 0.5]);
        assert_eq!(a.scale_constant, 1.0);
        assert_eq!(a.provenance, Provenance { minmax_normalized: true, row_scaled: true, centered: true });
        assert!(a.warnings.is_empty());
    }

    #[test]
    fn identity_rows_pipeline() {
        let a = preprocess(&table(2, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(a.data, vec![0.5, -0.5, -0.5, 0.5]);
        assert_eq!(a.max_row_norm, 1.0);
    }

    #[test]
    fn constant_column_is_zeroed_with_warning() {
        let a = preprocess(&table(2, &[3.0, 1.0, 3.0, 2.0])).unwrap();
        assert_eq!(a.row(0)[0], 0.0);
        assert_eq!(a.row(1)[0], 0.0);
        assert_eq!(a.warnings.len(), 1);
        assert!(preprocess(&table(2, &[])).is_err());
    }

    #[test]
    fn covariance_of_rows() {
        let eye = DatasetMatrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 0.0, 0.0, 1.0],
            provenance: Provenance::default(),
            max_row_norm: 1.0,
            max_row_norm_centered: 1.0,
            scale_constant: 1.0,
            warnings: vec![],
        };
        assert_eq!(covariance(&eye).unwrap(), SymMatrix::identity(2));
        let one = DatasetMatrix { rows: 1, data: vec![1.0, 2.0], ..eye };
        let m = covariance(&one).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn rank_one_report() {
        let p = PrivacyParams::new(1.0, 0.01).unwrap();
        let r = dataset_gap_analysis(&SymMatrix::from_diag(&[5.0, 0.0, 0.0]), &p).unwrap();
        assert_eq!(r.rows[0].energy, 1.0);
        assert_eq!(r.gaps, vec![5.0, 0.0]);
        assert_eq!(r.rows[2].gap, None);
        assert_eq!(r.rows[2].energy, 1.0);
    }

    #[test]
    fn report_matches_gap_checker() {
        let p = PrivacyParams::new(1.0, 1.25 / core::f64::consts::E).unwrap();
        let sigma = [100.0, 50.0, 0.0];
        let r = dataset_gap_analysis(&SymMatrix::from_diag(&sigma), &p).unwrap();
        for k in 1..3 {
            let direct = check_gaps(&sigma, k, 100.0, &p).unwrap();
            assert_eq!(r.rows[k - 1].threshold, Some(direct.threshold));
            assert_eq!(r.rows[k - 1].pass, Some(direct.satisfied));
        }
        assert_eq!(r.satisfied_up_to, check_gaps(&sigma, 1, 100.0, &p).unwrap().satisfied_up_to);
    }
}
