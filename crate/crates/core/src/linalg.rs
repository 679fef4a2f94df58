//! Dense symmetric matrices and the deterministic symmetric eigensolver that
//! every other module builds on.
//!
//! Storage is row-major `Vec<f64>`. [`SymMatrix`] is exactly (bitwise)
//! symmetric and finite by construction; [`Matrix`] is a general dense
//! matrix used for eigenvector bases.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Index;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Relative asymmetry accepted (and averaged away) by the checked constructors.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Entries at or below this magnitude are skipped when fixing eigenvector signs.
pub const SIGN_EPS: f64 = 1e-12;

const MAX_QL_ITERATIONS: usize = 100;

/// A dense real symmetric `d x d` matrix.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = value;
        }
        m
    }

    /// Diagonal matrix. Panics on non-finite entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        assert!(diag.iter().all(|x| x.is_finite()), "non-finite diagonal entry");
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * dim + i] = x;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Small asymmetry (at most `1e-9 * (1 + max|entry|)`) is removed by
    /// averaging with the transpose; anything larger is rejected, as are
    /// non-finite entries.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(alloc::format!(
                "non-finite entry at ({}, {})",
                pos / dim.max(1),
                pos % dim.max(1)
            )));
        }
        let max_abs = data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let tol = SYMMETRY_TOLERANCE * (1.0 + max_abs);
        let mut m = SymMatrix { dim, data };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = m.data[i * dim + j];
                let b = m.data[j * dim + i];
                if (a - b).abs() > tol {
                    return Err(Error::Input(alloc::format!("matrix is not symmetric at ({i}, {j}): {a} vs {b}")));
                }
                let avg = 0.5 * (a + b);
                m.data[i * dim + j] = avg;
                m.data[j * dim + i] = avg;
            }
        }
        Ok(m)
    }

    /// Builds a matrix from a list of rows (see [`SymMatrix::from_row_major`]).
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Input(alloc::format!("row {i} has {} entries, expected {dim}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    /// Fills the upper triangle from `f(i, j)` (`i <= j`) and mirrors it.
    ///
    /// `f` must return finite values; this is the unchecked path used for
    /// internally generated matrices.
    pub(crate) fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let x = f(i, j);
                debug_assert!(x.is_finite());
                m.data[i * dim + j] = x;
                m.data[j * dim + i] = x;
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks(self.dim.max(1)).take(self.dim)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Adds `other` in place. Both operands are symmetric, so the result is too.
    pub(crate) fn add_assign(&mut self, other: &SymMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&self, factor: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|x| x * factor).collect() }
    }

    fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> Result<SymMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let data: Vec<f64> = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("overflow in matrix arithmetic"));
        }
        Ok(SymMatrix { dim: self.dim, data })
    }

    /// `self * self`, symmetrized. Used for projector checks.
    pub fn square(&self) -> SymMatrix {
        let d = self.dim;
        Self::from_upper_fn(d, |i, j| (0..d).map(|k| self.get(i, k) * self.get(k, j)).sum())
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

/// General dense row-major matrix. Eigenvector bases are stored column-wise.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.cols.max(1)).take(self.rows)).finish()
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: c.len() });
            }
            for (i, &x) in c.iter().enumerate() {
                m.data[i * cols + j] = x;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A^T A` as a symmetric matrix.
    pub fn gram(&self) -> SymMatrix {
        let (m, d) = (self.rows, self.cols);
        let mut acc = vec![0.0; d * d];
        for r in 0..m {
            let row = &self.data[r * d..(r + 1) * d];
            for i in 0..d {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                let dst = &mut acc[i * d..(i + 1) * d];
                for j in i..d {
                    dst[j] += a * row[j];
                }
            }
        }
        SymMatrix::from_upper_fn(d, |i, j| acc[i * d + j])
    }

    /// `||V^T V - I||_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut total = 0.0;
        for a in 0..self.cols {
            for b in 0..self.cols {
                let dot: f64 =
                    (0..self.rows).map(|i| self.data[i * self.cols + a] * self.data[i * self.cols + b]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                total += (dot - target) * (dot - target);
            }
        }
        total.sqrt()
    }

    pub(crate) fn negate_column(&mut self, j: usize) {
        for i in 0..self.rows {
            self.data[i * self.cols + j] = -self.data[i * self.cols + j];
        }
    }

    /// Modified Gram-Schmidt on the columns, in column order.
    ///
    /// Fails if a column becomes numerically dependent on its predecessors.
    pub fn orthonormalize_columns(&mut self) -> Result<()> {
        let (n, c) = (self.rows, self.cols);
        for j in 0..c {
            for p in 0..j {
                let dot: f64 = (0..n).map(|i| self.data[i * c + p] * self.data[i * c + j]).sum();
                for i in 0..n {
                    self.data[i * c + j] -= dot * self.data[i * c + p];
                }
            }
            let norm = (0..n).map(|i| self.data[i * c + j].powi(2)).sum::<f64>().sqrt();
            if !(norm > 1e-300) || !norm.is_finite() {
                return Err(Error::input(alloc::format!("column {j} is linearly dependent")));
            }
            for i in 0..n {
                self.data[i * c + j] /= norm;
            }
        }
        Ok(())
    }

    /// Flips each column so its first entry above [`SIGN_EPS`] is positive.
    pub fn apply_sign_convention(&mut self) {
        for j in 0..self.cols {
            let lead = (0..self.rows).map(|i| self.data[i * self.cols + j]).find(|x| x.abs() > SIGN_EPS);
            if matches!(lead, Some(x) if x < 0.0) {
                self.negate_column(j);
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Descending eigenvalues with matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Rebuilds `V diag(eigenvalues) V^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        reconstruct(&self.eigenvectors, &self.eigenvalues).expect("spectrum is square")
    }
}

/// Eigendecomposition with eigenvalues in non-increasing order.
///
/// Householder tridiagonalization followed by implicit QL (the EISPACK
/// `tred2`/`tql2` pair). Ties keep the solver's order; each eigenvector is
/// then signed so its first entry above [`SIGN_EPS`] is non-negative.
pub fn eigh_desc(m: &SymMatrix) -> Result<Spectrum> {
    validate_finite(m)?;
    let (values, vectors) = symmetric_eigen(m, true)?;
    let mut vectors = vectors.expect("vectors requested");
    let order = descending_order(&values);
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let d = m.dim();
    let mut sorted = Matrix::zeros(d, d);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..d {
            sorted.data[i * d + new] = vectors.data[i * d + old];
        }
    }
    vectors = sorted;
    vectors.apply_sign_convention();
    Ok(Spectrum { eigenvalues, eigenvectors: vectors })
}

/// Eigenvalues only, non-increasing. Same solver as [`eigh_desc`] without
/// eigenvector accumulation.
pub fn eigvals_desc(m: &SymMatrix) -> Result<Vec<f64>> {
    validate_finite(m)?;
    let (values, _) = symmetric_eigen(m, false)?;
    Ok(descending_order(&values).into_iter().map(|i| values[i]).collect())
}

/// `V diag(lambdas) V^T`, symmetrized.
///
/// When every `lambda` is equal the result is exactly `lambda * I`, which is
/// what any orthonormal `V` gives in exact arithmetic.
pub fn reconstruct(v: &Matrix, lambdas: &[f64]) -> Result<SymMatrix> {
    let d = v.rows;
    if v.cols != lambdas.len() {
        return Err(Error::DimensionMismatch { expected: v.cols, found: lambdas.len() });
    }
    if v.cols != d {
        return Err(Error::DimensionMismatch { expected: d, found: v.cols });
    }
    if lambdas.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("non-finite target eigenvalue"));
    }
    if let Some(&first) = lambdas.first() {
        if lambdas.iter().all(|&x| x == first) {
            return Ok(SymMatrix::scaled_identity(d, first));
        }
    }
    let mut acc = vec![0.0; d * d];
    for (k, &lam) in lambdas.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        for i in 0..d {
            let vik = lam * v.data[i * d + k];
            if vik == 0.0 {
                continue;
            }
            for j in i..d {
                acc[i * d + j] += vik * v.data[j * d + k];
            }
        }
    }
    Ok(SymMatrix::from_upper_fn(d, |i, j| acc[i * d + j]))
}

/// `||A - B||_F`.
pub fn frobenius_distance(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// `max |eigenvalue|`.
pub fn spectral_norm(a: &SymMatrix) -> Result<f64> {
    let values = eigvals_desc(a)?;
    Ok(match (values.first(), values.last()) {
        (Some(&top), Some(&bottom)) => top.abs().max(bottom.abs()),
        _ => 0.0,
    })
}

/// Orthogonal projector `V_k V_k^T` onto the span of the first `k` columns.
pub fn column_projector(v: &Matrix, k: usize) -> Result<SymMatrix> {
    if k > v.cols {
        return Err(Error::input(alloc::format!("k = {k} exceeds {} columns", v.cols)));
    }
    let mut lambdas = vec![0.0; v.cols];
    lambdas[..k].iter_mut().for_each(|x| *x = 1.0);
    reconstruct(v, &lambdas)
}

fn validate_finite(m: &SymMatrix) -> Result<()> {
    if m.data.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::input("matrix has non-finite entries"))
    }
}

/// Stable descending order: equal values keep their original order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(core::cmp::Ordering::Equal));
    order
}

/// Returns eigenvalues in solver order and, optionally, the matching
/// eigenvector columns.
fn symmetric_eigen(m: &SymMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>)> {
    let n = m.dim();
    match n {
        0 => return Ok((Vec::new(), want_vectors.then(|| Matrix::zeros(0, 0)))),
        1 => return Ok((vec![m.get(0, 0)], want_vectors.then(|| Matrix::identity(1)))),
        _ => {}
    }
    let mut v = m.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e, want_vectors);
    tridiagonal_ql(n, &mut d, &mut e, want_vectors.then_some(&mut v[..]))?;
    Ok((d, want_vectors.then_some(Matrix { rows: n, cols: n, data: v })))
}

/// Householder reduction of the symmetric matrix held in `v` to tridiagonal
/// form. On return `d` holds the diagonal and `e[1..]` the sub-diagonal; if
/// `accumulate` is set `v` holds the orthogonal transformation.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for j in 0..n {
            d[j] = v[j * n + j];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..(n - 1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iteration on the tridiagonal matrix `(d, e)`.
fn tridiagonal_ql(n: usize, d: &mut [f64], e: &mut [f64], mut v: Option<&mut [f64]>) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence { dim: n });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let row = k * n;
                            h = v[row + i + 1];
                            v[row + i + 1] = s * v[row + i] + c * h;
                            v[row + i] = c * v[row + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence { dim: n });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_spectrum() {
        let s = eigh_desc(&SymMatrix::identity(3)).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert!(s.eigenvectors.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn two_by_two_by_hand() {
        let m = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let s = eigh_desc(&m).unwrap();
        assert!(close(s.eigenvalues[0], 3.0, 1e-12));
        assert!(close(s.eigenvalues[1], 1.0, 1e-12));
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let v = &s.eigenvectors;
        assert!(close(v[(0, 0)], r, 1e-12) && close(v[(1, 0)], r, 1e-12));
        assert!(close(v[(0, 1)], r, 1e-12) && close(v[(1, 1)], -r, 1e-12));
    }

    #[test]
    fn diagonal_gives_permuted_identity() {
        let s = eigh_desc(&SymMatrix::from_diag(&[2.0, 5.0, 0.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![5.0, 2.0, 0.0]);
        assert_eq!(s.eigenvectors.column(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(s.eigenvectors.column(1), vec![1.0, 0.0, 0.0]);
        assert_eq!(s.eigenvectors.column(2), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn eigenvalues_only_path_matches() {
        let m = SymMatrix::from_rows(&[
            [4.0, 1.0, -2.0, 0.5],
            [1.0, 3.0, 0.0, 1.0],
            [-2.0, 0.0, 1.0, 0.25],
            [0.5, 1.0, 0.25, -1.0],
        ])
        .unwrap();
        let full = eigh_desc(&m).unwrap().eigenvalues;
        let only = eigvals_desc(&m).unwrap();
        for (a, b) in full.iter().zip(&only) {
            assert!(close(*a, *b, 1e-12), "{a} vs {b}");
        }
        assert!(close(only.iter().sum::<f64>(), m.trace(), 1e-12));
    }

    #[test]
    fn reconstruct_examples() {
        let r = reconstruct(&Matrix::identity(3), &[5.0, 2.0, 0.0]).unwrap();
        assert_eq!(r, SymMatrix::from_diag(&[5.0, 2.0, 0.0]));

        let m = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let v = eigh_desc(&m).unwrap().eigenvectors;
        let r = reconstruct(&v, &[5.0, 0.0]).unwrap();
        for x in r.as_slice() {
            assert!(close(*x, 2.5, 1e-12));
        }
        assert!(matches!(reconstruct(&v, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn frobenius_examples() {
        let a = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, 3.0]]).unwrap();
        assert_eq!(frobenius_distance(&a, &a).unwrap(), 0.0);
        let d = frobenius_distance(&SymMatrix::from_diag(&[1.0, 0.0]), &SymMatrix::zeros(2)).unwrap();
        assert_eq!(d, 1.0);
        let i2 = SymMatrix::identity(2);
        let d = frobenius_distance(&i2, &i2.scale(-1.0)).unwrap();
        assert!(close(d, 8f64.sqrt(), 1e-15));
        assert!(frobenius_distance(&i2, &SymMatrix::zeros(3)).is_err());
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&SymMatrix::from_diag(&[3.0, -5.0])).unwrap(), 5.0);
        assert_eq!(spectral_norm(&SymMatrix::identity(4)).unwrap(), 1.0);
        let swap = SymMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(close(spectral_norm(&swap).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn construction_symmetrizes_or_rejects() {
        let m = SymMatrix::from_rows(&[[1.0, 2.0 + 1e-12], [2.0, 1.0]]).unwrap();
        assert_eq!(m.get(0, 1).to_bits(), m.get(1, 0).to_bits());
        assert!(SymMatrix::from_rows(&[[1.0, 2.1], [2.0, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn sign_convention_on_leading_entry() {
        let m = SymMatrix::from_rows(&[[1.0, -3.0], [-3.0, 1.0]]).unwrap();
        let s = eigh_desc(&m).unwrap();
        for j in 0..2 {
            let col = s.eigenvectors.column(j);
            let lead = col.iter().find(|x| x.abs() > SIGN_EPS).unwrap();
            assert!(*lead >= 0.0);
        }
    }

    #[test]
    fn uniform_lambdas_reconstruct_exactly() {
        let m = SymMatrix::from_rows(&[[2.0, 1.0, 0.0], [1.0, 2.0, 0.3], [0.0, 0.3, 1.0]]).unwrap();
        let v = eigh_desc(&m).unwrap().eigenvectors;
        assert_eq!(reconstruct(&v, &[1.0; 3]).unwrap(), SymMatrix::identity(3));
    }
}
