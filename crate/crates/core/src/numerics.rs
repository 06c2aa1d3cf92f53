//! Small dense least-squares solver.
//!
//! Every coefficient fit in the crate goes through [`ols_fit`]. Problems are
//! tiny (a handful of basis columns, at most ~10^5 observations) but badly
//! scaled: a `{s, s², 1}` basis over prompt lengths up to tens of thousands
//! spans many orders of magnitude. The solver therefore
//!
//! 1. divides every column by its largest absolute value ([`column_scale`]),
//! 2. factors the scaled matrix with Householder reflections (no normal
//!    equations), and
//! 3. estimates the 1-norm condition number of the triangular factor and
//!    refuses to solve above [`DEFAULT_CONDITION_THRESHOLD`].

use crate::error::NumericsError;

/// Condition estimate above which a design is reported as rank deficient.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e12;

/// Row-major design matrix, `rows >= cols >= 1`, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, NumericsError> {
        if cols == 0 || rows < cols {
            return Err(NumericsError::DimensionMismatch(format!(
                "need rows >= cols >= 1, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("design matrix"));
        }
        Ok(DesignMatrix { rows, cols, values })
    }

    /// Builds a matrix by evaluating `basis` on every observation.
    pub fn from_rows<I, R>(rows: I) -> Result<Self, NumericsError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let mut values = Vec::new();
        let mut cols = None;
        let mut n = 0;
        for row in rows {
            let row = row.as_ref();
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(NumericsError::DimensionMismatch(format!(
                        "row {n} has {} columns, expected {c}",
                        row.len()
                    )))
                }
                _ => {}
            }
            values.extend_from_slice(row);
            n += 1;
        }
        DesignMatrix::new(n, cols.unwrap_or(0), values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `X·beta`.
    pub fn apply(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Outcome of a least-squares fit.
///
/// `r_squared` is measured against the mean-only model and can be negative
/// for a fit worse than the mean (only possible without an intercept
/// column). When `y` is constant the baseline has zero variance; we report
/// `1.0` for an exact fit and `0.0` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// In the column order of the design matrix.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// Euclidean norm of `y - X·beta`.
    pub residual_norm: f64,
    /// 1-norm condition estimate of the column-scaled triangular factor.
    pub condition_estimate: f64,
}

/// Divides each column by its maximum absolute value.
///
/// Returns the scaled matrix and the per-column scales; coefficients fitted
/// on the scaled matrix map back via `beta_j = beta_scaled_j / scale_j`.
pub fn column_scale(x: &DesignMatrix) -> Result<(DesignMatrix, Vec<f64>), NumericsError> {
    let mut scales = vec![0.0_f64; x.cols];
    for i in 0..x.rows {
        for (j, s) in scales.iter_mut().enumerate() {
            *s = s.max(x.get(i, j).abs());
        }
    }
    if let Some(j) = scales.iter().position(|&s| s == 0.0) {
        return Err(NumericsError::ZeroColumn(j));
    }
    let values = x
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v / scales[k % x.cols])
        .collect();
    Ok((
        DesignMatrix {
            rows: x.rows,
            cols: x.cols,
            values,
        },
        scales,
    ))
}

/// Maps coefficients fitted on a [`column_scale`]d matrix back to the
/// original columns.
pub fn unscale(coefficients: &[f64], scales: &[f64]) -> Vec<f64> {
    coefficients
        .iter()
        .zip(scales)
        .map(|(b, s)| b / s)
        .collect()
}

/// Ordinary least squares with the default condition threshold.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<FitResult, NumericsError> {
    ols_fit_with_threshold(x, y, DEFAULT_CONDITION_THRESHOLD)
}

pub fn ols_fit_with_threshold(
    x: &DesignMatrix,
    y: &[f64],
    condition_threshold: f64,
) -> Result<FitResult, NumericsError> {
    if y.len() != x.rows {
        return Err(NumericsError::DimensionMismatch(format!(
            "design has {} rows but y has {} entries",
            x.rows,
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite("observations"));
    }
    let (scaled, scales) = match column_scale(x) {
        Ok(v) => v,
        Err(NumericsError::ZeroColumn(_)) => {
            return Err(NumericsError::RankDeficient {
                condition: f64::INFINITY,
                threshold: condition_threshold,
            })
        }
        Err(e) => return Err(e),
    };

    let (r, qty) = householder_qr(&scaled, y);
    let n = x.cols;
    let condition = triangular_condition_1norm(&r, n);
    if condition.is_nan() || condition > condition_threshold {
        return Err(NumericsError::RankDeficient {
            condition,
            threshold: condition_threshold,
        });
    }
    let beta_scaled = back_substitute(&r, n, &qty[..n]);
    let coefficients = unscale(&beta_scaled, &scales);

    let fitted = x.apply(&coefficients);
    let ss_res: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };

    Ok(FitResult {
        coefficients,
        r_squared,
        residual_norm: ss_res.sqrt(),
        condition_estimate: condition,
    })
}

/// Householder QR of `a` (m×n, m ≥ n), applied in place to a copy of `y`.
///
/// Returns the upper n×n triangle of R (row-major) and `Qᵀy`.
fn householder_qr(a: &DesignMatrix, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (a.rows, a.cols);
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j)).collect())
        .collect();
    let mut qty = y.to_vec();

    for k in 0..n {
        let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= f * vi;
            }
        };
        for col in cols.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
        cols[k][k] = alpha;
        for v in cols[k][k + 1..].iter_mut() {
            *v = 0.0;
        }
    }

    let mut r = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            r[i * n + j] = cols[j][i];
        }
    }
    (r, qty)
}

fn back_substitute(r: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| r[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / r[i * n + i];
    }
    x
}

/// `‖R‖₁·‖R⁻¹‖₁` for an upper-triangular R; infinite when singular.
fn triangular_condition_1norm(r: &[f64], n: usize) -> f64 {
    if (0..n).any(|i| r[i * n + i] == 0.0) {
        return f64::INFINITY;
    }
    let norm1 = |m: &[f64]| {
        (0..n)
            .map(|j| (0..n).map(|i| m[i * n + j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    // invert column by column
    let mut inv = vec![0.0; n * n];
    for j in 0..n {
        let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
        let col = back_substitute(r, n, &e);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    let c = norm1(r) * norm1(&inv);
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}
