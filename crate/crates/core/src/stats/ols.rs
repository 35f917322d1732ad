//! Least squares through a Householder QR factorization.

use serde::Serialize;

use crate::error::{Error, Result};

/// Column `j` is declared dependent when its component orthogonal to the
/// preceding columns is below this fraction of its norm.
const RANK_TOL: f64 = 1e-10;

/// Dense design matrix, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    n: usize,
    columns: Vec<Vec<f64>>,
}

impl Design {
    /// Design with a leading column of ones followed by `covariates`.
    pub fn with_intercept(covariates: &[Vec<f64>]) -> Result<Self> {
        let n = covariates.first().map_or(0, Vec::len);
        if covariates.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("covariate columns differ in length"));
        }
        let mut columns = Vec::with_capacity(covariates.len() + 1);
        columns.push(vec![1.0; n]);
        columns.extend(covariates.iter().cloned());
        Ok(Design { n, columns })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("design columns must be non-empty and equal length"));
        }
        Ok(Design { n, columns })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn predict(&self, coefficients: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.columns
                    .iter()
                    .zip(coefficients)
                    .map(|(col, b)| col[i] * b)
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub r2: f64,
    pub n: usize,
    pub p: usize,
}

/// Ordinary least squares of `response` on `design`.
///
/// Standard errors use the unbiased variance `rss / (n - p)` and
/// `(XᵀX)⁻¹ = R⁻¹R⁻ᵀ`. `r2` is relative to the mean of the response, so the
/// design is expected to contain a constant column.
pub fn ols(design: &Design, response: &[f64]) -> Result<OlsFit> {
    let n = design.rows();
    let p = design.cols();
    if response.len() != n {
        return Err(Error::invalid(format!(
            "response has {} rows, design has {n}",
            response.len()
        )));
    }
    if n <= p {
        return Err(Error::invalid(format!(
            "need more observations ({n}) than coefficients ({p})"
        )));
    }
    if design.columns.iter().flatten().chain(response).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in regression input"));
    }

    let mut a = design.columns.clone();
    let mut qty = response.to_vec();
    let mut r = vec![vec![0.0; p]; p];
    for k in 0..p {
        let col_norm = a[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        let sub_norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let orig_norm = design.columns[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        if orig_norm == 0.0 || sub_norm <= RANK_TOL * orig_norm.max(col_norm) {
            return Err(Error::Collinear);
        }
        let alpha = if a[k][k] > 0.0 { -sub_norm } else { sub_norm };
        // v = x - alpha e1, reflect with H = I - 2 v vᵀ / vᵀv.
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vtv;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        };
        for col in a.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
        for (j, row) in r.iter_mut().enumerate().take(k + 1) {
            row[k] = a[k][j];
        }
    }

    // Back-substitution R β = (Qᵀy)[..p].
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r[i][j] * beta[j]).sum();
        beta[i] = (qty[i] - s) / r[i][i];
    }

    // R⁻¹, upper triangular.
    let mut rinv = vec![vec![0.0; p]; p];
    for j in 0..p {
        rinv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r[i][k] * rinv[k][j]).sum();
            rinv[i][j] = -s / r[i][i];
        }
    }

    let fitted = design.predict(&beta);
    let residuals: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|y| (y - mean) * (y - mean)).sum();
    let sigma2 = rss / (n - p) as f64;
    let std_errors = (0..p)
        .map(|i| (sigma2 * rinv[i].iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();
    let r2 = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(OlsFit {
        coefficients: beta,
        std_errors,
        residuals,
        rss,
        tss,
        r2,
        n,
        p,
    })
}
