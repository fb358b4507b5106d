//! Dense linear algebra helpers plus the LP and QP sub-solvers used by the
//! set builders and governors.

mod lp;
mod qp;

pub use lp::{solve_lp, LpOutcome, LpProblem};
pub use qp::{solve_qp, solve_qp_from, QpOutcome, QpProblem};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type DenseVector = DVector<f64>;

/// Shared numerical tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub redundancy: f64,
    pub symmetry: f64,
}

pub const TOL: Tolerances = Tolerances {
    feasibility: 1e-8,
    redundancy: 1e-9,
    symmetry: 1e-10,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}

/// Builds a matrix from row-major nested rows. Empty input yields a 0x0 matrix.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DenseMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::config("ragged matrix rows"));
    }
    let m = DenseMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

/// Row-major nested representation, the inverse of [`matrix_from_rows`].
pub fn matrix_to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn ensure_finite(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::config(format!("{what} contains non-finite entries")))
    }
}

/// exp(M t) by scaling and squaring with a truncated Taylor series.
pub fn matrix_exponential(m: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::config(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let scaled = m * t;
    let norm = scaled.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let x = scaled / 2f64.powi(squarings as i32);

    let mut result = DenseMatrix::identity(n, n);
    let mut term = DenseMatrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &x / k as f64;
        result += &term;
        let term_norm = term.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if term_norm <= f64::EPSILON * 1e-3 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    ensure_finite(&result, "matrix exponential").map_err(|e| Error::numerical(e.to_string()))?;
    Ok(result)
}

/// Eigenvalues of a real square matrix (real Schur form via the QR algorithm).
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<num_complex::Complex64>> {
    if !m.is_square() {
        return Err(Error::config("eigenvalues need a square matrix"));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = m
        .clone()
        .try_schur(1e-12, 10_000)
        .ok_or_else(|| Error::numerical("real Schur iteration did not converge"))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_radius(m: &DenseMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Horizontal concatenation of matrices with equal row counts.
pub fn hstack(blocks: &[&DenseMatrix]) -> DenseMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DenseMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[DenseMatrix]) -> DenseMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DenseMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

#[cfg(test)]
pub(crate) fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
