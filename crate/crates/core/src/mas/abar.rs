use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{block_diag, DenseMatrix, DenseVector};

/// Structure of the lifted-command dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbarKind {
    /// Shift with the last entry held.
    Delay,
    /// Stochastic mixing with per-channel λ vectors.
    Lambda { lambdas: Vec<Vec<f64>> },
}

/// Lifted-command transition matrix `v_N⁺ = Ā v_N`, block-diagonal over
/// input channels with per-channel horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct PreviewAMatrix {
    pub matrix: DenseMatrix,
    pub horizons: Vec<usize>,
    pub kind: AbarKind,
}

fn delay_block(n: usize) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        a[(i, i + 1)] = 1.0;
    }
    a[(n, n)] = 1.0;
    a
}

fn lambda_block(lambdas: &[f64]) -> DenseMatrix {
    let n = lambdas.len();
    let mut a = DenseMatrix::zeros(n + 1, n + 1);
    if n == 0 {
        a[(0, 0)] = 1.0;
        return a;
    }
    for i in 0..=n {
        let r = i.min(n - 1);
        a[(i, 0)] = 1.0 - lambdas[0];
        for k in 1..=r {
            a[(i, k)] = lambdas[k - 1] - lambdas[k];
        }
        a[(i, r + 1)] = lambdas[r];
    }
    a
}

impl PreviewAMatrix {
    /// Single-channel shift-and-hold of size `(N+1)×(N+1)`.
    pub fn delay(horizon: usize) -> Self {
        Self::delay_multi(&[horizon])
    }

    pub fn delay_multi(horizons: &[usize]) -> Self {
        let blocks: Vec<DenseMatrix> = horizons.iter().map(|&n| delay_block(n)).collect();
        PreviewAMatrix { matrix: block_diag(&blocks), horizons: horizons.to_vec(), kind: AbarKind::Delay }
    }

    /// Constant-input dynamics for `m` channels (`Ā = I`, all horizons zero).
    pub fn identity(m: usize) -> Self {
        Self::delay_multi(&vec![0; m])
    }

    /// Single-channel mixing matrix for `λ₁…λ_N`; the horizon is `λ.len()`.
    pub fn lambda(lambdas: &[f64]) -> Result<Self> {
        Self::lambda_multi(&[lambdas.to_vec()])
    }

    pub fn lambda_multi(lambdas: &[Vec<f64>]) -> Result<Self> {
        if lambdas.iter().flatten().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::config("λ values must lie in [0, 1]"));
        }
        let blocks: Vec<DenseMatrix> = lambdas.iter().map(|l| lambda_block(l)).collect();
        Ok(PreviewAMatrix {
            matrix: block_diag(&blocks),
            horizons: lambdas.iter().map(Vec::len).collect(),
            kind: AbarKind::Lambda { lambdas: lambdas.to_vec() },
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_lambda(&self) -> bool {
        matches!(self.kind, AbarKind::Lambda { .. })
    }

    /// `lim Āᵗ` by repeated squaring to 1e-10.
    pub fn limit(&self) -> Result<DenseMatrix> {
        let mut p = self.matrix.clone();
        for _ in 0..64 {
            let next = &p * &p;
            let diff = (&next - &p).amax();
            p = next;
            if diff <= 1e-10 {
                return Ok(p);
            }
        }
        Err(Error::numerical("powers of the preview matrix did not converge"))
    }

    pub fn apply(&self, v: &DenseVector) -> DenseVector {
        &self.matrix * v
    }

    /// Offsets of each channel block within the lifted vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.horizons.len());
        let mut off = 0;
        for h in &self.horizons {
            out.push(off);
            off += h + 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_structure() {
        let a = PreviewAMatrix::delay(2).matrix;
        assert_eq!(a, DenseMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 0., 0., 1.]));
        assert_eq!(PreviewAMatrix::delay(0).matrix, DenseMatrix::identity(1, 1));
    }

    #[test]
    fn printed_lambda_matrix() {
        let a = PreviewAMatrix::lambda(&[0.9, 0.75, 0.45, 0.1]).unwrap().matrix;
        let want = DenseMatrix::from_row_slice(
            5,
            5,
            &[
                0.1, 0.9, 0., 0., 0., 0.1, 0.15, 0.75, 0., 0., 0.1, 0.15, 0.3, 0.45, 0., 0.1, 0.15, 0.3, 0.35, 0.1, 0.1,
                0.15, 0.3, 0.35, 0.1,
            ],
        );
        assert!((a - want).amax() < 1e-15);
    }

    #[test]
    fn lambda_limits_reduce() {
        assert_eq!(PreviewAMatrix::lambda(&[1.0; 3]).unwrap().matrix, PreviewAMatrix::delay(3).matrix);
        let zero = PreviewAMatrix::lambda(&[0.0; 3]).unwrap().matrix;
        for i in 0..4 {
            assert_eq!(zero.row(i).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0]);
        }
        assert!(PreviewAMatrix::lambda(&[1.5]).is_err());
    }

    #[test]
    fn limit_of_delay_holds_last_entry() {
        let l = PreviewAMatrix::delay(3).limit().unwrap();
        for i in 0..4 {
            assert_eq!(l[(i, 3)], 1.0);
            assert_eq!(l.row(i).sum(), 1.0);
        }
    }

    #[test]
    fn block_layout() {
        let a = PreviewAMatrix::delay_multi(&[1, 2]);
        assert_eq!(a.dim(), 5);
        assert_eq!(a.offsets(), vec![0, 2]);
        assert_eq!(a.matrix[(1, 1)], 1.0);
        assert_eq!(a.matrix[(2, 3)], 1.0);
        assert_eq!(a.matrix[(1, 2)], 0.0);
    }
}
