use std::sync::Arc;

use super::{check_len, holds, initial_plan, slack, Governor, GovernorKind, StepInput, StepOutput};
use crate::error::{Error, Result};
use crate::mas::AdmissibleSet;
use crate::numerics::{DenseMatrix, DenseVector};

/// `M_i`: keeps entries `0..=n_i` of a horizon-`n_q` lifted vector and
/// repeats entry `n_i` after them.
pub fn horizon_projection(n_i: usize, n_q: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n_q + 1, n_q + 1, |r, c| if c == r.min(n_i) { 1.0 } else { 0.0 })
}

struct Member {
    horizon: usize,
    projection: DenseMatrix,
}

/// Bank of single-input PRGs with nested horizons sharing the longest-horizon
/// set, fused by the largest κ (ties go to the longest horizon).
pub struct MultiHorizonGovernor {
    set: Arc<AdmissibleSet>,
    members: Vec<Member>,
    /// Column `n` holds `Σ_{k>=n} H_v[:, k]`, so `H_v M_i x` is a prefix of
    /// `H_v x` plus one scaled column.
    tail_sums: DenseMatrix,
    v_n: DenseVector,
}

impl std::fmt::Debug for MultiHorizonGovernor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiHorizonGovernor")
            .field("horizons", &self.member_horizons())
            .field("v_n", &self.v_n)
            .finish()
    }
}

impl MultiHorizonGovernor {
    pub fn new(set: Arc<AdmissibleSet>, horizons: &[usize], x0: &DenseVector, r0: &DenseVector) -> Result<Self> {
        if set.a_bar.horizons.len() != 1 || set.n_disturbance_params() > 0 {
            return Err(Error::config("Multi-N PRG needs a single-input lifted set"));
        }
        let n_q = set.a_bar.horizons[0];
        if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("Multi-N horizons must be non-empty and strictly increasing"));
        }
        if *horizons.last().unwrap() != n_q {
            return Err(Error::config(format!(
                "longest Multi-N horizon {} does not match the set horizon {n_q}",
                horizons.last().unwrap()
            )));
        }
        let members = horizons
            .iter()
            .map(|&n| Member { horizon: n, projection: horizon_projection(n, n_q) })
            .collect();
        let mut tail_sums = set.hv.clone();
        for c in (0..n_q).rev() {
            let next = tail_sums.column(c + 1).clone_owned();
            tail_sums.column_mut(c).axpy(1.0, &next, 1.0);
        }
        check_len("initial reference", r0, set.n_params())?;
        let v_n = initial_plan(&set, x0, r0, None)?;
        Ok(MultiHorizonGovernor { set, members, tail_sums, v_n })
    }

    pub fn member_horizons(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.horizon).collect()
    }

    pub fn projections(&self) -> Vec<&DenseMatrix> {
        self.members.iter().map(|m| &m.projection).collect()
    }

    pub fn set(&self) -> &AdmissibleSet {
        &self.set
    }
}

impl Governor for MultiHorizonGovernor {
    fn kind(&self) -> GovernorKind {
        GovernorKind::MultiN
    }

    fn horizons(&self) -> Vec<usize> {
        self.set.a_bar.horizons.clone()
    }

    fn step(&mut self, input: &StepInput) -> Result<StepOutput> {
        check_len("state", input.x, self.set.n_states())?;
        check_len("lifted reference", input.r, self.set.n_params())?;
        let base = self.set.a_bar.apply(&self.v_n);
        let dir = input.r - &base;
        let s = slack(&self.set, input.x, None);
        let zero_dir = dir.iter().all(|d| *d == 0.0);
        let q = self.members.len();
        let rows = self.set.hv.nrows();
        let mut kappas = Vec::with_capacity(q);
        let mut best = 0;
        let mut head_base = DenseVector::zeros(rows);
        let mut head_dir = DenseVector::zeros(rows);
        let mut next_col = 0;
        for (i, m) in self.members.iter().enumerate() {
            let kappa = if zero_dir {
                1.0
            } else if i + 1 == q {
                super::kappa_along(&self.set.hv, &s, &base, &dir)
            } else {
                let n = m.horizon;
                for c in next_col..n {
                    head_base.axpy(base[c], &self.set.hv.column(c), 1.0);
                    head_dir.axpy(dir[c], &self.set.hv.column(c), 1.0);
                }
                next_col = n;
                let tail = self.tail_sums.column(n);
                let mut b = &s - &head_base;
                b.axpy(-base[n], &tail, 1.0);
                let mut a = head_dir.clone();
                a.axpy(dir[n], &tail, 1.0);
                super::explicit_kappa(&a, &b)
            };
            if i == 0 || kappa >= kappas[best] {
                best = i;
            }
            kappas.push(kappa);
        }
        let kappa = kappas[best];
        self.v_n = &self.members[best].projection * (base + kappa * dir);
        Ok(StepOutput {
            v: DenseVector::from_element(1, self.v_n[0]),
            kappa,
            kappas,
            selected: Some(best),
            v_n: self.v_n.clone(),
        })
    }

    fn lifted_command(&self) -> &DenseVector {
        &self.v_n
    }

    fn hold_is_admissible(&self, next: &StepInput) -> Result<bool> {
        holds(&self.set, &self.v_n, next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projections_are_idempotent() {
        for n in 0..=5 {
            let m = horizon_projection(n, 5);
            assert_eq!(&m * &m, m);
        }
        assert_eq!(horizon_projection(5, 5), DenseMatrix::identity(6, 6));
        let v = DenseVector::from_row_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((horizon_projection(1, 3) * v).as_slice(), &[1.0, 2.0, 2.0, 2.0]);
    }
}
