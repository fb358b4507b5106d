use std::sync::Arc;

use log::warn;

use super::{check_len, first_entries, holds, initial_plan, Governor, GovernorKind, StepInput, StepOutput};
use crate::error::{Error, Result};
use crate::mas::AdmissibleSet;
use crate::numerics::{solve_qp_from, DenseMatrix, DenseVector, QpOutcome, QpProblem, TOL};

/// Command governor: `min (r_N − v_N)ᵀ Q (r_N − v_N)` over the admissible
/// slice at the current state, solved online as a QP.
#[derive(Debug, Clone)]
pub struct CommandGovernor {
    set: Arc<AdmissibleSet>,
    weight: DenseMatrix,
    v_n: DenseVector,
}

impl CommandGovernor {
    pub fn new(set: Arc<AdmissibleSet>, weight: Option<DenseMatrix>, x0: &DenseVector, r0: &DenseVector) -> Result<Self> {
        if set.n_disturbance_params() > 0 {
            return Err(Error::config("command governor does not take disturbance-preview sets"));
        }
        let p = set.n_params();
        let weight = weight.unwrap_or_else(|| DenseMatrix::identity(p, p));
        if weight.nrows() != p || weight.ncols() != p {
            return Err(Error::config(format!("CG weight must be {p}x{p}")));
        }
        if (&weight - weight.transpose()).amax() > TOL.symmetry * (1.0 + weight.amax()) {
            return Err(Error::config("CG weight is not symmetric"));
        }
        if weight.clone().cholesky().is_none() {
            return Err(Error::config("CG weight is not positive definite"));
        }
        check_len("initial reference", r0, p)?;
        let v_n = initial_plan(&set, x0, r0, None)?;
        Ok(CommandGovernor { set, weight, v_n })
    }

    /// Minimizer for the given state and lifted reference, or `None` when the
    /// admissible slice is empty.
    pub fn solve(&self, x: &DenseVector, r: &DenseVector, start: &DenseVector) -> Result<Option<DenseVector>> {
        let problem = QpProblem {
            quadratic: self.weight.clone(),
            linear: -(&self.weight * r),
            constraints: self.set.hv.clone(),
            rhs: &self.set.h - &self.set.hx * x,
        };
        Ok(match solve_qp_from(&problem, start)? {
            QpOutcome::Optimal { point, .. } => Some(point),
            QpOutcome::Infeasible => None,
        })
    }
}

impl Governor for CommandGovernor {
    fn kind(&self) -> GovernorKind {
        GovernorKind::Cg
    }

    fn horizons(&self) -> Vec<usize> {
        self.set.a_bar.horizons.clone()
    }

    fn step(&mut self, input: &StepInput) -> Result<StepOutput> {
        check_len("state", input.x, self.set.n_states())?;
        check_len("lifted reference", input.r, self.set.n_params())?;
        let held = self.set.a_bar.apply(&self.v_n);
        let next = match self.solve(input.x, input.r, &held)? {
            Some(v) => v,
            None => {
                warn!("command governor QP infeasible; holding the previous plan");
                held.clone()
            }
        };
        // progress toward the target, reported in the κ column
        let full = (input.r - &held).norm();
        let kappa = if full == 0.0 { 1.0 } else { (1.0 - (input.r - &next).norm() / full).clamp(0.0, 1.0) };
        self.v_n = next;
        Ok(StepOutput {
            v: first_entries(&self.v_n, &self.set.a_bar.horizons),
            kappa,
            kappas: vec![kappa],
            selected: None,
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
