//! Primal active-set QP for small dense strictly convex problems:
//! minimize ½ zᵀQz + cᵀz subject to A z <= b.

use super::{solve_lp, DenseMatrix, DenseVector, LpOutcome, LpProblem, TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub quadratic: DenseMatrix,
    pub linear: DenseVector,
    pub constraints: DenseMatrix,
    pub rhs: DenseVector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QpOutcome {
    Optimal { point: DenseVector, active: Vec<usize> },
    Infeasible,
}

impl QpProblem {
    fn validate(&self) -> Result<()> {
        let n = self.linear.len();
        if self.quadratic.nrows() != n || self.quadratic.ncols() != n {
            return Err(Error::config("QP quadratic term dimension mismatch"));
        }
        if self.constraints.nrows() != self.rhs.len()
            || (self.constraints.nrows() > 0 && self.constraints.ncols() != n)
        {
            return Err(Error::config("QP constraint dimension mismatch"));
        }
        let asym = (&self.quadratic - self.quadratic.transpose()).abs().max();
        if asym > TOL.symmetry * (1.0 + self.quadratic.abs().max()) {
            return Err(Error::config(format!("QP quadratic term not symmetric (defect {asym:e})")));
        }
        if self.quadratic.clone().cholesky().is_none() {
            return Err(Error::config("QP quadratic term is not positive definite"));
        }
        Ok(())
    }

    fn slack(&self, z: &DenseVector) -> DenseVector {
        &self.rhs - &self.constraints * z
    }

    fn is_feasible(&self, z: &DenseVector) -> bool {
        self.slack(z).iter().all(|s| *s >= -TOL.feasibility)
    }
}

/// Solves the QP, first trying the unconstrained minimizer and otherwise
/// starting the active-set iteration from an LP-feasible point.
pub fn solve_qp(p: &QpProblem) -> Result<QpOutcome> {
    p.validate()?;
    let unconstrained = unconstrained_minimizer(p)?;
    if p.is_feasible(&unconstrained) {
        return Ok(QpOutcome::Optimal { point: unconstrained, active: Vec::new() });
    }
    let n = p.linear.len();
    let lp = LpProblem::new(DenseVector::zeros(n), p.constraints.clone(), p.rhs.clone());
    match solve_lp(&lp)? {
        LpOutcome::Optimal { point, .. } => active_set(p, point),
        LpOutcome::Infeasible => Ok(QpOutcome::Infeasible),
        LpOutcome::Unbounded => Err(Error::numerical("feasibility LP reported unbounded")),
    }
}

/// Like [`solve_qp`] but with a caller-supplied feasible starting point.
/// Falls back to the LP phase if `start` is infeasible.
pub fn solve_qp_from(p: &QpProblem, start: &DenseVector) -> Result<QpOutcome> {
    p.validate()?;
    let unconstrained = unconstrained_minimizer(p)?;
    if p.is_feasible(&unconstrained) {
        return Ok(QpOutcome::Optimal { point: unconstrained, active: Vec::new() });
    }
    if start.len() == p.linear.len() && p.is_feasible(start) {
        active_set(p, start.clone())
    } else {
        solve_qp(p)
    }
}

fn unconstrained_minimizer(p: &QpProblem) -> Result<DenseVector> {
    let chol = p
        .quadratic
        .clone()
        .cholesky()
        .ok_or_else(|| Error::config("QP quadratic term is not positive definite"))?;
    Ok(-chol.solve(&p.linear))
}

fn active_set(p: &QpProblem, mut z: DenseVector) -> Result<QpOutcome> {
    let n = z.len();
    let m = p.rhs.len();
    let mut working: Vec<usize> = Vec::new();
    let max_iters = 20 * (n + m) + 100;

    for _ in 0..max_iters {
        let g = &p.quadratic * &z + &p.linear;
        let k = working.len();
        let mut kkt = DenseMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.quadratic);
        for (w, &i) in working.iter().enumerate() {
            for j in 0..n {
                let a = p.constraints[(i, j)];
                kkt[(n + w, j)] = a;
                kkt[(j, n + w)] = a;
            }
        }
        let mut rhs = DenseVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&g));
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::numerical("singular KKT system in active-set QP"))?;
        let step = sol.rows(0, n).into_owned();
        let step_norm = step.amax();

        if step_norm > 1e-12 * (1.0 + z.amax()) {
            let mut alpha = 1.0;
            let mut blocking = None;
            for i in 0..m {
                if working.contains(&i) {
                    continue;
                }
                let a_i = p.constraints.row(i);
                let ap = a_i.dot(&step.transpose());
                if ap > 1e-14 {
                    let room = (p.rhs[i] - a_i.dot(&z.transpose())).max(0.0);
                    let ratio = room / ap;
                    if ratio < alpha {
                        alpha = ratio;
                        blocking = Some(i);
                    }
                }
            }
            z += alpha * &step;
            if let Some(i) = blocking {
                working.push(i);
                continue;
            }
            // full step: z minimizes over the working set and the
            // multipliers of this solve apply to it
        }

        let multipliers = sol.rows(n, k);
        let scale = 1.0 + g.amax();
        let mut worst: Option<(usize, f64)> = None;
        for (w, &lam) in multipliers.iter().enumerate() {
            if lam < -1e-10 * scale && worst.is_none_or(|(_, b)| lam < b) {
                worst = Some((w, lam));
            }
        }
        match worst {
            None => {
                let mut active = working.clone();
                active.sort_unstable();
                return Ok(QpOutcome::Optimal { point: z, active });
            }
            Some((w, _)) => {
                working.remove(w);
            }
        }
    }
    Err(Error::numerical(format!(
        "active-set QP exceeded {max_iters} iterations"
    )))
}

/// Stationarity residual ‖Qz + c + Aᵀλ‖∞ for the given active set, with λ
/// fitted by least squares; used to check solutions.
#[cfg(test)]
pub(crate) fn kkt_residual(p: &QpProblem, z: &DenseVector, active: &[usize]) -> f64 {
    let g = &p.quadratic * z + &p.linear;
    if active.is_empty() {
        return g.amax();
    }
    let n = z.len();
    let mut at = DenseMatrix::zeros(n, active.len());
    for (w, &i) in active.iter().enumerate() {
        for j in 0..n {
            at[(j, w)] = p.constraints[(i, j)];
        }
    }
    let svd = at.clone().svd(true, true);
    let lam = svd.solve(&(-&g), 1e-14).unwrap_or_else(|_| DenseVector::zeros(active.len()));
    (g + at * lam).amax()
}
