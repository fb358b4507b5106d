//! Dense two-phase primal simplex.
//!
//! Dantzig pricing with a switch to Bland's rule after a run of degenerate
//! pivots. Ratio-test ties go to the smallest basic variable index, so the
//! pivot sequence is a deterministic function of the input.

use super::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 25;

/// maximize `objective · z` subject to `constraints · z <= rhs`,
/// `eq_constraints · z = eq_rhs` and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: DenseVector,
    pub constraints: DenseMatrix,
    pub rhs: DenseVector,
    pub eq_constraints: DenseMatrix,
    pub eq_rhs: DenseVector,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// Inequality-constrained problem with all variables free.
    pub fn new(objective: DenseVector, constraints: DenseMatrix, rhs: DenseVector) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            constraints,
            rhs,
            eq_constraints: DenseMatrix::zeros(0, n),
            eq_rhs: DenseVector::zeros(0),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_equalities(mut self, a: DenseMatrix, b: DenseVector) -> Self {
        self.eq_constraints = a;
        self.eq_rhs = b;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.constraints.ncols() != n && self.constraints.nrows() > 0 {
            return Err(Error::config(format!(
                "LP constraint matrix has {} columns, objective has {n}",
                self.constraints.ncols()
            )));
        }
        if self.constraints.nrows() != self.rhs.len() {
            return Err(Error::config("LP constraint rows and rhs length differ"));
        }
        if self.eq_constraints.nrows() != self.eq_rhs.len()
            || (self.eq_constraints.nrows() > 0 && self.eq_constraints.ncols() != n)
        {
            return Err(Error::config("LP equality block has inconsistent dimensions"));
        }
        if self.bounds.len() != n {
            return Err(Error::config("LP bounds length differs from variable count"));
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.constraints.iter().all(|v| v.is_finite())
            && self.rhs.iter().all(|v| v.is_finite())
            && self.eq_constraints.iter().all(|v| v.is_finite())
            && self.eq_rhs.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("LP data contains non-finite entries"));
        }
        if self.bounds.iter().any(|(lo, hi)| lo.is_nan() || hi.is_nan()) {
            return Err(Error::config("LP bound is NaN"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { point: DenseVector, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// z = lo + p
    Shift { lo: f64, col: usize },
    /// z = hi - p
    Reflect { hi: f64, col: usize },
    /// z = p - q
    Split { pos: usize, neg: usize },
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome> {
    problem.validate()?;
    let n = problem.objective.len();

    // Map bounded variables onto non-negative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &problem.bounds {
        if lo > hi {
            return Ok(LpOutcome::Infeasible);
        }
        if lo.is_finite() {
            maps.push(VarMap::Shift { lo, col: ncols });
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Reflect { hi, col: ncols });
            ncols += 1;
        } else {
            maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }

    let transform_row = |row: &mut [f64], coeffs: &dyn Fn(usize) -> f64| -> f64 {
        let mut shift = 0.0;
        for (j, map) in maps.iter().enumerate() {
            let a = coeffs(j);
            if a == 0.0 {
                continue;
            }
            match *map {
                VarMap::Shift { lo, col } => {
                    row[col] += a;
                    shift += a * lo;
                }
                VarMap::Reflect { hi, col } => {
                    row[col] -= a;
                    shift += a * hi;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        shift
    };

    let m_ub = problem.constraints.nrows() + bound_rows.len();
    let m_eq = problem.eq_constraints.nrows();
    let mut ineq: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m_ub);
    for i in 0..problem.constraints.nrows() {
        let mut row = vec![0.0; ncols];
        let shift = transform_row(&mut row, &|j| problem.constraints[(i, j)]);
        ineq.push((row, problem.rhs[i] - shift));
    }
    for &(col, width) in &bound_rows {
        let mut row = vec![0.0; ncols];
        row[col] = 1.0;
        ineq.push((row, width));
    }
    let mut eqs: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m_eq);
    for i in 0..m_eq {
        let mut row = vec![0.0; ncols];
        let shift = transform_row(&mut row, &|j| problem.eq_constraints[(i, j)]);
        eqs.push((row, problem.eq_rhs[i] - shift));
    }
    let mut cost = vec![0.0; ncols];
    transform_row(&mut cost, &|j| problem.objective[j]);

    let std_outcome = Tableau::solve(&ineq, &eqs, &cost)?;
    Ok(match std_outcome {
        StdOutcome::Infeasible => LpOutcome::Infeasible,
        StdOutcome::Unbounded => LpOutcome::Unbounded,
        StdOutcome::Optimal(p) => {
            let point = DenseVector::from_iterator(
                n,
                maps.iter().map(|map| match *map {
                    VarMap::Shift { lo, col } => lo + p[col],
                    VarMap::Reflect { hi, col } => hi - p[col],
                    VarMap::Split { pos, neg } => p[pos] - p[neg],
                }),
            );
            let value = problem.objective.dot(&point);
            LpOutcome::Optimal { point, value }
        }
    })
}

enum StdOutcome {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
}

/// Dense simplex tableau for: maximize c·p, A p <= b, E p = e, p >= 0.
struct Tableau {
    rows: usize,
    /// structural + slack + artificial columns, rhs stored separately
    cols: usize,
    data: Vec<f64>,
    rhs: Vec<f64>,
    obj: Vec<f64>,
    obj_value: f64,
    basis: Vec<usize>,
    first_artificial: usize,
    row_active: Vec<bool>,
}

impl Tableau {
    fn solve(ineq: &[(Vec<f64>, f64)], eqs: &[(Vec<f64>, f64)], cost: &[f64]) -> Result<StdOutcome> {
        let nstruct = cost.len();
        let m_ub = ineq.len();
        let rows = m_ub + eqs.len();
        let n_art = ineq.iter().filter(|(_, b)| *b < 0.0).count() + eqs.len();
        let first_artificial = nstruct + m_ub;
        let cols = first_artificial + n_art;

        let mut t = Tableau {
            rows,
            cols,
            data: vec![0.0; rows * cols],
            rhs: vec![0.0; rows],
            obj: vec![0.0; cols],
            obj_value: 0.0,
            basis: vec![0; rows],
            first_artificial,
            row_active: vec![true; rows],
        };

        let mut next_art = first_artificial;
        for (i, (row, b)) in ineq.iter().enumerate() {
            let sign = if *b < 0.0 { -1.0 } else { 1.0 };
            for (j, a) in row.iter().enumerate() {
                t.data[i * cols + j] = sign * a;
            }
            t.data[i * cols + nstruct + i] = sign;
            t.rhs[i] = sign * b;
            if sign < 0.0 {
                t.data[i * cols + next_art] = 1.0;
                t.basis[i] = next_art;
                next_art += 1;
            } else {
                t.basis[i] = nstruct + i;
            }
        }
        for (k, (row, e)) in eqs.iter().enumerate() {
            let i = m_ub + k;
            let sign = if *e < 0.0 { -1.0 } else { 1.0 };
            for (j, a) in row.iter().enumerate() {
                t.data[i * cols + j] = sign * a;
            }
            t.rhs[i] = sign * e;
            t.data[i * cols + next_art] = 1.0;
            t.basis[i] = next_art;
            next_art += 1;
        }

        let rhs_scale = 1.0 + t.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_iters = 50 * (rows + cols) + 1000;

        if n_art > 0 {
            // Phase 1: maximize -sum(artificials).
            let mut phase1 = vec![0.0; cols];
            for c in phase1.iter_mut().skip(first_artificial) {
                *c = -1.0;
            }
            t.set_objective(&phase1);
            match t.iterate(cols, max_iters)? {
                true => {}
                false => return Err(Error::numerical("phase-1 simplex reported unbounded")),
            }
            if t.obj_value < -1e-9 * rhs_scale {
                return Ok(StdOutcome::Infeasible);
            }
            t.drive_out_artificials();
        }

        let mut phase2 = vec![0.0; cols];
        phase2[..nstruct].copy_from_slice(cost);
        t.set_objective(&phase2);
        if !t.iterate(first_artificial, max_iters)? {
            return Ok(StdOutcome::Unbounded);
        }

        let mut p = vec![0.0; nstruct];
        for i in 0..rows {
            if t.row_active[i] && t.basis[i] < nstruct {
                p[t.basis[i]] = t.rhs[i].max(0.0);
            }
        }
        Ok(StdOutcome::Optimal(p))
    }

    /// Installs reduced costs for `maximize c·p` given the current basis.
    fn set_objective(&mut self, c: &[f64]) {
        for j in 0..self.cols {
            self.obj[j] = -c[j];
        }
        self.obj_value = 0.0;
        for i in 0..self.rows {
            if !self.row_active[i] {
                continue;
            }
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                for j in 0..self.cols {
                    self.obj[j] += cb * row[j];
                }
                self.obj_value += cb * self.rhs[i];
            }
        }
    }

    /// Runs simplex iterations over entering columns `< allowed`.
    /// Returns Ok(false) when unbounded.
    fn iterate(&mut self, allowed: usize, max_iters: usize) -> Result<bool> {
        let mut degenerate_run = 0usize;
        for _ in 0..max_iters {
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let entering = if bland {
                (0..allowed).find(|&j| self.obj[j] < -COST_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..allowed {
                    let rc = self.obj[j];
                    if rc < -COST_TOL && best.is_none_or(|(_, b)| rc < b) {
                        best = Some((j, rc));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(s) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                if !self.row_active[i] {
                    continue;
                }
                let a = self.data[i * self.cols + s];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if (tie && self.basis[i] < self.basis[r]) || (!tie && ratio < best) {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, s);
        }
        Err(Error::numerical(format!(
            "simplex exceeded {max_iters} iterations (cycling guard)"
        )))
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let cols = self.cols;
        let p = self.data[r * cols + s];
        for j in 0..cols {
            self.data[r * cols + j] /= p;
        }
        self.rhs[r] /= p;
        self.data[r * cols + s] = 1.0;

        let (before, rest) = self.data.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        let prow: &[f64] = prow;
        let prhs = self.rhs[r];
        let eliminate = |row: &mut [f64], rhs: &mut f64| {
            let f = row[s];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[s] = 0.0;
                *rhs -= f * prhs;
            }
        };
        for (i, row) in before.chunks_mut(cols).enumerate() {
            eliminate(row, &mut self.rhs[i]);
        }
        for (k, row) in after.chunks_mut(cols).enumerate() {
            eliminate(row, &mut self.rhs[r + 1 + k]);
        }
        let f = self.obj[s];
        if f != 0.0 {
            for (x, y) in self.obj.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            self.obj[s] = 0.0;
            self.obj_value -= f * prhs;
        }
        self.basis[r] = s;
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.rows {
            if self.basis[i] < self.first_artificial {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut best: Option<(usize, f64)> = None;
            for (j, a) in row.iter().enumerate().take(self.first_artificial) {
                if a.abs() > 1e-9 && best.is_none_or(|(_, b)| a.abs() > b) {
                    best = Some((j, a.abs()));
                }
            }
            match best {
                Some((j, _)) => self.pivot(i, j),
                None => self.row_active[i] = false,
            }
        }
    }
}
