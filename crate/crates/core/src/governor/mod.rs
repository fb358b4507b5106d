//! Online reference governors: SRG, PRG, Multi-N PRG, disturbance-preview
//! PRG, lambda PRG, multi-input PRG, DRG-PRG and the command governor.

mod cg;
mod disturbance;
mod drg;
mod multi;
mod preview;

pub use cg::CommandGovernor;
pub use disturbance::DisturbanceGovernor;
pub use drg::{build_drg_parts, DrgChannel, DrgGovernor};
pub use multi::{horizon_projection, MultiHorizonGovernor};
pub use preview::PreviewGovernor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mas::AdmissibleSet;
use crate::numerics::{solve_lp, DenseMatrix, DenseVector, LpOutcome, LpProblem, TOL};

/// Rows with `a(i)` at or below this are treated as non-binding.
pub const DIVISION_GUARD: f64 = 1e-12;

/// Negative slack tolerated as rounding on a tight row.
pub const SLACK_TOL: f64 = TOL.feasibility;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GovernorKind {
    Srg,
    RobustSrg,
    Prg,
    MultiN,
    DisturbancePrg,
    LambdaPrg,
    MultiInputPrg,
    DrgPrg,
    Cg,
}

impl GovernorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GovernorKind::Srg => "srg",
            GovernorKind::RobustSrg => "robust_srg",
            GovernorKind::Prg => "prg",
            GovernorKind::MultiN => "multi_n",
            GovernorKind::DisturbancePrg => "disturbance_prg",
            GovernorKind::LambdaPrg => "lambda_prg",
            GovernorKind::MultiInputPrg => "multi_input_prg",
            GovernorKind::DrgPrg => "drg_prg",
            GovernorKind::Cg => "cg",
        }
    }
}

impl std::fmt::Display for GovernorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GovernorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "srg" => GovernorKind::Srg,
            "robust_srg" => GovernorKind::RobustSrg,
            "prg" => GovernorKind::Prg,
            "multi_n" | "multin" => GovernorKind::MultiN,
            "disturbance_prg" => GovernorKind::DisturbancePrg,
            "lambda_prg" => GovernorKind::LambdaPrg,
            "multi_input_prg" => GovernorKind::MultiInputPrg,
            "drg_prg" | "drg" => GovernorKind::DrgPrg,
            "cg" => GovernorKind::Cg,
            other => return Err(Error::config(format!("unknown governor kind '{other}'"))),
        })
    }
}

/// Measurements and references for one governor step.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub x: &'a DenseVector,
    /// Lifted reference, channel blocks of length `N_j + 1` back to back.
    pub r: &'a DenseVector,
    /// Previewed disturbances `w₀..w_N`, stacked.
    pub w_preview: Option<&'a DenseVector>,
}

impl<'a> StepInput<'a> {
    pub fn new(x: &'a DenseVector, r: &'a DenseVector) -> Self {
        StepInput { x, r, w_preview: None }
    }

    pub fn with_disturbance(mut self, w: &'a DenseVector) -> Self {
        self.w_preview = Some(w);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Command applied to the plant this step.
    pub v: DenseVector,
    /// Governing κ (the fused or smallest per-channel value where several exist).
    pub kappa: f64,
    /// Member κ_i for Multi-N, per-channel κ for DRG-PRG, otherwise `[kappa]`.
    pub kappas: Vec<f64>,
    /// Index of the selected Multi-N member.
    pub selected: Option<usize>,
    /// Updated internal lifted command.
    pub v_n: DenseVector,
}

pub trait Governor {
    fn kind(&self) -> GovernorKind;

    /// Per-channel preview horizons the reference vector must carry.
    fn horizons(&self) -> Vec<usize>;

    /// Disturbance preview horizon, for governors that consume one.
    fn disturbance_horizon(&self) -> Option<usize> {
        None
    }

    fn step(&mut self, input: &StepInput) -> Result<StepOutput>;

    /// Current internal lifted command.
    fn lifted_command(&self) -> &DenseVector;

    /// Whether holding the current plan (κ = 0) is admissible for `next`.
    fn hold_is_admissible(&self, next: &StepInput) -> Result<bool>;
}

/// Length of the lifted reference for the given channel horizons.
pub fn lifted_len(horizons: &[usize]) -> usize {
    horizons.iter().map(|n| n + 1).sum()
}

fn check_len(what: &str, v: &DenseVector, want: usize) -> Result<()> {
    if v.len() != want {
        return Err(Error::InputValidation(format!("{what} has length {}, expected {want}", v.len())));
    }
    if v.iter().any(|e| !e.is_finite()) {
        return Err(Error::InputValidation(format!("{what} contains non-finite entries")));
    }
    Ok(())
}

/// Slack `h - H_x x - H_w w` of a set, without the `v` block.
pub(crate) fn slack(set: &AdmissibleSet, x: &DenseVector, w: Option<&DenseVector>) -> DenseVector {
    let mut b = &set.h - &set.hx * x;
    if let Some(w) = w {
        b -= &set.hw * w;
    }
    b
}

/// The explicit κ pass: `b` is the slack at the held plan, `a` the rate at
/// which each row is consumed along the update direction. Slacks within
/// [`SLACK_TOL`] of zero count as tight rather than violated.
pub fn explicit_kappa(a: &DenseVector, b: &DenseVector) -> f64 {
    let mut kappa: f64 = 1.0;
    for (ai, bi) in a.iter().zip(b.iter()) {
        if *bi < -SLACK_TOL {
            return 0.0;
        }
        if *ai > DIVISION_GUARD {
            kappa = kappa.min(bi.max(0.0) / ai);
        }
    }
    kappa.max(0.0)
}

/// κ along `dir` from `base` inside `{H_v v <= slack}`, by the explicit pass.
pub(crate) fn kappa_along(hv: &DenseMatrix, slack: &DenseVector, base: &DenseVector, dir: &DenseVector) -> f64 {
    if dir.iter().all(|d| *d == 0.0) {
        return 1.0;
    }
    let b = slack - hv * base;
    let a = hv * dir;
    explicit_kappa(&a, &b)
}

/// Reference κ from the LP `max κ s.t. H_v(base + κ dir) <= slack, 0 <= κ <= 1`;
/// 0 when the held plan itself is infeasible.
pub fn lp_kappa(hv: &DenseMatrix, slack: &DenseVector, base: &DenseVector, dir: &DenseVector) -> Result<f64> {
    let mut b = slack - hv * base;
    if b.iter().any(|v| *v < -SLACK_TOL) {
        return Ok(0.0);
    }
    b.iter_mut().for_each(|v| *v = v.max(0.0));
    let a = hv * dir;
    let lp = LpProblem::new(DenseVector::from_element(1, 1.0), DenseMatrix::from_column_slice(a.len(), 1, a.as_slice()), b)
        .with_bounds(vec![(0.0, 1.0)]);
    match solve_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Ok(0.0),
        LpOutcome::Unbounded => Err(Error::numerical("bounded κ LP reported unbounded")),
    }
}

/// Initial lifted command: the constant initial reference if admissible,
/// else zero if admissible, else an initialization error.
pub(crate) fn initial_plan(
    set: &AdmissibleSet,
    x0: &DenseVector,
    r0: &DenseVector,
    w0: Option<&DenseVector>,
) -> Result<DenseVector> {
    let candidate = r0.clone();
    if set.contains_with(x0, &candidate, w0)? {
        return Ok(candidate);
    }
    let zero = DenseVector::zeros(set.n_params());
    if set.contains_with(x0, &zero, w0)? {
        return Ok(zero);
    }
    Err(Error::Initialization(format!(
        "initial state is not admissible (worst margin {:.3e})",
        set.margin(x0, &zero, w0)?.min()
    )))
}

/// Lifted reference holding `r` constant over every channel's horizon.
pub fn constant_reference(r: &DenseVector, horizons: &[usize]) -> DenseVector {
    let mut out = DenseVector::zeros(lifted_len(horizons));
    let mut off = 0;
    for (j, n) in horizons.iter().enumerate() {
        out.rows_mut(off, n + 1).fill(r[j]);
        off += n + 1;
    }
    out
}

/// First entry of each channel block of a lifted vector.
pub fn first_entries(v: &DenseVector, horizons: &[usize]) -> DenseVector {
    let mut out = DenseVector::zeros(horizons.len());
    let mut off = 0;
    for (j, n) in horizons.iter().enumerate() {
        out[j] = v[off];
        off += n + 1;
    }
    out
}

/// Hold check for plain lifted sets: `(x, Ā v_N) ∈ set`.
pub(crate) fn holds(set: &AdmissibleSet, v_n: &DenseVector, next: &StepInput) -> Result<bool> {
    let held = set.a_bar.apply(v_n);
    Ok(set.margin(next.x, &held, next.w_preview)?.iter().all(|m| *m >= -TOL.feasibility))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_pass_rules() {
        let b = DenseVector::from_row_slice(&[1.0, 2.0, 0.5]);
        let a = DenseVector::from_row_slice(&[2.0, -1.0, 0.0]);
        assert_eq!(explicit_kappa(&a, &b), 0.5);
        let b_neg = DenseVector::from_row_slice(&[1.0, -1e-3, 0.5]);
        let b_tight = DenseVector::from_row_slice(&[1.0, 2.0, -1e-15]);
        assert_eq!(explicit_kappa(&a, &b_tight), 0.5);
        assert_eq!(explicit_kappa(&a, &b_neg), 0.0);
        let tiny = DenseVector::from_row_slice(&[1e-13, 0.0, 0.0]);
        assert_eq!(explicit_kappa(&tiny, &b), 1.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [GovernorKind::Srg, GovernorKind::MultiN, GovernorKind::DrgPrg, GovernorKind::Cg] {
            assert_eq!(k.as_str().parse::<GovernorKind>().unwrap(), k);
        }
        assert!("nope".parse::<GovernorKind>().is_err());
    }

    #[test]
    fn lifted_layout_helpers() {
        let r = DenseVector::from_row_slice(&[1.0, 2.0]);
        let l = constant_reference(&r, &[1, 2]);
        assert_eq!(l.as_slice(), &[1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(first_entries(&l, &[1, 2]), r);
    }
}
