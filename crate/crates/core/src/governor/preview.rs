use std::sync::Arc;

use super::{check_len, first_entries, holds, initial_plan, kappa_along, slack, Governor, GovernorKind, StepInput, StepOutput};
use crate::error::{Error, Result};
use crate::mas::{AdmissibleSet, SetVariant};
use crate::numerics::DenseVector;

/// Single-κ governor over a (possibly lifted) admissible set:
/// `v_N⁺ = Ā v_N + κ (r_N − Ā v_N)`.
///
/// Covers SRG (all horizons zero), PRG, lambda PRG and multi-input PRG; the
/// variant follows from the set and its preview matrix.
#[derive(Debug, Clone)]
pub struct PreviewGovernor {
    set: Arc<AdmissibleSet>,
    v_n: DenseVector,
    kind: GovernorKind,
}

impl PreviewGovernor {
    pub fn new(set: Arc<AdmissibleSet>, x0: &DenseVector, r0: &DenseVector) -> Result<Self> {
        if set.n_disturbance_params() > 0 {
            return Err(Error::config("disturbance-preview sets need a DisturbanceGovernor"));
        }
        let kind = if set.a_bar.is_lambda() {
            GovernorKind::LambdaPrg
        } else if set.a_bar.horizons.len() > 1 {
            GovernorKind::MultiInputPrg
        } else if set.a_bar.horizons.iter().all(|n| *n == 0) {
            GovernorKind::Srg
        } else {
            GovernorKind::Prg
        };
        check_len("initial reference", r0, set.n_params())?;
        let v_n = initial_plan(&set, x0, r0, None)?;
        Ok(PreviewGovernor { set, v_n, kind })
    }

    /// SRG on a robustly tightened set.
    pub fn robust_srg(set: Arc<AdmissibleSet>, x0: &DenseVector, r0: &DenseVector) -> Result<Self> {
        if set.variant != SetVariant::Standard {
            return Err(Error::config("robust SRG expects a constant-command set"));
        }
        let mut g = Self::new(set, x0, r0)?;
        g.kind = GovernorKind::RobustSrg;
        Ok(g)
    }

    pub fn set(&self) -> &AdmissibleSet {
        &self.set
    }

    /// κ and the held plan `Ā v_N` for a step, without updating.
    pub fn compute(&self, x: &DenseVector, r: &DenseVector) -> Result<(f64, DenseVector, DenseVector)> {
        check_len("state", x, self.set.n_states())?;
        check_len("lifted reference", r, self.set.n_params())?;
        let base = self.set.a_bar.apply(&self.v_n);
        let dir = r - &base;
        let kappa = kappa_along(&self.set.hv, &slack(&self.set, x, None), &base, &dir);
        Ok((kappa, base, dir))
    }
}

impl Governor for PreviewGovernor {
    fn kind(&self) -> GovernorKind {
        self.kind
    }

    fn horizons(&self) -> Vec<usize> {
        self.set.a_bar.horizons.clone()
    }

    fn step(&mut self, input: &StepInput) -> Result<StepOutput> {
        let (kappa, base, dir) = self.compute(input.x, input.r)?;
        self.v_n = base + kappa * dir;
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
