use std::sync::Arc;

use super::{check_len, initial_plan, kappa_along, slack, Governor, GovernorKind, StepInput, StepOutput};
use crate::error::{Error, Result};
use crate::mas::{AdmissibleSet, SetVariant};
use crate::numerics::{DenseVector, TOL};
use crate::polytope::Polytope;

/// Constant-command governor over a disturbance-preview set; the measured
/// preview `w₀..w_N` is substituted into the stored rows each step.
#[derive(Debug, Clone)]
pub struct DisturbanceGovernor {
    set: Arc<AdmissibleSet>,
    disturbance_set: Polytope,
    horizon: usize,
    v: DenseVector,
}

impl DisturbanceGovernor {
    pub fn new(
        set: Arc<AdmissibleSet>,
        disturbance_set: Polytope,
        x0: &DenseVector,
        r0: &DenseVector,
        w0: &DenseVector,
    ) -> Result<Self> {
        if set.variant != SetVariant::DisturbancePreview {
            return Err(Error::config("disturbance governor needs a disturbance-preview set"));
        }
        let q = disturbance_set.dim();
        if q == 0 || !set.n_disturbance_params().is_multiple_of(q) {
            return Err(Error::config("disturbance set dimension does not divide the preview columns"));
        }
        let horizon = set.n_disturbance_params() / q - 1;
        let mut g = DisturbanceGovernor { set, disturbance_set, horizon, v: DenseVector::zeros(0) };
        g.validate(w0)?;
        check_len("initial reference", r0, g.set.n_params())?;
        g.v = initial_plan(&g.set, x0, r0, Some(w0))?;
        Ok(g)
    }

    fn validate(&self, w: &DenseVector) -> Result<()> {
        check_len("disturbance preview", w, self.set.n_disturbance_params())?;
        let q = self.disturbance_set.dim();
        for k in 0..=self.horizon {
            let wk = w.rows(k * q, q).into_owned();
            let c = self.disturbance_set.contains(&wk)?;
            if c.margin.iter().any(|m| *m < -TOL.feasibility) {
                return Err(Error::InputValidation(format!("previewed disturbance w{k} = {wk} lies outside W")));
            }
        }
        Ok(())
    }

    fn preview<'a>(&self, input: &StepInput<'a>) -> Result<&'a DenseVector> {
        let w = input
            .w_preview
            .ok_or_else(|| Error::InputValidation("disturbance governor needs a disturbance preview".into()))?;
        self.validate(w)?;
        Ok(w)
    }
}

impl Governor for DisturbanceGovernor {
    fn kind(&self) -> GovernorKind {
        GovernorKind::DisturbancePrg
    }

    fn horizons(&self) -> Vec<usize> {
        vec![0; self.set.n_params()]
    }

    fn disturbance_horizon(&self) -> Option<usize> {
        Some(self.horizon)
    }

    fn step(&mut self, input: &StepInput) -> Result<StepOutput> {
        check_len("state", input.x, self.set.n_states())?;
        check_len("reference", input.r, self.set.n_params())?;
        let w = self.preview(input)?;
        let dir = input.r - &self.v;
        let kappa = kappa_along(&self.set.hv, &slack(&self.set, input.x, Some(w)), &self.v, &dir);
        self.v += kappa * dir;
        Ok(StepOutput { v: self.v.clone(), kappa, kappas: vec![kappa], selected: None, v_n: self.v.clone() })
    }

    fn lifted_command(&self) -> &DenseVector {
        &self.v
    }

    fn hold_is_admissible(&self, next: &StepInput) -> Result<bool> {
        let w = self.preview(next)?;
        self.set.contains_with(next.x, &self.v, Some(w))
    }
}
