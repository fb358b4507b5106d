use std::sync::Arc;

use super::{check_len, constant_reference, lifted_len, Governor, GovernorKind, PreviewGovernor, StepInput, StepOutput};
use crate::error::{Error, Result};
use crate::mas::{build_lifted_mas, AdmissibleSet, PreviewAMatrix};
use crate::numerics::DenseVector;
use crate::polytope::Polytope;
use crate::sysmod::{build_decoupler, lift_input, realize_tf, tf_from_ss, Decoupler, MimoFilter, RationalTf, StateSpaceModel};

/// One decoupled channel: a realization of `W_ii` and its lifted set.
#[derive(Debug, Clone)]
pub struct DrgChannel {
    pub realization: StateSpaceModel,
    pub set: Arc<AdmissibleSet>,
}

impl DrgChannel {
    /// Realizes `W_ii` and builds its lifted set under the channel's output
    /// constraint.
    pub fn build(w_ii: &RationalTf, horizon: usize, limits: &Polytope, epsilon: f64, t_max: usize) -> Result<Self> {
        let realization = realize_tf(w_ii)?;
        realization.ensure_stable()?;
        let lifted = lift_input(&realization, horizon)?;
        let set = build_lifted_mas(&lifted, &PreviewAMatrix::delay(horizon), limits, epsilon, t_max)?;
        Ok(DrgChannel { realization, set: Arc::new(set) })
    }
}

/// Decoupled PRG: references pass through `F⁻¹`, each channel of the
/// diagonal `W = G F` runs its own PRG, and the channel commands pass
/// through `F` to the plant.
#[derive(Debug, Clone)]
pub struct DrgGovernor {
    decoupler: Decoupler,
    f: MimoFilter,
    f_inv: MimoFilter,
    channels: Vec<(DrgChannel, PreviewGovernor, DenseVector)>,
    n_plant_states: usize,
    horizons: Vec<usize>,
    v_n: DenseVector,
    last_channel_refs: DenseVector,
    last_channel_commands: DenseVector,
}

/// Decoupler for a square stable closed loop plus one channel per output,
/// each constrained by the matching entry of `limits`.
pub fn build_drg_parts(
    closed_loop: &StateSpaceModel,
    horizons: &[usize],
    limits: &[Polytope],
    epsilon: f64,
    t_max: usize,
) -> Result<(Decoupler, Vec<DrgChannel>)> {
    closed_loop.ensure_stable()?;
    let m = closed_loop.n_inputs();
    if closed_loop.n_outputs() != m || horizons.len() != m || limits.len() != m {
        return Err(Error::config("DRG-PRG needs a square plant and one horizon and limit per channel"));
    }
    let g = tf_from_ss(closed_loop)?;
    let decoupler = build_decoupler(&g)?;
    let channels = (0..m)
        .map(|i| {
            let w_ii = RationalTf::new(1, 1, vec![decoupler.w.get(i, i).clone()], g.sample_time)?;
            DrgChannel::build(&w_ii, horizons[i], &limits[i], epsilon, t_max)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((decoupler, channels))
}

impl DrgGovernor {
    /// Starts from rest: filter and channel states at zero.
    pub fn new(decoupler: Decoupler, channels: Vec<DrgChannel>, n_plant_states: usize, r0: &DenseVector) -> Result<Self> {
        let m = channels.len();
        if decoupler.f.rows != m || decoupler.f.cols != m {
            return Err(Error::config("decoupler size does not match the channel count"));
        }
        check_len("initial reference", r0, m)?;
        let f = MimoFilter::new(&decoupler.f)?;
        let f_inv = MimoFilter::new(&decoupler.f_inv)?;
        let shaped = f_inv.preview(std::slice::from_ref(r0))?.remove(0);
        let horizons: Vec<usize> = channels.iter().map(|c| c.set.a_bar.horizons[0]).collect();
        let mut govs = Vec::with_capacity(m);
        for (i, ch) in channels.into_iter().enumerate() {
            let x0 = DenseVector::zeros(ch.realization.n_states());
            let r0_i = constant_reference(&DenseVector::from_element(1, shaped[i]), &[horizons[i]]);
            let gov = PreviewGovernor::new(ch.set.clone(), &x0, &r0_i)?;
            govs.push((ch, gov, x0));
        }
        let v_n = Self::stack(&govs);
        Ok(DrgGovernor {
            decoupler,
            f,
            f_inv,
            channels: govs,
            n_plant_states,
            horizons,
            v_n,
            last_channel_refs: DenseVector::zeros(m),
            last_channel_commands: DenseVector::zeros(m),
        })
    }

    fn stack(govs: &[(DrgChannel, PreviewGovernor, DenseVector)]) -> DenseVector {
        let parts: Vec<f64> = govs.iter().flat_map(|(_, g, _)| g.lifted_command().iter().copied()).collect();
        DenseVector::from_vec(parts)
    }

    pub fn decoupler(&self) -> &Decoupler {
        &self.decoupler
    }

    pub fn channels(&self) -> impl Iterator<Item = &DrgChannel> {
        self.channels.iter().map(|(c, _, _)| c)
    }

    /// Shaped references `F⁻¹ r` seen by the channels at the last step.
    pub fn channel_references(&self) -> &DenseVector {
        &self.last_channel_refs
    }

    /// Channel commands `u` applied at the last step (before `F`).
    pub fn channel_commands(&self) -> &DenseVector {
        &self.last_channel_commands
    }

    /// Internal states of the channel realizations.
    pub fn channel_states(&self) -> Vec<&DenseVector> {
        self.channels.iter().map(|(_, _, x)| x).collect()
    }
}

impl Governor for DrgGovernor {
    fn kind(&self) -> GovernorKind {
        GovernorKind::DrgPrg
    }

    fn horizons(&self) -> Vec<usize> {
        self.horizons.clone()
    }

    fn step(&mut self, input: &StepInput) -> Result<StepOutput> {
        check_len("state", input.x, self.n_plant_states)?;
        check_len("lifted reference", input.r, lifted_len(&self.horizons))?;
        let m = self.horizons.len();
        let longest = self.horizons.iter().copied().max().unwrap_or(0);
        let offsets: Vec<usize> = self.horizons.iter().scan(0, |o, n| {
            let cur = *o;
            *o += n + 1;
            Some(cur)
        }).collect();
        let sequence: Vec<DenseVector> = (0..=longest)
            .map(|k| DenseVector::from_fn(m, |j, _| input.r[offsets[j] + k.min(self.horizons[j])]))
            .collect();
        let shaped = self.f_inv.preview(&sequence)?;
        self.f_inv.step(&sequence[0])?;

        let mut u = DenseVector::zeros(m);
        let mut kappas = Vec::with_capacity(m);
        for (j, (ch, gov, x)) in self.channels.iter_mut().enumerate() {
            let r_j = DenseVector::from_fn(self.horizons[j] + 1, |k, _| shaped[k][j]);
            let out = gov.step(&StepInput::new(x, &r_j))?;
            u[j] = out.v[0];
            kappas.push(out.kappa);
            let (next, _) = ch.realization.step(x, &out.v)?;
            *x = next;
        }
        self.last_channel_refs = DenseVector::from_fn(m, |j, _| shaped[0][j]);
        self.last_channel_commands = u.clone();
        let v = self.f.step(&u)?;
        self.v_n = Self::stack(&self.channels);
        Ok(StepOutput {
            v,
            kappa: kappas.iter().copied().fold(1.0, f64::min),
            kappas,
            selected: None,
            v_n: self.v_n.clone(),
        })
    }

    fn lifted_command(&self) -> &DenseVector {
        &self.v_n
    }

    fn hold_is_admissible(&self, _next: &StepInput) -> Result<bool> {
        for (_, gov, x) in &self.channels {
            let r = gov.lifted_command();
            if !gov.hold_is_admissible(&StepInput::new(x, r))? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
