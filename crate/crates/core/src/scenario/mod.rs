//! Experiment engine: reference trajectories, seeded disturbance streams,
//! closed-loop simulation with any governor, metrics and timing.

mod cache;
pub mod models;
mod registry;
mod run;
mod stream;
mod trajectory;

pub use cache::{CacheStatus, SetCache, SetKey, SetSpec, CACHE_ENV};
pub use registry::{canonical_scenarios, find_scenario, scenario_names, LAMBDA_PRESET, PERTURBED_WINDOW};
pub use run::{
    build_drg_governor, build_governor, governor_set_key, run_scenario, run_scenario_with, run_timing_comparison, run_timing_comparison_with, simulate, RunOptions, ScenarioResult, StepRecord, Summary,
    TimingRow,
};
pub use stream::{unit_uniform, DisturbanceStream};
pub use trajectory::{PreviewDrift, ReferenceTrajectory, Segment};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{matrix_from_rows, matrix_to_rows, DenseMatrix, DenseVector};
use crate::polytope::Polytope;
use crate::sysmod::{DisturbedModel, StateSpaceModel};

fn rows_or_empty(rows: &[Vec<f64>], ncols: usize) -> Result<DenseMatrix> {
    if rows.is_empty() {
        Ok(DenseMatrix::zeros(0, ncols))
    } else {
        matrix_from_rows(rows)
    }
}

/// Discrete closed-loop model as plain nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub sample_time: f64,
}

impl ModelDocument {
    pub fn from_model(m: &StateSpaceModel) -> Result<Self> {
        let sample_time = m.sample_time.ok_or_else(|| Error::config("scenario models must be discrete"))?;
        Ok(ModelDocument {
            a: matrix_to_rows(&m.a),
            b: matrix_to_rows(&m.b),
            c: matrix_to_rows(&m.c),
            d: matrix_to_rows(&m.d),
            sample_time,
        })
    }

    pub fn to_model(&self) -> Result<StateSpaceModel> {
        StateSpaceModel::discrete(
            matrix_from_rows(&self.a)?,
            matrix_from_rows(&self.b)?,
            matrix_from_rows(&self.c)?,
            matrix_from_rows(&self.d)?,
            self.sample_time,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeDocument {
    pub hmat: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl PolytopeDocument {
    pub fn from_polytope(p: &Polytope) -> Self {
        PolytopeDocument { hmat: matrix_to_rows(&p.hmat), h: p.h.iter().copied().collect() }
    }

    pub fn to_polytope(&self, dim: usize) -> Result<Polytope> {
        Polytope::new(rows_or_empty(&self.hmat, dim)?, DenseVector::from_vec(self.h.clone()))
    }
}

/// Additive disturbance `x⁺ = … + B_w w`, `y = … + D_w w`, with `w` uniform on
/// the box `lo <= w <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub b_w: Vec<Vec<f64>>,
    pub d_w: Vec<Vec<f64>>,
}

impl DisturbanceSpec {
    pub fn to_model(&self, base: &StateSpaceModel) -> Result<DisturbedModel> {
        let set = Polytope::from_box(&self.lo, &self.hi)?;
        DisturbedModel::new(base.clone(), matrix_from_rows(&self.b_w)?, matrix_from_rows(&self.d_w)?, set)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Governor variant and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GovernorConfig {
    Srg,
    RobustSrg,
    /// Same horizon on every input channel.
    Prg { horizon: usize },
    MultiN { horizons: Vec<usize> },
    DisturbancePrg { horizon: usize },
    /// Same λ vector on every input channel.
    LambdaPrg { lambdas: Vec<f64> },
    MultiInputPrg { horizons: Vec<usize> },
    DrgPrg { horizons: Vec<usize> },
    Cg {
        horizon: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<Vec<Vec<f64>>>,
    },
}

impl GovernorConfig {
    /// Short file-name-safe label.
    pub fn label(&self) -> String {
        fn span(h: &[usize]) -> String {
            let contiguous = h.windows(2).all(|w| w[1] == w[0] + 1);
            match (h.first(), h.last()) {
                (Some(a), Some(b)) if contiguous && h.len() > 2 => format!("{a}-{b}"),
                _ => h.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("_"),
            }
        }
        match self {
            GovernorConfig::Srg => "srg".into(),
            GovernorConfig::RobustSrg => "robust_srg".into(),
            GovernorConfig::Prg { horizon } => format!("prg_n{horizon}"),
            GovernorConfig::MultiN { horizons } => format!("multi_n_{}", span(horizons)),
            GovernorConfig::DisturbancePrg { horizon } => format!("disturbance_prg_n{horizon}"),
            GovernorConfig::LambdaPrg { lambdas } => format!("lambda_prg_n{}", lambdas.len()),
            GovernorConfig::MultiInputPrg { horizons } => format!("multi_input_prg_{}", span(horizons)),
            GovernorConfig::DrgPrg { horizons } => format!("drg_prg_{}", span(horizons)),
            GovernorConfig::Cg { horizon, .. } => format!("cg_n{horizon}"),
        }
    }

    pub fn kind(&self) -> crate::governor::GovernorKind {
        use crate::governor::GovernorKind as K;
        match self {
            GovernorConfig::Srg => K::Srg,
            GovernorConfig::RobustSrg => K::RobustSrg,
            GovernorConfig::Prg { .. } => K::Prg,
            GovernorConfig::MultiN { .. } => K::MultiN,
            GovernorConfig::DisturbancePrg { .. } => K::DisturbancePrg,
            GovernorConfig::LambdaPrg { .. } => K::LambdaPrg,
            GovernorConfig::MultiInputPrg { .. } => K::MultiInputPrg,
            GovernorConfig::DrgPrg { .. } => K::DrgPrg,
            GovernorConfig::Cg { .. } => K::Cg,
        }
    }

    pub fn needs_disturbance(&self) -> bool {
        matches!(self, GovernorConfig::RobustSrg | GovernorConfig::DisturbancePrg { .. })
    }
}

/// A fully parameterized experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub model: ModelDocument,
    pub constraints: PolytopeDocument,
    pub trajectory: ReferenceTrajectory,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceSpec>,
    /// Governors the scenario is meant to be run with.
    pub governors: Vec<GovernorConfig>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    /// Provenance of the constants: which are given and which are reconstructed.
    #[serde(default)]
    pub notes: Vec<String>,
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_t_max() -> usize {
    500
}

impl Scenario {
    pub fn model(&self) -> Result<StateSpaceModel> {
        self.model.to_model()
    }

    pub fn constraint_set(&self) -> Result<Polytope> {
        self.constraints.to_polytope(self.model.c.len())
    }

    pub fn disturbed_model(&self) -> Result<Option<DisturbedModel>> {
        match &self.disturbance {
            Some(d) => Ok(Some(d.to_model(&self.model()?)?)),
            None => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.model()?;
        m.ensure_stable()?;
        let y = self.constraint_set()?;
        if y.dim() != m.n_outputs() {
            return Err(Error::config("constraint dimension differs from the output count"));
        }
        self.trajectory.validate()?;
        if self.trajectory.channels() != m.n_inputs() {
            return Err(Error::config("trajectory channel count differs from the input count"));
        }
        if let Some(d) = &self.disturbance {
            d.to_model(&m)?;
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
