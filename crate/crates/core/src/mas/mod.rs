//! Maximal admissible sets: standard, lifted preview, disturbance preview,
//! polytopic robust, and the stochastic-mixing lifted variant.

mod abar;
mod build;

pub use abar::{AbarKind, PreviewAMatrix};
pub use build::{
    build_disturbance_preview_mas, build_lifted_mas, build_mas, build_polytopic_robust_mas, build_robust_srg_set,
    prediction_rows, BuildOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{matrix_from_rows, matrix_to_rows, DenseMatrix, DenseVector, TOL};
use crate::polytope::{support_rows, Support};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetVariant {
    Standard,
    Lifted,
    DisturbancePreview,
    PolytopicRobust,
    LambdaLifted,
}

impl SetVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            SetVariant::Standard => "standard",
            SetVariant::Lifted => "lifted",
            SetVariant::DisturbancePreview => "disturbance_preview",
            SetVariant::PolytopicRobust => "polytopic_robust",
            SetVariant::LambdaLifted => "lambda_lifted",
        }
    }
}

/// `{(x, v, w) : H_x x + H_v v + H_w w <= h}`; `H_w` has zero columns except
/// for the disturbance-preview variant.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSet {
    pub hx: DenseMatrix,
    pub hv: DenseMatrix,
    pub hw: DenseMatrix,
    pub h: DenseVector,
    /// Largest per-channel preview horizon.
    pub horizon: usize,
    pub t_star: usize,
    pub epsilon: f64,
    pub variant: SetVariant,
    /// Dynamics of the `v` block (`Ā`; identity for constant-command sets).
    pub a_bar: PreviewAMatrix,
}

impl AdmissibleSet {
    pub fn n_rows(&self) -> usize {
        self.h.len()
    }

    pub fn n_states(&self) -> usize {
        self.hx.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.hv.ncols()
    }

    pub fn n_disturbance_params(&self) -> usize {
        self.hw.ncols()
    }

    fn check(&self, x: &DenseVector, v: &DenseVector, w: Option<&DenseVector>) -> Result<()> {
        let wlen = w.map_or(0, |w| w.len());
        if x.len() != self.n_states() || v.len() != self.n_params() || wlen != self.n_disturbance_params() {
            return Err(Error::InputValidation(format!(
                "point blocks ({}, {}, {wlen}) do not match set blocks ({}, {}, {})",
                x.len(),
                v.len(),
                self.n_states(),
                self.n_params(),
                self.n_disturbance_params()
            )));
        }
        Ok(())
    }

    /// `h - H_x x - H_v v - H_w w`.
    pub fn margin(&self, x: &DenseVector, v: &DenseVector, w: Option<&DenseVector>) -> Result<DenseVector> {
        self.check(x, v, w)?;
        let mut m = &self.h - &self.hx * x - &self.hv * v;
        if let Some(w) = w {
            m -= &self.hw * w;
        }
        Ok(m)
    }

    pub fn contains(&self, x: &DenseVector, v: &DenseVector) -> Result<bool> {
        self.contains_with(x, v, None)
    }

    pub fn contains_with(&self, x: &DenseVector, v: &DenseVector, w: Option<&DenseVector>) -> Result<bool> {
        Ok(self.margin(x, v, w)?.iter().all(|m| *m >= -TOL.feasibility))
    }

    /// `max c·v` over the slice of the set at fixed `x` (and `w`).
    pub fn slice_support(&self, x: &DenseVector, w: Option<&DenseVector>, c: &DenseVector) -> Result<Support> {
        let zero = DenseVector::zeros(self.n_params());
        let rhs = self.margin(x, &zero, w)?;
        let active: Vec<usize> = (0..self.n_rows()).collect();
        support_rows(&self.hv, &rhs, &active, c)
    }

    /// Full stacked row matrix `[H_x | H_v | H_w]`.
    pub fn stacked(&self) -> DenseMatrix {
        crate::numerics::hstack(&[&self.hx, &self.hv, &self.hw])
    }

    pub fn to_document(&self) -> AdmissibleSetDocument {
        AdmissibleSetDocument {
            format: AdmissibleSetDocument::FORMAT.into(),
            version: AdmissibleSetDocument::FORMAT_VERSION,
            variant: self.variant,
            horizon: self.horizon,
            horizons: self.a_bar.horizons.clone(),
            epsilon: self.epsilon,
            t_star: self.t_star,
            a_bar_kind: self.a_bar.kind.clone(),
            a_bar: matrix_to_rows(&self.a_bar.matrix),
            n_states: self.n_states(),
            n_params: self.n_params(),
            n_disturbance_params: self.n_disturbance_params(),
            rows: matrix_to_rows(&self.stacked()),
            h: self.h.iter().copied().collect(),
        }
    }

    pub fn from_document(doc: &AdmissibleSetDocument) -> Result<Self> {
        if doc.format != AdmissibleSetDocument::FORMAT || doc.version != AdmissibleSetDocument::FORMAT_VERSION {
            return Err(Error::Serialization(format!("unsupported document {} v{}", doc.format, doc.version)));
        }
        let width = doc.n_states + doc.n_params + doc.n_disturbance_params;
        if doc.rows.len() != doc.h.len() || doc.rows.iter().any(|r| r.len() != width) {
            return Err(Error::Serialization("admissible set rows do not match declared block sizes".into()));
        }
        let stacked = if doc.rows.is_empty() { DenseMatrix::zeros(0, width) } else { matrix_from_rows(&doc.rows)? };
        let a_bar = PreviewAMatrix {
            matrix: matrix_from_rows(&doc.a_bar)?,
            horizons: doc.horizons.clone(),
            kind: doc.a_bar_kind.clone(),
        };
        if a_bar.dim() != doc.n_params && doc.variant != SetVariant::DisturbancePreview {
            return Err(Error::Serialization("preview matrix size does not match parameter block".into()));
        }
        let m = stacked.nrows();
        Ok(AdmissibleSet {
            hx: stacked.view((0, 0), (m, doc.n_states)).into_owned(),
            hv: stacked.view((0, doc.n_states), (m, doc.n_params)).into_owned(),
            hw: stacked.view((0, doc.n_states + doc.n_params), (m, doc.n_disturbance_params)).into_owned(),
            h: DenseVector::from_vec(doc.h.clone()),
            horizon: doc.horizon,
            t_star: doc.t_star,
            epsilon: doc.epsilon,
            variant: doc.variant,
            a_bar,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }
}

/// On-disk form of an [`AdmissibleSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSetDocument {
    pub format: String,
    pub version: u32,
    pub variant: SetVariant,
    pub horizon: usize,
    pub horizons: Vec<usize>,
    pub epsilon: f64,
    pub t_star: usize,
    pub a_bar_kind: AbarKind,
    pub a_bar: Vec<Vec<f64>>,
    pub n_states: usize,
    pub n_params: usize,
    pub n_disturbance_params: usize,
    /// Row-major `[H_x | H_v | H_w]`.
    pub rows: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl AdmissibleSetDocument {
    pub const FORMAT: &'static str = "prgov.admissible_set";
    pub const FORMAT_VERSION: u32 = 1;
}

/// Pads a lifted command of horizon `n_i` to horizon `n_q` by repeating its
/// last entry.
pub fn pad_lifted_point(v: &DenseVector, n_i: usize, n_q: usize) -> Result<DenseVector> {
    if v.len() != n_i + 1 {
        return Err(Error::InputValidation(format!("lifted point has length {}, expected {}", v.len(), n_i + 1)));
    }
    if n_i > n_q {
        return Err(Error::InputValidation(format!("cannot pad horizon {n_i} down to {n_q}")));
    }
    let last = v[n_i];
    Ok(DenseVector::from_fn(n_q + 1, |k, _| if k <= n_i { v[k] } else { last }))
}
