//! Plant models and constraint sets of the canonical examples.

use crate::error::Result;
use crate::numerics::DenseMatrix;
use crate::polytope::Polytope;
use crate::sysmod::{close_state_feedback, discretize_zoh, StateSpaceModel};

pub const SAMPLE_TIME: f64 = 0.01;
pub const ONE_LINK_LIMIT: f64 = 45.0;
pub const TWO_LINK_LIMIT: f64 = 60.0;

fn dm(r: usize, c: usize, v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_row_slice(r, c, v)
}

/// One-link arm `θ̈ = -14.7 θ + 3 τ`, output θ.
pub fn one_link_continuous() -> Result<StateSpaceModel> {
    StateSpaceModel::continuous(
        dm(2, 2, &[0.0, 1.0, -14.7, 0.0]),
        dm(2, 1, &[0.0, 3.0]),
        dm(1, 2, &[1.0, 0.0]),
        dm(1, 1, &[0.0]),
    )
}

pub fn one_link_gain() -> DenseMatrix {
    dm(1, 2, &[61.77, 9.64])
}

pub fn one_link_precompensator() -> DenseMatrix {
    dm(1, 1, &[66.67])
}

/// ZOH at 10 ms with `τ = 66.67 v - 61.77 x₁ - 9.64 x₂`.
pub fn one_link_closed_loop() -> Result<StateSpaceModel> {
    let plant = discretize_zoh(&one_link_continuous()?, SAMPLE_TIME)?;
    close_state_feedback(&plant, &one_link_gain(), &one_link_precompensator())
}

pub fn one_link_constraints() -> Result<Polytope> {
    Polytope::symmetric_box(&[ONE_LINK_LIMIT])
}

/// Two-link arm, states `(θ₁, θ₂, θ̇₁, θ̇₂)`, outputs the joint angles.
pub fn two_link_continuous() -> Result<StateSpaceModel> {
    StateSpaceModel::continuous(
        dm(4, 4, &[0., 0., 1., 0., 0., 0., 0., 1., -0.46, -0.62, 0., 0., 0.25, -6.62, 0., 0.]),
        dm(4, 2, &[0., 0., 0., 0., 0.78, -0.04, 0.04, 0.13]),
        dm(2, 4, &[1., 0., 0., 0., 0., 1., 0., 0.]),
        DenseMatrix::zeros(2, 2),
    )
}

pub fn two_link_gain() -> DenseMatrix {
    dm(2, 4, &[750., 155., 59., 19., -226., 2867., -18., 350.])
}

pub fn two_link_precompensator() -> DenseMatrix {
    dm(2, 2, &[769.23, 0.0, 0.0, 3333.3])
}

pub fn two_link_closed_loop() -> Result<StateSpaceModel> {
    let plant = discretize_zoh(&two_link_continuous()?, SAMPLE_TIME)?;
    close_state_feedback(&plant, &two_link_gain(), &two_link_precompensator())
}

pub fn two_link_constraints() -> Result<Polytope> {
    Polytope::symmetric_box(&[TWO_LINK_LIMIT, TWO_LINK_LIMIT])
}
