//! Discrete/continuous LTI models: ZOH discretization, state-feedback loop
//! closure, input lifting over a preview horizon, and rational transfer
//! matrices for decoupling.

mod decouple;
mod poly;

pub use decouple::{build_decoupler, Decoupler, MimoFilter};
pub use poly::{realize_tf, tf_from_ss, Polynomial, Rational, RationalTf};

use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, matrix_exponential, spectral_radius, DenseMatrix, DenseVector};
use crate::polytope::Polytope;

/// LTI model `x⁺ = Ax + Bu`, `y = Cx + Du` (or `ẋ = ...` when `sample_time` is `None`).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
    pub d: DenseMatrix,
    pub sample_time: Option<f64>,
}

impl StateSpaceModel {
    pub fn new(
        a: DenseMatrix,
        b: DenseMatrix,
        c: DenseMatrix,
        d: DenseMatrix,
        sample_time: Option<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::config(format!("A must be square, got {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::config(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::config(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::config(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if let Some(ts) = sample_time {
            if !(ts > 0.0 && ts.is_finite()) {
                return Err(Error::config(format!("sample time must be positive, got {ts}")));
            }
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            ensure_finite(m, name)?;
        }
        Ok(StateSpaceModel { a, b, c, d, sample_time })
    }

    pub fn discrete(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix, d: DenseMatrix, ts: f64) -> Result<Self> {
        Self::new(a, b, c, d, Some(ts))
    }

    pub fn continuous(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix, d: DenseMatrix) -> Result<Self> {
        Self::new(a, b, c, d, None)
    }

    /// Static gain `y = D u` as a zero-state model.
    pub fn static_gain(d: DenseMatrix, ts: f64) -> Result<Self> {
        let (p, m) = d.shape();
        Self::discrete(DenseMatrix::zeros(0, 0), DenseMatrix::zeros(0, m), DenseMatrix::zeros(p, 0), d, ts)
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_discrete(&self) -> bool {
        self.sample_time.is_some()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.a)
    }

    /// Rejects discrete models whose spectral radius is not below one.
    pub fn ensure_stable(&self) -> Result<()> {
        if !self.is_discrete() {
            return Err(Error::config("stability gate expects a discrete-time model"));
        }
        let rho = self.spectral_radius()?;
        if rho >= 1.0 {
            return Err(Error::config(format!(
                "model is not asymptotically stable: eigenvalue magnitude {rho:.6} >= 1"
            )));
        }
        Ok(())
    }

    /// Steady-state gain `C (I - A)⁻¹ B + D` of a discrete model.
    pub fn dc_gain(&self) -> Result<DenseMatrix> {
        let n = self.n_states();
        if n == 0 {
            return Ok(self.d.clone());
        }
        let lu = (DenseMatrix::identity(n, n) - &self.a).lu();
        let x = lu
            .solve(&self.b)
            .ok_or_else(|| Error::numerical("I - A is singular, no steady state"))?;
        Ok(&self.c * x + &self.d)
    }

    pub fn output(&self, x: &DenseVector, u: &DenseVector) -> Result<DenseVector> {
        self.check_signal_dims(x, u)?;
        Ok(&self.c * x + &self.d * u)
    }

    /// One step of the difference equation. Returns `(x(t+1), y(t))`.
    pub fn step(&self, x: &DenseVector, u: &DenseVector) -> Result<(DenseVector, DenseVector)> {
        self.check_signal_dims(x, u)?;
        Ok((&self.a * x + &self.b * u, &self.c * x + &self.d * u))
    }

    fn check_signal_dims(&self, x: &DenseVector, u: &DenseVector) -> Result<()> {
        if x.len() != self.n_states() || u.len() != self.n_inputs() {
            return Err(Error::InputValidation(format!(
                "state/input length {}/{} does not match model {}/{}",
                x.len(),
                u.len(),
                self.n_states(),
                self.n_inputs()
            )));
        }
        Ok(())
    }

    /// Evaluates `C (zI - A)⁻¹ B + D` at a complex point.
    pub fn frequency_response(&self, z: num_complex::Complex64) -> Result<nalgebra::DMatrix<num_complex::Complex64>> {
        use num_complex::Complex64;
        let n = self.n_states();
        let to_c = |m: &DenseMatrix| m.map(|v| Complex64::new(v, 0.0));
        let mut zi_a = -to_c(&self.a);
        for i in 0..n {
            zi_a[(i, i)] += z;
        }
        let x = zi_a
            .lu()
            .solve(&to_c(&self.b))
            .ok_or_else(|| Error::numerical("zI - A singular at evaluation point"))?;
        Ok(to_c(&self.c) * x + to_c(&self.d))
    }
}

/// Model with additive bounded disturbance:
/// `x⁺ = Ax + Bv + B_w w`, `y = Cx + Dv + D_w w`, `w ∈ W`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbedModel {
    pub base: StateSpaceModel,
    pub b_w: DenseMatrix,
    pub d_w: DenseMatrix,
    pub disturbance_set: Polytope,
}

impl DisturbedModel {
    pub fn new(base: StateSpaceModel, b_w: DenseMatrix, d_w: DenseMatrix, disturbance_set: Polytope) -> Result<Self> {
        let nw = b_w.ncols();
        if b_w.nrows() != base.n_states() || d_w.nrows() != base.n_outputs() || d_w.ncols() != nw {
            return Err(Error::config("disturbance matrices do not match the base model"));
        }
        if disturbance_set.dim() != nw {
            return Err(Error::config("disturbance set dimension does not match B_w"));
        }
        match disturbance_set.vertices() {
            Some(v) if !v.is_empty() => {}
            _ => return Err(Error::config("disturbance set needs a vertex list")),
        }
        if disturbance_set.h.iter().any(|&o| o < 0.0) {
            return Err(Error::config("disturbance set must contain the origin"));
        }
        Ok(DisturbedModel { base, b_w, d_w, disturbance_set })
    }

    pub fn n_disturbances(&self) -> usize {
        self.b_w.ncols()
    }

    pub fn step(&self, x: &DenseVector, u: &DenseVector, w: &DenseVector) -> Result<(DenseVector, DenseVector)> {
        if w.len() != self.n_disturbances() {
            return Err(Error::InputValidation("disturbance length mismatch".into()));
        }
        let (xn, y) = self.base.step(x, u)?;
        Ok((xn + &self.b_w * w, y + &self.d_w * w))
    }
}

/// Zero-order-hold discretization via the augmented-matrix exponential.
pub fn discretize_zoh(continuous: &StateSpaceModel, ts: f64) -> Result<StateSpaceModel> {
    if continuous.is_discrete() {
        return Err(Error::config("model is already discrete"));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::config(format!("sample time must be positive, got {ts}")));
    }
    let n = continuous.n_states();
    let m = continuous.n_inputs();
    let mut aug = DenseMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&continuous.a);
    aug.view_mut((0, n), (n, m)).copy_from(&continuous.b);
    let e = matrix_exponential(&aug, ts)?;
    let ad = e.view((0, 0), (n, n)).into_owned();
    let bd = e.view((0, n), (n, m)).into_owned();
    StateSpaceModel::discrete(ad, bd, continuous.c.clone(), continuous.d.clone(), ts)
}

/// Closes `u = precomp·v - K x` around a discrete plant.
pub fn close_state_feedback(plant: &StateSpaceModel, k: &DenseMatrix, precomp: &DenseMatrix) -> Result<StateSpaceModel> {
    let (n, m) = (plant.n_states(), plant.n_inputs());
    if k.shape() != (m, n) {
        return Err(Error::config(format!("K must be {m}x{n}, got {}x{}", k.nrows(), k.ncols())));
    }
    if precomp.shape() != (m, m) {
        return Err(Error::config(format!("precompensator must be {m}x{m}")));
    }
    let closed = StateSpaceModel::new(
        &plant.a - &plant.b * k,
        &plant.b * precomp,
        &plant.c - &plant.d * k,
        &plant.d * precomp,
        plant.sample_time,
    )?;
    closed.ensure_stable()?;
    Ok(closed)
}

/// Single-input lifting: `B̃ = [B 0 … 0]`, `D̃ = [D 0 … 0]` with `N+1` blocks.
pub fn lift_input(model: &StateSpaceModel, horizon: usize) -> Result<StateSpaceModel> {
    if model.n_inputs() != 1 {
        return Err(Error::config(format!(
            "lift_input expects a single-input model, got {} inputs",
            model.n_inputs()
        )));
    }
    lift_input_multi(model, &[horizon])
}

/// Per-channel lifting: input column `j` becomes a block `[B_j 0 … 0]` of
/// width `N_j + 1`, blocks concatenated in channel order.
pub fn lift_input_multi(model: &StateSpaceModel, horizons: &[usize]) -> Result<StateSpaceModel> {
    if horizons.len() != model.n_inputs() {
        return Err(Error::config(format!(
            "{} horizons given for {} inputs",
            horizons.len(),
            model.n_inputs()
        )));
    }
    let width: usize = horizons.iter().map(|h| h + 1).sum();
    let mut b = DenseMatrix::zeros(model.n_states(), width);
    let mut d = DenseMatrix::zeros(model.n_outputs(), width);
    let mut col = 0;
    for (j, h) in horizons.iter().enumerate() {
        b.set_column(col, &model.b.column(j));
        d.set_column(col, &model.d.column(j));
        col += h + 1;
    }
    StateSpaceModel::new(model.a.clone(), b, model.c.clone(), d, model.sample_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs_diff;

    fn dm(r: usize, c: usize, v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_slice(r, c, v)
    }

    fn one_link_continuous() -> StateSpaceModel {
        StateSpaceModel::continuous(
            dm(2, 2, &[0.0, 1.0, -14.7, 0.0]),
            dm(2, 1, &[0.0, 3.0]),
            dm(1, 2, &[1.0, 0.0]),
            dm(1, 1, &[0.0]),
        )
        .unwrap()
    }

    #[test]
    fn integrator_discretization() {
        let m = StateSpaceModel::continuous(
            DenseMatrix::zeros(2, 2),
            DenseMatrix::identity(2, 2),
            DenseMatrix::identity(2, 2),
            DenseMatrix::zeros(2, 2),
        )
        .unwrap();
        let d = discretize_zoh(&m, 0.5).unwrap();
        assert_eq!(d.a, DenseMatrix::identity(2, 2));
        assert!(max_abs_diff(&d.b, &(DenseMatrix::identity(2, 2) * 0.5)) < 1e-15);
    }

    #[test]
    fn one_link_discretization_matches_series_oracle() {
        let m = one_link_continuous();
        let d = discretize_zoh(&m, 0.01).unwrap();
        // A_d = Σ (A t)^k / k!, B_d = Σ A^k t^{k+1}/(k+1)! B
        let mut ad = DenseMatrix::identity(2, 2);
        let mut gamma = DenseMatrix::identity(2, 2) * 0.01;
        let mut pow = DenseMatrix::identity(2, 2);
        let mut fact = 1.0;
        for k in 1..30 {
            pow = &pow * &m.a;
            fact *= k as f64;
            ad += &pow * 0.01f64.powi(k) / fact;
            gamma += &pow * 0.01f64.powi(k + 1) / (fact * (k + 1) as f64);
        }
        assert!(max_abs_diff(&d.a, &ad) < 1e-12);
        assert!(max_abs_diff(&d.b, &(gamma * &m.b)) < 1e-12);
    }

    #[test]
    fn discretization_semigroup() {
        let m = one_link_continuous();
        let d1 = discretize_zoh(&m, 0.01).unwrap();
        let d2 = discretize_zoh(&m, 0.02).unwrap();
        assert!(max_abs_diff(&(&d1.a * &d1.a), &d2.a) < 1e-10);
    }

    #[test]
    fn feedback_with_zero_gain_is_identity_map() {
        let plant = discretize_zoh(&one_link_continuous(), 0.01).unwrap();
        let stable = StateSpaceModel { a: &plant.a * 0.5, ..plant };
        let closed = close_state_feedback(&stable, &DenseMatrix::zeros(1, 2), &DenseMatrix::identity(1, 1)).unwrap();
        assert_eq!(closed, stable);
    }

    #[test]
    fn one_link_closed_loop_tracks_with_unit_dc_gain() {
        let plant = discretize_zoh(&one_link_continuous(), 0.01).unwrap();
        let closed = close_state_feedback(&plant, &dm(1, 2, &[61.77, 9.64]), &dm(1, 1, &[66.67])).unwrap();
        let g = closed.dc_gain().unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-3, "dc gain {}", g[(0, 0)]);
    }

    #[test]
    fn unstable_feedback_rejected_with_magnitude() {
        let plant = discretize_zoh(&one_link_continuous(), 0.01).unwrap();
        let err = close_state_feedback(&plant, &DenseMatrix::zeros(1, 2), &DenseMatrix::identity(1, 1)).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("eigenvalue magnitude")),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn lifting_layout() {
        let m = StateSpaceModel::discrete(
            dm(2, 2, &[0.5, 0.0, 0.0, 0.5]),
            dm(2, 1, &[0.0, 3.0]),
            dm(1, 2, &[1.0, 0.0]),
            dm(1, 1, &[0.0]),
            0.01,
        )
        .unwrap();
        assert_eq!(lift_input(&m, 0).unwrap(), m);
        let l = lift_input(&m, 2).unwrap();
        assert_eq!(l.b, dm(2, 3, &[0.0, 0.0, 0.0, 3.0, 0.0, 0.0]));
        assert_eq!(l.d.shape(), (1, 3));
    }

    #[test]
    fn multi_lifting_layout() {
        let m = StateSpaceModel::discrete(
            DenseMatrix::identity(2, 2) * 0.5,
            dm(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            DenseMatrix::identity(2, 2),
            DenseMatrix::zeros(2, 2),
            0.01,
        )
        .unwrap();
        assert_eq!(lift_input_multi(&m, &[0, 0]).unwrap(), m);
        let l = lift_input_multi(&m, &[1, 2]).unwrap();
        assert_eq!(l.b, dm(2, 5, &[1.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0, 4.0, 0.0, 0.0]));
        assert!(lift_input(&m, 1).is_err());
    }

    #[test]
    fn zero_state_zero_output() {
        let m = StateSpaceModel::discrete(
            DenseMatrix::identity(2, 2) * 0.5,
            dm(2, 1, &[1.0, 1.0]),
            dm(1, 2, &[1.0, 0.0]),
            dm(1, 1, &[0.0]),
            0.1,
        )
        .unwrap();
        let (xn, y) = m.step(&DenseVector::zeros(2), &DenseVector::zeros(1)).unwrap();
        assert_eq!(xn, DenseVector::zeros(2));
        assert_eq!(y, DenseVector::zeros(1));
        assert!(m.step(&DenseVector::zeros(3), &DenseVector::zeros(1)).is_err());
    }
}
