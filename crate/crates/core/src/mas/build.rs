use log::debug;

use super::{AdmissibleSet, PreviewAMatrix, SetVariant};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::polytope::{redundancy_filter, support_rows, Polytope, Support};
use crate::sysmod::{DisturbedModel, StateSpaceModel};

/// Default tightening and iteration caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub epsilon: f64,
    pub t_max: usize,
    pub iter_max: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { epsilon: 0.01, t_max: 500, iter_max: 200 }
    }
}

/// Growing list of unit-norm rows `c·z <= d`.
struct RowBank {
    dim: usize,
    rows: Vec<DenseVector>,
    offsets: Vec<f64>,
}

impl RowBank {
    fn new(dim: usize) -> Self {
        RowBank { dim, rows: Vec::new(), offsets: Vec::new() }
    }

    fn push(&mut self, row: DenseVector, offset: f64) {
        let norm = row.norm();
        if norm > 0.0 {
            self.rows.push(row / norm);
            self.offsets.push(offset / norm);
        } else if offset < 0.0 {
            // 0 <= negative: keeps the set empty
            self.rows.push(row);
            self.offsets.push(offset);
        }
    }

    fn matrix(&self) -> (DenseMatrix, DenseVector) {
        let m = DenseMatrix::from_fn(self.rows.len(), self.dim, |i, j| self.rows[i][j]);
        (m, DenseVector::from_vec(self.offsets.clone()))
    }

    /// How far `c·z <= d` cuts into the current set (`None` when implied).
    fn excess(mat: &DenseMatrix, h: &DenseVector, c: &DenseVector, d: f64) -> Result<Option<f64>> {
        let norm = c.norm();
        if norm == 0.0 {
            return Ok(if d >= -crate::numerics::TOL.redundancy { None } else { Some(-d) });
        }
        let active: Vec<usize> = (0..h.len()).collect();
        let cn = c / norm;
        let dn = d / norm;
        Ok(match support_rows(mat, h, &active, &cn)? {
            Support::Bounded(v) if v <= dn + crate::numerics::TOL.redundancy => None,
            Support::Bounded(v) => Some(v - dn),
            Support::Unbounded => Some(f64::INFINITY),
            // an empty set implies every row; keep rows anyway so the
            // emptiness stays visible
            Support::Empty => Some(0.0),
        })
    }

    fn prune(&mut self) -> Result<()> {
        let (m, h) = self.matrix();
        let keep = redundancy_filter(&m, &h, &[], |_| true)?;
        self.rows = keep.iter().map(|&i| self.rows[i].clone()).collect();
        self.offsets = keep.iter().map(|&i| self.offsets[i]).collect();
        Ok(())
    }

    fn pruned(self) -> Result<(DenseMatrix, DenseVector)> {
        let (m, h) = self.matrix();
        let keep = redundancy_filter(&m, &h, &[], |_| true)?;
        Ok((m.select_rows(&keep), h.select_rows(&keep)))
    }
}

/// Autonomous prediction model `z⁺ = 𝒜 z`, `y = 𝒞 z`.
struct Prediction {
    dynamics: DenseMatrix,
    output: DenseMatrix,
}

impl Prediction {
    /// Composite of a (lifted) model with parameter dynamics `a_p`.
    fn new(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix, d: &DenseMatrix, a_p: &DenseMatrix) -> Self {
        let n = a.nrows();
        let p = a_p.nrows();
        let mut dynamics = DenseMatrix::zeros(n + p, n + p);
        dynamics.view_mut((0, 0), (n, n)).copy_from(a);
        dynamics.view_mut((0, n), (n, p)).copy_from(b);
        dynamics.view_mut((n, n), (p, p)).copy_from(a_p);
        let output = crate::numerics::hstack(&[c, d]);
        Prediction { dynamics, output }
    }
}

/// Iterates prediction times, adding rows `S 𝒞 𝒜ᵗ z <= s_t` that are not
/// implied by the rows already present. Stops at the first `t >= t_min`
/// where nothing new appears and returns `(rows, offsets, t*)`.
fn generate(
    pred: &Prediction,
    s: &DenseMatrix,
    offsets: &dyn Fn(usize) -> DenseVector,
    seed: RowBank,
    t_min: usize,
    t_max: usize,
) -> Result<(DenseMatrix, DenseVector, usize)> {
    let mut bank = seed;
    let mut phi = pred.output.clone();
    let mut last_margin = f64::INFINITY;
    for t in 0..=t_max + 1 {
        let cand = s * &phi;
        let off = offsets(t);
        let (mat, h) = bank.matrix();
        let mut fresh = Vec::new();
        let mut worst: f64 = 0.0;
        for i in 0..cand.nrows() {
            let c = cand.row(i).transpose();
            if let Some(ex) = RowBank::excess(&mat, &h, &c, off[i])? {
                worst = worst.max(ex);
                fresh.push((c, off[i]));
            }
        }
        if fresh.is_empty() && t >= t_min.max(1) {
            let (m, h) = bank.pruned()?;
            debug!("finitely determined at t* = {} with {} rows", t - 1, h.len());
            return Ok((m, h, t - 1));
        }
        if t > t_max {
            break;
        }
        last_margin = worst;
        for (c, d) in fresh {
            bank.push(c, d);
        }
        phi = &phi * &pred.dynamics;
    }
    Err(Error::NonTermination { t_max, last_margin })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// `C (I - A)⁻¹ B + D`.
fn static_gain(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    let x = (DenseMatrix::identity(n, n) - a)
        .lu()
        .solve(b)
        .ok_or_else(|| Error::numerical("I - A is singular"))?;
    Ok(c * x + d)
}

fn split(
    rows: DenseMatrix,
    h: DenseVector,
    n: usize,
    p: usize,
) -> (DenseMatrix, DenseMatrix, DenseMatrix, DenseVector) {
    let m = rows.nrows();
    let w = rows.ncols() - n - p;
    (
        rows.view((0, 0), (m, n)).into_owned(),
        rows.view((0, n), (m, p)).into_owned(),
        rows.view((0, n + p), (m, w)).into_owned(),
        h,
    )
}

fn output_polytope(model: &StateSpaceModel, y: &Polytope) -> Result<()> {
    if y.dim() != model.n_outputs() {
        return Err(Error::config(format!(
            "constraint set has dimension {} but the model has {} outputs",
            y.dim(),
            model.n_outputs()
        )));
    }
    Ok(())
}

/// Standard MAS over `(x, v)` with constant `v`.
pub fn build_mas(model: &StateSpaceModel, y: &Polytope, epsilon: f64, t_max: usize) -> Result<AdmissibleSet> {
    let mut set = build_lifted_mas(model, &PreviewAMatrix::identity(model.n_inputs()), y, epsilon, t_max)?;
    set.variant = SetVariant::Standard;
    Ok(set)
}

/// MAS of the composite `(x, v_N)` system for a lifted model.
pub fn build_lifted_mas(
    lifted: &StateSpaceModel,
    a_bar: &PreviewAMatrix,
    y: &Polytope,
    epsilon: f64,
    t_max: usize,
) -> Result<AdmissibleSet> {
    check_epsilon(epsilon)?;
    lifted.ensure_stable()?;
    output_polytope(lifted, y)?;
    if lifted.n_inputs() != a_bar.dim() {
        return Err(Error::config(format!(
            "lifted model has {} inputs but the preview matrix is {}x{}",
            lifted.n_inputs(),
            a_bar.dim(),
            a_bar.dim()
        )));
    }
    let n = lifted.n_states();
    let p = a_bar.dim();
    let pred = Prediction::new(&lifted.a, &lifted.b, &lifted.c, &lifted.d, &a_bar.matrix);
    let limit = a_bar.limit()?;
    let steady = &y.hmat * static_gain(&lifted.a, &lifted.b, &lifted.c, &lifted.d)? * &limit;
    let mut seed = RowBank::new(n + p);
    for i in 0..steady.nrows() {
        let mut row = DenseVector::zeros(n + p);
        row.rows_mut(n, p).copy_from(&steady.row(i).transpose());
        seed.push(row, (1.0 - epsilon) * y.h[i]);
    }
    let s = y.h.clone();
    let (rows, h, t_star) = generate(&pred, &y.hmat, &|_| s.clone(), seed, 1, t_max)?;
    let (hx, hv, hw, h) = split(rows, h, n, p);
    let variant = if a_bar.is_lambda() {
        SetVariant::LambdaLifted
    } else if p == lifted.n_inputs() && a_bar.horizons.iter().all(|h| *h == 0) {
        SetVariant::Standard
    } else {
        SetVariant::Lifted
    };
    Ok(AdmissibleSet {
        hx,
        hv,
        hw,
        h,
        horizon: a_bar.horizons.iter().copied().max().unwrap_or(0),
        t_star,
        epsilon,
        variant,
        a_bar: a_bar.clone(),
    })
}

/// Unpruned rows for prediction time `t` of a lifted set, over `(x, v_N)`.
pub fn prediction_rows(
    lifted: &StateSpaceModel,
    a_bar: &PreviewAMatrix,
    y: &Polytope,
    t: usize,
) -> (DenseMatrix, DenseVector) {
    let pred = Prediction::new(&lifted.a, &lifted.b, &lifted.c, &lifted.d, &a_bar.matrix);
    let mut phi = pred.output.clone();
    for _ in 0..t {
        phi = &phi * &pred.dynamics;
    }
    (&y.hmat * phi, y.h.clone())
}

/// Per-row worst case of `S·M·w` over the vertices of `W`.
fn worst_case(s: &DenseMatrix, map: &DenseMatrix, vertices: &[DenseVector]) -> DenseVector {
    let sm = s * map;
    DenseVector::from_fn(s.nrows(), |i, _| {
        vertices.iter().map(|w| sm.row(i).dot(&w.transpose())).fold(f64::NEG_INFINITY, f64::max)
    })
}

/// Offsets `s_t` of a chain of tightenings `s_{t+1} = s_t - δ_t`, plus the limit.
struct Tightening {
    steps: Vec<DenseVector>,
    limit: DenseVector,
}

/// `s_0 = s - worst(D_w W)` at prediction time `start`, then
/// `s_{start+k+1} = s_{start+k} - worst(C A^k B_w W)`; times before `start`
/// use the untightened `s`.
fn tighten(model: &DisturbedModel, y: &Polytope, start: usize, upto: usize) -> Result<Tightening> {
    let base = &model.base;
    let verts = model
        .disturbance_set
        .vertices()
        .ok_or_else(|| Error::config("disturbance set needs a vertex list"))?;
    let mut steps = vec![y.h.clone(); start.min(upto + 1)];
    let mut cur = &y.h - worst_case(&y.hmat, &model.d_w, verts);
    let mut ak_bw = model.b_w.clone();
    let scale = y.h.amax().max(1.0);
    let mut first_negative: Option<usize> = None;
    let mut t = start;
    loop {
        if first_negative.is_none() && cur.iter().any(|v| *v < 0.0) {
            first_negative = Some(t);
        }
        if t <= upto {
            steps.push(cur.clone());
        }
        let delta = worst_case(&y.hmat, &(&base.c * &ak_bw), verts);
        cur -= &delta;
        ak_bw = &base.a * ak_bw;
        t += 1;
        if t > upto && delta.amax() <= 1e-15 * scale {
            break;
        }
        if t > upto + 100_000 {
            return Err(Error::numerical("disturbance tightening did not converge"));
        }
    }
    if first_negative.is_none() && cur.iter().any(|v| *v < 0.0) {
        first_negative = Some(t);
    }
    if let Some(step) = first_negative {
        return Err(Error::InfeasibleRobustification { step });
    }
    Ok(Tightening { steps, limit: cur })
}

/// Robust set over `(x₀, v, w₀, …, w_N)` for a constant command with the
/// next `N+1` disturbances previewed and later ones unknown in `W`.
pub fn build_disturbance_preview_mas(
    model: &DisturbedModel,
    horizon: usize,
    y: &Polytope,
    epsilon: f64,
    t_max: usize,
) -> Result<AdmissibleSet> {
    check_epsilon(epsilon)?;
    let base = &model.base;
    base.ensure_stable()?;
    output_polytope(base, y)?;
    let (n, m, nw) = (base.n_states(), base.n_inputs(), model.n_disturbances());
    let np = m + (horizon + 1) * nw;
    // parameters (v, w_0..w_N): v held, the w window shifts with zero fill
    let mut a_p = DenseMatrix::zeros(np, np);
    a_p.view_mut((0, 0), (m, m)).fill_with_identity();
    for k in 0..horizon {
        a_p.view_mut((m + k * nw, m + (k + 1) * nw), (nw, nw)).fill_with_identity();
    }
    let mut b_p = DenseMatrix::zeros(n, np);
    b_p.view_mut((0, 0), (n, m)).copy_from(&base.b);
    b_p.view_mut((0, m), (n, nw)).copy_from(&model.b_w);
    let mut d_p = DenseMatrix::zeros(base.n_outputs(), np);
    d_p.view_mut((0, 0), (base.n_outputs(), m)).copy_from(&base.d);
    d_p.view_mut((0, m), (base.n_outputs(), nw)).copy_from(&model.d_w);
    let pred = Prediction::new(&base.a, &b_p, &base.c, &d_p, &a_p);

    let tight = tighten(model, y, horizon + 1, t_max + 1)?;
    let steady = &y.hmat * static_gain(&base.a, &base.b, &base.c, &base.d)?;
    let mut seed = RowBank::new(n + np);
    for i in 0..steady.nrows() {
        let mut row = DenseVector::zeros(n + np);
        row.rows_mut(n, m).copy_from(&steady.row(i).transpose());
        seed.push(row, (1.0 - epsilon) * tight.limit[i]);
    }
    let wset = &model.disturbance_set;
    for k in 0..=horizon {
        for i in 0..wset.n_rows() {
            let mut row = DenseVector::zeros(n + np);
            row.rows_mut(n + m + k * nw, nw).copy_from(&wset.hmat.row(i).transpose());
            seed.push(row, wset.h[i]);
        }
    }
    let steps = tight.steps;
    let offsets = move |t: usize| steps[t.min(steps.len() - 1)].clone();
    let (rows, h, t_star) = generate(&pred, &y.hmat, &offsets, seed, horizon + 2, t_max)?;
    let (hx, hv, hw, h) = split(rows, h, n, m);
    Ok(AdmissibleSet {
        hx,
        hv,
        hw,
        h,
        horizon,
        t_star,
        epsilon,
        variant: SetVariant::DisturbancePreview,
        a_bar: PreviewAMatrix::identity(m),
    })
}

/// Robust constant-command set over `(x, v)` with every future disturbance
/// unknown in `W`.
pub fn build_robust_srg_set(model: &DisturbedModel, y: &Polytope, epsilon: f64, t_max: usize) -> Result<AdmissibleSet> {
    check_epsilon(epsilon)?;
    let base = &model.base;
    base.ensure_stable()?;
    output_polytope(base, y)?;
    let (n, m) = (base.n_states(), base.n_inputs());
    let a_p = DenseMatrix::identity(m, m);
    let pred = Prediction::new(&base.a, &base.b, &base.c, &base.d, &a_p);
    let tight = tighten(model, y, 0, t_max + 1)?;
    let steady = &y.hmat * static_gain(&base.a, &base.b, &base.c, &base.d)?;
    let mut seed = RowBank::new(n + m);
    for i in 0..steady.nrows() {
        let mut row = DenseVector::zeros(n + m);
        row.rows_mut(n, m).copy_from(&steady.row(i).transpose());
        seed.push(row, (1.0 - epsilon) * tight.limit[i]);
    }
    let steps = tight.steps;
    let offsets = move |t: usize| steps[t.min(steps.len() - 1)].clone();
    let (rows, h, t_star) = generate(&pred, &y.hmat, &offsets, seed, 1, t_max)?;
    let (hx, hv, hw, h) = split(rows, h, n, m);
    Ok(AdmissibleSet {
        hx,
        hv,
        hw,
        h,
        horizon: 0,
        t_star,
        epsilon,
        variant: SetVariant::Standard,
        a_bar: PreviewAMatrix::identity(m),
    })
}

/// Robust lifted set for dynamics switching arbitrarily among the vertex
/// pairs `(A_l, B_l)` (unlifted `B_l`; lifting follows `a_bar`'s horizons).
pub fn build_polytopic_robust_mas(
    vertices: &[(DenseMatrix, DenseMatrix)],
    c: &DenseMatrix,
    d: &DenseMatrix,
    a_bar: &PreviewAMatrix,
    y: &Polytope,
    epsilon: f64,
    iter_max: usize,
) -> Result<AdmissibleSet> {
    check_epsilon(epsilon)?;
    if vertices.is_empty() {
        return Err(Error::config("polytopic model needs at least one vertex"));
    }
    let mut preds = Vec::with_capacity(vertices.len());
    let mut steady_rows = Vec::new();
    let limit = a_bar.limit()?;
    for (l, (a, b)) in vertices.iter().enumerate() {
        let model = StateSpaceModel::discrete(a.clone(), b.clone(), c.clone(), d.clone(), 1.0)
            .map_err(|e| Error::config(format!("vertex {l}: {e}")))?;
        model.ensure_stable().map_err(|e| Error::config(format!("vertex {l}: {e}")))?;
        output_polytope(&model, y)?;
        let lifted = crate::sysmod::lift_input_multi(&model, &a_bar.horizons)?;
        preds.push(Prediction::new(&lifted.a, &lifted.b, &lifted.c, &lifted.d, &a_bar.matrix));
        steady_rows.push(&y.hmat * static_gain(&lifted.a, &lifted.b, &lifted.c, &lifted.d)? * &limit);
    }
    let n = vertices[0].0.nrows();
    let p = a_bar.dim();
    let dim = n + p;
    let mut bank = RowBank::new(dim);
    for steady in &steady_rows {
        for i in 0..steady.nrows() {
            let mut row = DenseVector::zeros(dim);
            row.rows_mut(n, p).copy_from(&steady.row(i).transpose());
            bank.push(row, (1.0 - epsilon) * y.h[i]);
        }
    }
    let first = &y.hmat * &preds[0].output;
    let mut frontier: Vec<(DenseVector, f64)> = Vec::new();
    {
        let (mat, h) = bank.matrix();
        for i in 0..first.nrows() {
            let c = first.row(i).transpose();
            if RowBank::excess(&mat, &h, &c, y.h[i])?.is_some() {
                frontier.push((c, y.h[i]));
            }
        }
        for (c, dd) in &frontier {
            bank.push(c.clone(), *dd);
        }
    }
    let mut last_margin = f64::INFINITY;
    for sweep in 1..=iter_max {
        let (mut mat, mut h) = bank.matrix();
        let mut fresh: Vec<(DenseVector, f64)> = Vec::new();
        let mut worst: f64 = 0.0;
        for (row, off) in &frontier {
            for pred in &preds {
                let c = pred.dynamics.transpose() * row;
                if let Some(ex) = RowBank::excess(&mat, &h, &c, *off)? {
                    worst = worst.max(ex);
                    let norm = c.norm().max(f64::MIN_POSITIVE);
                    let k = mat.nrows();
                    mat = mat.insert_row(k, 0.0);
                    mat.row_mut(k).copy_from(&(&c / norm).transpose());
                    h = h.insert_row(k, *off / norm);
                    fresh.push((c, *off));
                }
            }
        }
        if fresh.is_empty() {
            let (rows, h) = bank.pruned()?;
            debug!("polytopic robust set converged after {} sweeps, {} rows", sweep - 1, h.len());
            let (hx, hv, hw, h) = split(rows, h, n, p);
            return Ok(AdmissibleSet {
                hx,
                hv,
                hw,
                h,
                horizon: a_bar.horizons.iter().copied().max().unwrap_or(0),
                t_star: sweep - 1,
                epsilon,
                variant: SetVariant::PolytopicRobust,
                a_bar: a_bar.clone(),
            });
        }
        last_margin = worst;
        frontier.clear();
        for (c, dd) in fresh {
            let norm = c.norm();
            if norm > 0.0 {
                frontier.push((&c / norm, dd / norm));
            }
            bank.push(c, dd);
        }
        bank.prune()?;
    }
    Err(Error::NonTermination { t_max: iter_max, last_margin })
}
