//! H-representation polytopes `{z : H z <= h}` with an optional vertex list.

use crate::error::{Error, Result};
use crate::numerics::{solve_lp, DenseMatrix, DenseVector, LpOutcome, LpProblem, TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    /// Facet normals, one per row.
    pub hmat: DenseMatrix,
    /// Offsets.
    pub h: DenseVector,
    vertices: Option<Vec<DenseVector>>,
}

/// Result of a membership query.
#[derive(Debug, Clone, PartialEq)]
pub struct Containment {
    pub inside: bool,
    /// `h - H z`.
    pub margin: DenseVector,
}

/// Support value `max c·z` over a polytope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Bounded(f64),
    Unbounded,
    Empty,
}

impl Polytope {
    pub fn new(hmat: DenseMatrix, h: DenseVector) -> Result<Self> {
        if hmat.nrows() != h.len() {
            return Err(Error::config(format!(
                "polytope has {} normals but {} offsets",
                hmat.nrows(),
                h.len()
            )));
        }
        if hmat.iter().chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::config("polytope contains non-finite entries"));
        }
        Ok(Polytope { hmat, h, vertices: None })
    }

    /// Axis-aligned box `lo <= z <= hi`. Vertices are stored for dimension <= 4.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::config("box bounds differ in length"));
        }
        if lo.iter().zip(hi).any(|(l, u)| !(l <= u)) {
            return Err(Error::config("box lower bound exceeds upper bound"));
        }
        let d = lo.len();
        let mut hmat = DenseMatrix::zeros(2 * d, d);
        let mut h = DenseVector::zeros(2 * d);
        for i in 0..d {
            hmat[(2 * i, i)] = 1.0;
            h[2 * i] = hi[i];
            hmat[(2 * i + 1, i)] = -1.0;
            h[2 * i + 1] = -lo[i];
        }
        let mut p = Self::new(hmat, h)?;
        if d <= 4 {
            let verts = (0..1usize << d)
                .map(|mask| DenseVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }))
                .collect();
            p.vertices = Some(verts);
        }
        Ok(p)
    }

    /// Symmetric box `|z_i| <= bound_i`.
    pub fn symmetric_box(bounds: &[f64]) -> Result<Self> {
        let lo: Vec<f64> = bounds.iter().map(|b| -b).collect();
        Self::from_box(&lo, bounds)
    }

    /// Attaches a vertex list (the caller vouches it describes the same set).
    pub fn with_vertices(mut self, vertices: Vec<DenseVector>) -> Result<Self> {
        if vertices.iter().any(|v| v.len() != self.dim()) {
            return Err(Error::config("vertex dimension mismatch"));
        }
        self.vertices = Some(vertices);
        Ok(self)
    }

    pub fn vertices(&self) -> Option<&[DenseVector]> {
        self.vertices.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.hmat.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.h.len()
    }

    pub fn contains(&self, z: &DenseVector) -> Result<Containment> {
        if z.len() != self.dim() {
            return Err(Error::InputValidation(format!(
                "point of length {} tested against {}-dimensional polytope",
                z.len(),
                self.dim()
            )));
        }
        let margin = &self.h - &self.hmat * z;
        let inside = margin.iter().all(|m| *m >= -TOL.redundancy);
        Ok(Containment { inside, margin })
    }

    pub fn support(&self, c: &DenseVector) -> Result<Support> {
        support_rows(&self.hmat, &self.h, &(0..self.n_rows()).collect::<Vec<_>>(), c)
    }

    /// Drops rows implied by the remaining ones, scanning in index order.
    pub fn remove_redundant(&self) -> Result<Polytope> {
        let keep = redundancy_filter(&self.hmat, &self.h, &[], |_| true)?;
        let mut out = self.select_rows(&keep);
        out.vertices = self.vertices.clone();
        Ok(out)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Polytope {
        Polytope {
            hmat: self.hmat.select_rows(rows),
            h: self.h.select_rows(rows),
            vertices: None,
        }
    }

    /// `P ∼ map·W`: every offset shrinks by its worst case over the vertices of `W`.
    pub fn pontryagin_diff(&self, map: &DenseMatrix, w_vertices: &[DenseVector]) -> Result<Polytope> {
        if w_vertices.is_empty() {
            return Err(Error::config("Pontryagin difference needs a non-empty vertex list"));
        }
        if map.nrows() != self.dim() || w_vertices.iter().any(|w| w.len() != map.ncols()) {
            return Err(Error::config("Pontryagin difference map dimension mismatch"));
        }
        let hm = &self.hmat * map;
        let mut h = self.h.clone();
        for i in 0..self.n_rows() {
            let worst = w_vertices
                .iter()
                .map(|w| hm.row(i).dot(&w.transpose()))
                .fold(f64::NEG_INFINITY, f64::max);
            h[i] -= worst;
        }
        Polytope::new(self.hmat.clone(), h)
    }

    /// Offsets multiplied by `factor` in (0, 1].
    pub fn scale(&self, factor: f64) -> Result<Polytope> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::config(format!("scale factor {factor} outside (0, 1]")));
        }
        let mut out = self.clone();
        out.h *= factor;
        if let Some(v) = out.vertices.as_mut() {
            v.iter_mut().for_each(|p| *p *= factor);
        }
        Ok(out)
    }
}

/// `max c·z` over rows `active` of `{H z <= h}`. When the origin satisfies
/// every row the simplex starts from the slack basis and needs no phase 1.
pub(crate) fn support_rows(hmat: &DenseMatrix, h: &DenseVector, active: &[usize], c: &DenseVector) -> Result<Support> {
    if c.len() != hmat.ncols() {
        return Err(Error::config("support direction dimension mismatch"));
    }
    let lp = LpProblem::new(c.clone(), hmat.select_rows(active), h.select_rows(active));
    Ok(match solve_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => Support::Bounded(value),
        LpOutcome::Infeasible => Support::Empty,
        LpOutcome::Unbounded => Support::Unbounded,
    })
}

/// Normalizes rows to unit Euclidean norm. Zero rows are left untouched.
pub(crate) fn normalize_rows(hmat: &mut DenseMatrix, h: &mut DenseVector) {
    for i in 0..hmat.nrows() {
        let norm = hmat.row(i).norm();
        if norm > 0.0 {
            hmat.row_mut(i).scale_mut(1.0 / norm);
            h[i] /= norm;
        }
    }
}

/// True when `c·z <= d` is implied by rows `active` of `{H z <= h}`.
pub(crate) fn row_is_redundant(
    hmat: &DenseMatrix,
    h: &DenseVector,
    active: &[usize],
    c: &DenseVector,
    d: f64,
) -> Result<bool> {
    let norm = c.norm();
    if norm == 0.0 {
        return Ok(d >= -TOL.redundancy);
    }
    Ok(match support_rows(hmat, h, active, &(c / norm))? {
        Support::Bounded(v) => v <= d / norm + TOL.redundancy,
        Support::Unbounded | Support::Empty => false,
    })
}

/// Sequential redundancy scan over the rows of `{H z <= h}`: rows listed in
/// `fixed` are always kept; a candidate row `i` (with `candidate(i)` true) is
/// dropped when implied by the rows still present. Returns kept indices in
/// ascending order.
pub(crate) fn redundancy_filter(
    hmat: &DenseMatrix,
    h: &DenseVector,
    fixed: &[usize],
    candidate: impl Fn(usize) -> bool,
) -> Result<Vec<usize>> {
    let mut hn = hmat.clone();
    let mut bn = h.clone();
    normalize_rows(&mut hn, &mut bn);
    let m = h.len();
    let mut alive = vec![true; m];
    for i in 0..m {
        if fixed.contains(&i) || !candidate(i) {
            continue;
        }
        let others: Vec<usize> = (0..m).filter(|&k| k != i && alive[k]).collect();
        let c = hn.row(i).transpose();
        if row_is_redundant(&hn, &bn, &others, &c, bn[i])? {
            alive[i] = false;
        }
    }
    Ok((0..m).filter(|&i| alive[i]).collect())
}
