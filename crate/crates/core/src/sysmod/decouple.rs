//! Decoupling filter `F = G⁻¹ W` with `W = diag(G₁₁, …, G_mm)`.

use super::poly::{common_factor, realize_tf, Polynomial, Rational, RationalTf};
use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};

/// Root-pairing tolerance used when cancelling common factors.
pub const CANCEL_TOL: f64 = 1e-8;

/// Decoupling triple: `G·F = W`, `F_inv = W⁻¹·G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoupler {
    pub f: RationalTf,
    pub f_inv: RationalTf,
    pub w: RationalTf,
}

type PolyMatrix = Vec<Vec<Polynomial>>;

fn poly_det(m: &PolyMatrix) -> Polynomial {
    let n = m.len();
    match n {
        0 => Polynomial::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Polynomial::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let term = m[0][j].mul(&poly_det(&minor(m, 0, j)));
                acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

fn minor(m: &PolyMatrix, row: usize, col: usize) -> PolyMatrix {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, p)| p.clone()).collect())
        .collect()
}

fn same_poly(a: &Polynomial, b: &Polynomial) -> bool {
    let n = a.coeffs().len().max(b.coeffs().len());
    let scale = a.max_abs().max(b.max_abs()).max(1e-300);
    (0..n).all(|k| {
        let x = a.coeffs().get(k).copied().unwrap_or(0.0);
        let y = b.coeffs().get(k).copied().unwrap_or(0.0);
        (x - y).abs() <= 1e-12 * scale
    })
}

/// Writes `G = P / d` with a single denominator shared by all entries.
fn common_denominator(g: &RationalTf) -> (PolyMatrix, Polynomial) {
    let mut dens: Vec<Polynomial> = Vec::new();
    for e in &g.entries {
        if !e.is_zero() && !dens.iter().any(|d| same_poly(d, &e.den)) {
            dens.push(e.den.clone());
        }
    }
    let d = dens.iter().fold(Polynomial::one(), |acc, p| acc.mul(p));
    let p = (0..g.rows)
        .map(|i| {
            (0..g.cols)
                .map(|j| {
                    let e = g.get(i, j);
                    if e.is_zero() {
                        return Polynomial::zero();
                    }
                    dens.iter()
                        .filter(|q| !same_poly(q, &e.den))
                        .fold(e.num.clone(), |acc, q| acc.mul(q))
                })
                .collect()
        })
        .collect();
    (p, d)
}

fn check_entry(name: &str, i: usize, j: usize, r: &Rational) -> Result<()> {
    if !r.is_proper() {
        return Err(Error::config(format!("decoupler entry {name}[{i}][{j}] is improper")));
    }
    if !r.is_zero() && !r.is_stable()? {
        return Err(Error::config(format!("decoupler entry {name}[{i}][{j}] is unstable")));
    }
    Ok(())
}

/// Builds `(F, F⁻¹, W)` for a square transfer matrix by adjugate/determinant
/// polynomial arithmetic with common-factor cancellation.
pub fn build_decoupler(g: &RationalTf) -> Result<Decoupler> {
    if g.rows != g.cols {
        return Err(Error::config("decoupling needs a square transfer matrix"));
    }
    let m = g.rows;
    let ts = g.sample_time;
    let w_entries: Vec<Rational> = (0..m * m)
        .map(|k| {
            let (i, j) = (k / m, k % m);
            if i == j {
                g.get(i, i).cancel(CANCEL_TOL)
            } else {
                Ok(Rational::constant(0.0))
            }
        })
        .collect::<Result<_>>()?;
    let w = RationalTf::new(m, m, w_entries, ts)?;
    if (0..m).any(|i| g.get(i, i).is_zero()) {
        return Err(Error::config("decoupling needs nonzero diagonal entries"));
    }
    if g.is_diagonal() {
        return Ok(Decoupler { f: RationalTf::identity(m, ts), f_inv: RationalTf::identity(m, ts), w });
    }

    let (mut p, _d) = common_denominator(g);
    let all: Vec<&Polynomial> = p.iter().flatten().collect();
    let factor = common_factor(&all, CANCEL_TOL)?;
    if factor.degree() > 0 {
        for row in p.iter_mut() {
            for e in row.iter_mut() {
                if !e.is_zero() {
                    *e = e.div_rem(&factor)?.0;
                }
            }
        }
    }
    let det = poly_det(&p);
    if det.trimmed(1e-12).is_zero() {
        return Err(Error::config("transfer matrix determinant is identically zero"));
    }

    let mut f_entries = Vec::with_capacity(m * m);
    let mut finv_entries = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            // adj(P)_ij = (-1)^{i+j} det(minor_ji)
            let cof = poly_det(&minor(&p, j, i));
            let cof = if (i + j) % 2 == 0 { cof } else { cof.scale(-1.0) };
            let f = Rational::new(cof.mul(&p[j][j]), det.clone())?.cancel(CANCEL_TOL)?;
            check_entry("F", i, j, &f)?;
            f_entries.push(f);
            let fi = Rational::new(p[i][j].clone(), p[i][i].clone())?.cancel(CANCEL_TOL)?;
            check_entry("F_inv", i, j, &fi)?;
            finv_entries.push(fi);
        }
    }
    Ok(Decoupler {
        f: RationalTf::new(m, m, f_entries, ts)?,
        f_inv: RationalTf::new(m, m, finv_entries, ts)?,
        w,
    })
}

/// Realized MIMO filter with its own state, stepped sample by sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoFilter {
    pub model: StateSpaceModel,
    pub state: DenseVector,
}

impl MimoFilter {
    pub fn new(tf: &RationalTf) -> Result<Self> {
        let model = realize_tf(tf)?;
        let state = DenseVector::zeros(model.n_states());
        Ok(MimoFilter { model, state })
    }

    pub fn from_model(model: StateSpaceModel) -> Self {
        let state = DenseVector::zeros(model.n_states());
        MimoFilter { model, state }
    }

    /// Output at the current sample, then advances the state.
    pub fn step(&mut self, u: &DenseVector) -> Result<DenseVector> {
        let (next, y) = self.model.step(&self.state, u)?;
        self.state = next;
        Ok(y)
    }

    /// Output sequence for an input sequence without touching the filter state.
    pub fn preview(&self, inputs: &[DenseVector]) -> Result<Vec<DenseVector>> {
        let mut copy = self.clone();
        inputs.iter().map(|u| copy.step(u)).collect()
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    /// Static gain of the filter.
    pub fn dc_gain(&self) -> Result<DenseMatrix> {
        self.model.dc_gain()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn static_tf(vals: &[f64]) -> RationalTf {
        RationalTf::new(2, 2, vals.iter().map(|v| Rational::constant(*v)).collect(), 0.1).unwrap()
    }

    #[test]
    fn diagonal_plant_gives_identity() {
        let d = build_decoupler(&static_tf(&[2.0, 0.0, 0.0, 3.0])).unwrap();
        assert_eq!(d.f, RationalTf::identity(2, 0.1));
        assert_eq!(d.f_inv, RationalTf::identity(2, 0.1));
    }

    #[test]
    fn static_two_by_two() {
        let g = static_tf(&[2.0, 1.0, 1.0, 2.0]);
        let d = build_decoupler(&g).unwrap();
        let z = Complex64::new(1.0, 0.0);
        let gf = g.eval(z) * d.f.eval(z);
        // G^{-1} = [[2,-1],[-1,2]]/3, F = G^{-1} diag(2,2)
        let f_hand = [[4.0 / 3.0, -2.0 / 3.0], [-2.0 / 3.0, 4.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((d.f.eval(z)[(i, j)].re - f_hand[i][j]).abs() < 1e-14);
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((gf[(i, j)].re - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_plant_rejected() {
        let err = build_decoupler(&static_tf(&[1.0, 2.0, 2.0, 4.0])).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn filter_preview_leaves_state_alone() {
        let tf = RationalTf::new(
            1,
            1,
            vec![Rational::new(Polynomial::new(vec![0.5]), Polynomial::new(vec![-0.5, 1.0])).unwrap()],
            0.1,
        )
        .unwrap();
        let mut f = MimoFilter::new(&tf).unwrap();
        let u = DenseVector::from_element(1, 1.0);
        let ahead = f.preview(&[u.clone(), u.clone(), u.clone()]).unwrap();
        assert_eq!(f.state, DenseVector::zeros(1));
        let live: Vec<_> = (0..3).map(|_| f.step(&u).unwrap()).collect();
        assert_eq!(ahead, live);
    }
}
