//! Real polynomials in the forward-shift variable `z`, scalar rational
//! functions and rational transfer matrices.

use num_complex::Complex64;

use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::numerics::{block_diag, eigenvalues, DenseMatrix};

/// Polynomial with coefficients in ascending powers: `c[0] + c[1] z + …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Monic real polynomial with the given roots. Complex roots must come in
    /// conjugate pairs; imaginary parts of the product are discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self::new(c.iter().map(|v| v.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops leading coefficients below `rel_tol · max|c|`.
    pub fn trimmed(&self, rel_tol: f64) -> Self {
        let cut = rel_tol * self.max_abs();
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().unwrap().abs() <= cut {
            c.pop();
        }
        if c.iter().all(|v| v.abs() <= cut) {
            return Self::zero();
        }
        Self::new(c)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + other.coeffs.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    /// Euclidean division, returning `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        if divisor.is_zero() {
            return Err(Error::numerical("polynomial division by zero"));
        }
        let dn = divisor.degree();
        if self.degree() < dn {
            return Ok((Self::zero(), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; self.degree() - dn + 1];
        let lead = divisor.leading();
        for k in (0..quot.len()).rev() {
            let q = rem[k + dn] / lead;
            quot[k] = q;
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            rem[k + dn] = 0.0;
        }
        rem.truncate(dn.max(1));
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Roots as eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree();
        if self.is_zero() {
            return Err(Error::numerical("roots of the zero polynomial"));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.leading();
        let mut comp = DenseMatrix::zeros(n, n);
        for k in 0..n {
            comp[(0, k)] = -self.coeffs[n - 1 - k] / lead;
        }
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        eigenvalues(&comp)
    }
}

/// Monic real factor for a root (linear) or a conjugate pair (quadratic).
fn root_factor(r: Complex64) -> Polynomial {
    if r.im == 0.0 {
        Polynomial::new(vec![-r.re, 1.0])
    } else {
        Polynomial::new(vec![r.norm_sqr(), -2.0 * r.re, 1.0])
    }
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

/// Roots with non-negative imaginary part, conjugate partners dropped; real
/// roots have their tiny imaginary parts zeroed.
fn upper_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    Ok(p.roots()?
        .into_iter()
        .filter(|r| r.im >= 0.0)
        .map(|r| if r.im.abs() < 1e-10 * (1.0 + r.re.abs()) { Complex64::new(r.re, 0.0) } else { r })
        .collect())
}

/// Product of the root factors common to all nonzero polynomials (pairing
/// tolerance `tol`, relative to root magnitude).
pub(crate) fn common_factor(polys: &[&Polynomial], tol: f64) -> Result<Polynomial> {
    let nonzero: Vec<&Polynomial> = polys.iter().copied().filter(|p| !p.is_zero()).collect();
    let Some(first) = nonzero.first() else {
        return Ok(Polynomial::one());
    };
    let mut pools: Vec<Vec<Complex64>> = nonzero[1..].iter().map(|p| upper_roots(p)).collect::<Result<_>>()?;
    let mut factor = Polynomial::one();
    for r in upper_roots(first)? {
        let hits: Vec<Option<usize>> = pools
            .iter()
            .map(|pool| pool.iter().position(|q| close(*q, r, tol)))
            .collect();
        if hits.iter().all(Option::is_some) {
            for (pool, hit) in pools.iter_mut().zip(hits) {
                pool.remove(hit.unwrap());
            }
            factor = factor.mul(&root_factor(r));
        }
    }
    Ok(factor)
}

/// Scalar rational function `num(z) / den(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rational {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl Rational {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::config("rational function with zero denominator"));
        }
        Ok(Rational { num, den })
    }

    pub fn constant(c: f64) -> Self {
        Rational { num: Polynomial::constant(c), den: Polynomial::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Poles have magnitude strictly below one.
    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.den.roots()?.iter().all(|r| r.norm() < 1.0))
    }

    /// Removes root pairs shared by numerator and denominator, normalizing
    /// the denominator to be monic.
    pub fn cancel(&self, tol: f64) -> Result<Self> {
        if self.num.is_zero() {
            return Ok(Rational { num: Polynomial::zero(), den: Polynomial::one() });
        }
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        let mut den_roots = upper_roots(&den)?;
        for r in upper_roots(&num)? {
            if let Some(k) = den_roots.iter().position(|q| close(*q, r, tol)) {
                let q = den_roots.remove(k);
                let avg = if r.im == 0.0 || q.im == 0.0 {
                    Complex64::new(0.5 * (r.re + q.re), 0.0)
                } else {
                    0.5 * (r + q)
                };
                let f = root_factor(avg);
                num = num.div_rem(&f)?.0;
                den = den.div_rem(&f)?.0;
            }
        }
        let lead = den.leading();
        Ok(Rational { num: num.scale(1.0 / lead), den: den.scale(1.0 / lead) })
    }
}

/// Matrix of rational functions (outputs × inputs) with a sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTf {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Rational>,
    pub sample_time: f64,
}

impl RationalTf {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>, sample_time: f64) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::config("transfer matrix entry count mismatch"));
        }
        Ok(RationalTf { rows, cols, entries, sample_time })
    }

    pub fn identity(m: usize, sample_time: f64) -> Self {
        let entries = (0..m * m)
            .map(|k| Rational::constant(if k / m == k % m { 1.0 } else { 0.0 }))
            .collect();
        RationalTf { rows: m, cols: m, entries, sample_time }
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }

    pub fn eval(&self, z: Complex64) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(z))
    }
}

/// Transfer matrix `C (zI - A)⁻¹ B + D` of a discrete model via the
/// Faddeev–LeVerrier recursion.
pub fn tf_from_ss(model: &StateSpaceModel) -> Result<RationalTf> {
    let ts = model
        .sample_time
        .ok_or_else(|| Error::config("transfer functions are built from discrete models"))?;
    let n = model.n_states();
    // det(zI - A) = z^n + c_1 z^{n-1} + … + c_n ; adj(zI - A) = Σ_k N_k z^{n-1-k}
    let mut c = vec![1.0];
    let mut adj_terms = Vec::with_capacity(n);
    let mut nk = DenseMatrix::identity(n, n);
    for k in 1..=n {
        let an = &model.a * &nk;
        let ck = -an.trace() / k as f64;
        adj_terms.push(nk);
        c.push(ck);
        nk = an + DenseMatrix::identity(n, n) * ck;
    }
    let den = Polynomial::new(c.iter().rev().copied().collect());
    let (p, m) = (model.n_outputs(), model.n_inputs());
    let mut entries = Vec::with_capacity(p * m);
    for i in 0..p {
        for j in 0..m {
            let mut num = vec![0.0; n + 1];
            for (k, term) in adj_terms.iter().enumerate() {
                num[n - 1 - k] = (model.c.row(i) * term * model.b.column(j))[(0, 0)];
            }
            let num = Polynomial::new(num).add(&den.scale(model.d[(i, j)]));
            entries.push(Rational::new(num, den.clone())?);
        }
    }
    RationalTf::new(p, m, entries, ts)
}

/// Controllable-canonical realization of one proper SISO entry.
fn realize_siso(r: &Rational) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix, f64)> {
    if !r.is_proper() {
        return Err(Error::config("improper transfer function cannot be realized"));
    }
    let n = r.den.degree();
    let lead = r.den.leading();
    let den = r.den.scale(1.0 / lead);
    let num = r.num.scale(1.0 / lead);
    let d = if num.degree() == n { num.coeffs()[n] } else { 0.0 };
    let rem = num.sub(&den.scale(d));
    let mut a = DenseMatrix::zeros(n, n);
    let mut b = DenseMatrix::zeros(n, 1);
    let mut c = DenseMatrix::zeros(1, n);
    for k in 0..n {
        a[(0, k)] = -den.coeffs()[n - 1 - k];
        c[(0, k)] = rem.coeffs().get(n - 1 - k).copied().unwrap_or(0.0);
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    if n > 0 {
        b[(0, 0)] = 1.0;
    }
    Ok((a, b, c, d))
}

/// State-space realization: one controllable-canonical block per nonzero
/// entry, block-diagonal in `A`.
pub fn realize_tf(tf: &RationalTf) -> Result<StateSpaceModel> {
    let mut a_blocks = Vec::new();
    let mut b_cols: Vec<(usize, DenseMatrix)> = Vec::new();
    let mut c_rows: Vec<(usize, DenseMatrix)> = Vec::new();
    let mut d = DenseMatrix::zeros(tf.rows, tf.cols);
    for i in 0..tf.rows {
        for j in 0..tf.cols {
            let e = tf.get(i, j);
            if e.is_zero() {
                continue;
            }
            let (a, b, c, dd) = realize_siso(e).map_err(|_| {
                Error::config(format!("transfer entry ({i},{j}) is improper and cannot be realized"))
            })?;
            d[(i, j)] = dd;
            if a.nrows() > 0 {
                a_blocks.push(a);
                b_cols.push((j, b));
                c_rows.push((i, c));
            }
        }
    }
    let a = block_diag(&a_blocks);
    let n = a.nrows();
    let mut b = DenseMatrix::zeros(n, tf.cols);
    let mut c = DenseMatrix::zeros(tf.rows, n);
    let mut off = 0;
    for ((j, bb), (i, cc)) in b_cols.iter().zip(&c_rows) {
        let k = bb.nrows();
        b.view_mut((off, *j), (k, 1)).copy_from(bb);
        c.view_mut((*i, off), (1, k)).copy_from(cc);
        off += k;
    }
    StateSpaceModel::discrete(a, b, c, d, tf.sample_time)
}
