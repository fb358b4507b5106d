#![allow(dead_code)]

use prgov::mas::AdmissibleSet;
use prgov::numerics::{DenseMatrix, DenseVector, QpProblem};
use prgov::polytope::{Polytope, Support};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dm(r: usize, c: usize, v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_row_slice(r, c, v)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DenseVector {
    DenseVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// Largest `s` with `s·p` inside `{H z <= h}` (origin assumed interior).
pub fn ray_limit(hmat: &DenseMatrix, h: &DenseVector, p: &DenseVector) -> f64 {
    let hp = hmat * p;
    (0..h.len()).filter(|&i| hp[i] > 0.0).map(|i| h[i] / hp[i]).fold(f64::INFINITY, f64::min)
}

/// Random direction over the stacked coordinates of a set, with per-block scales.
pub fn direction(rng: &mut ChaCha8Rng, scales: &[(usize, f64)]) -> DenseVector {
    let n: usize = scales.iter().map(|(k, _)| k).sum();
    let mut v = DenseVector::zeros(n);
    let mut off = 0;
    for (k, s) in scales {
        for i in 0..*k {
            v[off + i] = rng.random_range(-s..*s);
        }
        off += k;
    }
    v
}

pub fn split_point(set: &AdmissibleSet, z: &DenseVector) -> (DenseVector, DenseVector, DenseVector) {
    let (n, p, w) = (set.n_states(), set.n_params(), set.n_disturbance_params());
    (z.rows(0, n).into_owned(), z.rows(n, p).into_owned(), z.rows(n + p, w).into_owned())
}

/// True when every row of `a` is implied by `b` and vice versa.
pub fn same_set(a: (&DenseMatrix, &DenseVector), b: (&DenseMatrix, &DenseVector), tol: f64) -> bool {
    implied(a, b, tol) && implied(b, a, tol)
}

/// Every row of `a` is implied by the polytope `b`.
pub fn implied(a: (&DenseMatrix, &DenseVector), b: (&DenseMatrix, &DenseVector), tol: f64) -> bool {
    let pb = Polytope::new(b.0.clone(), b.1.clone()).unwrap();
    (0..a.0.nrows()).all(|i| {
        let c = a.0.row(i).transpose();
        let scale = c.norm().max(1e-300);
        match pb.support(&c).unwrap() {
            Support::Bounded(v) => v <= a.1[i] + tol * scale,
            Support::Empty => true,
            Support::Unbounded => false,
        }
    })
}

pub fn objective(p: &QpProblem, z: &DenseVector) -> f64 {
    0.5 * z.dot(&(&p.quadratic * z)) + p.linear.dot(z)
}

fn subsets(m: usize, max: usize, cur: &mut Vec<usize>, start: usize, out: &mut dyn FnMut(&[usize])) {
    out(cur);
    if cur.len() == max {
        return;
    }
    for i in start..m {
        cur.push(i);
        subsets(m, max, cur, i + 1, out);
        cur.pop();
    }
}

/// Minimum over every active set (of at most `n` rows) whose
/// equality-constrained optimum is feasible, with the minimizer.
pub fn enumerate_qp_point(p: &QpProblem) -> Option<(f64, DenseVector)> {
    let (n, m) = (p.linear.len(), p.rhs.len());
    let mut best: Option<(f64, DenseVector)> = None;
    subsets(m, n, &mut Vec::new(), 0, &mut |set: &[usize]| {
        let k = set.len();
        let mut kkt = DenseMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.quadratic);
        let mut rhs = DenseVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&p.linear));
        for (w, &i) in set.iter().enumerate() {
            for j in 0..n {
                kkt[(n + w, j)] = p.constraints[(i, j)];
                kkt[(j, n + w)] = p.constraints[(i, j)];
            }
            rhs[n + w] = p.rhs[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { return };
        let z = sol.rows(0, n).into_owned();
        if (&p.constraints * &z - &p.rhs).iter().all(|s| *s <= 1e-9) {
            let f = objective(p, &z);
            if best.as_ref().is_none_or(|(b, _)| f < *b) {
                best = Some((f, z));
            }
        }
    });
    best
}

pub fn enumerate_qp(p: &QpProblem) -> Option<f64> {
    enumerate_qp_point(p).map(|(f, _)| f)
}
