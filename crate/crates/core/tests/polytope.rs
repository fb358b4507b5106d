mod common;

use common::*;
use prgov::numerics::{DenseMatrix, DenseVector};
use prgov::polytope::{Polytope, Support};
use proptest::prelude::*;
use rand::Rng;

/// Random polytope around the origin: a bounding box plus `extra` random cuts
/// with positive offsets.
fn random_polytope(seed: u64, dim: usize, extra: usize) -> Polytope {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut h = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut row = vec![0.0; dim];
            row[i] = s;
            rows.push(row);
            h.push(r.random_range(1.0..3.0));
        }
    }
    for _ in 0..extra {
        rows.push((0..dim).map(|_| r.random_range(-1.0..1.0)).collect());
        h.push(r.random_range(0.2..2.0));
    }
    // duplicates and loose copies are redundant by construction
    rows.push(rows[0].iter().map(|v| 2.0 * v).collect());
    h.push(2.0 * h[0] + 0.5);
    Polytope::new(prgov::numerics::matrix_from_rows(&rows).unwrap(), DenseVector::from_vec(h)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn redundancy_removal_is_idempotent(seed in 0u64..10_000, dim in 1usize..4, extra in 0usize..12) {
        let p = random_polytope(seed, dim, extra);
        let once = p.remove_redundant().unwrap();
        let twice = once.remove_redundant().unwrap();
        prop_assert!(once.n_rows() < p.n_rows());
        prop_assert_eq!(once.n_rows(), twice.n_rows());
    }

    #[test]
    fn redundancy_removal_preserves_membership(seed in 0u64..10_000, dim in 1usize..4, extra in 0usize..12) {
        let p = random_polytope(seed, dim, extra);
        let q = p.remove_redundant().unwrap();
        let mut r = rng(seed ^ 0xabc);
        for _ in 0..1000 {
            let z = random_vec(&mut r, dim, 3.5);
            let a = p.contains(&z).unwrap();
            let b = q.contains(&z).unwrap();
            if a.margin.min().abs() > 1e-9 && b.margin.min().abs() > 1e-9 {
                prop_assert_eq!(a.inside, b.inside);
            }
        }
    }

    #[test]
    fn pontryagin_matches_vertex_oracle(seed in 0u64..10_000, dim in 1usize..4, extra in 0usize..6, wb in 0.01f64..0.3) {
        let p = random_polytope(seed, dim, extra);
        let mut r = rng(seed ^ 0x77);
        let map = DenseMatrix::from_fn(dim, 2, |_, _| r.random_range(-1.0..1.0));
        let w = Polytope::symmetric_box(&[wb, wb]).unwrap();
        let verts = w.vertices().unwrap().to_vec();
        let diff = p.pontryagin_diff(&map, &verts).unwrap();
        for _ in 0..300 {
            let z = random_vec(&mut r, dim, 3.0);
            let oracle = verts.iter().all(|v| p.contains(&(&z + &map * v)).unwrap().inside);
            let got = diff.contains(&z).unwrap();
            if got.margin.min().abs() > 1e-9 {
                prop_assert_eq!(got.inside, oracle);
            }
        }
    }

    #[test]
    fn scaling_is_monotone(seed in 0u64..10_000, dim in 1usize..4, a in 0.05f64..1.0, b in 0.05f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p = random_polytope(seed, dim, 4);
        let small = p.scale(lo).unwrap();
        let large = p.scale(hi).unwrap();
        let mut r = rng(seed);
        for _ in 0..200 {
            let z = random_vec(&mut r, dim, 3.0);
            if small.contains(&z).unwrap().inside {
                prop_assert!(large.contains(&z).unwrap().inside);
            }
        }
    }
}

#[test]
fn box_support_and_vertices() {
    let b = Polytope::from_box(&[-1.0, 0.0], &[2.0, 3.0]).unwrap();
    assert_eq!(b.vertices().unwrap().len(), 4);
    let c = DenseVector::from_row_slice(&[1.0, -1.0]);
    assert_eq!(b.support(&c).unwrap(), Support::Bounded(2.0));
    let half = Polytope::new(dm(1, 2, &[1.0, 0.0]), DenseVector::from_element(1, 1.0)).unwrap();
    assert_eq!(half.support(&c).unwrap(), Support::Unbounded);
    let empty = Polytope::new(dm(2, 1, &[1.0, -1.0]), DenseVector::from_row_slice(&[-1.0, 0.0])).unwrap();
    assert_eq!(empty.support(&DenseVector::from_element(1, 1.0)).unwrap(), Support::Empty);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(Polytope::from_box(&[1.0], &[0.0]).is_err());
    assert!(Polytope::new(dm(1, 1, &[f64::NAN]), DenseVector::from_element(1, 1.0)).is_err());
    assert!(Polytope::symmetric_box(&[1.0]).unwrap().scale(1.5).is_err());
    assert!(Polytope::symmetric_box(&[1.0]).unwrap().contains(&DenseVector::zeros(2)).is_err());
}
