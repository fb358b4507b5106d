mod common;

use common::*;
use prgov::numerics::*;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_qp(r: &mut ChaCha8Rng, n: usize, m: usize) -> QpProblem {
    let f = DenseMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let quadratic = f.transpose() * &f + DenseMatrix::identity(n, n) * 0.5;
    QpProblem {
        quadratic,
        linear: random_vec(r, n, 3.0),
        constraints: DenseMatrix::from_fn(m, n, |_, _| r.random_range(-1.0..1.0)),
        rhs: DenseVector::from_fn(m, |_, _| r.random_range(-0.5..1.0)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qp_matches_enumeration(seed in 0u64..100_000, n in 1usize..4, m in 1usize..7) {
        let mut r = rng(seed);
        let p = random_qp(&mut r, n, m);
        let oracle = enumerate_qp(&p);
        match solve_qp(&p).unwrap() {
            QpOutcome::Optimal { point, .. } => {
                let f = oracle.expect("oracle found no feasible point");
                prop_assert!((&p.constraints * &point - &p.rhs).iter().all(|s| *s <= 1e-7));
                prop_assert!((objective(&p, &point) - f).abs() <= 1e-6 * (1.0 + f.abs()));
            }
            QpOutcome::Infeasible => prop_assert!(oracle.is_none()),
        }
    }

    #[test]
    fn qp_and_lp_agree_on_feasibility(seed in 0u64..100_000, n in 1usize..4, m in 1usize..9) {
        let mut r = rng(seed);
        let mut p = random_qp(&mut r, n, m);
        p.rhs.iter_mut().for_each(|b| *b -= 0.7);
        let lp = LpProblem::new(DenseVector::zeros(n), p.constraints.clone(), p.rhs.clone());
        let lp_feasible = !matches!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
        let qp_feasible = matches!(solve_qp(&p).unwrap(), QpOutcome::Optimal { .. });
        prop_assert_eq!(lp_feasible, qp_feasible);
    }

    #[test]
    fn lp_optimum_dominates_feasible_samples(seed in 0u64..100_000, n in 1usize..5, m in 0usize..8) {
        let mut r = rng(seed);
        let mut rows = DenseMatrix::zeros(2 * n + m, n);
        let mut rhs = DenseVector::zeros(2 * n + m);
        for i in 0..n {
            rows[(2 * i, i)] = 1.0;
            rows[(2 * i + 1, i)] = -1.0;
            rhs[2 * i] = r.random_range(0.5..2.0);
            rhs[2 * i + 1] = r.random_range(0.5..2.0);
        }
        for k in 0..m {
            for j in 0..n {
                rows[(2 * n + k, j)] = r.random_range(-1.0..1.0);
            }
            rhs[2 * n + k] = r.random_range(0.1..1.0);
        }
        let c = random_vec(&mut r, n, 1.0);
        let LpOutcome::Optimal { point, value } = solve_lp(&LpProblem::new(c.clone(), rows.clone(), rhs.clone())).unwrap() else {
            return Err(TestCaseError::fail("bounded feasible LP not solved"));
        };
        prop_assert!((&rows * &point - &rhs).iter().all(|s| *s <= 1e-8));
        prop_assert!((c.dot(&point) - value).abs() < 1e-9);
        for _ in 0..200 {
            let z = random_vec(&mut r, n, 2.0);
            if (&rows * &z - &rhs).iter().all(|s| *s <= 0.0) {
                prop_assert!(c.dot(&z) <= value + 1e-9);
            }
        }
    }
}

#[test]
fn solvers_are_deterministic() {
    let mut r = rng(11);
    let p = random_qp(&mut r, 3, 6);
    assert_eq!(solve_qp(&p).unwrap(), solve_qp(&p).unwrap());
    let lp = LpProblem::new(p.linear.clone(), p.constraints.clone(), p.rhs.clone()).with_bounds(vec![(-5.0, 5.0); 3]);
    assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
}

#[test]
fn warm_start_matches_cold_start() {
    let mut r = rng(12);
    for _ in 0..50 {
        let p = random_qp(&mut r, 3, 5);
        let cold = solve_qp(&p).unwrap();
        let start = DenseVector::zeros(3);
        let warm = solve_qp_from(&p, &start).unwrap();
        match (cold, warm) {
            (QpOutcome::Optimal { point: a, .. }, QpOutcome::Optimal { point: b, .. }) => {
                assert!((objective(&p, &a) - objective(&p, &b)).abs() < 1e-8);
            }
            (QpOutcome::Infeasible, QpOutcome::Infeasible) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn indefinite_quadratic_is_rejected() {
    let p = QpProblem {
        quadratic: dm(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        linear: DenseVector::zeros(2),
        constraints: DenseMatrix::zeros(0, 2),
        rhs: DenseVector::zeros(0),
    };
    assert!(solve_qp(&p).is_err());
}

#[test]
fn spectral_radius_of_rotation() {
    let (s, c) = (0.3f64.sin(), 0.3f64.cos());
    let m = dm(2, 2, &[0.9 * c, -0.9 * s, 0.9 * s, 0.9 * c]);
    assert!((spectral_radius(&m).unwrap() - 0.9).abs() < 1e-12);
}
