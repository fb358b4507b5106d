use num_complex::Complex64;
use prgov::numerics::{DenseMatrix, DenseVector};
use prgov::sysmod::{
    build_decoupler, close_state_feedback, discretize_zoh, lift_input, lift_input_multi, tf_from_ss, MimoFilter,
    StateSpaceModel,
};
use proptest::prelude::*;

fn dm(r: usize, c: usize, v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_row_slice(r, c, v)
}

fn two_link_plant() -> StateSpaceModel {
    let a = dm(4, 4, &[0., 0., 1., 0., 0., 0., 0., 1., -0.46, -0.62, 0., 0., 0.25, -6.62, 0., 0.]);
    let b = dm(4, 2, &[0., 0., 0., 0., 0.78, -0.04, 0.04, 0.13]);
    let c = dm(2, 4, &[1., 0., 0., 0., 0., 1., 0., 0.]);
    let cont = StateSpaceModel::continuous(a, b, c, DenseMatrix::zeros(2, 2)).unwrap();
    discretize_zoh(&cont, 0.01).unwrap()
}

fn two_link_gain() -> DenseMatrix {
    dm(2, 4, &[750., 155., 59., 19., -226., 2867., -18., 350.])
}

fn two_link_closed() -> StateSpaceModel {
    close_state_feedback(&two_link_plant(), &two_link_gain(), &dm(2, 2, &[769.23, 0., 0., 3333.3])).unwrap()
}

/// DC gain by simulating the step response to steady state.
fn simulated_dc_gain(m: &StateSpaceModel) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(m.n_outputs(), m.n_inputs());
    for j in 0..m.n_inputs() {
        let mut u = DenseVector::zeros(m.n_inputs());
        u[j] = 1.0;
        let mut x = DenseVector::zeros(m.n_states());
        for _ in 0..20_000 {
            x = &m.a * &x + &m.b * &u;
        }
        g.set_column(j, &(&m.c * &x + &m.d * &u));
    }
    g
}

#[test]
fn two_link_dc_gain_matches_simulation() {
    let m = two_link_closed();
    let g = m.dc_gain().unwrap();
    let sim = simulated_dc_gain(&m);
    assert!((&g - &sim).amax() < 1e-8, "{g} vs {sim}");
    // The printed gains give a coupled steady state rather than the identity.
    assert!((g[(0, 0)] - 1.00834).abs() < 1e-3 && (g[(0, 1)] + 0.23721).abs() < 1e-3);
    assert!((g[(1, 0)] - 0.07884).abs() < 1e-3 && (g[(1, 1)] - 1.12421).abs() < 1e-3);
}

#[test]
fn inverse_dc_precompensator_gives_identity() {
    let plant = two_link_plant();
    let unit = close_state_feedback(&plant, &two_link_gain(), &DenseMatrix::identity(2, 2)).unwrap();
    let pre = unit.dc_gain().unwrap().try_inverse().unwrap();
    let closed = close_state_feedback(&plant, &two_link_gain(), &pre).unwrap();
    assert!((closed.dc_gain().unwrap() - DenseMatrix::identity(2, 2)).amax() < 1e-2);
}

#[test]
fn two_link_decoupler_frequency_response() {
    let m = two_link_closed();
    let g = tf_from_ss(&m).unwrap();
    let d = build_decoupler(&g).unwrap();
    for k in 0..20 {
        let z = Complex64::from_polar(1.0, 0.01 + 0.15 * k as f64);
        let gz = m.frequency_response(z).unwrap();
        let gf = &gz * d.f.eval(z);
        let w = d.w.eval(z);
        let err = (0..4).map(|i| (gf[i] - w[i]).norm()).fold(0.0, f64::max);
        let scale = (0..4).map(|i| gz[i].norm()).fold(0.0, f64::max);
        assert!(err < 1e-6 * scale.max(1.0), "k={k} err={err}");
        let inv = d.f_inv.eval(z) * d.f.eval(z);
        let id_err = (inv - nalgebra::DMatrix::<Complex64>::identity(2, 2)).map(|c| c.norm()).max();
        assert!(id_err < 1e-6, "k={k} F_inv F err={id_err}");
    }
    let f = MimoFilter::new(&d.f).unwrap();
    assert!(f.model.spectral_radius().unwrap() < 1.0);
}

#[test]
fn one_link_tf_poles_are_closed_loop_eigenvalues() {
    let cont = StateSpaceModel::continuous(
        dm(2, 2, &[0., 1., -14.7, 0.]),
        dm(2, 1, &[0., 3.]),
        dm(1, 2, &[1., 0.]),
        dm(1, 1, &[0.]),
    )
    .unwrap();
    let closed = close_state_feedback(&discretize_zoh(&cont, 0.01).unwrap(), &dm(1, 2, &[61.77, 9.64]), &dm(1, 1, &[66.67]))
        .unwrap();
    let tf = tf_from_ss(&closed).unwrap();
    assert_eq!(tf.get(0, 0).den.degree(), 2);
    let mut poles: Vec<f64> = tf.get(0, 0).den.roots().unwrap().iter().map(|z| z.re).collect();
    poles.sort_by(f64::total_cmp);
    let mut eig: Vec<f64> = prgov::numerics::eigenvalues(&closed.a).unwrap().iter().map(|z| z.re).collect();
    eig.sort_by(f64::total_cmp);
    for (p, e) in poles.iter().zip(&eig) {
        assert!((p - e).abs() < 1e-9);
    }
}

#[test]
fn one_link_step_matches_hand_multiply() {
    let m = StateSpaceModel::discrete(dm(2, 2, &[0.9, 0.01, -0.1, 0.8]), dm(2, 1, &[0.0, 0.03]), dm(1, 2, &[1., 0.]), dm(1, 1, &[0.]), 0.01)
        .unwrap();
    let (xn, y) = m.step(&DenseVector::from_row_slice(&[1.0, 2.0]), &DenseVector::from_element(1, 3.0)).unwrap();
    assert!((xn[0] - (0.9 + 0.02)).abs() < 1e-15);
    assert!((xn[1] - (-0.1 + 1.6 + 0.09)).abs() < 1e-15);
    assert_eq!(y[0], 1.0);
}

/// Random stable system: random matrix rescaled to spectral radius 0.9.
fn stable_system(n: usize, m: usize, seed: &[f64]) -> StateSpaceModel {
    let mut it = seed.iter().cycle();
    let mut next = || *it.next().unwrap();
    let a = DenseMatrix::from_fn(n, n, |_, _| next());
    let rho = prgov::numerics::spectral_radius(&a).unwrap().max(1e-3);
    let a = a * (0.9 / rho);
    let b = DenseMatrix::from_fn(n, m, |_, _| next());
    let c = DenseMatrix::from_fn(1, n, |_, _| next());
    let d = DenseMatrix::from_fn(1, m, |_, _| next());
    StateSpaceModel::discrete(a, b, c, d, 0.1).unwrap()
}

fn simulate(m: &StateSpaceModel, inputs: &[DenseVector], x0: &DenseVector) -> Vec<f64> {
    let mut x = x0.clone();
    inputs
        .iter()
        .map(|u| {
            let (xn, y) = m.step(&x, u).unwrap();
            x = xn;
            y[0]
        })
        .collect()
}

/// Lifted command at time t: entries are v(t), …, v(t+N) with the tail held.
fn lifted_at(vs: &[f64], t: usize, n: usize) -> Vec<f64> {
    (0..=n).map(|k| vs[(t + k).min(vs.len() - 1)]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lifted_simulation_equivalence(
        n in 1usize..=6,
        horizon in 0usize..5,
        seed in prop::collection::vec(-1.0f64..1.0, 64),
        vs in prop::collection::vec(-5.0f64..5.0, 50),
    ) {
        let m = stable_system(n, 1, &seed);
        let lifted = lift_input(&m, horizon).unwrap();
        let x0 = DenseVector::from_fn(n, |i, _| seed[i]);
        let plain: Vec<DenseVector> = vs.iter().map(|v| DenseVector::from_element(1, *v)).collect();
        let lifted_in: Vec<DenseVector> =
            (0..vs.len()).map(|t| DenseVector::from_vec(lifted_at(&vs, t, horizon))).collect();
        let a = simulate(&m, &plain, &x0);
        let b = simulate(&lifted, &lifted_in, &x0);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn multi_lifted_simulation_equivalence(
        n in 1usize..=6,
        h1 in 0usize..4,
        h2 in 0usize..4,
        seed in prop::collection::vec(-1.0f64..1.0, 64),
        v1 in prop::collection::vec(-5.0f64..5.0, 50),
        v2 in prop::collection::vec(-5.0f64..5.0, 50),
    ) {
        let m = stable_system(n, 2, &seed);
        let lifted = lift_input_multi(&m, &[h1, h2]).unwrap();
        let x0 = DenseVector::zeros(n);
        let plain: Vec<DenseVector> = (0..50).map(|t| DenseVector::from_row_slice(&[v1[t], v2[t]])).collect();
        let lifted_in: Vec<DenseVector> = (0..50)
            .map(|t| {
                let mut e = lifted_at(&v1, t, h1);
                e.extend(lifted_at(&v2, t, h2));
                DenseVector::from_vec(e)
            })
            .collect();
        let a = simulate(&m, &plain, &x0);
        let b = simulate(&lifted, &lifted_in, &x0);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn superposition(seed in prop::collection::vec(-1.0f64..1.0, 64), vs in prop::collection::vec(-5.0f64..5.0, 30)) {
        let m = stable_system(3, 1, &seed);
        let x0 = DenseVector::from_fn(3, |i, _| seed[i + 5]);
        let u: Vec<DenseVector> = vs.iter().map(|v| DenseVector::from_element(1, *v)).collect();
        let zero: Vec<DenseVector> = vs.iter().map(|_| DenseVector::zeros(1)).collect();
        let total = simulate(&m, &u, &x0);
        let free = simulate(&m, &zero, &x0);
        let forced = simulate(&m, &u, &DenseVector::zeros(3));
        for t in 0..total.len() {
            prop_assert!((total[t] - free[t] - forced[t]).abs() < 1e-9 * (1.0 + total[t].abs()));
        }
    }
}
