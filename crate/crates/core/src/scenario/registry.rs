use super::models::{one_link_closed_loop, one_link_constraints, two_link_closed_loop, two_link_constraints, SAMPLE_TIME};
use super::{
    DisturbanceSpec, GovernorConfig, ModelDocument, PolytopeDocument, PreviewDrift, ReferenceTrajectory, Scenario, Segment,
};
use crate::error::{Error, Result};
use crate::numerics::matrix_to_rows;

fn seg(start: f64, values: &[f64]) -> Segment {
    Segment { start, values: values.to_vec() }
}

/// Rise to 60° at 0.3 s, back to 0 at 0.5 s, down to −69° at 0.7 s and back
/// to 0 at 0.9 s.
fn one_link_trajectory() -> ReferenceTrajectory {
    ReferenceTrajectory::new(
        vec![seg(0.0, &[0.0]), seg(0.3, &[60.0]), seg(0.5, &[0.0]), seg(0.7, &[-69.0]), seg(0.9, &[0.0])],
        SAMPLE_TIME,
    )
    .expect("fixed trajectory is valid")
}

/// Actual reference steps to 30° at 0.1 s and holds; over 0.3–0.6 s the
/// preview overstates entry `k` by `5k` degrees.
fn corrupted_trajectory() -> ReferenceTrajectory {
    ReferenceTrajectory::new(vec![seg(0.0, &[0.0]), seg(0.1, &[30.0])], SAMPLE_TIME)
        .and_then(|t| t.with_drift(PreviewDrift { start: PERTURBED_WINDOW.0, end: PERTURBED_WINDOW.1, per_step: vec![5.0] }))
        .expect("fixed trajectory is valid")
}

/// Start and end (seconds) of the corrupted-preview window.
pub const PERTURBED_WINDOW: (f64, f64) = (0.3, 0.6);

/// Joint 1 steps past its limit over 0.5–1.2 s; joint 2 drops to −56° at 1.0 s
/// and rises to −20° at 1.2 s.
fn two_link_trajectory() -> ReferenceTrajectory {
    ReferenceTrajectory::new(
        vec![
            seg(0.0, &[0.0, 0.0]),
            seg(0.5, &[70.0, 0.0]),
            seg(1.0, &[70.0, -56.0]),
            seg(1.2, &[0.0, -20.0]),
        ],
        SAMPLE_TIME,
    )
    .expect("fixed trajectory is valid")
}

/// Stochastic-mixing preset for horizon 4.
pub const LAMBDA_PRESET: [f64; 4] = [0.9, 0.75, 0.45, 0.1];

fn one_link_base(name: &str, description: &str, trajectory: ReferenceTrajectory, steps: usize) -> Result<Scenario> {
    Ok(Scenario {
        name: name.into(),
        description: description.into(),
        model: ModelDocument::from_model(&one_link_closed_loop()?)?,
        constraints: PolytopeDocument::from_polytope(&one_link_constraints()?),
        trajectory,
        steps,
        disturbance: None,
        governors: Vec::new(),
        epsilon: 0.01,
        t_max: 500,
        notes: vec![
            "model, gains, sample time and the ±45° limit are given constants".into(),
            "trajectory breakpoints are reconstructed from the described maneuver".into(),
        ],
    })
}

/// The named scenario registry.
pub fn canonical_scenarios() -> Result<Vec<Scenario>> {
    let mut out = Vec::new();

    let mut s = one_link_base(
        "one_link",
        "One-link arm, |θ| <= 45°, PRG with N = 25 against SRG and CG",
        one_link_trajectory(),
        150,
    )?;
    s.governors = vec![
        GovernorConfig::Srg,
        GovernorConfig::Prg { horizon: 25 },
        GovernorConfig::MultiN { horizons: (0..=25).collect() },
        GovernorConfig::Cg { horizon: 25, weight: None },
    ];
    out.push(s);

    let mut s = one_link_base(
        "one_link_multi_n",
        "One-link arm, Multi-N PRG over horizons 0..25 against plain PRG",
        one_link_trajectory(),
        150,
    )?;
    s.governors = vec![GovernorConfig::Prg { horizon: 25 }, GovernorConfig::MultiN { horizons: (0..=25).collect() }];
    out.push(s);

    let mut s = one_link_base(
        "one_link_multi_n_long",
        "One-link arm, Multi-N PRG with N_q = 100: sparse {0, 100} against dense 0..100",
        one_link_trajectory(),
        150,
    )?;
    s.governors = vec![
        GovernorConfig::Prg { horizon: 100 },
        GovernorConfig::MultiN { horizons: vec![0, 100] },
        GovernorConfig::MultiN { horizons: (0..=100).collect() },
    ];
    out.push(s);

    let mut s = one_link_base(
        "one_link_disturbance",
        "One-link arm with input disturbance uniform on [-0.1, 0.1]; robust SRG against disturbance-preview PRG",
        one_link_trajectory(),
        150,
    )?;
    let model = one_link_closed_loop()?;
    s.disturbance = Some(DisturbanceSpec {
        lo: vec![-0.1],
        hi: vec![0.1],
        b_w: matrix_to_rows(&model.b),
        d_w: vec![vec![0.0]],
    });
    s.governors = vec![
        GovernorConfig::RobustSrg,
        GovernorConfig::DisturbancePrg { horizon: 20 },
        GovernorConfig::DisturbancePrg { horizon: 50 },
    ];
    s.notes.push("disturbance bound and B_w = B, D_w = 0 are given constants".into());
    out.push(s);

    let mut s = one_link_base(
        "one_link_lambda",
        "One-link arm with an overstated preview; standard PRG against the stochastic-mixing PRG (N = 4)",
        corrupted_trajectory(),
        100,
    )?;
    s.governors = vec![
        GovernorConfig::Prg { horizon: 4 },
        GovernorConfig::LambdaPrg { lambdas: LAMBDA_PRESET.to_vec() },
    ];
    s.notes = vec![
        "model and the λ preset are given constants".into(),
        "the actual trajectory and the preview drift are constructed for this comparison".into(),
    ];
    out.push(s);

    let model = two_link_closed_loop()?;
    out.push(Scenario {
        name: "two_link".into(),
        description: "Two-link arm, |θ₁|, |θ₂| <= 60°, single-κ lifted PRG against DRG-PRG with N₁ = N₂ = 40".into(),
        model: ModelDocument::from_model(&model)?,
        constraints: PolytopeDocument::from_polytope(&two_link_constraints()?),
        trajectory: two_link_trajectory(),
        steps: 200,
        disturbance: None,
        governors: vec![
            GovernorConfig::Srg,
            GovernorConfig::MultiInputPrg { horizons: vec![40, 40] },
            GovernorConfig::DrgPrg { horizons: vec![40, 40] },
        ],
        epsilon: 0.01,
        t_max: 500,
        notes: vec![
            "model, gains, precompensator, the ±60° limits and the horizons are given constants".into(),
            "trajectory breakpoints are reconstructed from the described maneuver".into(),
        ],
    });

    Ok(out)
}

pub fn scenario_names() -> Vec<String> {
    canonical_scenarios().map(|v| v.into_iter().map(|s| s.name).collect()).unwrap_or_default()
}

pub fn find_scenario(name: &str) -> Result<Scenario> {
    canonical_scenarios()?.into_iter().find(|s| s.name == name).ok_or_else(|| {
        Error::Config(format!("unknown scenario '{name}'; known scenarios: {}", scenario_names().join(", ")))
    })
}
