use prgov::governor::GovernorKind;
use prgov::scenario::models::*;
use prgov::scenario::*;
use prgov::Error;

fn opts(seed: u64) -> RunOptions {
    RunOptions { seed, ..Default::default() }
}

#[test]
fn registry_is_complete_and_valid() {
    let all = canonical_scenarios().unwrap();
    assert!(all.len() >= 6);
    let mut names = scenario_names();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), all.len());
    for sc in &all {
        sc.validate().unwrap();
        assert!(!sc.governors.is_empty(), "{}", sc.name);
        assert!(!sc.notes.is_empty(), "{}", sc.name);
    }
}

#[test]
fn unknown_scenario_lists_known_names() {
    match find_scenario("three_link") {
        Err(Error::Config(msg)) => assert!(msg.contains("one_link") && msg.contains("two_link"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn scenario_models_embed_the_given_constants() {
    let one = find_scenario("one_link").unwrap();
    assert_eq!(one.model().unwrap(), one_link_closed_loop().unwrap());
    let c = one_link_continuous().unwrap();
    assert_eq!(c.a.as_slice(), &[0.0, -14.7, 1.0, 0.0]);
    assert_eq!(c.b.as_slice(), &[0.0, 3.0]);
    assert_eq!(one_link_gain().as_slice(), &[61.77, 9.64]);
    assert_eq!(one.model.sample_time, 0.01);
    assert_eq!(one.constraint_set().unwrap().h.as_slice(), &[45.0, 45.0]);

    let two = find_scenario("two_link").unwrap();
    assert_eq!(two.model().unwrap(), two_link_closed_loop().unwrap());
    let c = two_link_continuous().unwrap();
    assert_eq!(c.a.row(2).iter().copied().collect::<Vec<_>>(), vec![-0.46, -0.62, 0.0, 0.0]);
    assert_eq!(c.a.row(3).iter().copied().collect::<Vec<_>>(), vec![0.25, -6.62, 0.0, 0.0]);
    assert_eq!(c.b.row(2).iter().copied().collect::<Vec<_>>(), vec![0.78, -0.04]);
    assert_eq!(c.b.row(3).iter().copied().collect::<Vec<_>>(), vec![0.04, 0.13]);
    assert_eq!(two.constraint_set().unwrap().h.as_slice(), &[60.0; 4]);

    let dist = find_scenario("one_link_disturbance").unwrap().disturbance.unwrap();
    assert_eq!((dist.lo.clone(), dist.hi.clone()), (vec![-0.1], vec![0.1]));
    assert_eq!(dist.b_w, prgov::numerics::matrix_to_rows(&one_link_closed_loop().unwrap().b));
    assert_eq!(dist.d_w, vec![vec![0.0]]);
}

#[test]
fn zero_reference_stays_at_rest() {
    let mut sc = find_scenario("one_link").unwrap();
    sc.trajectory = ReferenceTrajectory::new(vec![Segment { start: 0.0, values: vec![0.0] }], 0.01).unwrap();
    for cfg in [GovernorConfig::Srg, GovernorConfig::Prg { horizon: 5 }, GovernorConfig::Cg { horizon: 5, weight: None }] {
        let res = run_scenario(&sc, &cfg, &opts(1)).unwrap();
        assert!(res.records.iter().all(|r| r.v == vec![0.0] && r.y == vec![0.0]));
        assert_eq!(res.summary.violations, 0);
        assert_eq!(res.summary.tracking_gap, 0.0);
    }
}

#[test]
fn one_link_prg_respects_the_limit() {
    let res = run_scenario(&find_scenario("one_link").unwrap(), &GovernorConfig::Prg { horizon: 25 }, &opts(1)).unwrap();
    assert_eq!(res.summary.violations, 0);
    assert!(res.summary.max_abs_y[0] <= 45.0 + 1e-6);
    assert_eq!(res.summary.kind, GovernorKind::Prg);
    assert_eq!(res.records.len(), 150);
}

#[test]
fn same_seed_gives_identical_results() {
    let sc = find_scenario("one_link_disturbance").unwrap();
    let cfg = GovernorConfig::DisturbancePrg { horizon: 20 };
    let a = run_scenario(&sc, &cfg, &opts(42)).unwrap();
    let b = run_scenario(&sc, &cfg, &opts(42)).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
    let c = run_scenario(&sc, &cfg, &opts(43)).unwrap();
    assert_ne!(a.to_csv(), c.to_csv());
}

#[test]
fn csv_has_the_fixed_column_order() {
    let res = run_scenario(&find_scenario("two_link").unwrap(), &GovernorConfig::Srg, &opts(1)).unwrap();
    let csv = res.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,r_1,r_2,v_1,v_2,y_1,y_2,kappa,step_time_ns");
    assert_eq!(lines.count(), 200);
    let summary: serde_json::Value = serde_json::from_str(&res.summary_json().unwrap()).unwrap();
    assert_eq!(summary["format"], "prgov.scenario_summary");
    assert_eq!(summary["max_abs_y"].as_array().unwrap().len(), 2);
    let plots = res.plot_data();
    assert!(plots.iter().any(|(name, body)| name == "output_2" && body.starts_with("t,y\n")));
}

#[test]
fn scenario_documents_round_trip() {
    for sc in canonical_scenarios().unwrap() {
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(back, sc);
    }
    assert!(Scenario::from_json("{\"name\": 1}").is_err());
}

#[test]
fn governor_needing_a_disturbance_is_rejected_elsewhere() {
    let sc = find_scenario("one_link").unwrap();
    assert!(matches!(run_scenario(&sc, &GovernorConfig::RobustSrg, &opts(1)), Err(Error::Config(_))));
    assert!(matches!(
        run_scenario(&sc, &GovernorConfig::MultiInputPrg { horizons: vec![3, 3] }, &opts(1)),
        Err(Error::Config(_))
    ));
}

#[test]
fn disk_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sc = find_scenario("one_link").unwrap();
    let key = SetKey {
        model: sc.model.clone(),
        constraints: sc.constraints.clone(),
        spec: SetSpec::Lifted { horizons: vec![6] },
        epsilon: sc.epsilon,
        t_max: sc.t_max,
    };
    let first = SetCache::new(Some(dir.path().to_path_buf()));
    let (built, status) = first.get_or_build(&key).unwrap();
    assert_eq!(status, CacheStatus::Built);
    assert!(first.path_for(&key).unwrap().exists());
    assert_eq!(first.get_or_build(&key).unwrap().1, CacheStatus::Memory);
    let second = SetCache::new(Some(dir.path().to_path_buf()));
    let (loaded, status) = second.get_or_build(&key).unwrap();
    assert_eq!(status, CacheStatus::Disk);
    assert_eq!(*loaded, *built);

    let other = SetKey { epsilon: 0.02, ..key.clone() };
    assert_ne!(other.digest(), key.digest());

    // a corrupt entry is rebuilt rather than trusted
    std::fs::write(second.path_for(&key).unwrap(), "not json").unwrap();
    let third = SetCache::new(Some(dir.path().to_path_buf()));
    assert_eq!(third.get_or_build(&key).unwrap().1, CacheStatus::Built);
}

#[test]
fn timing_comparison_shape() {
    let sc = find_scenario("one_link").unwrap();
    let rows = run_timing_comparison(&sc, &[GovernorConfig::Srg], 1, 1).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].repeats, 1);
    assert!(rows[0].mean_ns > 0.0 && rows[0].max_ns > 0);
}

#[test]
fn disturbance_stream_is_reproducible() {
    let a = DisturbanceStream::new(3, &[-0.1, 0.0], &[0.1, 2.0]).take(200);
    let b = DisturbanceStream::new(3, &[-0.1, 0.0], &[0.1, 2.0]).take(200);
    assert_eq!(a, b);
    assert!(a.iter().all(|w| (-0.1..0.1).contains(&w[0]) && (0.0..2.0).contains(&w[1])));
}

fn schema_required(file: &str) -> Vec<String> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(file);
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    schema["required"].as_array().unwrap().iter().map(|k| k.as_str().unwrap().to_string()).collect()
}

fn keys(doc: &str) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_str(doc).unwrap();
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn documents_match_the_published_schemas() {
    let sc = find_scenario("one_link").unwrap();
    let res = run_scenario(&sc, &GovernorConfig::Srg, &RunOptions::default()).unwrap();
    let mut want = schema_required("scenario_summary.v1.schema.json");
    let mut got = keys(&res.summary_json().unwrap());
    want.sort();
    got.sort();
    assert_eq!(want, got);

    let set = prgov::mas::build_mas(&sc.model().unwrap(), &sc.constraint_set().unwrap(), 0.01, 500).unwrap();
    let mut want = schema_required("admissible_set.v1.schema.json");
    let mut got = keys(&set.to_json().unwrap());
    want.sort();
    got.sort();
    assert_eq!(want, got);
}
