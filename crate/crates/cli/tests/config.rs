use repcode::model::{Boundary, InitialState};
use repcode::observables::Observable;
use repcode_cli::config::{apply_overrides, parse_table, single_point, spec_from_table, Couplings, Engine};
use repcode_cli::{parse_config, Axis, ConfigError, EngineChoice};

const MINIMAL: &str = r#"
axis = "lambda"
values = [0.2, 0.4]
observable_list = ["s_r"]

[fixed]
q = 0.1
L = 6
"#;

#[test]
fn minimal_config_uses_defaults() {
    let spec = parse_config(MINIMAL).unwrap();
    assert_eq!(spec.axis, Axis::Lambda);
    assert_eq!(spec.engine, EngineChoice::Auto);
    assert_eq!(spec.n_trajectories, 100);
    assert_eq!(spec.t, None);
    assert_eq!(spec.boundary, Boundary::Open);
    assert_eq!(spec.initial_state, InitialState::GhzWithReference);
    assert_eq!(spec.couplings, Couplings::PhasePoint { lambda: None, q: Some(0.1), delta: 0.7 });
    let grid = spec.grid();
    assert_eq!(grid.len(), 2);
    assert!(grid.iter().all(|g| g.params.t == 24 && g.engine == Engine::Dense));
    assert!((grid[0].params.lambda_x - 0.14).abs() < 1e-15 && (grid[0].params.lambda_zz - 0.56).abs() < 1e-15);
}

#[test]
fn misspelled_keys_are_rejected() {
    let text = MINIMAL.replace("q = 0.1", "lamda_x = 0.1");
    assert_eq!(parse_config(&text), Err(ConfigError::UnknownKey("lamda_x".into())));
    let text = MINIMAL.replace("axis", "axes");
    assert_eq!(parse_config(&text), Err(ConfigError::UnknownKey("axes".into())));
}

#[test]
fn wrong_types_and_missing_fields() {
    assert!(matches!(
        parse_config(&MINIMAL.replace("L = 6", "L = \"six\"")),
        Err(ConfigError::TypeError { key, .. }) if key == "L"
    ));
    assert!(matches!(
        parse_config(&MINIMAL.replace("[0.2, 0.4]", "\"all\"")),
        Err(ConfigError::TypeError { key, .. }) if key == "values"
    ));
    assert!(matches!(
        parse_config(&MINIMAL.replace("\"lambda\"", "\"lambada\"")),
        Err(ConfigError::TypeError { key, .. }) if key == "axis"
    ));
    assert_eq!(parse_config(&MINIMAL.replace("L = 6", "")), Err(ConfigError::MissingField("L".into())));
    assert_eq!(parse_config(&MINIMAL.replace("q = 0.1", "")), Err(ConfigError::MissingField("q".into())));
    assert_eq!(
        parse_config(&MINIMAL.replace("observable_list = [\"s_r\"]", "")),
        Err(ConfigError::MissingField("observable_list".into()))
    );
    assert!(matches!(parse_config("axis = "), Err(ConfigError::Syntax(_))));
}

#[test]
fn empty_or_unknown_observables_fail_at_parse_time() {
    let empty = MINIMAL.replace("[\"s_r\"]", "[]");
    assert!(matches!(parse_config(&empty), Err(ConfigError::Invalid(_))));
    let unknown = MINIMAL.replace("[\"s_r\"]", "[\"s_q\"]");
    assert!(matches!(parse_config(&unknown), Err(ConfigError::Invalid(_))));
}

#[test]
fn values_must_be_sorted_and_nonempty() {
    for bad in ["[]", "[0.4, 0.2]", "[0.2, 0.2]"] {
        let text = MINIMAL.replace("[0.2, 0.4]", bad);
        assert!(matches!(parse_config(&text), Err(ConfigError::Invalid(_))), "{bad}");
    }
}

#[test]
fn phase_point_cut_has_twenty_one_points() {
    let values: Vec<String> = (0..=20).map(|k| format!("{}", k as f64 * 0.05)).collect();
    let text = format!(
        "axis = \"lambda\"\nvalues = [{}]\nobservable_list = [\"s_r\", \"i_c_renyi2\"]\n[fixed]\nq = 0.1\ndelta = 0.7\nL = 4\n",
        values.join(", ")
    );
    let spec = parse_config(&text).unwrap();
    let grid = spec.grid();
    assert_eq!(grid.len(), 21);
    for g in &grid {
        let pp = g.phase.unwrap();
        assert_eq!((pp.q, pp.delta), (0.1, 0.7));
        assert_eq!((g.params.q_x, g.params.q_zz), (0.1, 0.1));
        assert!((g.params.lambda_x + g.params.lambda_zz - 0.7).abs() < 1e-15);
    }
    assert_eq!(grid[0].params.lambda_x, 0.0);
    assert_eq!(grid[20].params.lambda_zz, 0.0);
}

#[test]
fn auto_engine_switches_above_eight_sites() {
    let text = MINIMAL.replace("L = 6", "").replace("axis", "sizes = [8, 10]\naxis");
    let spec = parse_config(&text).unwrap();
    let engines: Vec<(usize, Engine)> = spec.grid().iter().map(|g| (g.params.l, g.engine)).collect();
    assert_eq!(engines, vec![(8, Engine::Dense), (8, Engine::Dense), (10, Engine::Mps), (10, Engine::Mps)]);
    let with_exact = text.replace("[\"s_r\"]", "[\"i_c\"]");
    assert!(matches!(parse_config(&with_exact), Err(ConfigError::Invalid(_))));
    let dense = text.replace("[8, 10]", "[8, 12]").replace("axis", "engine = \"dense\"\naxis");
    assert!(matches!(parse_config(&dense), Err(ConfigError::Invalid(_))));
}

#[test]
fn conflicting_keys() {
    let swept_and_fixed = MINIMAL.replace("q = 0.1", "q = 0.1\nlambda = 0.3");
    assert!(matches!(parse_config(&swept_and_fixed), Err(ConfigError::Conflict(_))));
    let mixed = MINIMAL.replace("q = 0.1", "q = 0.1\nlambda_x = 0.3");
    assert!(matches!(parse_config(&mixed), Err(ConfigError::Conflict(_))));
    let explicit_lambda_axis = MINIMAL.replace("q = 0.1", "lambda_x = 0.3\nlambda_zz = 0.3\nq_x = 0.1\nq_zz = 0.1");
    assert!(matches!(parse_config(&explicit_lambda_axis), Err(ConfigError::Conflict(_))));
}

#[test]
fn explicit_couplings_and_other_axes() {
    let text = r#"
axis = "q"
values = [0.0, 0.25]
observable_list = ["kappa_ea", "d_2"]
engine = "mps"
chi_max = 64
[fixed]
lambda_x = 0.3
lambda_zz = 0.5
theta_zz = 0.2
L = 5
T = 7
boundary = "periodic"
initial_state = "all_up"
master_seed = 11
"#;
    let spec = parse_config(text).unwrap();
    let g = &spec.grid()[1];
    assert_eq!((g.params.q_x, g.params.q_zz, g.params.theta_zz, g.params.t), (0.25, 0.25, 0.2, 7));
    assert_eq!((g.params.boundary, g.params.master_seed, g.engine), (Boundary::Periodic, 11, Engine::Mps));
    assert_eq!(spec.policy().chi_max, 64);
    assert!(g.phase.is_none());
    // Reference observables need a reference qubit.
    assert!(matches!(parse_config(&text.replace("\"d_2\"", "\"s_r\"")), Err(ConfigError::Invalid(_))));

    let theta = MINIMAL.replace("\"lambda\"", "\"theta\"").replace("q = 0.1", "q = 0.1\nlambda = 0.5");
    let g = parse_config(&theta).unwrap().grid();
    assert_eq!((g[1].params.theta_x, g[1].params.theta_zz), (0.4, 0.4));

    let sizes = MINIMAL.replace("\"lambda\"", "\"L\"").replace("[0.2, 0.4]", "[3, 5]").replace("L = 6", "lambda = 0.5");
    let g = parse_config(&sizes).unwrap().grid();
    assert_eq!(g.iter().map(|g| (g.params.l, g.params.t)).collect::<Vec<_>>(), vec![(3, 12), (5, 20)]);
    assert!(matches!(parse_config(&sizes.replace("[3, 5]", "[3.5]")), Err(ConfigError::Invalid(_))));
}

#[test]
fn out_of_range_points_are_rejected() {
    let text = MINIMAL.replace("q = 0.1", "q = 0.7");
    assert!(matches!(parse_config(&text), Err(ConfigError::Invalid(_))));
}

#[test]
fn overrides_and_single_points() {
    let mut table = parse_table(MINIMAL).unwrap();
    let o = |k: &str, v: &str| (k.to_string(), v.to_string());
    apply_overrides(&mut table, &[o("L", "4"), o("engine", "mps"), o("boundary", "periodic"), o("n_trajectories", "5")]).unwrap();
    let spec = spec_from_table(&table).unwrap();
    assert_eq!((spec.sizes.clone(), spec.engine, spec.boundary, spec.n_trajectories), (vec![4], EngineChoice::Mps, Boundary::Periodic, 5));
    assert_eq!(apply_overrides(&mut table, &[o("lamda", "1")]), Err(ConfigError::UnknownKey("lamda".into())));

    let mut point = parse_table("observable_list = [\"kappa_2\"]\n[fixed]\nlambda = 0.3\nq = 0.05\nL = 5").unwrap();
    single_point(&mut point).unwrap();
    let spec = spec_from_table(&point).unwrap();
    assert_eq!((spec.axis, spec.values.clone()), (Axis::L, vec![5.0]));
    assert_eq!(spec.observable_list, vec![Observable::Kappa2]);
    let mut missing = parse_table("[fixed]\nlambda = 0.3").unwrap();
    assert_eq!(single_point(&mut missing), Err(ConfigError::MissingField("L".into())));
}
