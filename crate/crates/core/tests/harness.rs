use std::process::Command;

use pullback::harness::{run_experiment, ExperimentConfig, ExperimentReport};
use pullback::setops::hausdorff;
use pullback::testbeds::{Forcing, ScalarLinearSDE};
use pullback::{Engine, EngineOptions, PointCloud, WienerPath};

const LINEAR: &str = r#"
kind = "attractor"
seeds = [0, 1, 2]
taus = [0.0, -2.0]

[system]
type = "linear"
lambda = 1.0
noise_on = true
dt = 0.01
forcing = { kind = "constant", value = 1.0 }

[schedule]
t_values = [10.0, 20.0, 30.0]
convergence_tol = 1e-6
stall_limit = 1

[sampling]
family_radii = [2.0]
"#;

const BISTABLE: &str = r#"
kind = "attractor"
seeds = [0]

[system]
type = "bistable"
dt = 0.001

[schedule]
t_values = [5.0, 10.0, 15.0]
convergence_tol = 0.02
stall_limit = 1

[sampling]
family_radii = []
"#;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).unwrap()
}

#[test]
fn reports_are_reproducible() {
    let c = cfg(LINEAR);
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    assert!(a.pass, "{:?}", a.failures);
    assert_eq!(a.body_json(), b.body_json());
}

#[test]
fn worker_count_does_not_change_results() {
    let mut c = cfg(LINEAR);
    let serial = {
        c.workers = Some(1);
        run_experiment(&c).unwrap()
    };
    c.workers = Some(3);
    let parallel = run_experiment(&c).unwrap();
    assert_eq!(serial.body_json(), parallel.body_json());
}

#[test]
fn seed_order_is_irrelevant() {
    let mut c = cfg(LINEAR);
    let a = run_experiment(&c).unwrap();
    c.seeds = vec![2, 0, 1];
    let b = run_experiment(&c).unwrap();
    assert_eq!(a.per_seed, b.per_seed);
    assert_eq!(a.aggregate, b.aggregate);
}

#[test]
fn single_seed_matches_direct_engine_call() {
    let mut c = cfg(LINEAR);
    c.seeds = vec![5];
    c.taus = vec![-2.0];
    let report = run_experiment(&c).unwrap();
    let got = report.per_seed[&5].get("attractor_error.tau0").unwrap();

    let sys = ScalarLinearSDE::new(1.0, Forcing::Constant { value: 1.0 }, true, 0.01).unwrap();
    let omega = WienerPath::sample(5, -60.0, 1.0, 0.01).unwrap();
    let opts = EngineOptions {
        refine: Some(0.05),
        ..EngineOptions::default()
    };
    let att = Engine::with_options(&sys, opts)
        .attractor_section(&sys.absorbing_family(0.05), -2.0, &omega, &c.schedule)
        .unwrap();
    let xi = PointCloud::singleton(sys.attractor_point(-2.0, &omega).unwrap());
    assert_eq!(got, hausdorff(&att.cloud, &xi).unwrap());
}

#[test]
fn output_directory_is_populated() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(LINEAR);
    c.seeds = vec![0];
    c.output = Some(dir.path().to_path_buf());
    let report = run_experiment(&c).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let back = ExperimentReport::from_json(&text).unwrap();
    assert_eq!(back.body_json(), report.body_json());
    for name in ["attractor_seed0_tau0.dat", "omega_trace_seed0_tau1.dat"] {
        let body = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(body.lines().count() >= 2, "{name}");
    }
}

#[test]
fn invalid_configs_collect_every_problem() {
    let mut c = cfg(LINEAR);
    c.seeds.clear();
    c.taus.clear();
    match run_experiment(&c) {
        Err(pullback::Error::Config(problems)) => assert!(problems.len() >= 2, "{problems:?}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

fn cli(args: &[&str], config: &str) -> i32 {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, config).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_pullback"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap()
        .status;
    status.code().unwrap()
}

#[test]
fn cli_exit_codes() {
    assert_eq!(cli(&["attractor"], BISTABLE), 0);
    assert_eq!(cli(&["attractor", "--set", "tolerances.attractor=1e-30"], BISTABLE), 1);
    assert_eq!(cli(&["attractor", "--set", "seeds=[]"], BISTABLE), 2);
    assert_eq!(cli(&["tails"], BISTABLE), 2);
    assert_eq!(cli(&["oracle", "--set", "schedule.nonsense=1"], BISTABLE), 2);
}
