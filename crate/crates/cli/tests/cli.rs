use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn quadsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadsim")).args(args).output().expect("binary runs")
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn small_scenario(dir: &Path) -> String {
    let p = dir.join("small.toml");
    fs::write(&p, "xcoord = 3\nycoord = 3\nobjects = [[2, 1]]\ndepot = [2, 2]\nbattery_capacity = 25\nmiss = 90\nhover = [2, 5]\n").unwrap();
    p.display().to_string()
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o").display().to_string();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[mission]\ndt = -1.0\n").unwrap();
    let bad = bad.display().to_string();
    for args in [
        vec!["simulate", "--config", &bad, "-o", &out],
        vec!["simulate", "--set", "guidance.nonsense=1", "-o", &out],
        vec!["simulate", "--config", "/nonexistent/x.toml", "-o", &out],
        vec!["montecarlo", "-n", "0", "-o", &out],
        vec!["mdp-build", "--mdp-set", "xcoord=0", "-o", &out],
        vec!["mdp-check", "--mdp-set", "pf=1.5", "-o", &out],
        vec!["compare", "--grid", "2by2", "-o", &out],
    ] {
        let o = quadsim(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
}

#[test]
fn identical_inputs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = quadsim(&["montecarlo", "-n", "4", "--workers", workers, "--seed", "11", "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        ["summary.toml", "transitions.csv", "effective_config.toml"].map(|f| read(&out.join(f)))
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "2"));
    assert!(a[0].contains("seed = 11"));
    assert!(a[1].starts_with("# quadsim ") && a[1].contains("# seed 11"));
}

#[test]
fn effective_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = quadsim(&[
        "simulate",
        "--seed",
        "5",
        "--run",
        "2",
        "--set",
        "guidance.V_th=10.6",
        "-o",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = first.join("effective_config.toml");
    let second = dir.path().join("second");
    let o = quadsim(&["simulate", "--config", cfg.to_str().unwrap(), "--run", "2", "-o", second.to_str().unwrap()]);
    assert!(o.status.success());
    for f in ["trajectory.csv", "height.csv", "battery.csv", "events.toml", "effective_config.toml"] {
        assert_eq!(read(&first.join(f)), read(&second.join(f)), "{f}");
    }
    let events: toml::Table = read(&first.join("events.toml")).parse().unwrap();
    assert_eq!(events["run_index"].as_integer(), Some(2));
}

#[test]
fn zero_failure_rate_gives_no_faults() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc");
    let o = quadsim(&["montecarlo", "-n", "4", "--set", "guidance.P_a=0", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: toml::Table = read(&out.join("summary.toml")).parse().unwrap();
    assert_eq!(s["actuator_fault_rate"].as_float(), Some(0.0));

    let scenario = small_scenario(dir.path());
    let out = dir.path().join("check");
    let o = quadsim(&["mdp-check", "--scenario", &scenario, "--mdp-set", "pf=0", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("check.csv"));
    assert!(text.contains("Pmax=? [ F 'fault' ],0.0\n"), "{text}");
}

#[test]
fn model_commands_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small_scenario(dir.path());
    let out = dir.path().join("m");
    let o = quadsim(&["mdp-build", "--scenario", &scenario, "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out.join("mdp.txt"));
    assert!(text.contains("deadlocks = 0"), "{text}");
    let states: usize = text.lines().find_map(|l| l.strip_prefix("states = ")).unwrap().parse().unwrap();
    assert!(states > 100);

    let o = quadsim(&["export-prism", "--scenario", &scenario, "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let prism = read(&out.join("mission.prism"));
    assert!(prism.starts_with("// quadsim ") && prism.contains("\nmdp\n"));
    let model = quadsim_verify::prism::parse(&prism).unwrap();
    assert_eq!(
        model,
        toml::from_str::<quadsim_verify::scenario::AbstractScenario>(&read(&out.join("effective_scenario.toml")))
            .unwrap()
            .to_model()
            .unwrap()
    );
    assert!(read(&out.join("mission.props")).contains("Pmax=? [ F \"MissionSuccessful\" ];"));
}

#[test]
fn mismatched_fault_rates_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let o = quadsim(&[
        "compare",
        "--grid",
        "2x2",
        "-n",
        "2",
        "--set",
        "guidance.P_s=0",
        "--mdp-set",
        "pf=0.001",
        "-o",
        out.to_str().unwrap(),
    ]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{err}");
    assert!(err.contains("warning: configurations are not matched"), "{err}");
    let env = read(&out.join("envelope.csv"));
    assert!(env.contains("# envelope over 1 models"), "{env}");
    let report = read(&out.join("containment.txt"));
    assert_eq!(report.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 3);

    let matched = dir.path().join("matched");
    let o =
        quadsim(&["compare", "--grid", "2x2", "-n", "2", "--set", "guidance.P_s=0", "-o", matched.to_str().unwrap()]);
    assert!(!String::from_utf8_lossy(&o.stderr).contains("not matched"));
}
