use std::path::Path;
use std::process::{Command, Output};

fn crdiff(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crdiff"));
    cmd.args(args).env_remove("CRDIFF_OUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("CRDIFF_OUT_DIR", d);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn minimal_simulate_run() {
    let o = crdiff(
        &[
            "simulate",
            "--model",
            "heisenberg",
            "--n",
            "1",
            "--t",
            "1",
            "--steps",
            "1000",
            "--paths",
            "100",
            "--seed",
            "7",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# crdiff "));
    assert!(lines[1].starts_with("# config_sha256 "));
    assert_eq!(lines[2], "# seed 7");
    assert_eq!(lines[3], "# command simulate");
    assert_eq!(lines.len(), 4 + 1 + 100);
    assert!(stderr(&o).contains("seed 7"));
}

#[test]
fn check_model_table() {
    let o = crdiff(
        &[
            "check-model",
            "--model",
            "heisenberg",
            "--n",
            "2",
            "--points",
            "20",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("theta"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    std::fs::write(&file, "[sim]\nsteps = -5\n").unwrap();
    let o = crdiff(&["simulate", "--config", file.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));

    std::fs::write(&file, "[sim]\nstepz = 5\n").unwrap();
    let o = crdiff(&["simulate", "--config", file.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepz"));

    let o = crdiff(&["simulate", "--steps", "many"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = crdiff(&["simulate", "--model", "sphere"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.name"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(&file, "[sim]\nseed = 1\nsteps = 50\npaths = 20\n").unwrap();
    let o = crdiff(
        &[
            "simulate",
            "--config",
            file.to_str().unwrap(),
            "--seed",
            "9",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("# seed 9"));
    assert_eq!(stdout(&o).lines().count(), 4 + 1 + 20);
}

#[test]
fn output_is_deterministic_across_workers() {
    let base = [
        "line-integral",
        "--model",
        "gauge-heisenberg",
        "--kappa",
        "0.7",
        "--steps",
        "200",
        "--paths",
        "300",
        "--seed",
        "5",
        "--form",
        "half_dz_sum",
    ];
    let runs: Vec<String> = ["1", "3", "8"]
        .iter()
        .map(|w| {
            let mut args = base.to_vec();
            args.extend(["--workers", w]);
            let o = crdiff(&args, None);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            stdout(&o)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = crdiff(
        &[
            "charfn",
            "--steps",
            "100",
            "--paths",
            "200",
            "--lambdas",
            "0.5,1",
        ],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let written = std::fs::read_to_string(dir.path().join("charfn.csv")).unwrap();
    assert!(written.starts_with("# crdiff "));
    assert_eq!(written.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn dirichlet_flags_short_horizon() {
    let o = crdiff(
        &[
            "dirichlet",
            "--t",
            "0.02",
            "--steps",
            "100",
            "--paths",
            "200",
            "--start",
            "0.9,0,0",
            "--boundary",
            "coordinate:0",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("FLAGGED"), "{}", stderr(&o));

    let o = crdiff(
        &[
            "dirichlet",
            "--t",
            "10",
            "--steps",
            "5000",
            "--paths",
            "200",
            "--start",
            "0.2,0,0",
            "--boundary",
            "coordinate:0",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(!stderr(&o).contains("FLAGGED"));
}

#[test]
fn all_paths_capped_is_runtime_failure() {
    let o = crdiff(
        &[
            "density", "--steps", "100", "--paths", "200", "--cap", "0.01",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn every_command_runs() {
    for args in [
        vec!["density", "--steps", "50", "--paths", "500", "--bins", "6"],
        vec!["check-hormander", "--points", "5"],
        vec!["check-smoothness", "--form", "u_dzbar", "--point", "0,0,0"],
        vec![
            "check-model",
            "--model",
            "gauge-heisenberg",
            "--points",
            "5",
            "--format",
            "text",
        ],
    ] {
        let o = crdiff(&args, None);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
}
