//! Integration tests for the `stl` binary: exit codes, artifact shapes, and
//! configuration precedence as observed from outside the process.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(case: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stl-cli-{}-{case}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stl"))
        .args(args)
        .env_remove("STL_OUT")
        .output()
        .unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn configuration_errors_exit_2() {
    let cases: [&[&str]; 6] = [
        &["sweep", "--alpha", "1.5"],
        &["sweep", "--scenario", "mesh"],
        &["sweep", "--scenario", "chain3", "--n", "5"],
        &["sweep", "--scenario", "custom"],
        &["optimize", "--beta", "0.7", "--beta-grid", "0.6:0.8:0.05"],
        &["sweep", "--scenario", "indep", "--g", "0.5"],
    ];
    for args in cases {
        let output = stl(args);
        assert_eq!(
            output.status.code(),
            Some(2),
            "expected exit 2 for {args:?}, stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        assert!(!output.stderr.is_empty(), "no diagnostic for {args:?}");
    }

    // Unknown flags are usage errors; the argument parser exits 2 itself.
    let output = stl(&["sweep", "--bogus"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_layout_file_exits_3_and_bad_content_exits_2() {
    let dir = scratch("layout");
    let missing = dir.join("absent.csv");
    let output = stl(&[
        "sweep",
        "--scenario",
        "custom",
        "--layout",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));

    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "id,x,y\n1,0,zero\n").unwrap();
    let output = stl(&[
        "sweep",
        "--scenario",
        "custom",
        "--layout",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn starved_validation_fails_and_names_the_check() {
    let dir = scratch("starved");
    let out = dir.join("out");
    let output = stl(&[
        "validate",
        "--events",
        "100",
        "--trials",
        "50",
        "--replications",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));

    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("FAIL occupancy_indep"), "stdout: {stdout}");

    // The failure still leaves a complete, parseable report behind.
    let report = read(&out.join("validation.json"));
    assert!(report.contains("\"pass\": false"));
    assert!(report.contains("occupancy_indep"));
    let text = read(&out.join("validation.txt"));
    assert!(text.lines().any(|l| l.starts_with("FAIL occupancy_")));
    assert!(out.join("resolved_config.txt").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_artifacts_have_documented_shapes() {
    let dir = scratch("sweep");
    let out = dir.join("out");
    let output = stl(&[
        "sweep",
        "--scenario",
        "chain3",
        "--rate-grid",
        "0.1:10:7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));

    // The resolved configuration is echoed to stdout before anything else.
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.starts_with("command=sweep\n"));
    let echo = read(&out.join("resolved_config.txt"));
    assert!(stdout.starts_with(&echo));

    let fig_u = read(&out.join("fig_U.csv"));
    assert_eq!(fig_u.lines().next().unwrap(), "rate,U");
    assert_eq!(fig_u.lines().count(), 8);
    assert!(fig_u.ends_with('\n') && !fig_u.contains('\r'));

    let fig_a = read(&out.join("fig_A.csv"));
    assert_eq!(fig_a.lines().next().unwrap(), "rate,A,A_bayes");

    let fig_kbar = read(&out.join("fig_kbar.csv"));
    assert_eq!(fig_kbar.lines().next().unwrap(), "rate,k_bar");

    let states = read(&out.join("fig_A_states.csv"));
    assert_eq!(
        states.lines().next().unwrap(),
        "rate,A_empty,A_n1,A_n2,A_n3,A_n1+n3"
    );

    // The middle sensor's expected sample count is pinned at alpha * l for
    // every rate on the chain preset.
    let mbar = read(&out.join("fig_mbar.csv"));
    let mut lines = mbar.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rate,m_bar,m_empty,m_n1,m_n2,m_n3,m_n1+n3"
    );
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[4], "4", "m_n2 drifted in {line}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn frontier_and_optimize_artifacts_have_documented_shapes() {
    let dir = scratch("frontier-opt");
    let out = dir.join("front");
    let output = stl(&[
        "frontier",
        "--rate-grid",
        "0.1:10:6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let frontier = read(&out.join("frontier.csv"));
    let mut lines = frontier.lines();
    assert_eq!(lines.next().unwrap(), "alpha,rate,U,A,A_bayes,envelope");
    // 9 alpha curves of 6 rates each plus the reference rows.
    assert_eq!(frontier.lines().count(), 1 + 9 * 6 + 6);
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert!(fields[5] == "0" || fields[5] == "1");
    }

    let out = dir.join("opt");
    let output = stl(&[
        "optimize",
        "--beta",
        "0.78",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let opt = read(&out.join("opt.csv"));
    let mut lines = opt.lines();
    assert_eq!(
        lines.next().unwrap(),
        "beta,alpha_star,rate_star,U_star,feasible"
    );
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "0.78");
    assert_eq!(fields[2], "inf", "expected an unbounded rate in {row}");
    assert_eq!(fields[4], "1");

    let out = dir.join("opt-infeasible");
    let output = stl(&[
        "optimize",
        "--beta",
        "0.999",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let opt = read(&out.join("opt.csv"));
    let row = opt.lines().nth(1).unwrap();
    assert_eq!(row, "0.999,nan,nan,nan,0");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_dir_comes_from_flag_then_env() {
    let dir = scratch("outdir");
    let from_env = dir.join("from-env");
    let output = Command::new(env!("CARGO_BIN_EXE_stl"))
        .args(["sweep", "--scenario", "chain3", "--rate-grid", "0.5:2:3"])
        .env("STL_OUT", &from_env)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(from_env.join("fig_U.csv").exists());

    let from_flag = dir.join("from-flag");
    let output = Command::new(env!("CARGO_BIN_EXE_stl"))
        .args(["sweep", "--scenario", "chain3", "--rate-grid", "0.5:2:3"])
        .args(["--out", from_flag.to_str().unwrap()])
        .env("STL_OUT", dir.join("ignored"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(from_flag.join("fig_U.csv").exists());
    assert!(!dir.join("ignored").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_file_is_honored_and_overridden_by_flags() {
    let dir = scratch("config");
    let cfg = dir.join("run.conf");
    std::fs::write(
        &cfg,
        "scenario=chain3\nrate-grid=0.5:2:4\nalpha=0.3\nseed=11\n",
    )
    .unwrap();

    let out = dir.join("out");
    let output = stl(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let echo = read(&out.join("resolved_config.txt"));
    assert!(echo.contains("scenario=chain3\n"), "echo: {echo}");
    assert!(echo.contains("alpha=0.25\n"), "flag should win: {echo}");
    assert!(echo.contains("rate-grid=0.5:2:4\n"), "echo: {echo}");
    assert!(echo.contains("seed=11\n"), "echo: {echo}");

    std::fs::write(&cfg, "unknown-knob=1\n").unwrap();
    let output = stl(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
