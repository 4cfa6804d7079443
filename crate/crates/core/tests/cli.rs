//! End-to-end behaviour of the `sdstab` binary.

use std::fs;
use std::process::{Command, Output};

use sdstab::sampled_loop::verify_rows;
use sdstab::scenarios::read_ledger_csv;

fn sdstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdstab")).args(args).output().expect("run sdstab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bracket_prints_the_antidiagonal_value() {
    let o = sdstab(&["bracket", "example1", "--point", "1,-1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[f,g]Phi  -2.000000"), "{}", stdout(&o));
    let csv = sdstab(&["bracket", "example1", "--point", "1,-1", "--csv"]);
    assert!(stdout(&csv).starts_with("quantity,value\n"));
}

#[test]
fn checks_pass_on_the_builtins() {
    let clf = sdstab(&["check-clf", "example1"]);
    assert_eq!(clf.status.code(), Some(0));
    assert!(stdout(&clf).ends_with("0 violations\n"));
    let gains = sdstab(&["check-gains", "example2"]);
    assert_eq!(gains.status.code(), Some(0));
    let text = stdout(&gains);
    assert!(text.contains("small-gain: pass (50 grid points, 0 violations)"), "{text}");
    assert!(text.contains("rank: pass (100 points"), "{text}");
}

#[test]
fn simulate_writes_a_ledger_that_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = sdstab(&["simulate", "example2", "--x0", "0.5,-1.2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trajectory.csv", "ledger.csv", "summary.txt", "phase.svg"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let rows = read_ledger_csv(fs::File::open(out.join("ledger.csv")).unwrap()).unwrap();
    assert!(!rows.is_empty());
    assert!(verify_rows(&rows, 0.5).passed());
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("verdict: Converged"), "{summary}");
    let header = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,x_1,x_2,u_1,u_2,phi\n"));
}

#[test]
fn exhausted_budget_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("budget");
    let o = sdstab(&[
        "simulate",
        "example1",
        "--max-events",
        "1",
        "--stop-phi",
        "1e-12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let rows = read_ledger_csv(fs::File::open(out.join("ledger.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn error_classes_map_to_exit_codes() {
    assert_eq!(sdstab(&["simulate", "nosuch"]).status.code(), Some(3));
    assert_eq!(sdstab(&["bracket", "example1", "--point", "1,x"]).status.code(), Some(3));
    assert_eq!(sdstab(&["frobnicate"]).status.code(), Some(64));
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let inside = blocker.join("out");
    assert_eq!(
        sdstab(&["simulate", "example2", "--out", inside.to_str().unwrap()]).status.code(),
        Some(4)
    );
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "scenario = \"example1\"\nsigma = \n").unwrap();
    let o = sdstab(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn batch_runs_each_config_into_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (name, x0) in [("a", "[1.0, 1.0]"), ("b", "[-0.5, 2.0]")] {
        let p = dir.path().join(format!("{name}.toml"));
        fs::write(&p, format!("scenario = \"example2\"\nx0 = {x0}\n")).unwrap();
        files.push(p);
    }
    let root = dir.path().join("out");
    let mut args = vec!["simulate", "--out", root.to_str().unwrap(), "--batch"];
    args.extend(files.iter().map(|p| p.to_str().unwrap()));
    let o = sdstab(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(root.join("a/ledger.csv").is_file() && root.join("b/ledger.csv").is_file());
}

/// From (1, −1) the ledger decreases at every event, but x₁x₂ = −1 can only
/// creep towards zero (its rate is independent of the input and at most
/// |x₁x₂|³/4), so the default stop level is not reached within the budget.
#[test]
fn example1_default_start_decreases_but_exhausts_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e1");
    let o = sdstab(&["simulate", "example1", "--out", out.to_str().unwrap()]);
    let rows = read_ledger_csv(fs::File::open(out.join("ledger.csv")).unwrap()).unwrap();
    assert!(rows.windows(2).all(|w| w[1].phi_before < w[0].phi_before));
    assert!(verify_rows(&rows, 0.5).passed());
    assert_eq!(o.status.code(), Some(2));
}
