//! End-to-end tests against the built binary: artifact determinism, exit codes, and
//! the config contract. Heavy solves are kept off the default grid — the numerics are
//! the library's problem; these tests own the plumbing.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fieldgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fieldgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

fn summary_objective(dir: &Path) -> f64 {
    let text = String::from_utf8(read(dir, "summary.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix("objective: "))
        .expect("summary has an objective line")
        .parse()
        .expect("objective parses")
}

#[test]
fn solve_reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = fieldgame(&["solve", "--n-steps", "250", "--out", dir.path().to_str().unwrap()]);
        assert_success(&out);
    }
    assert_eq!(read(a.path(), "solution.csv"), read(b.path(), "solution.csv"));
    assert_eq!(read(a.path(), "summary.txt"), read(b.path(), "summary.txt"));
}

#[test]
fn grid_refinement_barely_moves_the_objective() {
    let coarse = TempDir::new().unwrap();
    let fine = TempDir::new().unwrap();
    assert_success(&fieldgame(&["solve", "--out", coarse.path().to_str().unwrap()]));
    assert_success(&fieldgame(&[
        "solve",
        "--n-steps",
        "4000",
        "--out",
        fine.path().to_str().unwrap(),
    ]));
    let c = summary_objective(coarse.path());
    let f = summary_objective(fine.path());
    assert!(
        ((c - f) / c).abs() <= 1e-5,
        "2000 steps: {c}, 4000 steps: {f}"
    );
}

#[test]
fn missing_horizon_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("partial.toml");
    std::fs::write(&cfg, "[scenario]\nphi_a = 0.5\n").unwrap();
    let out = fieldgame(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains('T'), "stderr: {stderr}");
}

#[test]
fn broken_toml_is_line_anchored() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("broken.toml");
    std::fs::write(&cfg, "[scenario]\nT = 5.0\nphi_a = = 1\n").unwrap();
    let out = fieldgame(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn defaults_feed_back_as_a_valid_config() {
    let printed = fieldgame(&["defaults"]);
    assert_success(&printed);
    let twice = fieldgame(&["defaults"]);
    assert_eq!(printed.stdout, twice.stdout, "defaults are stable");

    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("defaults.toml");
    std::fs::write(&cfg, &printed.stdout).unwrap();
    let out = fieldgame(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--n-steps",
        "100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);
}

#[test]
fn zero_cost_anarchy_has_flat_value_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("costless.toml");
    std::fs::write(&cfg, "[scenario]\nT = 5.0\nphi_a = 0.0\nphi_b = 0.0\n").unwrap();
    let out = fieldgame(&[
        "anarchy",
        "--config",
        cfg.to_str().unwrap(),
        "--n-steps",
        "200",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);

    let csv = String::from_utf8(read(dir.path(), "anarchy.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("v_"))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(v_cols.len(), 4);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        for &i in &v_cols {
            assert_eq!(cells[i], "0", "row {line}");
        }
    }
}

#[test]
fn verify_passes_and_reruns_identically() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = fieldgame(&[
            "verify",
            "--n-steps",
            "400",
            "--paths",
            "300",
            "--seed",
            "9",
            "--kappa",
            "0.8",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_success(&out);
        assert!(
            String::from_utf8_lossy(&out.stdout).contains("verdict: PASS"),
            "stdout: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
    assert_eq!(
        read(a.path(), "verify_report.txt"),
        read(b.path(), "verify_report.txt")
    );
    assert_eq!(
        read(a.path(), "realizations.csv"),
        read(b.path(), "realizations.csv")
    );
    assert_eq!(read(a.path(), "contract.csv"), read(b.path(), "contract.csv"));
}

#[test]
fn verify_reuses_a_prior_solution() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().to_str().unwrap().to_owned();
    assert_success(&fieldgame(&["solve", "--n-steps", "400", "--out", &path]));
    let out = fieldgame(&[
        "verify", "--n-steps", "400", "--paths", "200", "--kappa", "0.5", "--out", &path,
    ]);
    assert_success(&out);
    let report = String::from_utf8(read(dir.path(), "verify_report.txt")).unwrap();
    assert!(report.contains("solution.csv (reused)"), "report: {report}");

    // A grid mismatch against the stored artifact is a config error, not a crash.
    let clash = fieldgame(&[
        "verify", "--n-steps", "500", "--paths", "200", "--kappa", "0.5", "--out", &path,
    ]);
    assert_eq!(clash.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&clash.stderr).contains("re-run solve"),
        "stderr: {}",
        String::from_utf8_lossy(&clash.stderr)
    );
}

#[test]
fn verify_without_kappa_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = fieldgame(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("kappa"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn exhausted_iteration_budget_exits_with_the_solver_code() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("starved.toml");
    std::fs::write(
        &cfg,
        "[scenario]\nT = 5.0\n\n[sweep]\nmax_iters = 1\nprobe_multiplicity = false\n",
    )
    .unwrap();
    let out = fieldgame(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--n-steps",
        "200",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("no convergence"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sigma_p_list_is_compare_only() {
    let out = fieldgame(&["solve", "--sigma-p", "0,1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_writes_all_artifacts_deterministically() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = fieldgame(&[
            "compare",
            "--n-steps",
            "200",
            "--sigma-p",
            "1.5",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    for name in ["compare.csv", "directional.txt", "plots.py"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name} differs");
    }
    let header = String::from_utf8(read(a.path(), "compare.csv")).unwrap();
    let header = header.lines().next().unwrap();
    for role in ["anarchy", "int_sp0", "int_sp1.5"] {
        assert!(
            header.contains(&format!("total_infection_{role}")),
            "header lacks {role}: {header}"
        );
    }
}
