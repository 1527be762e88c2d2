use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coarse-quant"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bounds_last_row_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["bounds", "--K", "1", "--mu-step", "0.01", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("b/bounds_K1.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "mu,alpha");
    assert_eq!(lines.len(), 102);
    assert_eq!(lines[1], "0,1.00000000000");
    assert_eq!(*lines.last().unwrap(), "1.00000000000,0");
    let reference = fs::read_to_string(dir.path().join("b/reference.csv")).unwrap();
    assert!(reference.starts_with("rate,amplitude_ceiling,bound_at_ceiling\n0.102,0.05,0.99819"));
}

#[test]
fn ldp_report_all_satisfied() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["ldp", "--nmax", "30", "--trials", "20000", "--out", "l"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("l/prop1.csv")).unwrap();
    assert!(csv.starts_with("n,a,p,exact,chernoff,satisfied\n"));
    assert!(!csv.contains("false"));
    assert!(csv.lines().count() > 1000);
    assert!(stdout(&o).contains("unsatisfied=0"));
}

#[test]
fn failed_verification_exits_two() {
    // Two draws uniform on {0, 1/3, 2/3, 1} exceed the Bernoulli tail at a just below 2/3.
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["ldp", "--nmax", "5", "--laws", "discrete:4", "--mc-n", "2", "--mc-a", "0.6666", "--out", "d"],
    );
    assert_eq!(o.status.code(), Some(2));
    let csv = fs::read_to_string(dir.path().join("d/prop2.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",false"));
}

#[test]
fn epsnet_toy_average() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["epsnet", "--M", "4", "--K", "1", "--toy-average", "--a", "0.5", "--out", "e"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("survivors=5"), "{out}");
    assert!(out.contains("bound=9.48"), "{out}");
    assert!(out.contains("satisfied=true"), "{out}");
    let csv = fs::read_to_string(dir.path().join("e/epsnet.csv")).unwrap();
    assert!(csv.starts_with("M,K,lambda,threshold,survivors,total,bound_N,satisfied\n4,1,,0.5,5,16,9.48"));
}

#[test]
fn epsnet_budget_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["epsnet", "--M", "25", "--toy-average", "--out", "e"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn t0_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["t0", "--kernel", "exp", "--alpha", "0.1", "--lambdas", "4,8", "--out", "t"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("t/t0.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    for (l, t) in rows {
        assert!((t - (0.1 * l * std::f64::consts::LN_2 + 1.0 / l)).abs() < 1e-6);
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["bounds", "--K", "0"],
        vec!["bounds", "--mu-step", "0.3"],
        vec!["decay", "--kernel", "gauss"],
        vec!["decay", "--lambdas", "16,8"],
        vec!["bounds", "--nonsense"],
    ] {
        let o = run(dir.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), format!("coarse-quant {}", env!("CARGO_PKG_VERSION")));
    let o = run(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["bounds", "decay", "ldp", "epsnet", "t0", "manifest"] {
        assert!(stdout(&o).contains(sub));
    }
}

#[test]
fn manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "decay", "--encoder", "sd1", "--kernel", "bspline:3:1", "--lambdas", "8,16,32", "--signals", "2",
        "--seed", "5", "--t0", "-1", "--t1", "1", "--out", "a",
    ];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(dir.path().join("a/decay.csv")).unwrap();
    let fits = fs::read(dir.path().join("a/fits.csv")).unwrap();
    let manifest = fs::read_to_string(dir.path().join("a/manifest.txt")).unwrap();
    assert!(manifest.starts_with("subcommand=decay\nversion="));
    assert!(manifest.contains("t0=-1\n"));

    fs::remove_dir_all(dir.path().join("a")).unwrap();
    fs::write(dir.path().join("m.txt"), &manifest).unwrap();
    let o = run(dir.path(), &["manifest", "m.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(dir.path().join("a/decay.csv")).unwrap(), first);
    assert_eq!(fs::read(dir.path().join("a/fits.csv")).unwrap(), fits);
    assert_eq!(fs::read_to_string(dir.path().join("a/manifest.txt")).unwrap(), manifest);
    assert!(fs::read_dir(dir.path().join("a")).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn bad_manifest_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.txt"), "K=1\n").unwrap();
    assert_eq!(run(dir.path(), &["manifest", "m.txt"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["manifest", "missing.txt"]).status.code(), Some(1));
}
