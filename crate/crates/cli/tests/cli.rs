use std::path::PathBuf;
use std::process::{Command, Output};

fn wnchaos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wnchaos")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("wnchaos-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn eval_examples() {
    let o = wnchaos(&["eval", "H[0] * H[0]"]);
    assert!(o.status.success());
    let direct = wnchaos(&["eval", "H[0:2] + 1"]);
    assert_eq!(stdout(&o), stdout(&direct));

    let o = wnchaos(&["eval", "let f = 0.3 * H[0] - 0.2 * H[1]; E(wexp(f))"]);
    assert_eq!(stdout(&o).trim(), "1");
    let o = wnchaos(&["eval", "norm(H[0:1], 0) ^ 2"]);
    assert_eq!(stdout(&o).trim(), "1");
    let o = wnchaos(&[
        "eval",
        "let F = 1 + H[0:2]; let G = H[1] - 2 * H[0]; let phi = 0.5 * H[0] + 0.4 * H[1];\n\
         S(wick(F, G), phi) - S(F, phi) * S(G, phi)",
    ]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!(v.abs() < 1e-10);
}

#[test]
fn eval_print_and_errors() {
    let o = wnchaos(&["eval", "--print", "(a + b) * c ^ 2"]);
    assert_eq!(stdout(&o).trim(), "(a + b) * c^2");
    let o = wnchaos(&["eval", "1 +\n  * 2"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("2:3"), "{err}");
    let o = wnchaos(&["eval", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_is_bit_identical() {
    let src = "let w = W(0.3, 5); w * w - wick(w, w) + ddelta(0.5, 1)";
    let a = wnchaos(&["eval", "--modes", "6", src]);
    let b = wnchaos(&["eval", "--modes", "6", src]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn hermite_suite_writes_csv_and_manifest() {
    let dir = scratch("hermite");
    let o = wnchaos(&["run", "hermite-suite", "--jmax", "40", "--sup-jmax", "64", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.join("orthonormality.csv")).unwrap();
    assert!(csv.starts_with("j,k,integral,error\n"));
    assert_eq!(csv.lines().count(), 41 * 41 + 1);
    let manifest = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"jmax\": 40"));
    assert!(manifest.contains("\"sha256\""));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failing_tolerance_exits_one_and_is_recorded() {
    let dir = scratch("inject");
    let o = wnchaos(&[
        "run",
        "hermite-suite",
        "--jmax",
        "10",
        "--sup-jmax",
        "16",
        "--tol",
        "christoffel_darboux=-1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL christoffel_darboux"));
    let manifest = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"pass\": false"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_errors_write_nothing() {
    let dir = scratch("bad");
    let o = wnchaos(&["run", "hermite-suite", "--tol", "no_such_check=1", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.exists());
    let o = wnchaos(&["run", "spde-solve", "--preset", "nope", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.exists());
    let o = wnchaos(&["run", "embed-study", "--element", "sin", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.exists());
}

#[test]
fn spde_solve_tables_per_level() {
    let dir = scratch("solve");
    let o = wnchaos(&[
        "run",
        "spde-solve",
        "--preset",
        "heat-gaussian",
        "--m",
        "0..8",
        "--n",
        "2000",
        "--dt",
        "0.01",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.code().is_some_and(|c| c <= 1), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.join("coefficients.csv")).unwrap();
    for m in 0..=8 {
        assert!(csv.lines().any(|l| l.split(',').nth(2) == Some(&m.to_string())), "m = {m}");
        assert!(dir.join(format!("u_x0_m{m}.chaos")).exists());
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn embed_study_table() {
    let dir = scratch("embed");
    let o = wnchaos(&["run", "embed-study", "--element", "wexp", "--M", "24", "--out", dir.to_str().unwrap()]);
    // red at |f| = 0.5, see the acceptance suite
    assert_eq!(o.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.join("embed.csv")).unwrap();
    assert!(csv.starts_with("a,p,m,log_weighted_tail,weighted_tail\n"));
    assert_eq!(csv.lines().count(), 4 * 3 * 25 + 1);
    std::fs::remove_dir_all(&dir).unwrap();
}
