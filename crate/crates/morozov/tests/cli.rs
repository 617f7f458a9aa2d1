use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn morozov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morozov"))
        .args(args)
        .output()
        .expect("spawn morozov")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

const SMALL: &str = r#"
[problem]
kind = "random-uniform"
m = 40
n = 25

[experiment]
repetitions = 3
seed = 7
output = "out"

[[solver]]
method = "ntm"
variant = "case1"

[[solver]]
method = "ntm"

[[solver]]
method = "pntm"

[[solver]]
method = "gbit"

[[solver]]
method = "sirt"
"#;

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn run_writes_traces_and_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = morozov(&["run", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let dir = tmp.path().join("out");
    assert_eq!(
        header(&dir.join("summary.csv")),
        "method,runs,failures,converged,mean_iters,sd_iters,mean_inner_iters,mean_alpha,sd_alpha,\
         mean_rel_residual,mean_rel_error,mean_ssim"
    );
    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let methods: Vec<&str> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        methods,
        ["ntm-case1", "ntm-case2", "pntm-case2", "gbit", "sirt"]
    );

    assert_eq!(
        fs::read_to_string(dir.join("runs.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 5 * 3
    );
    assert_eq!(
        header(&dir.join("traces/ntm-case1_seed7.csv")),
        "iter,alpha,gamma,res_norm,F_norm,dinv,theta,case_id"
    );
    assert_eq!(
        header(&dir.join("traces/pntm-case2_seed9.csv")),
        "iter,alpha,gamma,res_norm,F_norm,dinv,theta,case_id,outer_iter,inner_iter,subspace_dim,proj_res"
    );
    assert!(header(&dir.join("traces/pntm-case2_seed8_outer.csv"))
        .starts_with("outer_iter,subspace_dim,inner_iters,alpha,res_norm"));
    assert_eq!(
        header(&dir.join("traces/gbit_seed7.csv")),
        "iter,alpha,res_norm,F_norm,subspace_dim,proj_res"
    );
    assert_eq!(
        header(&dir.join("traces/sirt_seed7.csv")),
        "iter,alpha,res_norm,F_norm"
    );

    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seeds=7,8,9\n"));
    assert!(manifest.contains("sirt_weights=absolute-sums\n"));
    assert_eq!(fs::read_to_string(dir.join("config.toml")).unwrap(), SMALL);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let a = write_config(
        tmp.path(),
        "a.toml",
        &SMALL.replace("output = \"out\"", "output = \"a\""),
    );
    let b = write_config(
        tmp.path(),
        "b.toml",
        &SMALL.replace("output = \"out\"", "output = \"b\"\nthreads = 1"),
    );
    assert!(morozov(&["run", a.to_str().unwrap()]).status.success());
    assert!(morozov(&["run", b.to_str().unwrap()]).status.success());
    for file in [
        "summary.csv",
        "runs.csv",
        "traces/pntm-case2_seed8.csv",
        "traces/ntm-case1_seed9.csv",
    ] {
        let x = fs::read(tmp.path().join("a").join(file)).unwrap();
        let y = fs::read(tmp.path().join("b").join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
}

#[test]
fn unknown_method_is_rejected_before_any_work() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        &SMALL.replace("method = \"gbit\"", "method = \"lsqr\""),
    );
    let out = morozov(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lsqr"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn missing_config_file_exits_one() {
    let out = morozov(&["run", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solver_failures_exit_two_and_are_recorded() {
    // η = 20 puts the target above ‖b‖ for the Newton solver; SIRT stops
    // at the zero start and succeeds.
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "partial.toml",
        r#"
[problem]
kind = "random-uniform"
m = 30
n = 20
eta = 20.0

[experiment]
repetitions = 2

[[solver]]
method = "ntm"

[[solver]]
method = "sirt"
"#,
    );
    let out = morozov(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let runs = fs::read_to_string(tmp.path().join("out/runs.csv")).unwrap();
    let ntm: Vec<&str> = runs
        .lines()
        .filter(|l| l.starts_with("ntm-case2,"))
        .collect();
    assert_eq!(ntm.len(), 2);
    assert!(ntm.iter().all(|l| l.contains(",error,")));
    assert!(runs
        .lines()
        .filter(|l| l.starts_with("sirt,"))
        .all(|l| l.contains(",ok,")));
    let summary = fs::read_to_string(tmp.path().join("out/summary.csv")).unwrap();
    assert!(
        summary.lines().any(|l| l.starts_with("ntm-case2,2,2,0,")),
        "{summary}"
    );
}

#[test]
fn curve_is_nondecreasing() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "curve.toml",
        &format!(
            r#"
[problem]
kind = "matrix-market"
path = "{}"

[curve]
alpha_min = 1e-4
alpha_max = 1e2
points = 20
"#,
            fixture("blur120_sym.mtx")
        ),
    );
    let out = morozov(&["curve", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(tmp.path().join("out/curve.csv")).unwrap();
    let points: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (a, r) = l.split_once(',').unwrap();
            (a.parse().unwrap(), r.parse().unwrap())
        })
        .collect();
    assert_eq!(points.len(), 20);
    assert!((points[0].0 - 1e-4).abs() < 1e-16 && (points[19].0 - 1e2).abs() < 1e-10);
    assert!(points.windows(2).all(|w| w[1].1 >= w[0].1));
}

#[test]
fn generated_problems_round_trip_through_directory_kind() {
    let tmp = TempDir::new().unwrap();
    let gen = write_config(
        tmp.path(),
        "gen.toml",
        r#"
[problem]
kind = "random-uniform"
m = 30
n = 12

[experiment]
repetitions = 2
seed = 3
output = "data"
"#,
    );
    assert!(morozov(&["gen", gen.to_str().unwrap()]).status.success());
    for seed in [3, 4] {
        for f in ["matrix.mtx", "rhs.txt", "truth.txt", "meta.txt"] {
            assert!(tmp
                .path()
                .join(format!("data/problems/seed{seed}/{f}"))
                .exists());
        }
    }

    let run = write_config(
        tmp.path(),
        "dir.toml",
        r#"
[problem]
kind = "directory"
path = "data/problems/seed4"

[[solver]]
method = "ntm"
tol = 1e-8
"#,
    );
    let out = morozov(&["run", run.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = fs::read_to_string(tmp.path().join("out/runs.csv")).unwrap();
    let row: Vec<&str> = runs.lines().nth(1).unwrap().split(',').collect();
    // status, converged, then rel_residual against rel_discrepancy
    assert_eq!((row[2], row[3]), ("ok", "1"));
    let (rel_res, rel_disc): (f64, f64) = (row[8].parse().unwrap(), row[9].parse().unwrap());
    assert!((rel_res - rel_disc).abs() <= 1e-6 * rel_disc);
}

#[test]
fn explicit_rhs_file() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("diag.mtx"),
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 2\n2 2 1\n",
    )
    .unwrap();
    fs::write(tmp.path().join("b.txt"), "2\n1\n").unwrap();
    let cfg = write_config(
        tmp.path(),
        "rhs.toml",
        r#"
[problem]
kind = "matrix-market"
path = "diag.mtx"
rhs = "b.txt"
noise_level = 0.5

[[solver]]
method = "gbit"
tol = 1e-10
max_iter = 500
"#,
    );
    let out = morozov(&["run", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = fs::read_to_string(tmp.path().join("out/runs.csv")).unwrap();
    let row: Vec<&str> = runs.lines().nth(1).unwrap().split(',').collect();
    let res: f64 = row[7].parse().unwrap();
    assert!((res - 0.5).abs() < 1e-6, "{res}");
}
