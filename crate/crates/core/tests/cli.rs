use std::path::Path;
use std::process::{Command, Output};

fn qworkscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qworkscope"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn dist_has_visible_coherent_part() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        "t_prime = 1\nw_min = -4\nw_max = 4\nw_points = 81\n",
    );
    let out = qworkscope(&["dist", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# config:"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 81);
    let coherent = rows.iter().map(|r| r[3].abs()).fold(0.0, f64::max);
    assert!(coherent > 0.01);
    for r in &rows {
        assert!((r[1] - r[2] - r[3]).abs() < 1e-12);
    }
}

#[test]
fn sweep_writes_requested_durations_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let cfg = write_config(
        dir.path(),
        "sweep.cfg",
        &format!("t_primes = 0.01, 1, 100\nout = {}\n", out_path.display()),
    );
    let out = qworkscope(&["sweep", "--config", &cfg]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text
        .contains("t_prime,w_incoherent,half_beta_var,w_coherent,fdt_residual,jarzynski_residual"));
    let rows = data_rows(&text);
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![0.01, 1.0, 100.0]
    );
    assert!(rows.iter().all(|r| r[5].abs() < 1e-8));
}

#[test]
fn jarzynski_residual_is_small_for_thermal_start() {
    let out = qworkscope(&["jarzynski", "--t-prime", "2.5"]);
    assert!(out.status.success());
    let rows = data_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    assert!(rows[0][4].abs() < 1e-8);
}

#[test]
fn output_is_reproducible() {
    let a = qworkscope(&["moments", "--t-prime", "0.7", "--sigma", "0.5"]);
    let b = qworkscope(&["moments", "--t-prime", "0.7", "--sigma", "0.5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn oracle_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "oracle.cfg",
        "t_prime = 1\ngrid_points_per_width = 8\n",
    );
    let out = qworkscope(&["oracle", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let l1: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# l1_distance = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(l1 < 1e-3);
}

#[test]
fn bad_configuration_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "bad.cfg", "temperature = 3\n");
    let out = qworkscope(&["dist", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature"));

    let out = qworkscope(&["jarzynski", "--state", "coherent-gibbs"]);
    assert_eq!(out.status.code(), Some(2));

    let out = qworkscope(&["dist", "--sigma", "-1"]);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("absent.cfg").display().to_string();
    assert_eq!(
        qworkscope(&["dist", "--config", &missing]).status.code(),
        Some(2)
    );
}
