use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GOLD: &str = r#"
mode = "vdw"

[particle]
aspect_ratio = 2.0
volume_nm3 = 1000.0
theta_deg = 90.0
phi_deg = 0.0

[particle.material]
kind = "plasma"
omega_p = 1.385e16

[surface]
kind = "plasma"
omega_p = 1.385e16

[geometry]
a_nm = 1.5
z0_nm = 30.0
lambda_c_over_z0 = 4.0
"#;

const COLUMNS: &str =
    "lambda_c_over_z0,v_xx_norm,v_yy_norm,v_zz_norm,v_xz_norm,v_sum_norm,A_norm,delta_rad,regime";

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn cli(args: &[&str], config: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_casimir-lateral"));
    cmd.args(args).arg("--config").arg(config);
    match threads {
        Some(n) => cmd.env("CASIMIR_THREADS", n),
        None => cmd.env_remove("CASIMIR_THREADS"),
    };
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows as (abscissa, v_sum, delta, regime).
fn data_rows(csv: &str) -> Vec<(f64, f64, f64, String)> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), COLUMNS);
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 9, "{l}");
            (
                f[0].parse().unwrap(),
                f[5].parse().unwrap(),
                f[7].parse().unwrap(),
                f[8].to_string(),
            )
        })
        .collect()
}

fn with_sweep(min: f64, max: f64, points: usize) -> String {
    format!("{GOLD}\n[sweep]\nmin = {min}\nmax = {max}\npoints = {points}\n")
}

#[test]
fn sweep_emits_one_row_per_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sweep.toml", &with_sweep(1.0, 12.0, 100));
    let o = cli(&["sweep"], &cfg, None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 100);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    assert_eq!(rows[0].0, 1.0);
    assert_eq!(rows[99].0, 12.0);
    assert!(text.contains("# normalization: v_norm = V * z0^4 / (eps0 * V_particle * omega_p)"));
    assert!(text.contains("omega_p = 1.38500000000e16 rad/s"));
    assert!(text.lines().any(|l| l.starts_with("# config: {")));
    // aligned particle: only peak or valley
    assert!(rows.iter().all(|r| r.3 == "peak" || r.3 == "valley"));
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let text = with_sweep(0.5, 10.0, 40).replace("theta_deg = 90.0", "theta_deg = 60.0");
    let cfg = write_config(&dir, "sweep.toml", &text);
    let a = cli(&["sweep"], &cfg, None);
    let b = cli(&["sweep"], &cfg, Some("1"));
    let c = cli(&["sweep"], &cfg, Some("3"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn fingerprint_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sweep.toml", &with_sweep(1.0, 4.0, 7));
    let first = stdout(&cli(&["sweep"], &cfg, None));
    let fp = first
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .unwrap();
    let again = write_config(&dir, "fingerprint.json", fp);
    let second = cli(&["sweep"], &again, None);
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(first, stdout(&second));
}

#[test]
fn amplitude_above_height_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.toml", &GOLD.replace("a_nm = 1.5", "a_nm = 50.0"));
    let o = cli(&["eval"], &cfg, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("geometry.a_nm"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.toml",
        &GOLD.replace("volume_nm3 = 1000.0", "volume_nm3 = 1000.0\nmass = 2.0"),
    );
    let o = cli(&["eval"], &cfg, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("particle.mass"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "gold.toml", GOLD);
    let o = Command::new(env!("CARGO_BIN_EXE_casimir-lateral"))
        .arg("integrate")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = cli(&["eval", "--format", "xml"], &cfg, None);
    assert_eq!(o.status.code(), Some(1));
    let o = cli(&["eval"], &dir.path().join("missing.toml"), None);
    assert_eq!(o.status.code(), Some(1));
    let o = cli(&["eval"], &cfg, Some("zero"));
    assert_eq!(o.status.code(), Some(1));
    // sweep without a [sweep] table
    let o = cli(&["sweep"], &cfg, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sweep"));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let text = GOLD
        .replacen("kind = \"plasma\"\nomega_p = 1.385e16", "kind = \"constant\"\nepsilon = 2.5", 1)
        .replace("[surface]\nkind = \"plasma\"\nomega_p = 1.385e16", "[surface]\nkind = \"perfect\"");
    let cfg = write_config(&dir, "divergent.toml", &text);
    let o = cli(&["eval"], &cfg, None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn eval_of_tilted_particle_is_intermediate() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "tilted.toml", &GOLD.replace("theta_deg = 90.0", "theta_deg = 60.0"));
    let o = cli(&["eval"], &cfg, None);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].3, "intermediate");
    let delta = rows[0].2;
    assert!(delta != 0.0 && delta.abs() < std::f64::consts::PI);
}

#[test]
fn transition_with_auto_bracket_matches_dense_scan() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "t.toml", GOLD);
    let o = cli(&["transition"], &cfg, None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("# transition: root = "));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let root = rows[0].0;

    // oracle: sign change of a 200-point scan around the root
    let scan = write_config(&dir, "scan.toml", &with_sweep(0.5, 1.5, 200));
    let scan = data_rows(&stdout(&cli(&["sweep"], &scan, None)));
    let i = scan
        .windows(2)
        .position(|w| w[0].1.signum() != w[1].1.signum())
        .unwrap();
    let (a, b) = (&scan[i], &scan[i + 1]);
    let expected = a.0 + (b.0 - a.0) * a.1 / (a.1 - b.1);
    assert!((root - expected).abs() < 1e-3 * expected, "{root} vs {expected}");
}

#[test]
fn transition_without_sign_change_fails_numerically() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "t.toml", &format!("{GOLD}\n[transition]\nlo = 2.0\nhi = 4.0\n"));
    let o = cli(&["transition"], &cfg, None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_output_to_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sweep.toml", &with_sweep(1.0, 3.0, 5));
    let out = dir.path().join("rows.json");
    let o = cli(&["sweep", "--format", "json", "--out", out.to_str().unwrap()], &cfg, None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["command"], "sweep");
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["config"]["quad"]["rel_tol"], 1e-6);
    assert!(v["rows"][0]["equilibrium_x_m"].is_number());
    // no stray temporary files
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn delta_sweep_warns_when_phase_is_pinned() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "d.toml", &with_sweep(1.0, 3.0, 3));
    let o = cli(&["delta-sweep"], &cfg, None);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    let tilted = write_config(
        &dir,
        "tilted.toml",
        &with_sweep(1.0, 3.0, 3).replace("theta_deg = 90.0", "theta_deg = 60.0"),
    );
    let o = cli(&["delta-sweep"], &tilted, None);
    assert!(o.status.success());
    assert!(stderr(&o).is_empty());
    assert!(data_rows(&stdout(&o)).iter().all(|r| r.3 == "intermediate"));
}
