use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use maxtomo::io::{centers_from_csv, table_from_csv, VolumeFile, VolumeKind};

fn maxtomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxtomo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_with(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    maxtomo(&args)
}

fn report_value(dir: &Path, key: &str) -> Option<f64> {
    let text = fs::read_to_string(dir.join("out/report.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .map(|v| v.parse().unwrap())
}

const SMALL: &str = "[grid]\ncells = [8, 8, 8]\n[wave]\nk = 4.0\n";

#[test]
fn validate_on_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = maxtomo(&["validate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.lines().count() >= 10);
    assert!(report.lines().all(|l| l.starts_with("PASS ")), "{report}");
}

#[test]
fn unknown_key_exits_with_config_class() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "forward", "[grid]\ncells = [8, 8, 8]\ncolour = \"red\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("CONFIG: "), "{err}");
}

#[test]
fn failures_print_one_machine_parsable_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}[inclusions]\ncount = 40\nalpha = 0.13\nc0 = 0.4\nc = 0.2\n");
    let o = run_with(dir.path(), "locate", &cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("INFEASIBLE: "), "{err}");
}

#[test]
fn forward_reproduces_plane_wave() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "forward", SMALL, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = report_value(dir.path(), "plane_wave_relative_l2_error").unwrap();
    assert!(err < 0.05, "{err}");
    for c in ["x", "y", "z"] {
        let v = VolumeFile::read(dir.path().join(format!("out/field_{c}.mxc"))).unwrap();
        assert_eq!(v.dims, [8, 8, 8]);
        assert_eq!(v.kind, VolumeKind::Field);
    }
    let traces = fs::read_to_string(dir.path().join("out/traces.csv")).unwrap();
    assert!(traces.starts_with("b,edge,x,y,z,face,e_re,e_im,curl_re,curl_im\n"));
    assert_eq!(traces.lines().count(), 1 + 2 * 8 * 7);
}

#[test]
fn impedance_file_is_a_square_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "impedance", SMALL, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = VolumeFile::read(dir.path().join("out/impedance.mxc")).unwrap();
    assert_eq!(v.kind, VolumeKind::Impedance);
    assert_eq!(v.dims, [112, 112, 1]);
    assert_eq!(v.to_matrix().unwrap().nrows(), 112);
}

const BUMP: &str = r#"
[grid]
cells = [16, 16, 16]
[wave]
k = 16.0
[medium.contrast]
shape = "gaussian"
amplitude = [0.05, 0.0]
width = 0.08
center = [0.5, 0.5, 0.5]
radius = 0.25
"#;

#[test]
fn reconstruct_reports_error_against_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "reconstruct", BUMP, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = report_value(dir.path(), "relative_l2_error").unwrap();
    assert!(err <= 0.35, "{err}");
    let table = table_from_csv(&fs::read_to_string(dir.path().join("out/table.csv")).unwrap()).unwrap();
    assert!(!table.is_empty());
    let v = VolumeFile::read(dir.path().join("out/contrast.mxc")).unwrap();
    assert_eq!(v.dims, [16, 16, 16]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = format!(
        "seed = 5\n{SMALL}[medium.contrast]\nshape = \"bump\"\namplitude = [0.1, 0.02]\nradius = 0.25\n[recon]\nroute = \"linearized\"\n"
    );
    let files = ["table.csv", "contrast.mxc", "report.txt"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = run_with(dir.path(), "reconstruct", &cfg, &["--seed", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(files.map(|f| fs::read(dir.path().join("out").join(f)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn locate_writes_one_row_per_inclusion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[grid]
cells = [16, 16, 16]
[wave]
k = 10.0
[inclusions]
centers = [[0.3, 0.5, 0.5], [0.7, 0.5, 0.5]]
alpha = 0.08
index = [2.0, 0.5]
[locate]
inset = 3
"#;
    let o = run_with(dir.path(), "locate", cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("out/centers.csv")).unwrap();
    assert!(text.starts_with("j,x,y,z,q_re,q_im\n"));
    let rows = centers_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 2);
    let h = report_value(dir.path(), "h").unwrap();
    for j in 0..2 {
        let e = report_value(dir.path(), &format!("center_error_{j}")).unwrap();
        assert!(e <= h, "{e} > {h}");
    }
}
