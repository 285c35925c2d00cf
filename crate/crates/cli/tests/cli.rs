use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tospdc(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tospdc"));
    cmd.current_dir(dir).args(args).env_remove("TOSPDC_WORKERS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn manifest(csv: &Path) -> Value {
    let path = csv.with_extension("manifest.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn run_ok(dir: &Path, args: &[&str]) -> PathBuf {
    let out = tospdc(dir, args, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let pos = args.iter().position(|a| *a == "--out").unwrap();
    dir.join(args[pos + 1])
}

fn files_in(dir: &Path) -> usize {
    fs::read_dir(dir).unwrap().count()
}

#[test]
fn phasematch_design_radius() {
    let dir = TempDir::new().unwrap();
    let csv = run_ok(dir.path(), &["phasematch", "--wavelength-um", "1.596", "--out", "pm.csv"]);
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["wavelength_um", "radius_um", "residual_rad_per_m"]);
    assert_eq!(rows.len(), 1);
    assert!((rows[0][1] / 0.395 - 1.0).abs() < 0.02);
    assert!(rows[0][2].abs() < 1e-4);
}

#[test]
fn manifest_records_conventions() {
    let dir = TempDir::new().unwrap();
    let csv = run_ok(dir.path(), &["phasematch", "--out", "pm.csv"]);
    let m = manifest(&csv);
    assert_eq!(m["tool"], "tospdc");
    assert!(m["version"].is_string());
    assert_eq!(m["physics"]["chi3_m2_per_v2"], 2e-22);
    assert!(m["physics"]["core_index_model"].as_str().unwrap().contains("Sellmeier"));
    assert!(m["physics"]["sigma_convention"].is_string());
    assert!(m["physics"]["peak_power_convention"].is_string());
    assert!(m["tolerances"]["phasematch_residual_rad_per_m"].is_number());
    assert!(m["tolerances"]["quadrature"]["tolerance"].is_number());
    assert_eq!(m["output"]["rows"], 1);
}

#[test]
fn radius_as_independent_variable() {
    let dir = TempDir::new().unwrap();
    let csv = run_ok(dir.path(), &["phasematch", "--radius-um", "0.3951847931839625", "--out", "pm.csv"]);
    let (_, rows) = read_csv(&csv);
    assert!((rows[0][0] - 1.596).abs() < 1e-6);
}

#[test]
fn wavelength_scan_is_monotone() {
    let dir = TempDir::new().unwrap();
    let csv = run_ok(
        dir.path(),
        &["phasematch", "--from-um", "1.2", "--to-um", "1.8", "--points", "13", "--out", "scan.csv"],
    );
    let (_, rows) = read_csv(&csv);
    assert_eq!(rows.len(), 13);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]));
}

#[test]
fn rate_at_design_point() {
    let dir = TempDir::new().unwrap();
    let csv = run_ok(
        dir.path(),
        &["rate", "--length-cm", "10", "--avg-power-mw", "200", "--rep-rate-mhz", "100", "--sigma", "2.355e10", "--out", "rate.csv"],
    );
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["length_cm", "rate_per_s", "error_per_s"]);
    assert!((rows[0][1] / 3.8 - 1.0).abs() <= 0.4, "{}", rows[0][1]);
    assert!(rows[0][2] / rows[0][1] < 0.05);
    assert_eq!(manifest(&csv)["converged"], true);
}

#[test]
fn rate_length_list_and_paper_sigma() {
    let dir = TempDir::new().unwrap();
    let csv = run_ok(dir.path(), &["rate", "--length-cm", "1,2,4", "--sigma", "23.5GHz_paper", "--out", "rate.csv"]);
    let (_, rows) = read_csv(&csv);
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [1.0, 2.0, 4.0]);
    for w in rows.windows(2) {
        assert!((w[1][1] / w[0][1] - 2.0).abs() < 0.06);
    }
    assert_eq!(manifest(&csv)["config"]["pump"]["sigma_rad_per_s"], 2.35e10);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| vec!["rate", "--length-cm", "3,10", "--out", out];
    let a = tospdc(dir.path(), &args("a.csv"), &[("TOSPDC_WORKERS", "1")]);
    let b = tospdc(dir.path(), &args("b.csv"), &[("TOSPDC_WORKERS", "3")]);
    assert!(a.status.success() && b.status.success());
    let (ta, tb) = (fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(ta, tb);
    let (ma, mb) = (manifest(&dir.path().join("a.csv")), manifest(&dir.path().join("b.csv")));
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["output"]["sha256"], mb["output"]["sha256"]);
    assert_eq!(ma["workers"], 1);
    assert_eq!(mb["workers"], 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "[design]\ndegenerate_wavelength_um = 1.4\nlength_cm = 5\n\n[pump]\navg_power_mw = 100\nsigma = \"23.5GHz_paper\"\n\n[numerics]\nspectrum_points = 101\n",
    )
    .unwrap();
    let csv = run_ok(dir.path(), &["phasematch", "--config", "run.toml", "--out", "a.csv"]);
    let (_, rows) = read_csv(&csv);
    assert!((rows[0][0] - 1.4).abs() < 1e-12);
    let csv = run_ok(dir.path(), &["phasematch", "--config", "run.toml", "--wavelength-um", "1.596", "--out", "b.csv"]);
    let (_, rows) = read_csv(&csv);
    assert!((rows[0][0] - 1.596).abs() < 1e-12);
    let m = manifest(&csv);
    assert_eq!(m["config"]["design"]["length_cm"], 5.0);
    assert_eq!(m["config"]["pump"]["avg_power_mw"], 100.0);
}

fn assert_config_error(dir: &Path, args: &[&str], envs: &[(&str, &str)]) {
    let before = files_in(dir);
    let out = tospdc(dir, args, envs);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    let reason: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(reason["status"], "config_error");
    assert!(reason["reason"].is_string());
    assert_eq!(files_in(dir), before, "no outputs on config error");
}

#[test]
fn invalid_inputs_exit_with_config_error() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_config_error(d, &["rate", "--avg-power-mw", "-200", "--out", "x.csv"], &[]);
    assert_config_error(d, &["rate", "--sigma", "fast", "--out", "x.csv"], &[]);
    assert_config_error(d, &["phasematch", "--wavelength-um", "1.5", "--radius-um", "0.4", "--out", "x.csv"], &[]);
    assert_config_error(d, &["modes", "--length-cm", "1,2", "--out", "x.csv"], &[]);
    assert_config_error(d, &["jsi", "--n-points", "400", "--out", "x.csv"], &[]);
    assert_config_error(d, &["phasematch", "--out", "x.csv"], &[("TOSPDC_WORKERS", "zero")]);
    assert_config_error(d, &["nonsense"], &[]);
    fs::write(d.join("both.toml"), "[design]\ndegenerate_wavelength_um = 1.5\nfiber_radius_um = 0.4\n").unwrap();
    assert_config_error(d, &["phasematch", "--config", "both.toml", "--out", "x.csv"], &[]);
    fs::write(d.join("typo.toml"), "[pump]\navg_power = 1\n").unwrap();
    assert_config_error(d, &["phasematch", "--config", "typo.toml", "--out", "x.csv"], &[]);
}

#[test]
fn missing_phasematch_has_its_own_code() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("n.toml"), "[numerics]\nradius_bracket_um = [0.5, 1.0]\n").unwrap();
    let out = tospdc(dir.path(), &["phasematch", "--config", "n.toml", "--out", "x.csv"], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn coarse_quadrature_is_flagged() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "[numerics]\nsum_nodes = 1\nangle_points = 3\nsinc_zeros = 1\nradial_order = 1\n",
    )
    .unwrap();
    let out = tospdc(dir.path(), &["rate", "--config", "c.toml", "--out", "r.csv"], &[]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(manifest(&dir.path().join("r.csv"))["converged"], false);
}

#[test]
fn jsi_grid_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let csv = run_ok(dir.path(), &["jsi", "--preset", "figure2", "--n-points", "11", "--out", "j.csv"]);
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["w_r", "w_s", "w_i", "value"]);
    assert_eq!(rows.len(), 11 * 11 * 11);
    let m = manifest(&csv);
    assert_eq!(m["results"]["axes"]["w_r"]["points"], 11);
    assert_eq!(m["results"]["length_m"], 0.6e-6);
    assert_eq!(m["results"]["sigma_rad_per_s"], 5.1e12);
    assert!(m["physics"]["constants"]["hbar_j_s"].is_number());
    let best = rows.iter().fold(&rows[0], |a, r| if r[3] > a[3] { r } else { a });
    let step = rows[1][2] - rows[0][2];
    let pump = m["results"]["pump_center_rad_per_s"].as_f64().unwrap();
    assert!((best[0] + best[1] + best[2] - pump).abs() <= step);
}

#[test]
fn spectrum_peaks_at_design_wavelength() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("s.toml"), "[numerics]\nspectrum_points = 101\n").unwrap();
    let csv = run_ok(dir.path(), &["spectrum", "--config", "s.toml", "--out", "s.csv"]);
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["wavelength_um", "density"]);
    assert_eq!(rows.len(), 101);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    let best = rows.iter().fold(&rows[0], |a, r| if r[1] > a[1] { r } else { a });
    assert!((best[0] - 1.596).abs() < 2.0 * (rows[1][0] - rows[0][0]));
}

#[test]
fn scans_and_profiles() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let csv = run_ok(d, &["gamma-scan", "--from-um", "1.5", "--to-um", "1.7", "--points", "3", "--out", "g.csv"]);
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["wavelength_um", "radius_um", "a_eff_um2", "gamma_per_W_km"]);
    assert!(rows.windows(2).all(|w| w[1][3] < w[0][3]));

    let csv = run_ok(d, &["coupling-scan", "--points", "35", "--out", "c.csv"]);
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["waist_um", "coupling_fraction"]);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[1])));
    let opt = &manifest(&csv)["results"]["optimum"];
    assert!((opt["waist_um"].as_f64().unwrap() - 0.783).abs() <= 0.02);

    let csv = run_ok(d, &["modes", "--mode", "HE12", "--out", "m.csv"]);
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["radius_m", "amplitude"]);
    assert!(rows.len() > 100);
    assert_eq!(manifest(&csv)["results"]["mode"], "HE12");
}
