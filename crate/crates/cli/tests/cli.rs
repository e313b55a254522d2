use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kiparc_cli::output::sha256_hex;
use serde_json::Value;

fn kiparc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kiparc"))
        .args(args)
        .args(["--quiet"])
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(scenario: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![scenario, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    kiparc(&args)
}

const GAIN_MAP: &str = r#"{
  "modes": {"f_a_hz": 5.5e9, "f_b_hz": 6.3e9},
  "coupling": {"kappa_a_hz": 4.597e6, "kappa_b_hz": 3.210e6, "xi_hz": 7.408e6},
  "sweep": {"x_hz": {"min": -15e6, "max": 15e6, "n": 21}, "y_hz": {"min": -15e6, "max": 15e6, "n": 21}}
}"#;

const NOISE: &str = r#"{
  "noise_model": {"n_ratio": 0.167},
  "measurement_noise": {"sigma": 0.05},
  "sweep": {"gain_db": {"min": 0, "max": 40, "n": 41}}
}"#;

#[test]
fn manifest_lists_every_file_with_its_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "map.json", GAIN_MAP);
    let out = tmp.path().join("out");
    let res = run("gain-map", &cfg, &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let bytes = fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
    assert_eq!(manifest["scenario"], "gain-map");
    assert_eq!(manifest["config"]["coupling"]["xi_hz"], 7.408e6);
    assert!(manifest["timestamp"].as_str().unwrap().ends_with('Z'));
}

#[test]
fn gain_maps_share_axes_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "map.json", GAIN_MAP);
    let out = tmp.path().join("out");
    assert!(run("gain-map", &cfg, &out, &[]).status.success());
    let header = |name: &str| -> Vec<String> {
        fs::read_to_string(out.join(name))
            .unwrap()
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(String::from)
            .collect()
    };
    let (s, i) = (header("gain_map_signal.csv"), header("gain_map_idler.csv"));
    assert_eq!(s, i);
    assert!(s.contains(&"# axis_x: omega_s_minus_omega_b_Hz".to_string()));
    assert!(s.contains(&"# axis_y: omega_i_minus_omega_a_Hz".to_string()));
    assert!(s.iter().any(|l| l.starts_with("# params: ")));

    let signal = fs::read_to_string(out.join("gain_map_signal.csv")).unwrap();
    assert!(signal.lines().any(|l| l == "x,y,Gs_dB"));
    let centre = signal
        .lines()
        .find(|l| l.starts_with("0.00000000000e0,0.00000000000e0,"))
        .unwrap();
    let g: f64 = centre.rsplit(',').next().unwrap().parse().unwrap();
    assert!((g - 23.1).abs() < 0.05, "centre cell {g}");
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "noise.json", NOISE);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run("noise", &cfg, &a, &["--seed", "42"]).status.success());
    assert!(run("noise", &cfg, &b, &["--seed", "42"]).status.success());
    assert!(run("noise", &cfg, &c, &["--seed", "43"]).status.success());
    let read = |d: &Path| fs::read(d.join("noise.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(String::from_utf8(read(&a)).unwrap().contains("# seed: 42"));
}

#[test]
fn refuses_to_overwrite_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "noise.json", NOISE);
    let out = tmp.path().join("out");
    assert!(run("noise", &cfg, &out, &[]).status.success());
    let before = fs::read(out.join("noise.csv")).unwrap();
    let again = run("noise", &cfg, &out, &["--seed", "9"]);
    assert_eq!(again.status.code(), Some(4));
    assert_eq!(fs::read(out.join("noise.csv")).unwrap(), before);
    assert!(run("noise", &cfg, &out, &["--seed", "9", "--force"]).status.success());
    assert_ne!(fs::read(out.join("noise.csv")).unwrap(), before);
}

#[test]
fn failed_writes_leave_no_outputs_and_no_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "map.json", GAIN_MAP);
    let out = tmp.path().join("out");
    // a directory where the second file should go makes that write fail
    fs::create_dir_all(out.join("gain_map_idler.csv")).unwrap();
    let res = run("gain-map", &cfg, &out, &["--force"]);
    assert_eq!(res.status.code(), Some(4));
    assert!(!out.join("gain_map_signal.csv").exists());
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn config_errors_exit_with_two_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"noise_model": {"n_ratio": 0.167, "n_ratoi": 1}, "sweep": {"gain_db": [0, 10]}}"#,
    );
    let res = run("noise", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("noise_model.n_ratoi"));
    assert!(!tmp.path().join("out").exists());

    let res = kiparc(&["warp-drive", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    // the band holds neither resonance of this ring
    let cfg = write_config(
        tmp.path(),
        "res.json",
        r#"{"geometry": {"total_length_m": 2.2e-3, "inductance_per_length_h_per_m": 1e-4,
             "impedance_a_ohm": 940, "impedance_b_ohm": 1320},
            "sweep": {"band_hz": [1e8, 2e9]}}"#,
    );
    let out = tmp.path().join("out");
    let res = run("resonances", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn missing_config_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = run("noise", &tmp.path().join("absent.json"), &tmp.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn exported_map_round_trips_through_the_fitter() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "map.json", GAIN_MAP);
    assert!(run("gain-map", &cfg, &tmp.path().join("map"), &[]).status.success());
    let fit_cfg = write_config(
        tmp.path(),
        "fit.json",
        r#"{"modes": {"f_a_hz": 5.5e9, "f_b_hz": 6.3e9},
            "coupling": {"kappa_a_hz": 4.0e6, "kappa_b_hz": 3.6e6, "xi_hz": 7.0e6},
            "fit": {"kind": "gain_map", "datasets": ["map/gain_map_signal.csv", "map/gain_map_idler.csv"]}}"#,
    );
    let res = run("fit", &fit_cfg, &tmp.path().join("fit"), &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("fit/fit_result.json")).unwrap()).unwrap();
    for (name, truth) in [("kappa_a_hz", 4.597e6), ("kappa_b_hz", 3.210e6), ("xi_hz", 7.408e6)] {
        let v = report["result"]["parameters"][name].as_f64().unwrap();
        assert!((v / truth - 1.0).abs() < 1e-9, "{name}: {v}");
    }
    assert_eq!(report["points"], 2 * 21 * 21);
}

#[test]
fn fringe_export_has_the_documented_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "fringe.json",
        r#"{"coupling": {"kappa_a_hz": 4.55e6, "kappa_b_hz": 3.57e6, "xi_hz": 7.0e6},
            "drive": {"power_ratio": 1.28}, "sweep": {"offsets_hz": [0]}}"#,
    );
    let out = tmp.path().join("out");
    assert!(run("fringe", &cfg, &out, &[]).status.success());
    let text = fs::read_to_string(out.join("fringe.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "phase_rad,Gs_dB,Gi_dB");
    assert_eq!(rows.len(), 361);
}

#[test]
fn every_shipped_config_runs() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().unwrap();
    for scenario in ["resonances", "tuning", "gain-map", "fringe", "quadratures", "noise"] {
        let cfg = configs.join(format!("{scenario}.json"));
        let res = run(scenario, &cfg, &tmp.path().join(scenario), &[]);
        assert!(res.status.success(), "{scenario}: {}", String::from_utf8_lossy(&res.stderr));
    }
    let resonances = fs::read_to_string(tmp.path().join("resonances/resonances.csv")).unwrap();
    let row = resonances.lines().last().unwrap();
    let f: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
    assert!((f[0] / 4.47e9 - 1.0).abs() < 0.01 && (f[1] / 5.51e9 - 1.0).abs() < 0.01, "{row}");
    let noise = fs::read_to_string(tmp.path().join("noise/noise.csv")).unwrap();
    assert!(noise.contains("# asymptotic_NF_dB: -7.77"));
}
