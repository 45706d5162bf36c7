use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ringqed::membrane::read_thickness_csv;
use ringqed::spectra::TransmissionSpectrum;
use serde_json::Value;
use tempfile::TempDir;

const SUBCOMMANDS: [&str; 10] = [
    "mode",
    "ring",
    "coupler-scan",
    "fit",
    "spectrum",
    "transparency",
    "trap",
    "tune",
    "membrane",
    "budget",
];

fn ringqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringqed")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let o = ringqed(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn reference_toml() -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/reference.toml")).unwrap()
}

/// Reference device with the cavity moved away from critical coupling so
/// both rates are identifiable from the lineshape.
fn under_coupled_config(dir: &Path) -> PathBuf {
    let text = reference_toml().replace("[cavity]\nkappa_c_ghz = 2.8", "[cavity]\nkappa_c_ghz = 1.0");
    assert!(text.contains("kappa_c_ghz = 1.0"));
    let path = dir.join("under.toml");
    fs::write(&path, text).unwrap();
    path
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_subcommand() {
    let o = ok(&["--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in SUBCOMMANDS {
        assert!(text.contains(cmd), "{cmd} missing from --help");
    }
}

#[test]
fn unknown_flag_fails() {
    let o = ringqed(&["budget", "--no-such-flag"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--no-such-flag"));
}

#[test]
fn invalid_config_fails_with_diagnostic() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        reference_toml().replace("core_material = \"Si3N4\"", "core_material = \"Unobtainium\""),
    )
    .unwrap();
    let o = ringqed(&["--config", s(&bad), "--out", s(dir.path()), "budget"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("Unobtainium"), "{err}");

    let broken = dir.path().join("broken.toml");
    fs::write(&broken, "[ring]\nradius_um = \n").unwrap();
    let o = ringqed(&["--config", s(&broken), "--out", s(dir.path()), "budget"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn budget_with_half_facets() {
    let dir = TempDir::new().unwrap();
    ok(&["--out", s(dir.path()), "budget"]);
    let b = read_json(dir.path().join("budget.json"));
    assert!((b["measured_throughput"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((b["measured_loss_db"].as_f64().unwrap() - 6.0206).abs() < 1e-3);
    assert!((b["simulated_throughput"].as_f64().unwrap() - 0.49).abs() < 1e-12);
}

#[test]
fn generated_spectrum_fits_back_to_its_rates() {
    let dir = TempDir::new().unwrap();
    let cfg = under_coupled_config(dir.path());
    let out = dir.path().join("run");
    ok(&["--config", s(&cfg), "--out", s(&out), "spectrum", "--g-mhz", "100"]);
    let input = out.join("spectrum_empty.csv");
    ok(&["--config", s(&cfg), "--out", s(&out), "fit", "--input", s(&input)]);
    let f = read_json(out.join("fit.json"));
    assert!((f["kappa_c_ghz"].as_f64().unwrap() / 1.0 - 1.0).abs() < 1e-3, "{f}");
    assert!((f["kappa_i_ghz"].as_f64().unwrap() / 2.8 - 1.0).abs() < 1e-3, "{f}");
    assert!((f["kappa_ghz"].as_f64().unwrap() / 3.8 - 1.0).abs() < 1e-3, "{f}");

    let o = ok(&[
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "fit",
        "--input",
        s(&input),
        "--regime",
        "over",
    ]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("Over"));
    let f = read_json(out.join("fit.json"));
    assert!((f["kappa_c_ghz"].as_f64().unwrap() / 2.8 - 1.0).abs() < 1e-3, "{f}");
}

#[test]
fn noisy_spectra_are_reproducible_per_seed() {
    let dir = TempDir::new().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "--out",
            s(&out),
            "--seed",
            seed,
            "spectrum",
            "--noise",
            "0.01",
            "--g-mhz",
            "150",
        ]);
        (
            fs::read_to_string(out.join("spectrum_empty.csv")).unwrap(),
            fs::read_to_string(out.join("spectrum_atom.csv")).unwrap(),
        )
    };
    let a = run("7", "a");
    let b = run("7", "b");
    let c = run("8", "c");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
    // the atom curves carry no noise
    assert_eq!(a.1, c.1);

    let back = TransmissionSpectrum::read_csv(&a.0).unwrap();
    assert_eq!(back.len(), 401);
    assert!(back.sigma.as_ref().unwrap().iter().all(|&x| x == 0.01));
}

#[test]
fn csv_and_json_outputs_agree() {
    let dir = TempDir::new().unwrap();
    let csv_dir = dir.path().join("csv");
    let json_dir = dir.path().join("json");
    ok(&[
        "--out",
        s(&csv_dir),
        "--seed",
        "3",
        "spectrum",
        "--noise",
        "0.02",
        "--g-mhz",
        "80",
    ]);
    ok(&[
        "--out",
        s(&json_dir),
        "--format",
        "json",
        "--seed",
        "3",
        "spectrum",
        "--noise",
        "0.02",
        "--g-mhz",
        "80",
    ]);
    let from_csv =
        TransmissionSpectrum::read_csv(&fs::read_to_string(csv_dir.join("spectrum_empty.csv")).unwrap()).unwrap();
    let from_json: TransmissionSpectrum =
        serde_json::from_str(&fs::read_to_string(json_dir.join("spectrum_empty.json")).unwrap()).unwrap();
    assert_eq!(from_csv.len(), from_json.len());
    for (a, b) in from_csv.transmission.iter().zip(&from_json.transmission) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3));
    }
    for (a, b) in from_csv.detuning_ghz.iter().zip(&from_json.detuning_ghz) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
    }

    ok(&["--out", s(&csv_dir), "membrane"]);
    let map = read_thickness_csv(&fs::read_to_string(csv_dir.join("membrane_map.csv")).unwrap()).unwrap();
    assert_eq!(map.len(), 61 * 33);
    let report = read_json(csv_dir.join("membrane_report.json"));
    assert!(report.is_object());
}
