use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dmetgeo::co_optimizer::fci_energy;
use dmetgeo::geometry::parse_xyz;

const BIN: &str = env!("CARGO_BIN_EXE_dmetgeo");

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("h2.xyz"), "2\n\nH 0 0 0\nH 0 0 1\n").unwrap();
    std::fs::write(dir.path().join("h4.xyz"), "4\n\nH 0 0 0\nH 0 0 1\nH 0 0 2\nH 0 0 3\n").unwrap();
    dir
}

fn h2_config(method: &str, extra_optimizer: &str) -> String {
    format!(
        "[molecule]\nxyz = \"h2.xyz\"\n\n[parameterization]\nkind = \"bond-chain\"\ninitial = [1.0]\n\n\
         [fragments]\natoms = [[0, 1]]\n\n[optimizer]\nmethod = \"{method}\"\n{extra_optimizer}\n\n[output]\ndir = \"out\"\n"
    )
}

const H4: &str = r#"
[molecule]
xyz = "h4.xyz"

[parameterization]
kind = "bond-chain"
gap_order = [0, 2, 1]
initial = [1.0, 1.0, 1.0]

[fragments]
atoms = [[0], [1], [2], [3]]

[optimizer]
method = "co-opt"

[output]
dir = "out"
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn dmetgeo(args: &[&str], config: &Path) -> Output {
    Command::new(BIN).args(args).arg(config).env_remove("DMETGEO_WORKERS").output().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).trim().to_string()
}

#[test]
fn h4_co_opt_summary() {
    let dir = workspace();
    let cfg = write_config(dir.path(), H4);
    let o = dmetgeo(&["run"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path());
    for key in ["method", "converged", "x_star", "energy_ha", "total_vqe_iterations", "qubits_full", "qubits_embedded_max", "wall_time_s"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }
    assert_eq!(s["method"], "co-opt");
    assert_eq!(s["qubits_full"], 8);
    assert_eq!(s["qubits_embedded_max"], 4);
    let x: Vec<f64> = serde_json::from_value(s["x_star"].clone()).unwrap();
    assert!((x[0] - 0.734).abs() < 0.01 && (x[1] - 0.734).abs() < 0.01 && x[2] >= 2.5, "{x:?}");
    assert!(!dir.path().join("out/.dmetgeo.lock").exists());
}

#[test]
fn h2_single_point_matches_fci() {
    let dir = workspace();
    let cfg = write_config(
        dir.path(),
        &h2_config("single-point", "").replace("initial = [1.0]", "initial = [0.7414]")
            .replace("dir = \"out\"", "dir = \"out\"\nintegral_cache = \"h2.ints\""),
    );
    let o = dmetgeo(&["run"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let e = summary(dir.path())["energy_ha"].as_f64().unwrap();
    let fci = fci_energy(&parse_xyz("2\n\nH 0 0 0\nH 0 0 0.7414\n").unwrap()).unwrap();
    assert!((e - fci).abs() < 1e-7, "{e} vs {fci}");
    // published STO-3G full-CI value near 1.401 bohr
    assert!((e + 1.13728).abs() < 2e-5);
    let csv = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    // second run reads the integral cache and reproduces the energy exactly
    assert!(dir.path().join("h2.ints").exists());
    let o = dmetgeo(&["run"], &cfg);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary(dir.path())["energy_ha"].as_f64().unwrap(), e);
}

#[test]
fn runs_are_byte_for_byte_reproducible() {
    let dir = workspace();
    let cfg = write_config(dir.path(), &h2_config("co-opt", ""));
    assert_eq!(dmetgeo(&["run"], &cfg).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("out/trajectory.csv")).unwrap();
    let o = Command::new(BIN).args(["run"]).arg(&cfg).env("DMETGEO_WORKERS", "1").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(first, std::fs::read(dir.path().join("out/trajectory.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("iter,cum_vqe_iters,energy_ha,mu,grad_x_norm,x_0\n"));
    assert!(text.lines().nth(1).unwrap().contains("1.00000000000e0"));
}

#[test]
fn missing_fragments_is_an_input_error() {
    let dir = workspace();
    let cfg = write_config(dir.path(), &H4.replace("[fragments]\natoms = [[0], [1], [2], [3]]\n", ""));
    let o = dmetgeo(&["run"], &cfg);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("fragments"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = workspace();
    let o = dmetgeo(&["run"], &dir.path().join("nope.toml"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config"));

    let cfg = write_config(dir.path(), &H4.replace("[[0], [1], [2], [3]]", "[[0, 1], [1, 2, 3]]"));
    let o = dmetgeo(&["run"], &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: fragments.atoms"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), &H4.replace("h4.xyz", "absent.xyz"));
    let o = dmetgeo(&["run"], &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("molecule.xyz"));

    let cfg = write_config(dir.path(), H4);
    let o = Command::new(BIN).arg("run").arg(&cfg).env("DMETGEO_WORKERS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("DMETGEO_WORKERS"));

    let o = Command::new(BIN).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_two_with_outputs() {
    let dir = workspace();
    let cfg = write_config(dir.path(), &h2_config("co-opt", "max_outer_iterations = 1"));
    let o = dmetgeo(&["run"], &cfg);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let s = summary(dir.path());
    assert_eq!(s["converged"], false);
    assert!(s["energy_ha"].as_f64().is_some());
    assert!(dir.path().join("out/trajectory.csv").exists());
}

#[test]
fn a_locked_output_directory_is_refused() {
    let dir = workspace();
    let cfg = write_config(dir.path(), &h2_config("co-opt", ""));
    std::fs::create_dir_all(dir.path().join("out")).unwrap();
    std::fs::write(dir.path().join("out/.dmetgeo.lock"), "").unwrap();
    let o = dmetgeo(&["run"], &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("output.dir"));
    assert!(!dir.path().join("out/summary.json").exists());
}

#[test]
fn scan_writes_the_surface() {
    let dir = workspace();
    let text = h2_config("co-opt", "")
        + "\n[scan]\nmode = \"fci\"\n\n[[scan.axis]]\nparameters = [0]\nstart = 0.5\nstop = 2.0\ncount = 31\n";
    let cfg = write_config(dir.path(), &text);
    let o = dmetgeo(&["scan"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/surface.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32);
    assert_eq!(csv.lines().next(), Some("x_0,energy_ha"));
    let s = summary(dir.path());
    assert_eq!(s["method"], "scan");
    let x = s["x_star"][0].as_f64().unwrap();
    assert!((0.70..=0.75).contains(&x), "{x}");
    assert!(dir.path().join("out/trajectory.csv").exists());
}

#[test]
fn validate_reports_sizes_and_problems() {
    let dir = workspace();
    let cfg = write_config(dir.path(), H4);
    let o = dmetgeo(&["validate"], &cfg);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("fragments: 4"));
    assert_eq!(out.matches("1 orbitals, 4 qubits").count(), 4, "{out}");
    assert!(!dir.path().join("out").exists(), "validate must not run anything");

    let cfg = write_config(dir.path(), &H4.replace("[[0], [1], [2], [3]]", "[[0, 1], [1, 2], [3]]"));
    let o = dmetgeo(&["validate"], &cfg);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.contains("overlap on atom 1"), "{out}");

    std::fs::write(dir.path().join("big.xyz"), "4\n\nO 0 0 0\nC 0 0 1.2\nC 0 0 2.6\nO 0 0 3.8\n").unwrap();
    let cfg = write_config(
        dir.path(),
        &H4.replace("h4.xyz", "big.xyz").replace("[[0], [1], [2], [3]]", "[[0, 1, 2, 3]]"),
    );
    let out = String::from_utf8_lossy(&dmetgeo(&["validate"], &cfg).stdout).to_string();
    assert!(out.contains("40 qubits") && out.contains("simulator cap"), "{out}");
}
