use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_z2lattice"))
}

/// Writes `config.toml` into `dir` and runs one subcommand; returns the exit code.
fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> i32 {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    let out = bin()
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn vacuum_steady_state_is_a_single_row() {
    let d = TempDir::new().unwrap();
    let code = run(d.path(), "steady", "[model]\ng = 0.0\nj = 0.0\n[steady]\nj = [0.0]\n[numerics]\nn_levels = 10\n", &[]);
    assert_eq!(code, 0);
    let r = rows(&read(d.path(), "steady.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][2], "symmetric");
    assert_eq!(r[0][5].parse::<f64>().unwrap(), 0.0);
    assert!(r[0][6].parse::<f64>().unwrap().abs() < 1e-12);
    assert!((r[0][7].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    let meta: serde_json::Value = serde_json::from_str(&read(d.path(), "meta.json")).unwrap();
    assert_eq!(meta["command"], "steady");
    assert_eq!(meta["config"]["numerics"]["n_levels"], 10);
    assert!(meta["truncation"].is_null());
    assert!(d.path().join("out/plot_steady.py").exists());
}

#[test]
fn outputs_are_deterministic_across_runs_and_workers() {
    let cfg = "[model]\ng = 3.0\n[steady]\nj = [0.2, 0.5]\n[numerics]\nn_levels = 16\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(run(a.path(), "steady", cfg, &["--workers", "1"]), 0);
    assert_eq!(run(b.path(), "steady", cfg, &["--workers", "2"]), 0);
    let sa = read(a.path(), "steady.csv");
    assert_eq!(sa, read(b.path(), "steady.csv"));
    // the broken branch at J = 0.5 is reported next to the symmetric one
    assert_eq!(rows(&sa).len(), 3);

    let sweep = "[model]\ndelta_mode = \"band_bottom\"\n[numerics]\nn_levels = 12\nn_k = 9\n[sweep]\nj = [0.2, 0.6]\ng = { start = 1.0, stop = 3.0, num = 2 }\n";
    assert_eq!(run(a.path(), "sweep", sweep, &["--workers", "1"]), 0);
    assert_eq!(run(b.path(), "sweep", sweep, &["--workers", "3"]), 0);
    let pa = read(a.path(), "phase.csv");
    assert_eq!(pa, read(b.path(), "phase.csv"));
    assert!(pa.starts_with("j,g,order_parameter,occupation,purity,max_im_omega,argmax_k,n_branches,flags\n"));
    let r = rows(&pa);
    assert_eq!(r.len(), 4);
    // g outer, j inner
    assert_eq!((r[0][1].as_str(), r[1][1].as_str()), ("1.0000000000000000e0", "1.0000000000000000e0"));
    assert_eq!(r[0][0], "2.0000000000000001e-1");
}

#[test]
fn single_cell_sweep() {
    let d = TempDir::new().unwrap();
    let cfg = "[numerics]\nn_levels = 10\nn_k = 5\n[sweep]\nj = [0.3]\ng = [0.2]\nboundary = true\n";
    assert_eq!(run(d.path(), "sweep", cfg, &[]), 0);
    let r = rows(&read(d.path(), "phase.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][7], "1");
    assert_eq!(r[0][8], "converged");
    let b = rows(&read(d.path(), "boundary.csv"));
    assert_eq!(b[0][2], "no transition on grid");
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "steady", "[model]\ngg = 1.0\n", &[]), 2);
    assert_eq!(run(d.path(), "steady", "typo = 1\n", &[]), 2);
    assert_eq!(run(d.path(), "steady", "[numerics]\nn_levels = 1\n", &[]), 2);
    assert_eq!(run(d.path(), "steady", "[steady]\nj = [0.5, 0.1]\n", &[]), 2);
    assert_eq!(run(d.path(), "dynamics", "[numerics.integrator]\nmethod = \"euler\"\n", &[]), 2);
    assert!(!d.path().join("out").exists());
}

#[test]
fn vacuum_wigner_peak() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\ng = 0.0\nj = 0.0\n[numerics]\nn_levels = 10\n[wigner]\nextent = 1.0\npoints = 21\n";
    assert_eq!(run(d.path(), "wigner", cfg, &[]), 0);
    let text = read(d.path(), "wigner.csv");
    assert!(text.starts_with("# branch=symmetric\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 21 * 21);
    let f = |row: &Vec<String>, i: usize| row[i].parse::<f64>().unwrap();
    let centre = r.iter().find(|row| f(row, 0).abs() < 1e-12 && f(row, 1).abs() < 1e-12).unwrap();
    let w = f(centre, 2);
    assert!((w - 2.0 / std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn unavailable_branch_is_a_numerical_failure() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\ng = 0.5\nj = 0.1\n[numerics]\nn_levels = 10\n[wigner]\nbranch = \"broken\"\n";
    assert_eq!(run(d.path(), "wigner", cfg, &[]), 3);
}

#[test]
fn zero_hopping_dispersion_is_flat() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\ng = 2.0\ndelta_mode = \"fixed\"\n[numerics]\nn_levels = 10\nn_k = 7\n[stability]\nj = [0.0]\n";
    assert_eq!(run(d.path(), "stability", cfg, &[]), 0);
    let r = rows(&read(d.path(), "dispersion.csv"));
    assert_eq!(r.len(), 7);
    let m0: f64 = r[0][3].parse().unwrap();
    assert!(r.iter().all(|row| (row[3].parse::<f64>().unwrap() - m0).abs() < 1e-8));
    let s = rows(&read(d.path(), "summary.csv"));
    assert!(s[0][2].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn symmetric_initial_condition_stays_symmetric() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\ng = 3.0\nj = 0.5\n[numerics]\nn_levels = 12\n[numerics.integrator]\nt_max = 1.0\ndt = 0.005\n[dynamics]\nalpha0 = [0.0, [0.1, 0.1]]\n";
    assert_eq!(run(d.path(), "dynamics", cfg, &["--fixed-step"]), 0);
    for row in rows(&read(d.path(), "traj_0.csv")) {
        assert!(row[1].parse::<f64>().unwrap().abs() < 1e-12);
        assert!(row[2].parse::<f64>().unwrap().abs() < 1e-12);
    }
    let s = rows(&read(d.path(), "summary.csv"));
    assert_eq!(s.len(), 2);
    assert!(s.iter().all(|row| row[10] == "ok"));
    assert!(d.path().join("out/traj_1.csv").exists());
}

#[test]
fn json_output_and_truncation_report() {
    let d = TempDir::new().unwrap();
    let cfg = "[model]\ng = 2.0\n[steady]\nj = [0.6]\n[numerics]\nn_levels = 14\n[output]\nformat = \"json\"\n";
    assert_eq!(run(d.path(), "steady", cfg, &["--check-truncation"]), 0);
    let t: serde_json::Value = serde_json::from_str(&read(d.path(), "steady.json")).unwrap();
    assert_eq!(t["rows"][0]["branch"], "symmetric");
    let meta: serde_json::Value = serde_json::from_str(&read(d.path(), "meta.json")).unwrap();
    assert_eq!(meta["truncation"]["n_levels_refined"], 24);
    assert!(meta["truncation"]["max_rel_drift"].as_f64().unwrap() < 0.05);
    assert!(!d.path().join("out/plot_steady.py").exists());
}

#[test]
fn documented_configuration_matches_defaults() {
    let doc = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/config.md")).unwrap();
    let block = doc.split("```toml\n").nth(1).unwrap().split("```").next().unwrap();
    let cfg = z2lattice::RunConfig::from_toml(block).unwrap();
    assert_eq!(cfg, z2lattice::RunConfig::default());
}
