use std::path::Path;
use std::process::{Command, Output};

use ncvem::mesh::load_mesh;

fn ncvem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncvem")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(text: &str, key: &str) -> f64 {
    let tok = text
        .split_whitespace()
        .find_map(|t| t.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"));
    tok.parse().unwrap()
}

#[test]
fn mesh_criss_reports_stats() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.json");
    let o = ncvem(&["mesh", "--criss", "15", "--output", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "cells"), 450.0);
    assert!(out.contains("h=0.0943"), "{out}");
    assert_eq!(load_mesh(&file).unwrap().n_cells(), 450);
}

#[test]
fn mesh_voronoi_cell_count() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("v.json");
    let o = ncvem(&["mesh", "--voronoi", "225", "--seed", "7", "--lloyd", "100", "--output", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "cells"), 225.0);
}

#[test]
fn validation_errors_exit_one() {
    assert_eq!(ncvem(&["mesh", "--criss", "0"]).status.code(), Some(1));
    assert_eq!(ncvem(&["converge", "--order", "1"]).status.code(), Some(1));
    assert_eq!(ncvem(&["mesh", "--criss", "3", "--voronoi", "9"]).status.code(), Some(1));
    assert_eq!(ncvem(&["simulate", "--tau", "-1"]).status.code(), Some(1));
    assert_eq!(ncvem(&["frobnicate"]).status.code(), Some(1));
    // Several problems are reported together.
    let o = ncvem(&["simulate", "--order", "1", "--epsilon", "0", "--criss", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("--order") && err.contains("--epsilon"), "{err}");
}

#[test]
fn check_passes_on_both_families() {
    for args in [["--criss", "5", "--order", "2"], ["--voronoi", "25", "--order", "4"]] {
        let mut full = vec!["check"];
        full.extend(args);
        let o = ncvem(&full);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let out = stdout(&o);
        for key in ["value", "gradient", "hessian"] {
            assert!(field(&out, key) < 1e-9, "{out}");
        }
        assert_eq!(field(&out, "kernel_mismatches"), 0.0);
    }
}

#[test]
fn corrupted_mesh_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\"vertices\": [[0, 0]], \"cells\": [[0, 1, 2]]").unwrap();
    let o = ncvem(&["check", "--mesh", file.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("mesh file"), "{}", stderr(&o));
}

#[test]
fn converge_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ncvem(&["converge", "--scheme", "csrk1", "--order", "2", "--sizes", "2,4", "--output", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "size,dofs,h,l2_error,l2_eoc,h1_error,h1_eoc,h2_error,h2_eoc");
    assert_eq!(lines.len(), 3);
    let first: Vec<&str> = lines[1].split(',').collect();
    let second: Vec<&str> = lines[2].split(',').collect();
    assert_eq!((first[0], first[1]), ("8", "25"));
    assert_eq!((second[0], second[1]), ("32", "81"));
    assert_eq!(first[4], "");
    assert!(second[4].parse::<f64>().is_ok());
    assert!(dir.path().join("manifest.json").exists());
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_zero_time_writes_initial_state_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncvem(&["simulate", "--criss", "4", "--order", "2", "--t-end", "0", "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let diag = read(dir.path(), "diagnostics.csv");
    let lines: Vec<&str> = diag.lines().collect();
    assert_eq!(lines, vec!["t,energy,mass,newton_iters", lines[1]]);
    assert!(lines[1].starts_with("0.0,"));
    let snaps: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("snapshot_"))
        .collect();
    assert_eq!(snaps.len(), 1);
    let snap = read(dir.path(), "snapshot_000000.csv");
    assert!(snap.starts_with("x,y,value\n"));
    // Three vertices and the centroid of each of the 32 triangles.
    assert_eq!(snap.lines().count(), 1 + 32 * 4);
}

#[test]
fn manifest_reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = ncvem(&[
        "simulate", "--test", "spinodal", "--criss", "4", "--order", "2", "--t-end", "0.05", "--snapshot-every", "2",
        "--output", a.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let conf = a.path().join("run.conf");
    let o = ncvem(&["simulate", "--config", conf.to_str().unwrap(), "--output", b.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(a.path(), "diagnostics.csv"), read(b.path(), "diagnostics.csv"));
    assert_eq!(read(a.path(), "snapshot_000004.csv"), read(b.path(), "snapshot_000004.csv"));
    assert_eq!(read(a.path(), "diagnostics.csv").lines().count(), 7);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "# test\norder = 3\ncriss = 0\n").unwrap();
    let c = conf.to_str().unwrap();
    assert_eq!(ncvem(&["check", "--config", c]).status.code(), Some(1));
    let o = ncvem(&["check", "--config", c, "--criss", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    std::fs::write(&conf, "no_such_flag = 1\n").unwrap();
    assert_eq!(ncvem(&["check", "--config", c]).status.code(), Some(1));
}
