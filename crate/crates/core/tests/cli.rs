use std::fs;
use std::process::{Command, Output};

fn tdnrbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdnrbc"))
        .args(args)
        .env_remove("TDNRBC_THREADS")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn zeros_lists_every_pole() {
    let k = stdout(&tdnrbc(&["zeros", "--kind", "k", "--lmax", "5"]));
    assert_eq!(k.lines().next(), Some("l,j,re,im,residual"));
    assert_eq!(k.lines().count(), 1 + 15);
    let m = stdout(&tdnrbc(&["zeros", "--kind", "combined", "--lmax", "5"]));
    assert_eq!(m.lines().count(), 1 + 20);
    for row in k.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert!(cols[2].parse::<f64>().unwrap() < 0.0);
        assert!(cols[4].parse::<f64>().unwrap() <= 1e-12);
    }
}

#[test]
fn zeros_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("k.csv");
    let o = tdnrbc(&["zeros", "--lmax", "3", "--out", p.to_str().unwrap()]);
    assert!(stdout(&o).is_empty());
    assert_eq!(fs::read_to_string(&p).unwrap().lines().count(), 1 + 6);
}

#[test]
fn kernel_test_default_table() {
    let out = stdout(&tdnrbc(&["kernel-test"]));
    assert_eq!(out.lines().next(), Some("l,t,e"));
    assert_eq!(out.lines().count(), 1 + 24);
    for row in out.lines().skip(1) {
        let e: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(e <= 1e-12, "{row}");
    }
}

#[test]
fn convolve_test_reports_second_order() {
    let out = stdout(&tdnrbc(&["convolve-test", "--levels", "4"]));
    assert_eq!(out.lines().count(), 1 + 4);
    for row in out.lines().skip(2) {
        let ratio: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!((3.6..=4.4).contains(&ratio), "{row}");
    }
}

#[test]
fn missing_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = tdnrbc(&["simulate", "--config", "missing.cfg", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.cfg"));
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "incident.type = monochromatic\nbogus = 1\n").unwrap();
    let o = tdnrbc(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn simulate_then_slice_export() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "incident.k = 6\n\
         disc.E = 8\ndisc.N = 4\ndisc.L = 2\ndisc.dt = 0.01\ndisc.t_end = 0.2\n\
         snapshots = [0.2]\nslice.n = 5\ndiagnostics.interval = 0.1\n",
    )
    .unwrap();
    let run = dir.path().join("run");
    let o = tdnrbc(&["--threads", "1", "simulate", "--config", cfg.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    stdout(&o);
    let snap = fs::read_to_string(run.join("snapshots/t_0.200.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some("x,y,ReDz"));
    let field = run.join("fields/t_0.200.bin");
    let same = stdout(&tdnrbc(&["slice-export", "--field", field.to_str().unwrap()]));
    assert_eq!(same, snap);
    let full = stdout(&tdnrbc(&["slice-export", "--field", field.to_str().unwrap(), "--n", "3", "--full"]));
    assert_eq!(full.lines().next(), Some("x,y,region,ReDx,ImDx,ReDy,ImDy,ReDz,ImDz"));
    assert_eq!(full.lines().count(), 1 + 5);
    let manifest = fs::read_to_string(run.join("run-manifest")).unwrap();
    assert!(manifest.contains("disc.L = 2"));
}

#[test]
fn thread_override_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_tdnrbc"))
        .args(["--threads", "2", "zeros", "--lmax", "1"])
        .env("TDNRBC_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("TDNRBC_THREADS"));
    let o = Command::new(env!("CARGO_BIN_EXE_tdnrbc"))
        .args(["zeros", "--lmax", "1"])
        .env("TDNRBC_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
}
