use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hetshock"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read_column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn simulate_keeps_the_stationary_shock() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("stationary_shock.conf");
    let out = tmp.path().join("run");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--n-cells",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["pass"], true);
    assert_eq!(m["criteria"][0]["id"], "c01_stationary_shock");
    assert_eq!(m["config"]["grid.n_cells"], "200");

    // the verdict can be recomputed from the emitted snapshots
    let mut snaps: Vec<PathBuf> = fs::read_dir(out.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    snaps.sort();
    let first = read_column(&snaps[0], 1);
    let last = read_column(snaps.last().unwrap(), 1);
    assert_eq!(first.len(), 200);
    assert_eq!(first, last);
    assert!(first[..100].iter().all(|&u| u == 1.0));
    assert!(first[100..].iter().all(|&u| u == 0.0));
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(snaps.last().unwrap().with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["time"], 1.0);
    assert_eq!(side["dx"], 0.01);
}

#[test]
fn outputs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("stability.conf");
    let dirs: Vec<PathBuf> = ["a", "b"].iter().map(|d| tmp.path().join(d)).collect();
    for d in &dirs {
        let o = run(&[
            "stability",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            d.to_str().unwrap(),
            "--n-cells",
            "400",
            "--horizon",
            "1",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    for f in ["stability.json", "stability.csv", "stability_fine.csv"] {
        assert_eq!(fs::read(dirs[0].join(f)).unwrap(), fs::read(dirs[1].join(f)).unwrap(), "{f}");
    }
    assert_eq!(manifest(&dirs[0])["config_hash"], manifest(&dirs[1])["config_hash"]);
}

#[test]
fn emergence_reports_a_finite_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("emergence.conf");
    let out = tmp.path().join("e");
    let o = run(&[
        "emergence",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--n-cells",
        "1200",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("emergence.json")).unwrap()).unwrap();
    assert_eq!(r["report"]["emerged"], true);
    let t = r["report"]["t_detected"].as_f64().unwrap();
    assert!(t.is_finite() && t > 0.0 && t < 12.0);
    assert!(out.join("shock_plus.csv").exists());
}

#[test]
fn short_horizon_fails_emergence_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("emergence.conf");
    let out = tmp.path().join("e");
    let o = run(&[
        "emergence",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--n-cells",
        "600",
        "--horizon",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(manifest(&out)["pass"], false);
}

#[test]
fn validate_flux_finds_the_positive_heterogeneity_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("gaussian_flux.conf");
    let o = run(&[
        "validate-flux",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("assumptions.json")).unwrap()).unwrap();
    let p = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["assumption"] == "P")
        .unwrap();
    assert_eq!(p["status"], "fail");
    assert!(p["witness"].is_array());
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.conf", "flux.family = burgers\nrun.horizn = 1\n");
    let o = run(&["simulate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.horizn"));

    let cfg = write_config(tmp.path(), "other.conf", "experiment = stability\nflux.family = burgers\n");
    let o = run(&["simulate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["simulate", "--config", "/nonexistent.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_isolates_a_colliding_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.conf",
        "experiment = simulate\nlabel = cfl\nflux.family = lwr\ndata.kind = riemann_phi\n\
         grid.x_left = -1\ngrid.x_right = 1\ngrid.n_cells = 100\nrun.horizon = 0.5\n\
         sweep.key = run.cfl\nsweep.values = 0.3, 0.45, 0.3\n",
    );
    let out = tmp.path().join("sweep");
    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("collides"));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("label,value,status"));
    assert!(rows[1].contains(",pass,"));
    assert!(rows[2].contains(",pass,"));
    assert!(rows[3].contains(",error,"));
    assert!(out.join("cfl-run.cfl=0.3").join("manifest.json").exists());
    assert!(out.join("cfl-run.cfl=0.45").join("manifest.json").exists());
}

#[test]
fn amplitude_sweep_contracts_at_every_amplitude() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("stability_sweep.conf");
    let out = tmp.path().join("s");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--n-cells",
        "800",
        "--horizon",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "c08_l2_contraction.contraction_margin").unwrap();
    for row in summary.lines().skip(1) {
        let margin: f64 = row.split(',').nth(col).unwrap().parse().unwrap();
        assert!(margin > 0.0, "{row}");
    }
}
