//! Parameter sweeps: one base configuration, one varied key.
//!
//! ```text
//! experiment = hj-check
//! sweep.key = grid.n_cells
//! sweep.values = 500, 1000, 2000
//! ```

use crate::config::{ConfigError, Overrides, RawConfig, RunConfig};
use crate::run::{run, RunError, RunManifest};
use hetshock::Exec;
use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub struct SweepRun {
    pub label: String,
    pub value: String,
    pub dir: PathBuf,
    pub result: Result<RunManifest, RunError>,
}

fn dir_name(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-=".contains(c) { c } else { '_' })
        .collect()
}

/// Splits the sweep keys off `raw` and prepares one configuration per value.
fn plan(mut raw: RawConfig, overrides: Overrides, out: &Path) -> Result<Vec<(String, String, PathBuf, Result<RawConfig, ConfigError>)>, ConfigError> {
    let key = raw.remove("sweep.key").ok_or_else(|| ConfigError::new("sweep.key", "missing"))?;
    let values: Vec<String> = raw
        .remove("sweep.values")
        .ok_or_else(|| ConfigError::new("sweep.values", "missing"))?
        .split(',')
        .map(|v| v.trim().to_string())
        .collect();
    if values.iter().any(String::is_empty) {
        return Err(ConfigError::new("sweep.values", "empty value in list"));
    }
    if raw.get("experiment").is_none() {
        return Err(ConfigError::new("experiment", "a sweep needs an `experiment` key"));
    }
    overrides.apply(&mut raw);
    let base = raw.get("label").unwrap_or("run").to_string();
    let mut seen = HashSet::new();
    Ok(values
        .into_iter()
        .map(|value| {
            let label = format!("{base}-{key}={value}");
            let dir = out.join(dir_name(&label));
            let mut r = raw.clone();
            r.set(&key, value.clone());
            r.set("label", dir_name(&label));
            let cfg = if seen.insert(dir.clone()) {
                Ok(r)
            } else {
                Err(ConfigError::new(
                    "sweep.values",
                    format!("output directory {} collides with an earlier run", dir.display()),
                ))
            };
            (label, value, dir, cfg)
        })
        .collect())
}

/// Runs every point independently; a failing point does not stop the others.
pub fn sweep(raw: RawConfig, overrides: Overrides, out: &Path) -> Result<Vec<SweepRun>, ConfigError> {
    let planned = plan(raw, overrides, out)?;
    let runs = Exec::Parallel.map(&planned, |(label, value, dir, cfg)| {
        let result = cfg
            .clone()
            .map_err(RunError::from)
            .and_then(|raw| Ok(RunConfig::from_raw(&raw, None)?))
            .and_then(|cfg| run(&cfg, dir));
        SweepRun {
            label: label.clone(),
            value: value.clone(),
            dir: dir.clone(),
            result,
        }
    });
    write_summary(&runs, out).map_err(|e| ConfigError::new("--out", format!("writing summary: {e}")))?;
    Ok(runs)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `summary.csv`: one row per run, with every reported criterion metric.
fn write_summary(runs: &[SweepRun], out: &Path) -> std::io::Result<()> {
    let columns: BTreeSet<String> = runs
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .flat_map(|m| {
            m.criteria
                .iter()
                .flat_map(|c| c.metrics.keys().map(move |k| format!("{}.{k}", c.id)))
        })
        .collect();
    let mut s = String::from("label,value,status,criteria_passed,criteria_total");
    for c in &columns {
        s.push(',');
        s.push_str(c);
    }
    s.push_str(",error\n");
    for r in runs {
        let _ = write!(s, "{},{}", csv_field(&r.label), csv_field(&r.value));
        match &r.result {
            Ok(m) => {
                let passed = m.criteria.iter().filter(|c| c.pass).count();
                let status = if m.pass { "pass" } else { "fail" };
                let _ = write!(s, ",{status},{passed},{}", m.criteria.len());
                for col in &columns {
                    let (id, key) = col.split_once('.').expect("column has a dot");
                    let v = m
                        .criteria
                        .iter()
                        .find(|c| c.id == id)
                        .and_then(|c| c.metrics.get(key));
                    match v {
                        Some(v) => {
                            let _ = write!(s, ",{v:.16e}");
                        }
                        None => s.push(','),
                    }
                }
                s.push_str(",\n");
            }
            Err(e) => {
                let _ = write!(s, ",error,0,0{}", ",".repeat(columns.len()));
                let _ = writeln!(s, ",{}", csv_field(&e.to_string()));
            }
        }
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("summary.csv"), s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_values_collide() {
        let raw = RawConfig::parse("experiment = simulate\nflux.family = burgers\nsweep.key = run.cfl\nsweep.values = 0.4, 0.4, 0.3\n").unwrap();
        let p = plan(raw, Overrides::default(), Path::new("o")).unwrap();
        assert!(p[0].3.is_ok());
        assert_eq!(p[1].3.as_ref().unwrap_err().key, "sweep.values");
        assert!(p[2].3.is_ok());
        assert_eq!(p[2].3.as_ref().unwrap().get("run.cfl"), Some("0.3"));
    }

    #[test]
    fn missing_sweep_key() {
        let raw = RawConfig::parse("experiment = simulate\nsweep.values = 1\n").unwrap();
        assert_eq!(plan(raw, Overrides::default(), Path::new("o")).unwrap_err().key, "sweep.key");
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
