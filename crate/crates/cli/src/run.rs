//! Executes one configured experiment and writes its artifacts and manifest.

use crate::config::{ConfigError, Experiment, RunConfig};
use hetshock::characteristics::{integrate_char, CharState};
use hetshock::experiments::{self as ex, CriterionResult, StabilityPair};
use hetshock::flux::validate_assumptions;
use hetshock::shock::{default_jump_floor, TrackOptions, TRACE_OFFSET};
use hetshock::solver::{BoundaryMode, Grid1D, InitialData, SolutionField, Solver};
use hetshock::stability::{stability_run_with, ShiftOptions};
use hetshock::{Error, FluxFamily};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: Error,
    },
    #[error("writing {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

trait Context<T> {
    fn context(self, what: &str) -> Result<T, RunError>;
}

impl<T> Context<T> for hetshock::Result<T> {
    fn context(self, what: &str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Model {
            context: what.to_string(),
            source,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub label: String,
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    /// SHA-256 of the canonical config, framed like a git blob.
    pub config_hash: String,
    pub wall_clock_s: f64,
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
    pub artifacts: Vec<String>,
}

pub fn content_hash(canonical: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", canonical.len()).as_bytes());
    h.update(canonical.as_bytes());
    let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

struct Out {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Out {
    fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Out {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let go = || -> io::Result<()> {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            let mut w = BufWriter::new(File::create(&path)?);
            body(&mut w)?;
            w.flush()
        };
        go().map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
            writeln!(w)
        })
    }
}

/// Runs `cfg`, writing everything below `dir`; the manifest is written last.
pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let mut out = Out::create(dir)?;
    let criteria = match cfg.experiment {
        Experiment::Simulate => simulate(cfg, &mut out)?,
        Experiment::Characteristics => characteristics(cfg, &mut out)?,
        Experiment::Emergence => emergence(cfg, &mut out)?,
        Experiment::Stability => stability(cfg, &mut out)?,
        Experiment::Negcheck => negcheck(cfg, &mut out)?,
        Experiment::HjCheck => hj_check(cfg, &mut out)?,
        Experiment::ValidateFlux => validate_flux(cfg, &mut out)?,
    };
    let mut manifest = RunManifest {
        label: cfg.label.clone(),
        experiment: cfg.experiment.name().to_string(),
        config: cfg.echo.clone(),
        config_hash: content_hash(&cfg.canonical),
        wall_clock_s: start.elapsed().as_secs_f64(),
        pass: criteria.iter().all(|c| c.pass),
        criteria,
        artifacts: Vec::new(),
    };
    manifest.artifacts = out.artifacts.clone();
    manifest.artifacts.push("manifest.json".into());
    out.json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn simulate(cfg: &RunConfig, out: &mut Out) -> Result<Vec<CriterionResult>, RunError> {
    let flux = &cfg.flux;
    let field = SolutionField::from_data(&cfg.data, flux, cfg.grid, cfg.boundary).context("initial data")?;
    let mut solver = Solver::new(flux, cfg.grid, cfg.cfl).context("solver")?.with_exec(cfg.exec);
    let history = solver.run(field, cfg.horizon, cfg.every).context("simulation")?;
    for (k, snap) in history.snapshots.iter().enumerate() {
        out.write(&format!("snapshots/snap_{k:05}.csv"), |w| snap.write_csv(w))?;
        out.json(&format!("snapshots/snap_{k:05}.json"), &snap.meta())?;
    }
    let deviation = history
        .last()
        .values
        .iter()
        .zip(&history.first().values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut criteria = Vec::new();
    match (&cfg.data, cfg.boundary) {
        (InitialData::RiemannPhi { .. }, BoundaryMode::FarField) if flux.sigma() == 0.0 => {
            criteria.push(ex::stationary_check(ex::C01, deviation, ""));
        }
        (&InitialData::Constant { value, bump: None }, BoundaryMode::Fixed { left, right })
            if (value == flux.u_minus() || value == flux.u_plus()) && left == value && right == value =>
        {
            criteria.push(ex::stationary_check(ex::C02, deviation, ""));
        }
        _ => {}
    }
    Ok(criteria)
}

#[derive(Serialize)]
struct CharSummary {
    curves: usize,
    t_end: f64,
    dt: f64,
    max_f_residual: f64,
}

fn characteristics(cfg: &RunConfig, out: &mut Out) -> Result<Vec<CriterionResult>, RunError> {
    let spec = &cfg.characteristics;
    let starts: Vec<CharState> = spec
        .y0
        .iter()
        .flat_map(|&y| spec.z0.iter().map(move |&z| CharState::new(y, z, 0.0)))
        .collect();
    let curves = cfg
        .exec
        .map(&starts, |&s| integrate_char(&cfg.flux, s, spec.t_end, spec.dt));
    let mut max_res = 0.0f64;
    for (k, c) in curves.into_iter().enumerate() {
        let c = c.context("characteristic")?;
        max_res = max_res.max(c.max_f_residual);
        out.write(&format!("characteristics/char_{k:04}.csv"), |w| c.write_csv(w))?;
    }
    out.json(
        "characteristics.json",
        &CharSummary {
            curves: starts.len(),
            t_end: spec.t_end,
            dt: spec.dt,
            max_f_residual: max_res,
        },
    )?;
    Ok(vec![ex::flux_constancy_check(max_res, starts.len())])
}

fn emergence(cfg: &RunConfig, out: &mut Out) -> Result<Vec<CriterionResult>, RunError> {
    let flux = &cfg.flux;
    let opts = TrackOptions {
        jump_floor: cfg.tolerances.jump_floor.unwrap_or_else(|| default_jump_floor(flux)),
        offset: TRACE_OFFSET,
    };
    let study = match ex::emergence_study_with(flux, &cfg.data, cfg.grid, cfg.horizon, cfg.cfl, cfg.every, opts) {
        Ok(s) => s,
        Err(Error::NotEmerged { last_distance }) => {
            return Ok(vec![CriterionResult::new(
                ex::C03,
                "simple shock emerges in finite time",
                false,
                format!("not emerged by t={}; last L1 distance {last_distance:.3e}", cfg.horizon),
            )
            .metric("last_distance", last_distance)])
        }
        Err(e) => return Err(e).context("emergence"),
    };
    out.json("emergence.json", &study)?;
    out.write("fits.csv", |w| {
        writeln!(w, "t,position,l1")?;
        for f in &study.report.fits {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", f.t, f.position, f.l1)?;
        }
        Ok(())
    })?;
    let mut criteria = vec![ex::emergence_check(&study)];
    if let Some(pair) = &study.pair {
        out.write("shock_minus.csv", |w| pair.s_minus.write_csv(w))?;
        out.write("shock_plus.csv", |w| pair.s_plus.write_csv(w))?;
        criteria.push(ex::wedge_check(&study));
    }
    Ok(criteria)
}

fn shift_options(cfg: &RunConfig, dx: f64) -> ShiftOptions {
    let mut opts = ShiftOptions::new(&cfg.flux, dx);
    if let Some(f) = cfg.tolerances.jump_floor {
        opts.jump_floor = f;
    }
    if let Some(t) = cfg.tolerances.ordering_tol {
        opts.ordering_tol = t;
    }
    opts
}

fn stability(cfg: &RunConfig, out: &mut Out) -> Result<Vec<CriterionResult>, RunError> {
    let flux = &cfg.flux;
    let g = cfg.grid;
    let run = |grid: Grid1D, every: usize| {
        stability_run_with(
            flux,
            &cfg.data,
            grid,
            cfg.horizon,
            cfg.cfl,
            every,
            shift_options(cfg, grid.dx()),
            cfg.tolerances.num_tol,
        )
        .context("stability run")
    };
    let coarse = run(g, cfg.every)?;
    let fine = if cfg.refine {
        let fine_grid = Grid1D::new(g.x_left, g.x_right, 2 * g.n_cells).context("refined grid")?;
        Some(run(fine_grid, 2 * cfg.every)?)
    } else {
        None
    };
    let amplitude = match cfg.data {
        InitialData::PerturbedPhi { bump, .. } => bump.amplitude,
        InitialData::Constant { bump: Some(b), .. } => b.amplitude,
        _ => f64::NAN,
    };
    let pair = StabilityPair {
        amplitude,
        coarse,
        fine,
    };
    out.json("stability.json", &pair)?;
    out.write("stability.csv", |w| pair.coarse.write_csv(w))?;
    if let Some(f) = &pair.fine {
        out.write("stability_fine.csv", |w| f.write_csv(w))?;
    }
    let pairs = [pair];
    Ok(vec![ex::contraction_check(&pairs), ex::shift_check(&pairs)])
}

fn negcheck(cfg: &RunConfig, out: &mut Out) -> Result<Vec<CriterionResult>, RunError> {
    let flux = &cfg.flux;
    if !matches!(cfg.flux_family, FluxFamily::NegativeHeterogeneity { .. }) {
        return Err(ConfigError::new("flux.family", "negcheck needs negative_heterogeneity").into());
    }
    let psi = match cfg.data {
        InitialData::Constant { value, bump: Some(b) } if value == flux.u_minus() => b,
        _ => {
            return Err(ConfigError::new(
                "data.kind",
                format!("negcheck needs constant data at u_minus = {} plus a bump", flux.u_minus()),
            )
            .into())
        }
    };
    let r = hetshock::stability::negative_heterogeneity_growth(flux, Some(psi), cfg.grid, cfg.horizon, cfg.cfl)
        .context("negcheck")?;
    out.json("negcheck.json", &r)?;
    for (name, g) in [("negcheck_negative.csv", &r.negative), ("negcheck_control.csv", &r.control)] {
        out.write(name, |w| {
            writeln!(w, "t,norm")?;
            for (t, n) in g.times.iter().zip(&g.norms) {
                writeln!(w, "{t:.16e},{n:.16e}")?;
            }
            Ok(())
        })?;
    }
    Ok(vec![ex::negative_check(&r)])
}

fn hj_check(cfg: &RunConfig, out: &mut Out) -> Result<Vec<CriterionResult>, RunError> {
    let domain = (cfg.grid.x_left, cfg.grid.x_right);
    let mut levels = Vec::new();
    for &n in &cfg.hj_levels {
        let (d, v) = ex::hj_level(&cfg.flux, &cfg.data, domain, cfg.horizon, n).context("hj level")?;
        out.write(&format!("value_n{n}.csv"), |w| v.write_csv(w))?;
        levels.push(d);
    }
    out.json("hj.json", &levels)?;
    Ok(vec![ex::hj_check(&[("run", &levels)])])
}

fn validate_flux(cfg: &RunConfig, out: &mut Out) -> Result<Vec<CriterionResult>, RunError> {
    let report = validate_assumptions(
        &cfg.flux,
        (cfg.grid.x_left, cfg.grid.x_right),
        cfg.validate_u_range,
        cfg.validate_samples,
    );
    out.json("assumptions.json", &report)?;
    Ok(Vec::new())
}
