//! Flat `key = value` run configuration with dotted sections.
//!
//! ```text
//! # comments start with '#'
//! experiment = emergence
//! flux.family = convex_combination
//! [data]
//! kind = piecewise4_special
//! x_minus = -1
//! ```
//!
//! A `[section]` header prefixes the keys that follow it.

use hetshock::flux::{Transition, VelocityProfile};
use hetshock::solver::{BoundaryMode, Bump, Grid1D, InitialData, DEFAULT_CFL, DEFAULT_MARGIN};
use hetshock::{build_flux, Exec, FluxFamily, FluxModel};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config error at `{}` (line {l}): {}", self.key, self.message),
            None => write!(f, "config error at `{}`: {}", self.key, self.message),
        }
    }
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            line: None,
            message: message.into(),
        }
    }
}

/// Parsed but untyped entries, keyed by their full dotted name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError {
                    key: line.into(),
                    line: Some(line_no),
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError {
                key: line.into(),
                line: Some(line_no),
                message: "expected `key = value`".into(),
            })?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(ConfigError {
                    key: k.into(),
                    line: Some(line_no),
                    message: "keys must be non-empty and contain no spaces".into(),
                });
            }
            let key = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            if entries.insert(key.clone(), (v.trim().to_string(), Some(line_no))).is_some() {
                return Err(ConfigError {
                    key,
                    line: Some(line_no),
                    message: "duplicate key".into(),
                });
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (value.into(), None));
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(v, _)| v)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// `key = value` lines in key order: the hashed and echoed form.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, (v, _))| format!("{k} = {v}\n")).collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }
}

/// Typed access that remembers which keys were consumed.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Reader {
            raw,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: key.into(),
            line: self.raw.entries.get(key).and_then(|e| e.1),
            message: message.into(),
        }
    }

    fn str(&self, key: &str) -> Option<&'a str> {
        let v = self.raw.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v.0.as_str())
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.str(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| self.err(key, format!("cannot parse `{s}` as {}", std::any::type_name::<T>()))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.parse::<f64>(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(self.err(key, "must be finite"));
        }
        Ok(v)
    }

    fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.parse::<f64>(key)?.ok_or_else(|| self.err(key, "missing"))?;
        if !v.is_finite() {
            return Err(self.err(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parse::<f64>(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(self.err(key, "must be positive")),
            v => Ok(v),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(s) = self.str(key) else { return Ok(None) };
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| self.err(key, format!("cannot parse `{}` as a number", p.trim())))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn unused(&self) -> Option<String> {
        let used = self.used.borrow();
        self.raw.keys().find(|k| !used.contains(*k)).map(str::to_string)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Characteristics,
    Emergence,
    Stability,
    Negcheck,
    HjCheck,
    ValidateFlux,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Simulate,
        Experiment::Characteristics,
        Experiment::Emergence,
        Experiment::Stability,
        Experiment::Negcheck,
        Experiment::HjCheck,
        Experiment::ValidateFlux,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Characteristics => "characteristics",
            Experiment::Emergence => "emergence",
            Experiment::Stability => "stability",
            Experiment::Negcheck => "negcheck",
            Experiment::HjCheck => "hj-check",
            Experiment::ValidateFlux => "validate-flux",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tolerances {
    pub jump_floor: Option<f64>,
    pub ordering_tol: Option<f64>,
    pub num_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharSpec {
    pub y0: Vec<f64>,
    pub z0: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub label: String,
    pub flux_family: FluxFamily,
    pub flux: FluxModel,
    pub data: InitialData,
    pub grid: Grid1D,
    pub boundary: BoundaryMode,
    pub horizon: f64,
    pub cfl: f64,
    pub every: usize,
    pub exec: Exec,
    pub tolerances: Tolerances,
    pub characteristics: CharSpec,
    pub hj_levels: Vec<usize>,
    pub refine: bool,
    pub validate_u_range: (f64, f64),
    pub validate_samples: usize,
    /// Canonical `key = value` text after overrides.
    pub canonical: String,
    pub echo: BTreeMap<String, String>,
}

/// Overrides given on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub n_cells: Option<usize>,
    pub horizon: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, raw: &mut RawConfig) {
        if let Some(n) = self.n_cells {
            raw.set("grid.n_cells", n.to_string());
        }
        if let Some(t) = self.horizon {
            raw.set("run.horizon", format!("{t}"));
        }
    }
}

fn lin(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1).max(1) as f64).collect()
}

fn read_flux(r: &Reader) -> Result<FluxFamily, ConfigError> {
    let family = r.str("flux.family").ok_or_else(|| r.err("flux.family", "missing"))?;
    let transition = || -> Result<Transition, ConfigError> {
        let d = Transition::default();
        Ok(Transition {
            center: r.f64_or("flux.transition.center", d.center)?,
            width: r.f64_or("flux.transition.width", d.width)?,
        })
    };
    Ok(match family {
        "burgers" => FluxFamily::burgers(),
        "gaussian_lwr" => FluxFamily::GaussianLwr,
        "lwr" | "lwr_heterogeneous" => {
            let profile = r.str("flux.velocity").unwrap_or("constant");
            let velocity = match profile {
                "constant" => VelocityProfile::Constant {
                    value: r.f64_or("flux.value", 1.0)?,
                },
                "gaussian" => VelocityProfile::Gaussian {
                    base: r.f64_or("flux.base", 1.0)?,
                    amplitude: r.f64_or("flux.amplitude", 1.0)?,
                    width: r.f64_or("flux.width", 1.0)?,
                },
                "tanh" => VelocityProfile::Tanh {
                    base: r.f64_or("flux.base", 1.0)?,
                    amplitude: r.f64_or("flux.amplitude", 0.5)?,
                    width: r.f64_or("flux.width", 1.0)?,
                },
                other => return Err(r.err("flux.velocity", format!("unknown profile `{other}`"))),
            };
            FluxFamily::LwrHeterogeneous { velocity }
        }
        "convex_combination" => FluxFamily::ConvexCombination {
            epsilon: r.f64_or("flux.epsilon", 0.1)?,
            transition: transition()?,
        },
        "negative_heterogeneity" => FluxFamily::NegativeHeterogeneity {
            epsilon: r.f64_or("flux.epsilon", 0.1)?,
            transition: transition()?,
        },
        "homogeneous_quadratic" => FluxFamily::HomogeneousQuadratic {
            alpha: r.f64_or("flux.alpha", 1.0)?,
            u_minus: r.f64_or("flux.u_minus", 1.0)?,
            u_plus: r.f64_or("flux.u_plus", 0.0)?,
        },
        other => return Err(r.err("flux.family", format!("unknown family `{other}`"))),
    })
}

fn read_bump(r: &Reader, required: bool) -> Result<Option<Bump>, ConfigError> {
    let keys = ["data.bump.center", "data.bump.half_width", "data.bump.amplitude"];
    if !required && keys.iter().all(|k| r.raw.get(k).is_none()) {
        return Ok(None);
    }
    Ok(Some(Bump {
        center: r.f64_or(keys[0], 0.0)?,
        half_width: r.positive(keys[1])?.unwrap_or(0.5),
        amplitude: r.f64_req(keys[2])?,
    }))
}

fn read_data(r: &Reader, flux: &FluxModel) -> Result<InitialData, ConfigError> {
    let kind = r.str("data.kind").unwrap_or("riemann_phi");
    let data = match kind {
        "riemann_phi" => InitialData::RiemannPhi {
            jump_at: r.f64_or("data.jump_at", 0.0)?,
        },
        "piecewise4" | "piecewise4_special" => {
            let xm = r.f64_or("data.x_minus", -1.0)?;
            let x0 = r.f64_or("data.x0", 0.0)?;
            let xp = r.f64_or("data.x_plus", 1.0)?;
            if kind == "piecewise4_special" {
                InitialData::piecewise4_special(flux, xm, x0, xp)
            } else {
                InitialData::Piecewise4 {
                    x_minus: xm,
                    x0,
                    x_plus: xp,
                    u_m: r.f64_or("data.u_m", flux.u_plus())?,
                    u_big: r.f64_or("data.u_big", flux.u_minus())?,
                }
            }
        }
        "perturbed_phi" => InitialData::PerturbedPhi {
            jump_at: r.f64_or("data.jump_at", 0.0)?,
            bump: read_bump(r, true)?.expect("required bump"),
        },
        "constant" => InitialData::Constant {
            value: r.f64_or("data.value", flux.u_minus())?,
            bump: read_bump(r, false)?,
        },
        "custom" => InitialData::CustomSamples {
            x: r.list("data.x")?.ok_or_else(|| r.err("data.x", "missing"))?,
            u: r.list("data.u")?.ok_or_else(|| r.err("data.u", "missing"))?,
        },
        other => return Err(r.err("data.kind", format!("unknown kind `{other}`"))),
    };
    data.validate(flux).map_err(|e| r.err("data.kind", e.to_string()))?;
    Ok(data)
}

fn data_range(data: &InitialData, flux: &FluxModel) -> (f64, f64) {
    let (a, b) = data.support();
    let pts = lin(a - 1.0, b + 1.0, 257);
    pts.iter()
        .map(|&x| data.value(flux, x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

impl RunConfig {
    /// Builds a typed configuration. `selected` is the subcommand, if any;
    /// a conflicting `experiment` key is an error.
    pub fn from_raw(raw: &RawConfig, selected: Option<Experiment>) -> Result<Self, ConfigError> {
        let r = Reader::new(raw);
        let from_file = r
            .str("experiment")
            .map(|s| s.parse::<Experiment>().map_err(|e| r.err("experiment", e)))
            .transpose()?;
        let experiment = match (selected, from_file) {
            (Some(a), Some(b)) if a != b => {
                return Err(r.err(
                    "experiment",
                    format!("config selects `{}` but the command is `{}`", b.name(), a.name()),
                ))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(r.err("experiment", "missing")),
        };
        let label = r.str("label").unwrap_or(experiment.name()).to_string();
        if label.is_empty() || label.contains(['/', '\\']) {
            return Err(r.err("label", "must be non-empty and contain no path separators"));
        }
        let flux_family = read_flux(&r)?;
        let flux = build_flux(flux_family.clone()).map_err(|e| r.err("flux.family", e.to_string()))?;
        let data = read_data(&r, &flux)?;

        let horizon = r.positive("run.horizon")?.unwrap_or(1.0);
        let cfl = r.positive("run.cfl")?.unwrap_or(DEFAULT_CFL);
        if cfl > 1.0 {
            return Err(r.err("run.cfl", "must not exceed 1"));
        }
        let every = r.parse::<usize>("run.every")?.unwrap_or(20);
        if every == 0 {
            return Err(r.err("run.every", "must be at least 1"));
        }
        let exec = match r.str("run.exec").unwrap_or("parallel") {
            "parallel" => Exec::Parallel,
            "sequential" => Exec::Sequential,
            other => return Err(r.err("run.exec", format!("expected parallel or sequential, got `{other}`"))),
        };

        let n_cells = r.parse::<usize>("grid.n_cells")?.unwrap_or(1000);
        let grid = match (r.parse::<f64>("grid.x_left")?, r.parse::<f64>("grid.x_right")?) {
            (Some(a), Some(b)) => Grid1D::new(a, b, n_cells),
            (None, None) => Grid1D::auto(
                &flux,
                data.support(),
                data_range(&data, &flux),
                horizon,
                n_cells,
                DEFAULT_MARGIN,
            ),
            _ => return Err(r.err("grid.x_left", "give both grid.x_left and grid.x_right, or neither")),
        }
        .map_err(|e| r.err("grid.n_cells", e.to_string()))?;

        let (far_l, far_r) = hetshock::experiments::far_states(&data, &flux);
        let default_boundary = match data {
            InitialData::Constant { .. } => "fixed",
            _ => "far_field",
        };
        let boundary = match r.str("grid.boundary").unwrap_or(default_boundary) {
            "far_field" => BoundaryMode::FarField,
            "periodic" => BoundaryMode::Periodic,
            "fixed" => BoundaryMode::Fixed {
                left: r.f64_or("grid.left", far_l)?,
                right: r.f64_or("grid.right", far_r)?,
            },
            other => return Err(r.err("grid.boundary", format!("unknown boundary `{other}`"))),
        };

        let tolerances = Tolerances {
            jump_floor: r.positive("tolerances.jump_floor")?,
            ordering_tol: r.positive("tolerances.ordering_tol")?,
            num_tol: r.positive("tolerances.num_tol")?,
        };

        let characteristics = CharSpec {
            y0: r.list("characteristics.y0")?.unwrap_or_else(|| lin(-2.0, 2.0, 10)),
            z0: r.list("characteristics.z0")?.unwrap_or_else(|| lin(-1.0, 2.0, 10)),
            t_end: r.positive("characteristics.t_end")?.unwrap_or(horizon),
            dt: r.positive("characteristics.dt")?.unwrap_or(1e-3),
        };

        let hj_levels = match r.list("hj.levels")? {
            Some(v) => v
                .iter()
                .map(|&x| {
                    if x >= 8.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(r.err("hj.levels", "levels must be integers >= 8"))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![n_cells, 2 * n_cells, 4 * n_cells],
        };
        let refine = r.parse::<bool>("stability.refine")?.unwrap_or(true);

        let validate_u_range = (
            r.f64_or("validate.u_min", flux.u_plus() - 0.5)?,
            r.f64_or("validate.u_max", flux.u_minus() + 0.5)?,
        );
        if !(validate_u_range.0 < validate_u_range.1) {
            return Err(r.err("validate.u_min", "need validate.u_min < validate.u_max"));
        }
        let validate_samples = r.parse::<usize>("validate.samples")?.unwrap_or(64);

        if let Some(k) = r.unused() {
            return Err(r.err(&k, "unknown key"));
        }
        Ok(RunConfig {
            experiment,
            label,
            flux_family,
            flux,
            data,
            grid,
            boundary,
            horizon,
            cfl,
            every,
            exec,
            tolerances,
            characteristics,
            hj_levels,
            refine,
            validate_u_range,
            validate_samples,
            canonical: raw.canonical(),
            echo: raw.to_map(),
        })
    }
}
