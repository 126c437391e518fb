//! Canonical scenarios and their pass/fail predicates, shared by the
//! command-line driver and the acceptance suite.

use crate::characteristics::{integrate_char, CharState};
use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::flux::{build_flux, FluxFamily, FluxModel, VelocityProfile};
use crate::hj::{correspondence_check, dp_value, Discrepancy, ValueField};
use crate::shock::{
    detect_emergence, emergence_bound, track_shock, EmergenceBound, EmergenceReport, ShockCurve,
    TrackOptions, TRACE_OFFSET,
};
use crate::solver::{BoundaryMode, Bump, Grid1D, History, InitialData, SolutionField, Solver, DEFAULT_CFL};
use crate::stability::{eval_q, negative_heterogeneity_growth, stability_run, NegativeGrowth, StabilityReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

/// Outcome of one acceptance predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    pub detail: String,
}

impl CriterionResult {
    pub fn new(id: &str, title: &str, pass: bool, detail: impl Into<String>) -> Self {
        CriterionResult {
            id: id.into(),
            title: title.into(),
            pass,
            metrics: BTreeMap::new(),
            detail: detail.into(),
        }
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }

    pub fn failed(id: &str, title: &str, err: impl std::fmt::Display) -> Self {
        CriterionResult::new(id, title, false, format!("error: {err}"))
    }

    /// Fails the criterion if `seconds` exceeds `budget`.
    pub fn within(mut self, seconds: f64, budget: f64) -> Self {
        self.metrics.insert("runtime_s".into(), seconds);
        if seconds >= budget {
            self.pass = false;
            self.detail = format!("{}; runtime {seconds:.1}s over budget {budget}s", self.detail);
        }
        self
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("{tag} {} ({}): {}", self.id, self.title, self.detail)
    }
}

pub const C01: &str = "c01_stationary_shock";
pub const C02: &str = "c02_constant_states";
pub const C03: &str = "c03_emergence";
pub const C04: &str = "c04_wedge";
pub const C05: &str = "c05_merge_sweep";
pub const C06: &str = "c06_gaussian_counterexample";
pub const C07: &str = "c07_q_bounds";
pub const C08: &str = "c08_l2_contraction";
pub const C09: &str = "c09_shift_bounds";
pub const C10: &str = "c10_negative_heterogeneity";
pub const C11: &str = "c11_hj_correspondence";
pub const C12: &str = "c12_flux_constancy";
pub const C13: &str = "c13_l1_contraction";

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Far-field states of the data (its limits at `∓∞`).
pub fn far_states(data: &InitialData, flux: &FluxModel) -> (f64, f64) {
    (data.value(flux, -1e300), data.value(flux, 1e300))
}

/// Runs `field` to `horizon` and returns the largest deviation from the
/// initial cell averages.
pub fn stationary_deviation(flux: &FluxModel, field: &SolutionField, horizon: f64, cfl: f64) -> Result<f64> {
    let mut state = field.clone();
    Solver::new(flux, field.grid, cfl)?.advance(&mut state, horizon)?;
    Ok(max_abs_diff(&state.values, &field.values))
}

pub const STATIONARY_SHOCK_TITLE: &str = "stationary simple shock is preserved";
pub const CONSTANT_STATES_TITLE: &str = "constant stationary states are preserved";

/// Deviation of a stationary run within `1e-12`; `id` is [`C01`] or [`C02`].
pub fn stationary_check(id: &str, deviation: f64, context: &str) -> CriterionResult {
    let title = if id == C01 { STATIONARY_SHOCK_TITLE } else { CONSTANT_STATES_TITLE };
    CriterionResult::new(
        id,
        title,
        deviation <= 1e-12,
        format!("max deviation {deviation:.3e} (tol 1e-12){context}"),
    )
    .metric("max_deviation", deviation)
}

/// LWR `V ≡ 1` keeps `Φ` exact.
pub fn stationary_shock(n_cells: usize, horizon: f64) -> CriterionResult {
    let title = STATIONARY_SHOCK_TITLE;
    let run = || -> Result<f64> {
        let flux = build_flux(FluxFamily::lwr_constant(1.0))?;
        let grid = Grid1D::new(-1.0, 1.0, n_cells)?;
        let field = SolutionField::from_data(&InitialData::riemann_phi(), &flux, grid, BoundaryMode::FarField)?;
        stationary_deviation(&flux, &field, horizon, DEFAULT_CFL)
    };
    match run() {
        Ok(err) => stationary_check(C01, err, ""),
        Err(e) => CriterionResult::failed(C01, title, e),
    }
}

/// Every built-in family that has the two stationary states.
pub fn stationary_families() -> Vec<FluxFamily> {
    vec![
        FluxFamily::lwr_constant(1.0),
        FluxFamily::LwrHeterogeneous {
            velocity: VelocityProfile::Gaussian {
                base: 1.0,
                amplitude: 0.5,
                width: 1.0,
            },
        },
        FluxFamily::LwrHeterogeneous {
            velocity: VelocityProfile::Tanh {
                base: 1.0,
                amplitude: 0.5,
                width: 1.0,
            },
        },
        FluxFamily::GaussianLwr,
        FluxFamily::convex_combination(),
        FluxFamily::negative_heterogeneity(),
        FluxFamily::burgers(),
    ]
}

/// `u ≡ u_±` stays put under every family.
pub fn constant_states(n_cells: usize, horizon: f64) -> CriterionResult {
    let title = CONSTANT_STATES_TITLE;
    let run = || -> Result<(f64, String)> {
        let grid = Grid1D::new(-3.0, 3.0, n_cells)?;
        let mut worst = (0.0, String::new());
        for family in stationary_families() {
            let flux = build_flux(family)?;
            for value in [flux.u_minus(), flux.u_plus()] {
                let data = InitialData::Constant { value, bump: None };
                let boundary = BoundaryMode::Fixed { left: value, right: value };
                let field = SolutionField::from_data(&data, &flux, grid, boundary)?;
                let err = stationary_deviation(&flux, &field, horizon, DEFAULT_CFL)?;
                if err >= worst.0 {
                    worst = (err, format!("{} at u = {value}", flux.family().tag()));
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok((err, at)) => stationary_check(C02, err, &format!(", worst {at}")),
        Err(e) => CriterionResult::failed(C02, title, e),
    }
}

/// Two shocks closer than this many cells are treated as merged.
pub const MERGE_CELLS: f64 = (2 * TRACE_OFFSET + 1) as f64;

/// Steps excluded from the wedge check while the numerical layers form.
pub const WEDGE_SKIP_STEPS: usize = 20;

/// Speeds of the outer shocks of four-state data relative to `σ` while they
/// interact with the central rarefaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    pub sigma: f64,
    pub samples_plus: usize,
    pub samples_minus: usize,
    pub max_speed_plus: f64,
    pub min_speed_minus: f64,
    /// `min(σ - ṡ_+, ṡ_- - σ)` over the checked samples.
    pub margin: f64,
}

impl Wedge {
    pub fn pass(&self) -> bool {
        self.samples_plus > 0 && self.samples_minus > 0 && self.margin > 0.0
    }
}

/// The outer shocks `s_-` (seeded at `x_minus`) and `s_+` (at `x_plus`) of
/// four-state data and the first time they meet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockPair {
    pub s_minus: ShockCurve,
    pub s_plus: ShockCurve,
    pub merge_time: Option<f64>,
}

pub fn track_pair(history: &History, flux: &FluxModel, data: &InitialData, opts: TrackOptions) -> Result<ShockPair> {
    let InitialData::Piecewise4 { x_minus, x_plus, .. } = *data else {
        return Err(invalid("data", "shock pair tracking needs piecewise4 data"));
    };
    let s_minus = track_shock(history, flux, (x_minus, 0.0), opts)?;
    let s_plus = track_shock(history, flux, (x_plus, 0.0), opts)?;
    let dx = history.first().grid.dx();
    let merge_time = s_plus
        .samples
        .iter()
        .zip(&s_minus.samples)
        .find(|(p, m)| p.s - m.s <= MERGE_CELLS * dx)
        .map(|(p, _)| p.t);
    Ok(ShockPair {
        s_minus,
        s_plus,
        merge_time,
    })
}

/// Checks `ṡ_+ < σ < ṡ_-` on samples where the respective shock is in
/// contact with the rarefaction, after `skip` samples and before merging.
pub fn wedge(pair: &ShockPair, flux: &FluxModel, skip: usize, floor: f64) -> Wedge {
    let sigma = flux.sigma();
    let end = pair.merge_time.unwrap_or(f64::INFINITY);
    let plus: Vec<f64> = pair
        .s_plus
        .samples
        .iter()
        .skip(skip)
        .filter(|p| p.t < end && p.u_l < flux.u_minus() - floor)
        .map(|p| p.speed)
        .collect();
    let minus: Vec<f64> = pair
        .s_minus
        .samples
        .iter()
        .skip(skip)
        .filter(|p| p.t < end && p.u_r > flux.u_plus() + floor)
        .map(|p| p.speed)
        .collect();
    let max_speed_plus = plus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_speed_minus = minus.iter().copied().fold(f64::INFINITY, f64::min);
    Wedge {
        sigma,
        samples_plus: plus.len(),
        samples_minus: minus.len(),
        max_speed_plus,
        min_speed_minus,
        margin: (sigma - max_speed_plus).min(min_speed_minus - sigma),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceStudy {
    pub report: EmergenceReport,
    pub bound: Option<EmergenceBound>,
    pub pair: Option<ShockPair>,
    pub wedge: Option<Wedge>,
    pub dx: f64,
}

/// Runs `data`, detects emergence within `10 dx`, and for four-state data
/// tracks the outer shocks and their wedge.
pub fn emergence_study(
    flux: &FluxModel,
    data: &InitialData,
    grid: Grid1D,
    horizon: f64,
    cfl: f64,
    every: usize,
) -> Result<EmergenceStudy> {
    emergence_study_with(flux, data, grid, horizon, cfl, every, TrackOptions::for_flux(flux))
}

pub fn emergence_study_with(
    flux: &FluxModel,
    data: &InitialData,
    grid: Grid1D,
    horizon: f64,
    cfl: f64,
    every: usize,
    opts: TrackOptions,
) -> Result<EmergenceStudy> {
    let field = SolutionField::from_data(data, flux, grid, BoundaryMode::FarField)?;
    let history = Solver::new(flux, grid, cfl)?.run(field, horizon, every)?;
    let bound = emergence_bound(flux, data).ok();
    let report = detect_emergence(&history, flux, 10.0 * grid.dx(), bound.map(|b| b.t_partial))?;
    let pair = match data {
        InitialData::Piecewise4 { .. } => Some(track_pair(&history, flux, data, opts)?),
        _ => None,
    };
    let skip = WEDGE_SKIP_STEPS / every.max(1) + 1;
    let wedge = pair.as_ref().map(|p| wedge(p, flux, skip, opts.jump_floor));
    Ok(EmergenceStudy {
        report,
        bound,
        pair,
        wedge,
        dx: grid.dx(),
    })
}

/// Data, grid and horizon of the canonical emergence run.
pub fn emergence_scenario(n_cells: usize) -> Result<(FluxModel, InitialData, Grid1D, f64)> {
    let flux = build_flux(FluxFamily::convex_combination())?;
    let data = InitialData::piecewise4_special(&flux, -1.0, 0.0, 1.0);
    let grid = Grid1D::new(-3.0, 9.0, n_cells)?;
    Ok((flux, data, grid, 12.0))
}

pub fn emergence_check(study: &EmergenceStudy) -> CriterionResult {
    let title = "simple shock emerges in finite time";
    let r = &study.report;
    let scale = if r.sigma_rh != 0.0 { r.sigma_rh.abs() } else { 1.0 };
    let speed_err = (r.sigma_measured - r.sigma_rh).abs() / scale;
    let pass = r.emerged && r.post_emergence_error <= r.tolerance && speed_err <= 0.05;
    CriterionResult::new(
        C03,
        title,
        pass,
        format!(
            "emerged={} T={:.4} X={:.4} post-error {:.3e} (tol {:.3e}) sigma {:.5} vs {:.5} ({:.2}%)",
            r.emerged,
            r.t_detected,
            r.x_detected,
            r.post_emergence_error,
            r.tolerance,
            r.sigma_measured,
            r.sigma_rh,
            100.0 * speed_err
        ),
    )
    .metric("t_detected", r.t_detected)
    .metric("post_emergence_error", r.post_emergence_error)
    .metric("sigma_measured", r.sigma_measured)
    .metric("sigma_rel_error", speed_err)
}

pub fn wedge_check(study: &EmergenceStudy) -> CriterionResult {
    let title = "outer shocks bracket the simple-shock speed";
    let Some(w) = study.wedge else {
        return CriterionResult::new(C04, title, false, "no shock pair tracked");
    };
    let merge = study.pair.as_ref().and_then(|p| p.merge_time).unwrap_or(f64::NAN);
    CriterionResult::new(
        C04,
        title,
        w.pass(),
        format!(
            "max ds+/dt {:.5} < sigma {:.5} < min ds-/dt {:.5}, margin {:.3e} over {}+{} samples, merge at t={merge:.4}",
            w.max_speed_plus, w.sigma, w.min_speed_minus, w.margin, w.samples_plus, w.samples_minus
        ),
    )
    .metric("margin", w.margin)
    .metric("merge_time", merge)
}

/// Criteria 3 and 4 from one run.
pub fn emergence_criteria(n_cells: usize) -> (CriterionResult, CriterionResult) {
    let run = || -> Result<EmergenceStudy> {
        let (flux, data, grid, horizon) = emergence_scenario(n_cells)?;
        emergence_study(&flux, &data, grid, horizon, DEFAULT_CFL, 20)
    };
    match run() {
        Ok(s) => (emergence_check(&s), wedge_check(&s)),
        Err(e) => (
            CriterionResult::failed(C03, "simple shock emerges in finite time", &e),
            CriterionResult::failed(C04, "outer shocks bracket the simple-shock speed", &e),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub width: f64,
    pub merge_time: Option<f64>,
    pub t_partial: f64,
}

/// Merge time of the outer shocks for LWR `V = (α/2)(1 + e^{-x²}/2)` and
/// special four-state data of total width `width` centred at 0.
pub fn merge_point(alpha: f64, width: f64, dx: f64) -> Result<SweepPoint> {
    let v0 = 0.5 * alpha;
    let flux = build_flux(FluxFamily::LwrHeterogeneous {
        velocity: VelocityProfile::Gaussian {
            base: v0,
            amplitude: 0.5 * v0,
            width: 1.0,
        },
    })?;
    let h = 0.5 * width;
    let data = InitialData::piecewise4_special(&flux, -h, 0.0, h);
    let n = ((width + 2.0) / dx).round() as usize;
    let grid = Grid1D::new(-h - 1.0, h + 1.0, n)?;
    let field = SolutionField::from_data(&data, &flux, grid, BoundaryMode::FarField)?;
    // merging takes 2 width / V for constant V
    let horizon = 3.0 * width / v0;
    let history = Solver::new(&flux, grid, DEFAULT_CFL)?.run(field, horizon, 20)?;
    let pair = track_pair(&history, &flux, &data, TrackOptions::for_flux(&flux))?;
    Ok(SweepPoint {
        alpha,
        width,
        merge_time: pair.merge_time,
        t_partial: emergence_bound(&flux, &data)?.t_partial,
    })
}

pub fn merge_sweep(alphas: &[f64], widths: &[f64], dx: f64) -> (Vec<Result<SweepPoint>>, CriterionResult) {
    let title = "outer shocks merge on every sweep point";
    let cases: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| widths.iter().map(move |&w| (a, w))).collect();
    let points = Exec::Parallel.map(&cases, |&(a, w)| merge_point(a, w, dx));
    let mut finite = 0;
    let mut worst_ratio = 0.0f64;
    let mut detail = Vec::new();
    for p in &points {
        match p {
            Ok(p) => {
                if let Some(t) = p.merge_time {
                    finite += 1;
                    worst_ratio = worst_ratio.max(t / p.t_partial);
                    detail.push(format!("a={} w={}: T={t:.3} (partial {:.3})", p.alpha, p.width, p.t_partial));
                } else {
                    detail.push(format!("a={} w={}: no merge", p.alpha, p.width));
                }
            }
            Err(e) => detail.push(format!("error: {e}")),
        }
    }
    let result = CriterionResult::new(
        C05,
        title,
        finite == cases.len(),
        format!("{finite}/{} finite; {}", cases.len(), detail.join(", ")),
    )
    .metric("finite", finite as f64)
    .metric("max_ratio_to_partial_bound", worst_ratio);
    (points, result)
}

/// Largest `u(x - (k+½)dx) - u(x + (k+½)dx)` over interfaces, with
/// `k = TRACE_OFFSET`, and where it occurs.
pub fn max_trace_jump(field: &SolutionField) -> (f64, f64) {
    let u = &field.values;
    let k = TRACE_OFFSET;
    let mut best = (0.0, f64::NAN);
    for i in k + 1..u.len().saturating_sub(k) {
        let jump = u[i - 1 - k] - u[i + k];
        if jump > best.0 {
            best = (jump, field.grid.interface(i));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCounterexample {
    pub max_jump: f64,
    pub jump_at: f64,
    /// First stored time with a trace jump above 0.1.
    pub first_jump_time: Option<f64>,
    pub z_dot_measured: f64,
    pub z_dot_exact: f64,
}

pub fn gaussian_counterexample(n_cells: usize, horizon: f64) -> Result<GaussianCounterexample> {
    let flux = build_flux(FluxFamily::GaussianLwr)?;
    let grid = Grid1D::new(-6.0, 6.0, n_cells)?;
    let data = InitialData::Constant { value: 0.5, bump: None };
    let field = SolutionField::from_data(&data, &flux, grid, BoundaryMode::Fixed { left: 0.5, right: 0.5 })?;
    let history = Solver::new(&flux, grid, DEFAULT_CFL)?.run(field, horizon, 10)?;
    let mut out = GaussianCounterexample {
        max_jump: 0.0,
        jump_at: f64::NAN,
        first_jump_time: None,
        z_dot_measured: 0.0,
        z_dot_exact: -0.5 * (-1.0f64).exp(),
    };
    for s in &history.snapshots {
        let (j, x) = max_trace_jump(s);
        if j > out.max_jump {
            out.max_jump = j;
            out.jump_at = x;
        }
        if j > 0.1 && out.first_jump_time.is_none() {
            out.first_jump_time = Some(s.time);
        }
    }
    let tr = integrate_char(&flux, CharState::new(1.0, 0.5, 0.0), 0.01, 1e-3)?;
    out.z_dot_measured = tr.start().z_dot;
    Ok(out)
}

pub fn gaussian_check(r: &GaussianCounterexample) -> CriterionResult {
    let dz = (r.z_dot_measured - r.z_dot_exact).abs();
    CriterionResult::new(
        C06,
        "constant data under the gaussian flux develops a shock",
        r.max_jump > 0.1 && dz <= 1e-10,
        format!(
            "max trace jump {:.4} at x={:.4} (first > 0.1 at t={}), z'(0) error {dz:.2e}",
            r.max_jump,
            r.jump_at,
            r.first_jump_time.map_or("never".into(), |t| format!("{t:.3}"))
        ),
    )
    .metric("max_jump", r.max_jump)
    .metric("z_dot_error", dz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QBounds {
    pub flux: String,
    pub alpha: f64,
    /// `min ∂q/∂u - 2α/3`.
    pub margin_u: f64,
    /// `min ∂q/∂c - α/3`.
    pub margin_c: f64,
}

/// Central-difference derivatives of `q` on a `samples³` box in `(x, u, c)`.
pub fn q_bounds(flux: &FluxModel, samples: usize, x_range: (f64, f64)) -> QBounds {
    let lin = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (samples - 1).max(1) as f64;
    let (lo, hi) = (flux.u_plus() - 1.0, flux.u_minus() + 1.0);
    let alpha = flux.alpha();
    let h = 1e-4;
    let pts: Vec<(f64, f64, f64)> = (0..samples)
        .flat_map(|i| (0..samples).flat_map(move |j| (0..samples).map(move |k| (i, j, k))))
        .map(|(i, j, k)| (lin(x_range.0, x_range.1, i), lin(lo, hi, j), lin(lo, hi, k)))
        .collect();
    let d = Exec::Parallel.map(&pts, |&(x, u, c)| {
        let qu = (eval_q(flux, x, u + h, c) - eval_q(flux, x, u - h, c)) / (2.0 * h);
        let qc = (eval_q(flux, x, u, c + h) - eval_q(flux, x, u, c - h)) / (2.0 * h);
        (qu, qc)
    });
    let margin_u = d.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - 2.0 * alpha / 3.0;
    let margin_c = d.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) - alpha / 3.0;
    QBounds {
        flux: flux.family().tag().into(),
        alpha,
        margin_u,
        margin_c,
    }
}

pub fn q_bounds_criterion(samples: usize) -> CriterionResult {
    let title = "q grows at the uniform-convexity rates";
    let families = [
        FluxFamily::convex_combination(),
        FluxFamily::HomogeneousQuadratic {
            alpha: 2.0,
            u_minus: 1.0,
            u_plus: -1.0,
        },
    ];
    let mut results = Vec::new();
    for f in families {
        match build_flux(f) {
            Ok(flux) => results.push(q_bounds(&flux, samples, (-2.0, 2.0))),
            Err(e) => return CriterionResult::failed(C07, title, e),
        }
    }
    let min_u = results.iter().map(|r| r.margin_u).fold(f64::INFINITY, f64::min);
    let min_c = results.iter().map(|r| r.margin_c).fold(f64::INFINITY, f64::min);
    let detail = results
        .iter()
        .map(|r| format!("{}: margins u {:.3e}, c {:.3e}", r.flux, r.margin_u, r.margin_c))
        .collect::<Vec<_>>()
        .join("; ");
    CriterionResult::new(C07, title, min_u >= -1e-6 && min_c >= -1e-6, detail)
        .metric("margin_u", min_u)
        .metric("margin_c", min_c)
}

/// The canonical perturbation of `Φ` in the stability runs.
pub fn stability_bump(amplitude: f64) -> Bump {
    Bump {
        center: -0.6,
        half_width: 0.5,
        amplitude,
    }
}

pub const STABILITY_AMPLITUDES: [f64; 3] = [0.25, 0.5, 0.75];

/// A stability run and, optionally, its 2× refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityPair {
    pub amplitude: f64,
    pub coarse: StabilityReport,
    pub fine: Option<StabilityReport>,
}

impl StabilityPair {
    fn reports(&self) -> impl Iterator<Item = &StabilityReport> {
        std::iter::once(&self.coarse).chain(self.fine.as_ref())
    }
}

pub fn stability_pair(flux: &FluxModel, bump: Bump, n_cells: usize, horizon: f64) -> Result<StabilityPair> {
    let data = InitialData::PerturbedPhi { jump_at: 0.0, bump };
    let coarse = stability_run(flux, &data, Grid1D::new(-3.0, 5.0, n_cells)?, horizon, DEFAULT_CFL, 20)?;
    let fine = stability_run(flux, &data, Grid1D::new(-3.0, 5.0, 2 * n_cells)?, horizon, DEFAULT_CFL, 40)?;
    Ok(StabilityPair {
        amplitude: bump.amplitude,
        coarse,
        fine: Some(fine),
    })
}

/// Every run within its tolerance and, where refined, the excess not
/// growing under refinement.
pub fn contraction_check(pairs: &[StabilityPair]) -> CriterionResult {
    let pass = pairs.iter().all(|p| {
        p.reports().all(|r| r.contraction_pass) && p.fine.as_ref().is_none_or(|f| f.excess <= p.coarse.excess)
    });
    let detail = pairs
        .iter()
        .map(|p| {
            let fine = p.fine.as_ref().map_or(String::new(), |f| format!(" -> {:.2e}", f.excess));
            format!(
                "A={}: excess {:.2e}{fine} (tol {:.2e})",
                p.amplitude, p.coarse.excess, p.coarse.num_tol
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    let margin = pairs
        .iter()
        .flat_map(|p| p.reports())
        .map(|r| r.num_tol - r.excess)
        .fold(f64::INFINITY, f64::min);
    CriterionResult::new(C08, "relative L2 norm does not grow", pass, detail).metric("contraction_margin", margin)
}

pub fn shift_check(pairs: &[StabilityPair]) -> CriterionResult {
    let pass = pairs
        .iter()
        .all(|p| p.reports().all(|r| r.ordering_pass && r.sqrt_envelope_pass));
    let detail = pairs
        .iter()
        .map(|p| {
            let r = &p.coarse;
            let xi = r.samples.iter().map(|s| s.xi_bar.abs()).fold(0.0, f64::max);
            format!(
                "A={}: gap {:.2e} (tol {:.2e}), max|xi_bar| {:.3}, K {:.3}",
                p.amplitude, r.max_ordering_gap, r.ordering_tol, xi, r.bound.k
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    CriterionResult::new(C09, "shift curves are ordered and within K sqrt(t)", pass, detail)
}

/// Criteria 8 and 9 over the three canonical amplitudes.
pub fn stability_criteria(n_cells: usize) -> (Vec<StabilityPair>, CriterionResult, CriterionResult) {
    let run = || -> Result<Vec<StabilityPair>> {
        let flux = build_flux(FluxFamily::convex_combination())?;
        STABILITY_AMPLITUDES
            .iter()
            .map(|&a| stability_pair(&flux, stability_bump(a), n_cells, 4.0))
            .collect()
    };
    match run() {
        Ok(pairs) => {
            let (c8, c9) = (contraction_check(&pairs), shift_check(&pairs));
            (pairs, c8, c9)
        }
        Err(e) => (
            Vec::new(),
            CriterionResult::failed(C08, "relative L2 norm does not grow", &e),
            CriterionResult::failed(C09, "shift curves are ordered and within K sqrt(t)", &e),
        ),
    }
}

/// The bump added to `u_minus` in the negative-heterogeneity run; it sits on
/// the transition of `φ`.
pub fn negative_bump() -> Bump {
    Bump {
        center: 0.0,
        half_width: 0.5,
        amplitude: 0.5,
    }
}

pub fn negative_check(r: &NegativeGrowth) -> CriterionResult {
    CriterionResult::new(
        C10,
        "negative heterogeneity lets the L2 distance grow",
        r.pass,
        format!(
            "increase {:.3e} (threshold {:.3e}), increasing until t={:.4}, control drift {:.3e}",
            r.negative.increase, r.threshold, r.negative.increasing_until, r.control_drift
        ),
    )
    .metric("increase", r.negative.increase)
    .metric("threshold", r.threshold)
    .metric("control_drift", r.control_drift)
}

pub fn negative_criterion(n_cells: usize, horizon: f64) -> CriterionResult {
    let run = || -> Result<NegativeGrowth> {
        let flux = build_flux(FluxFamily::negative_heterogeneity())?;
        let grid = Grid1D::new(-2.0, 2.0, n_cells)?;
        negative_heterogeneity_growth(&flux, Some(negative_bump()), grid, horizon, DEFAULT_CFL)
    };
    match run() {
        Ok(r) => negative_check(&r),
        Err(e) => CriterionResult::failed(C10, "negative heterogeneity lets the L2 distance grow", e),
    }
}

/// Runs the solver and the value function side by side on `n` cells and
/// compares them at `t`.
pub fn hj_level(
    flux: &FluxModel,
    data: &InitialData,
    domain: (f64, f64),
    t: f64,
    n: usize,
) -> Result<(Discrepancy, ValueField)> {
    let grid = Grid1D::new(domain.0, domain.1, n)?;
    let field = SolutionField::from_data(data, flux, grid, BoundaryMode::FarField)?;
    let v0 = ValueField::from_field(&field, far_states(data, flux));
    let mut u = field;
    Solver::new(flux, grid, DEFAULT_CFL)?.advance(&mut u, t)?;
    let v = dp_value(flux, &v0, t, None, Exec::Parallel)?;
    Ok((correspondence_check(&v, &u)?, v))
}

pub fn hj_refinement(
    flux: &FluxModel,
    data: &InitialData,
    domain: (f64, f64),
    t: f64,
    levels: &[usize],
) -> Result<Vec<Discrepancy>> {
    levels
        .iter()
        .map(|&n| Ok(hj_level(flux, data, domain, t, n)?.0))
        .collect()
}

/// Discrepancies above this are considered resolved enough to measure a rate.
pub const HJ_EXACT: f64 = 1e-10;

/// `l1 ≤ dx` on every level and, unless the pair is exact, the discrepancy
/// shrinks at least by `1/0.6` per halving of `dx`.
pub fn first_order(levels: &[Discrepancy]) -> (bool, f64) {
    let bounded = levels.iter().all(|d| d.l1 <= d.dx);
    let mut min_ratio = f64::INFINITY;
    let mut decays = true;
    for w in levels.windows(2) {
        if w[0].l1 <= HJ_EXACT {
            continue;
        }
        let r = w[0].l1 / w[1].l1;
        min_ratio = min_ratio.min(r);
        decays &= w[1].l1 <= 0.6 * w[0].l1;
    }
    (bounded && decays, min_ratio)
}

/// Applies [`first_order`] to every named refinement study.
pub fn hj_check(cases: &[(&str, &[Discrepancy])]) -> CriterionResult {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut out_metrics = Vec::new();
    for (name, levels) in cases {
        let (ok, ratio) = first_order(levels);
        pass &= ok;
        let c = levels.iter().map(|d| d.l1 / d.dx).fold(0.0, f64::max);
        let l1 = levels.iter().map(|d| format!("{:.2e}", d.l1)).collect::<Vec<_>>().join(", ");
        parts.push(format!("{name} L1 [{l1}], max L1/dx {c:.3}, min ratio {ratio:.3}"));
        out_metrics.push((format!("{name}_c"), c));
        out_metrics.push((format!("{name}_min_ratio"), ratio));
        if let Some(last) = levels.last() {
            out_metrics.push((format!("{name}_finest_l1"), last.l1));
        }
    }
    let mut r = CriterionResult::new(C11, "value-function slopes match the solver", pass, parts.join("; "));
    for (k, v) in out_metrics {
        r = r.metric(&k, v);
    }
    r
}

pub fn hj_criterion(levels: &[usize]) -> CriterionResult {
    let run = || -> Result<(Vec<Discrepancy>, Vec<Discrepancy>)> {
        let lwr = build_flux(FluxFamily::lwr_constant(1.0))?;
        let stationary = hj_refinement(&lwr, &InitialData::riemann_phi(), (-2.0, 2.0), 0.4, levels)?;
        let gaussian = build_flux(FluxFamily::GaussianLwr)?;
        let data = InitialData::PerturbedPhi {
            jump_at: 0.0,
            bump: Bump {
                center: -1.5,
                half_width: 0.5,
                amplitude: 0.3,
            },
        };
        let perturbed = hj_refinement(&gaussian, &data, (-3.0, 1.0), 0.4, levels)?;
        Ok((stationary, perturbed))
    };
    match run() {
        Ok((s, p)) => hj_check(&[("stationary", &s), ("perturbed", &p)]),
        Err(e) => CriterionResult::failed(C11, "value-function slopes match the solver", e),
    }
}

/// Largest drift of `f` along characteristics started on a
/// `count × count` lattice of `(y0, z0) ∈ [-2, 2] × [-1, 2]`.
pub fn flux_constancy(flux: &FluxModel, count: usize, t_end: f64, dt: f64) -> Result<f64> {
    let lin = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (count - 1).max(1) as f64;
    let starts: Vec<CharState> = (0..count)
        .flat_map(|i| (0..count).map(move |j| (i, j)))
        .map(|(i, j)| CharState::new(lin(-2.0, 2.0, i), lin(-1.0, 2.0, j), 0.0))
        .collect();
    let res: Vec<Result<f64>> = Exec::Parallel.map(&starts, |&s| Ok(integrate_char(flux, s, t_end, dt)?.max_f_residual));
    res.into_iter().try_fold(0.0, |m, r| Ok(f64::max(m, r?)))
}

pub fn flux_constancy_check(max_residual: f64, curves: usize) -> CriterionResult {
    CriterionResult::new(
        C12,
        "f is constant along characteristics",
        max_residual <= 1e-8,
        format!("max |f - f0| {max_residual:.3e} over {curves} curves (tol 1e-8)"),
    )
    .metric("max_residual", max_residual)
}

pub fn flux_constancy_criterion() -> CriterionResult {
    let run = || -> Result<f64> {
        let flux = build_flux(FluxFamily::convex_combination())?;
        flux_constancy(&flux, 10, 2.0, 1e-3)
    };
    match run() {
        Ok(m) => flux_constancy_check(m, 100),
        Err(e) => CriterionResult::failed(C12, "f is constant along characteristics", e),
    }
}

/// Largest per-step increase of the L1 distance between two solutions
/// advanced with a common time step.
pub fn l1_contraction(flux: &FluxModel, a: &InitialData, b: &InitialData, grid: Grid1D, horizon: f64) -> Result<(f64, f64, f64)> {
    let mut u = SolutionField::from_data(a, flux, grid, BoundaryMode::FarField)?;
    let mut w = SolutionField::from_data(b, flux, grid, BoundaryMode::FarField)?;
    let mut solver = Solver::new(flux, grid, DEFAULT_CFL)?;
    let d0 = u.l1_distance(&w)?;
    let mut prev = d0;
    let mut worst = f64::NEG_INFINITY;
    while u.time < horizon {
        let dt = solver.stable_dt(&u)?.min(solver.stable_dt(&w)?).min(horizon - u.time);
        solver.step(&mut u, dt)?;
        solver.step(&mut w, dt)?;
        let d = u.l1_distance(&w)?;
        worst = worst.max(d - prev);
        prev = d;
    }
    Ok((worst, d0, prev))
}

pub fn l1_contraction_criterion(n_cells: usize, horizon: f64) -> CriterionResult {
    let title = "discrete L1 distance is non-increasing";
    let run = || -> Result<(f64, f64, f64)> {
        let flux = build_flux(FluxFamily::convex_combination())?;
        let a = InitialData::PerturbedPhi {
            jump_at: 0.0,
            bump: Bump {
                center: -0.5,
                half_width: 0.4,
                amplitude: 0.3,
            },
        };
        let b = InitialData::PerturbedPhi {
            jump_at: 0.2,
            bump: Bump {
                center: 0.8,
                half_width: 0.3,
                amplitude: -0.25,
            },
        };
        l1_contraction(&flux, &a, &b, Grid1D::new(-3.0, 5.0, n_cells)?, horizon)
    };
    match run() {
        Ok((worst, d0, d1)) => CriterionResult::new(
            C13,
            title,
            worst <= 1e-10,
            format!("largest step increase {worst:.3e} (tol 1e-10), distance {d0:.4} -> {d1:.4}"),
        )
        .metric("max_increase", worst),
        Err(e) => CriterionResult::failed(C13, title, e),
    }
}

/// Runs `f` and returns its result with the elapsed wall-clock seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_states_of_data() {
        let f = build_flux(FluxFamily::burgers()).unwrap();
        assert_eq!(far_states(&InitialData::riemann_phi(), &f), (1.0, 0.0));
        let c = InitialData::Constant {
            value: 0.3,
            bump: Some(stability_bump(0.5)),
        };
        assert_eq!(far_states(&c, &f), (0.3, 0.3));
    }

    #[test]
    fn trace_jump_of_a_step() {
        let g = Grid1D::new(0.0, 1.0, 20).unwrap();
        let mut v = vec![1.0; 10];
        v.extend([0.0; 10]);
        let f = SolutionField::new(g, v, BoundaryMode::FarField).unwrap();
        let (j, x) = max_trace_jump(&f);
        assert_eq!(j, 1.0);
        assert!((0.3..=0.7).contains(&x));
    }

    #[test]
    fn first_order_rates() {
        let d = |n: usize, l1: f64| Discrepancy {
            n_cells: n,
            dx: 1.0 / n as f64,
            l1,
            max: 0.0,
            argmax: 0,
        };
        assert!(first_order(&[d(10, 0.04), d(20, 0.02), d(40, 0.01)]).0);
        assert!(!first_order(&[d(10, 0.04), d(20, 0.03)]).0);
        assert!(first_order(&[d(10, 0.0), d(20, 1e-14)]).0);
    }

    #[test]
    fn criterion_lines_and_budgets() {
        let r = CriterionResult::new(C01, "t", true, "ok").within(2.0, 1.0);
        assert!(!r.pass);
        assert!(r.line().starts_with("FAIL c01_stationary_shock"));
    }

    #[test]
    fn small_stationary_runs_pass() {
        assert!(stationary_shock(100, 0.5).pass);
        assert!(constant_states(60, 0.2).pass);
    }
}
