//! Well-balanced Godunov finite-volume scheme for `u_t + f(x, u)_x = 0`.
//!
//! The flux is frozen at each interface `x_{i+1/2}` inside the exact Riemann
//! solve, so any state with `f_x(·, u) ≡ 0` is an exact discrete solution.

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::flux::FluxModel;
use crate::quadrature::UnitRule;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::OnceLock;

pub const DEFAULT_CFL: f64 = 0.45;
pub const DEFAULT_MARGIN: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if n_cells < 8 {
            return Err(invalid("n_cells", format!("need at least 8 cells, got {n_cells}")));
        }
        if !(x_right > x_left) || !x_left.is_finite() || !x_right.is_finite() {
            return Err(invalid("domain", format!("empty domain [{x_left}, {x_right}]")));
        }
        Ok(Grid1D {
            x_left,
            x_right,
            n_cells,
        })
    }

    /// Domain `[lo - ext, hi + ext]` with `ext = margin · speed · horizon`, where
    /// `speed` bounds every characteristic speed over `state_range` and `u_±`.
    pub fn auto(
        flux: &FluxModel,
        support: (f64, f64),
        state_range: (f64, f64),
        horizon: f64,
        n_cells: usize,
        margin: f64,
    ) -> Result<Self> {
        let lo = state_range.0.min(flux.u_plus());
        let hi = state_range.1.max(flux.u_minus());
        let ext = margin * flux.speed_bound(lo, hi) * horizon;
        let ext = ext.max(0.5 * (support.1 - support.0)).max(1.0);
        Grid1D::new(support.0 - ext, support.1 + ext, n_cells)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_right - self.x_left) / self.n_cells as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_left + (i as f64 + 0.5) * self.dx()
    }

    /// Position of interface `k`, `0 ≤ k ≤ n_cells`.
    #[inline]
    pub fn interface(&self, k: usize) -> f64 {
        self.x_left + k as f64 * self.dx()
    }

    /// Index of the cell containing `x`, clamped to the grid.
    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        let k = ((x - self.x_left) / self.dx()).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n_cells - 1)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_left && x <= self.x_right
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Ghost cells clamped to `u_minus` on the left and `u_plus` on the right.
    #[default]
    FarField,
    Periodic,
    /// Ghost cells clamped to the given states.
    Fixed { left: f64, right: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    pub grid: Grid1D,
    pub time: f64,
    pub values: Vec<f64>,
    pub boundary: BoundaryMode,
    /// Accumulated `∫ (F_left - F_right) dt` through the domain ends.
    pub boundary_inflow: f64,
}

impl SolutionField {
    pub fn new(grid: Grid1D, values: Vec<f64>, boundary: BoundaryMode) -> Result<Self> {
        if values.len() != grid.n_cells {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells
            )));
        }
        Ok(SolutionField {
            grid,
            time: 0.0,
            values,
            boundary,
            boundary_inflow: 0.0,
        })
    }

    pub fn from_data(
        data: &InitialData,
        flux: &FluxModel,
        grid: Grid1D,
        boundary: BoundaryMode,
    ) -> Result<Self> {
        let values = data.cell_averages(flux, &grid)?;
        SolutionField::new(grid, values, boundary)
    }

    /// `Σ u_i dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value of the cell containing `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        self.values[self.grid.cell_of(x)]
    }

    /// Piecewise-constant traces: the cells containing `x ∓ dx/2`.
    pub fn traces_at(&self, x: f64) -> Result<(f64, f64)> {
        self.offset_traces(x, 0)
    }

    /// Traces read `cells` cells further out than [`traces_at`](Self::traces_at).
    pub fn offset_traces(&self, x: f64, cells: usize) -> Result<(f64, f64)> {
        let g = &self.grid;
        if !g.contains(x) {
            return Err(Error::OutOfDomain {
                x,
                lo: g.x_left,
                hi: g.x_right,
            });
        }
        let h = (cells as f64 + 0.5) * g.dx();
        Ok((self.value_at(x - h), self.value_at(x + h)))
    }

    /// Grid L1 distance to another field on the same grid.
    pub fn l1_distance(&self, other: &SolutionField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.dx())
    }

    /// Cell centres and averages as `x,u` CSV.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x,u")?;
        for (i, u) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.grid.center(i), u)?;
        }
        Ok(())
    }

    pub fn meta(&self) -> SnapshotMeta {
        SnapshotMeta {
            time: self.time,
            mass: self.mass(),
            min: self.min(),
            max: self.max(),
            dx: self.grid.dx(),
            boundary_inflow: self.boundary_inflow,
        }
    }

    fn ghosts(&self, flux: &FluxModel) -> (f64, f64) {
        match self.boundary {
            BoundaryMode::FarField => (flux.u_minus(), flux.u_plus()),
            BoundaryMode::Periodic => (self.values[self.values.len() - 1], self.values[0]),
            BoundaryMode::Fixed { left, right } => (left, right),
        }
    }
}

/// JSON sidecar of a snapshot CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub time: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    pub dx: f64,
    pub boundary_inflow: f64,
}

/// Smooth compactly supported bump `amplitude · (1 - r²)³`, `r = (x - center)/half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Bump {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.half_width;
        if r.abs() >= 1.0 {
            0.0
        } else {
            let s = 1.0 - r * r;
            self.amplitude * s * s * s
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// Exact `∫ bump² dx`.
    pub fn l2_squared(&self) -> f64 {
        // ∫_{-1}^{1} (1 - r²)⁶ dr = 2048/3003
        self.amplitude * self.amplitude * self.half_width * 2048.0 / 3003.0
    }

    fn check(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.amplitude.is_finite() || !self.center.is_finite() {
            return Err(invalid("bump", "half_width must be positive, values finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `Φ`: `u_minus` left of `jump_at`, `u_plus` right of it.
    RiemannPhi { jump_at: f64 },
    /// `u_minus | u_m | u_big | u_plus` with breaks at `x_minus ≤ x0 ≤ x_plus`.
    Piecewise4 {
        x_minus: f64,
        x0: f64,
        x_plus: f64,
        u_m: f64,
        u_big: f64,
    },
    /// `Φ` plus a bump.
    PerturbedPhi { jump_at: f64, bump: Bump },
    /// Constant state, optionally with a bump on top.
    Constant { value: f64, bump: Option<Bump> },
    /// Piecewise-linear interpolation of samples, constant beyond the ends.
    CustomSamples { x: Vec<f64>, u: Vec<f64> },
}

fn gauss8() -> &'static UnitRule {
    static RULE: OnceLock<UnitRule> = OnceLock::new();
    RULE.get_or_init(|| UnitRule::new(8))
}

impl InitialData {
    pub fn riemann_phi() -> Self {
        InitialData::RiemannPhi { jump_at: 0.0 }
    }

    /// The special case `u_m = u_plus`, `u_big = u_minus`.
    pub fn piecewise4_special(flux: &FluxModel, x_minus: f64, x0: f64, x_plus: f64) -> Self {
        InitialData::Piecewise4 {
            x_minus,
            x0,
            x_plus,
            u_m: flux.u_plus(),
            u_big: flux.u_minus(),
        }
    }

    pub fn validate(&self, flux: &FluxModel) -> Result<()> {
        match self {
            InitialData::Piecewise4 {
                x_minus,
                x0,
                x_plus,
                u_m,
                u_big,
            } => {
                let (um, up) = (flux.u_minus(), flux.u_plus());
                if !(*u_m <= up && up < um && um <= *u_big) {
                    return Err(invalid(
                        "piecewise4",
                        format!("need u_m <= u_plus < u_minus <= u_big, got u_m = {u_m}, u_big = {u_big}"),
                    ));
                }
                if !(x_minus <= x0 && x0 <= x_plus) {
                    return Err(invalid("piecewise4", "need x_minus <= x0 <= x_plus"));
                }
            }
            InitialData::PerturbedPhi { bump, .. } => bump.check()?,
            InitialData::Constant { bump: Some(b), .. } => b.check()?,
            InitialData::CustomSamples { x, u } => {
                if x.is_empty() || x.len() != u.len() {
                    return Err(invalid("custom_samples", "x and u must be non-empty and equally long"));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("custom_samples", "x must be strictly increasing"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Point value of the data.
    pub fn value(&self, flux: &FluxModel, x: f64) -> f64 {
        let (um, up) = (flux.u_minus(), flux.u_plus());
        let phi = |at: f64| if x < at { um } else { up };
        match self {
            InitialData::RiemannPhi { jump_at } => phi(*jump_at),
            InitialData::Piecewise4 {
                x_minus,
                x0,
                x_plus,
                u_m,
                u_big,
            } => {
                if x < *x_minus {
                    um
                } else if x < *x0 {
                    *u_m
                } else if x < *x_plus {
                    *u_big
                } else {
                    up
                }
            }
            InitialData::PerturbedPhi { jump_at, bump } => phi(*jump_at) + bump.value(x),
            InitialData::Constant { value, bump } => value + bump.map_or(0.0, |b| b.value(x)),
            InitialData::CustomSamples { x: xs, u } => {
                let k = xs.partition_point(|&p| p <= x);
                if k == 0 {
                    u[0]
                } else if k == xs.len() {
                    u[u.len() - 1]
                } else {
                    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    u[k - 1] + w * (u[k] - u[k - 1])
                }
            }
        }
    }

    /// Points where the data loses smoothness.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            InitialData::RiemannPhi { jump_at } => vec![*jump_at],
            InitialData::Piecewise4 {
                x_minus, x0, x_plus, ..
            } => vec![*x_minus, *x0, *x_plus],
            InitialData::PerturbedPhi { jump_at, bump } => {
                let (a, b) = bump.support();
                vec![*jump_at, a, b]
            }
            InitialData::Constant { bump, .. } => bump.map_or(vec![], |b| {
                let (a, b) = b.support();
                vec![a, b]
            }),
            InitialData::CustomSamples { x, .. } => x.clone(),
        }
    }

    /// Smallest interval outside which the data equals a far-field constant.
    pub fn support(&self) -> (f64, f64) {
        let b = self.breakpoints();
        if b.is_empty() {
            return (0.0, 0.0);
        }
        let lo = b.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Exact cell averages (the data is piecewise polynomial of degree ≤ 6).
    pub fn cell_averages(&self, flux: &FluxModel, grid: &Grid1D) -> Result<Vec<f64>> {
        self.validate(flux)?;
        let mut breaks = self.breakpoints();
        breaks.sort_by(f64::total_cmp);
        let dx = grid.dx();
        Ok((0..grid.n_cells)
            .map(|i| {
                let (a, b) = (grid.interface(i), grid.interface(i + 1));
                let start = breaks.partition_point(|&p| p <= a);
                let mut lo = a;
                let mut total = 0.0;
                for &p in breaks[start..].iter().take_while(|&&p| p < b) {
                    total += (p - lo) / dx * self.piece_mean(flux, lo, p);
                    lo = p;
                }
                if lo == a {
                    return self.piece_mean(flux, a, b);
                }
                total + (b - lo) / dx * self.piece_mean(flux, lo, b)
            })
            .collect())
    }

    // Mean over a smooth piece; constant pieces are reproduced bit-exactly.
    fn piece_mean(&self, flux: &FluxModel, a: f64, b: f64) -> f64 {
        let rule = gauss8();
        let first = self.value(flux, a + rule.nodes[0] * (b - a));
        let mut constant = true;
        let mut sum = 0.0;
        for (&z, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = self.value(flux, a + z * (b - a));
            constant &= v == first;
            sum += w * v;
        }
        if constant {
            first
        } else {
            sum
        }
    }
}

/// Exact Riemann-problem flux of the convex section `f(x, ·)`: the minimum
/// over `[u_left, u_right]` when `u_left ≤ u_right`, else the maximum over
/// `[u_right, u_left]`.
pub fn godunov_flux(flux: &FluxModel, x: f64, u_left: f64, u_right: f64) -> Result<f64> {
    let sonic = flux.solve_du(x, 0.0, 0.5 * (flux.u_minus() + flux.u_plus()))?;
    Ok(godunov_with_sonic(flux, x, sonic, u_left, u_right))
}

#[inline]
fn godunov_with_sonic(flux: &FluxModel, x: f64, sonic: f64, ul: f64, ur: f64) -> f64 {
    if ul <= ur {
        flux.eval(x, sonic.clamp(ul, ur))
    } else {
        flux.eval(x, ul).max(flux.eval(x, ur))
    }
}

/// Snapshots of a run, in increasing time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub snapshots: Vec<SolutionField>,
}

impl History {
    pub fn first(&self) -> &SolutionField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &SolutionField {
        &self.snapshots[self.snapshots.len() - 1]
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// The bracketing snapshots of `t` and the weight of the later one.
    pub fn bracket(&self, t: f64) -> (&SolutionField, &SolutionField, f64) {
        let s = &self.snapshots;
        let k = s.partition_point(|f| f.time <= t);
        if k == 0 {
            return (&s[0], &s[0], 0.0);
        }
        if k == s.len() {
            return (&s[k - 1], &s[k - 1], 0.0);
        }
        let (a, b) = (&s[k - 1], &s[k]);
        let w = (t - a.time) / (b.time - a.time);
        (a, b, w)
    }

    /// Offset traces at `(x, t)`, linearly interpolated between snapshots.
    pub fn traces_at(&self, x: f64, t: f64, cells: usize) -> Result<(f64, f64)> {
        let (a, b, w) = self.bracket(t);
        let (la, ra) = a.offset_traces(x, cells)?;
        let (lb, rb) = b.offset_traces(x, cells)?;
        Ok((la + w * (lb - la), ra + w * (rb - ra)))
    }
}

/// Time stepper bound to one flux and grid. Sonic states are precomputed per
/// interface.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    flux: &'a FluxModel,
    grid: Grid1D,
    cfl: f64,
    exec: Exec,
    faces: Vec<f64>,
    sonic: Vec<f64>,
    fluxes: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(flux: &'a FluxModel, grid: Grid1D, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(invalid("cfl", format!("must lie in (0, 1], got {cfl}")));
        }
        let faces: Vec<f64> = (0..=grid.n_cells).map(|k| grid.interface(k)).collect();
        let mut sonic = Vec::with_capacity(faces.len());
        let mut guess = 0.5 * (flux.u_minus() + flux.u_plus());
        for &x in &faces {
            guess = flux.solve_du(x, 0.0, guess)?;
            sonic.push(guess);
        }
        Ok(Solver {
            flux,
            grid,
            cfl,
            exec: Exec::default(),
            faces,
            sonic,
            fluxes: vec![0.0; grid.n_cells + 1],
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn flux(&self) -> &FluxModel {
        self.flux
    }

    fn check_grid(&self, field: &SolutionField) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::GridMismatch("field grid differs from solver grid".into()));
        }
        Ok(())
    }

    /// `cfl · dx / max θ` over the field, its ghost states and `u_±`.
    pub fn stable_dt(&self, field: &SolutionField) -> Result<f64> {
        let (gl, gr) = field.ghosts(self.flux);
        let lo = field.min().min(gl).min(gr).min(self.flux.u_plus());
        let hi = field.max().max(gl).max(gr).max(self.flux.u_minus());
        let speed = self.flux.speed_bound(lo, hi);
        let dt = self.cfl * self.grid.dx() / speed;
        if !(dt > 0.0) || dt.is_nan() {
            return Err(Error::CflViolation { dt });
        }
        Ok(dt)
    }

    /// One explicit conservative update with the given step.
    pub fn step(&mut self, field: &mut SolutionField, dt: f64) -> Result<()> {
        self.check_grid(field)?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::CflViolation { dt });
        }
        let n = self.grid.n_cells;
        let (gl, gr) = field.ghosts(self.flux);
        let periodic = field.boundary == BoundaryMode::Periodic;
        {
            let u = &field.values;
            let flux = self.flux;
            let (faces, sonic) = (&self.faces, &self.sonic);
            self.exec.fill(&mut self.fluxes, |k| {
                let k = if periodic && k == n { 0 } else { k };
                let ul = if k == 0 { gl } else { u[k - 1] };
                let ur = if k == n { gr } else { u[k] };
                godunov_with_sonic(flux, faces[k], sonic[k], ul, ur)
            });
        }
        let lambda = dt / self.grid.dx();
        let fl = &self.fluxes;
        self.exec
            .update(&mut field.values, |i, v| *v -= lambda * (fl[i + 1] - fl[i]));
        field.boundary_inflow += dt * (fl[0] - fl[n]);
        field.time += dt;
        if let Some(index) = field.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                time: field.time,
                index,
            });
        }
        Ok(())
    }

    /// Steps to exactly `t_target`, calling `observe(field, dt)` after each step.
    /// Returns the number of steps taken.
    pub fn advance_with<F>(&mut self, field: &mut SolutionField, t_target: f64, mut observe: F) -> Result<usize>
    where
        F: FnMut(&SolutionField, f64) -> Result<()>,
    {
        if t_target < field.time {
            return Err(invalid("t_target", format!("{t_target} precedes field time {}", field.time)));
        }
        let mut steps = 0;
        while field.time < t_target {
            let dt = self.stable_dt(field)?;
            let remaining = t_target - field.time;
            // land exactly on the target instead of overshooting by round-off
            let (dt, last) = if dt >= remaining * (1.0 - 1e-12) {
                (remaining, true)
            } else {
                (dt, false)
            };
            self.step(field, dt)?;
            if last {
                field.time = t_target;
            }
            steps += 1;
            observe(field, dt)?;
        }
        Ok(steps)
    }

    pub fn advance(&mut self, field: &mut SolutionField, t_target: f64) -> Result<usize> {
        self.advance_with(field, t_target, |_, _| Ok(()))
    }

    /// Runs to `horizon`, storing the initial field, every `every`-th step and
    /// the final field.
    pub fn run(&mut self, field: SolutionField, horizon: f64, every: usize) -> Result<History> {
        let every = every.max(1);
        let mut field = field;
        let mut snapshots = vec![field.clone()];
        let mut k = 0usize;
        self.advance_with(&mut field, horizon, |f, _| {
            k += 1;
            if k % every == 0 {
                snapshots.push(f.clone());
            }
            Ok(())
        })?;
        if snapshots.last().map(|s| s.time) != Some(field.time) {
            snapshots.push(field);
        }
        Ok(History { snapshots })
    }

    /// Runs through each output time in turn, storing one snapshot per time.
    pub fn run_to_times(&mut self, field: SolutionField, times: &[f64]) -> Result<History> {
        let mut field = field;
        let mut snapshots = vec![field.clone()];
        for &t in times {
            self.advance(&mut field, t)?;
            snapshots.push(field.clone());
        }
        Ok(History { snapshots })
    }
}

/// Advances a copy of `field` to `t_target`.
pub fn advance(field: &SolutionField, flux: &FluxModel, t_target: f64, cfl: f64) -> Result<SolutionField> {
    let mut out = field.clone();
    Solver::new(flux, field.grid, cfl)?.advance(&mut out, t_target)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{build_flux, FluxFamily};

    fn burgers() -> FluxModel {
        build_flux(FluxFamily::burgers()).unwrap()
    }

    #[test]
    fn godunov_examples() {
        let f = burgers();
        assert_eq!(godunov_flux(&f, 0.0, -1.0, 1.0).unwrap(), 0.0);
        assert_eq!(godunov_flux(&f, 0.0, 1.0, 0.0).unwrap(), 0.5);
        let lwr = build_flux(FluxFamily::lwr_constant(1.0)).unwrap();
        assert_eq!(godunov_flux(&lwr, 3.0, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn grid_rejects_too_few_cells() {
        assert!(Grid1D::new(0.0, 1.0, 7).is_err());
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn cell_averages_split_jumps() {
        let f = burgers();
        let g = Grid1D::new(-1.0, 1.0, 8).unwrap();
        let d = InitialData::RiemannPhi { jump_at: 0.1 };
        let u = d.cell_averages(&f, &g).unwrap();
        // cell [0, 0.25] holds 0.1 of u_minus
        assert!((u[4] - 0.4).abs() < 1e-15);
        assert_eq!(u[3], 1.0);
        assert_eq!(u[5], 0.0);
    }

    #[test]
    fn bump_average_integrates_exactly() {
        let f = burgers();
        let g = Grid1D::new(-2.0, 2.0, 37).unwrap();
        let b = Bump {
            center: 0.1,
            half_width: 0.7,
            amplitude: 0.3,
        };
        let d = InitialData::Constant {
            value: 0.0,
            bump: Some(b),
        };
        let mass: f64 = d.cell_averages(&f, &g).unwrap().iter().sum::<f64>() * g.dx();
        // ∫ (1 - r²)³ dr over [-1, 1] = 32/35
        assert!((mass - 0.3 * 0.7 * 32.0 / 35.0).abs() < 1e-14);
    }

    #[test]
    fn traces_read_adjacent_cells() {
        let f = build_flux(FluxFamily::lwr_constant(1.0)).unwrap();
        let g = Grid1D::new(-1.0, 1.0, 10).unwrap();
        let field = SolutionField::from_data(&InitialData::riemann_phi(), &f, g, BoundaryMode::FarField).unwrap();
        assert_eq!(field.traces_at(0.0).unwrap(), (1.0, 0.0));
        assert!(field.traces_at(1.5).is_err());
    }

    #[test]
    fn burgers_shock_moves_at_half_speed() {
        let f = burgers();
        let g = Grid1D::new(-2.0, 2.0, 400).unwrap();
        let field = SolutionField::from_data(&InitialData::riemann_phi(), &f, g, BoundaryMode::FarField).unwrap();
        let out = advance(&field, &f, 1.0, DEFAULT_CFL).unwrap();
        assert_eq!(out.time, 1.0);
        // mass conservation locates the shock at 0.5
        let pos = out.mass() + g.x_left;
        assert!((pos - 0.5).abs() < g.dx(), "{pos}");
    }

    #[test]
    fn final_step_lands_on_target() {
        let f = burgers();
        let g = Grid1D::new(-1.0, 1.0, 50).unwrap();
        let field = SolutionField::from_data(&InitialData::riemann_phi(), &f, g, BoundaryMode::FarField).unwrap();
        let out = advance(&field, &f, 0.123456789, DEFAULT_CFL).unwrap();
        assert_eq!(out.time, 0.123456789);
    }

    #[test]
    fn conservation_accounts_for_boundary_flux() {
        let f = burgers();
        let g = Grid1D::new(-1.0, 1.0, 200).unwrap();
        let field = SolutionField::from_data(&InitialData::riemann_phi(), &f, g, BoundaryMode::FarField).unwrap();
        let out = advance(&field, &f, 0.5, DEFAULT_CFL).unwrap();
        let drift = out.mass() - field.mass() - out.boundary_inflow;
        assert!(drift.abs() <= 1e-12 * field.mass().abs().max(1.0));
    }

    #[test]
    fn periodic_conserves_mass() {
        let f = burgers();
        let g = Grid1D::new(0.0, 1.0, 64).unwrap();
        let values: Vec<f64> = g.centers().iter().map(|x| (2.0 * std::f64::consts::PI * x).sin()).collect();
        let mut field = SolutionField::new(g, values, BoundaryMode::Periodic).unwrap();
        let m0 = field.mass();
        Solver::new(&f, g, 0.9).unwrap().advance(&mut field, 0.5).unwrap();
        assert!((field.mass() - m0).abs() < 1e-13);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let f = build_flux(FluxFamily::convex_combination()).unwrap();
        let g = Grid1D::new(-3.0, 3.0, 2000).unwrap();
        let d = InitialData::PerturbedPhi {
            jump_at: 0.0,
            bump: Bump {
                center: -1.0,
                half_width: 0.5,
                amplitude: 0.5,
            },
        };
        let field = SolutionField::from_data(&d, &f, g, BoundaryMode::FarField).unwrap();
        let mut a = field.clone();
        let mut b = field;
        Solver::new(&f, g, DEFAULT_CFL).unwrap().with_exec(Exec::Sequential).advance(&mut a, 0.5).unwrap();
        Solver::new(&f, g, DEFAULT_CFL).unwrap().with_exec(Exec::Parallel).advance(&mut b, 0.5).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn history_interpolates_between_snapshots() {
        let f = burgers();
        let g = Grid1D::new(-1.0, 1.0, 40).unwrap();
        let field = SolutionField::from_data(&InitialData::riemann_phi(), &f, g, BoundaryMode::FarField).unwrap();
        let h = Solver::new(&f, g, DEFAULT_CFL).unwrap().run(field, 0.3, 5).unwrap();
        assert_eq!(h.first().time, 0.0);
        assert_eq!(h.last().time, 0.3);
        let (l, r) = h.traces_at(-0.9, 0.17, 0).unwrap();
        assert_eq!((l, r), (1.0, 1.0));
    }
}
