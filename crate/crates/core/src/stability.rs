//! Quadratic relative entropy, the normalized entropy flux `q`, shift curves
//! `ξ_±` and the L² stability certificates for the simple shock.

use crate::error::{invalid, Error, Result};
use crate::flux::{validate_assumptions, Assumption};
use crate::flux::{FluxFamily, FluxModel};
use crate::quadrature::{gauss32, UnitRule};
use crate::solver::{godunov_flux, Bump, Grid1D, History, InitialData, SolutionField, Solver};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// `η(u, c) = (u - c)²` and its flux `Q(x, u, c) = ∫_c^u 2(y - c) f_u(x, y) dy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyPair {
    pub c: f64,
}

impl EntropyPair {
    #[inline]
    pub fn eta(&self, u: f64) -> f64 {
        (u - self.c) * (u - self.c)
    }

    #[inline]
    pub fn flux(&self, f: &FluxModel, x: f64, u: f64) -> f64 {
        self.eta(u) * eval_q(f, x, u, self.c)
    }
}

/// `q(x, u, c) = ∫₀¹ 2z f_u(x, c + z(u - c)) dz`, so `Q = η q`.
pub fn eval_q(flux: &FluxModel, x: f64, u: f64, c: f64) -> f64 {
    eval_q_with(gauss32(), flux, x, u, c)
}

/// Applies `rule` on each piece of `[0, 1]` on which `f_u(x, c + z(u - c))` is
/// polynomial, so the result is exact up to rounding for the built-in fluxes.
pub fn eval_q_with(rule: &UnitRule, flux: &FluxModel, x: f64, u: f64, c: f64) -> f64 {
    let g = |z: f64| 2.0 * z * flux.du(x, c + z * (u - c));
    if u == c {
        return rule.integrate(g);
    }
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(
        flux.u_breakpoints()
            .into_iter()
            .map(|b| (b - c) / (u - c))
            .filter(|&z| z > 0.0 && z < 1.0),
    );
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| rule.integrate_on(w[0], w[1], g)).sum()
}

/// `Q(x, u, c) = η(u, c) q(x, u, c)`.
pub fn entropy_flux(flux: &FluxModel, x: f64, u: f64, c: f64) -> f64 {
    (u - c) * (u - c) * eval_q(flux, x, u, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSample {
    pub t: f64,
    pub xi_plus: f64,
    pub xi_minus: f64,
    pub xi_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftPair {
    pub sigma: f64,
    pub samples: Vec<ShiftSample>,
    /// Largest `|ξ̇_±|` over the integration.
    pub lipschitz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftOptions {
    pub jump_floor: f64,
    pub offset: usize,
    pub ordering_tol: f64,
    /// Weight of `ξ_+` in `ξ̄ = w ξ_+ + (1 - w) ξ_- - σ t`.
    pub selection: f64,
}

impl ShiftOptions {
    pub fn new(flux: &FluxModel, dx: f64) -> Self {
        ShiftOptions {
            jump_floor: crate::shock::default_jump_floor(flux),
            offset: crate::shock::TRACE_OFFSET,
            ordering_tol: 2.0 * dx,
            selection: 0.5,
        }
    }
}

/// Forward-Euler integrator of the Filippov inclusions for `ξ_±`, fed one
/// field at a time.
#[derive(Debug, Clone)]
pub struct ShiftIntegrator<'a> {
    flux: &'a FluxModel,
    opts: ShiftOptions,
    t: f64,
    xi: [f64; 2],
    rate: [f64; 2],
    pair: ShiftPair,
}

impl<'a> ShiftIntegrator<'a> {
    pub fn new(flux: &'a FluxModel, initial: &SolutionField, opts: ShiftOptions) -> Result<Self> {
        let mut me = ShiftIntegrator {
            flux,
            opts,
            t: initial.time,
            xi: [0.0, 0.0],
            rate: [0.0, 0.0],
            pair: ShiftPair {
                sigma: flux.sigma(),
                samples: Vec::new(),
                lipschitz: 0.0,
            },
        };
        me.record();
        me.update_rates(initial)?;
        Ok(me)
    }

    fn record(&mut self) {
        let w = self.opts.selection;
        self.pair.samples.push(ShiftSample {
            t: self.t,
            xi_plus: self.xi[0],
            xi_minus: self.xi[1],
            xi_bar: w * self.xi[0] + (1.0 - w) * self.xi[1] - self.pair.sigma * self.t,
        });
    }

    fn update_rates(&mut self, field: &SolutionField) -> Result<()> {
        let cs = [self.flux.u_plus(), self.flux.u_minus()];
        for k in 0..2 {
            self.rate[k] = shift_rate(self.flux, field, self.xi[k], cs[k], &self.opts)?;
            self.pair.lipschitz = self.pair.lipschitz.max(self.rate[k].abs());
        }
        Ok(())
    }

    /// Advances both curves by `dt` with the rates of the previous field, then
    /// reads new rates from `field` (the state at the new time).
    pub fn observe(&mut self, field: &SolutionField, dt: f64) -> Result<()> {
        for k in 0..2 {
            self.xi[k] += dt * self.rate[k];
        }
        self.t += dt;
        let gap = self.xi[0] - self.xi[1];
        if gap > self.opts.ordering_tol {
            return Err(Error::OrderingViolation { time: self.t, gap });
        }
        self.update_rates(field)
    }

    /// Stores the current point of both curves.
    pub fn sample(&mut self) {
        if self.pair.samples.last().map(|s| s.t) != Some(self.t) {
            self.record();
        }
    }

    pub fn xi(&self) -> (f64, f64) {
        (self.xi[0], self.xi[1])
    }

    pub fn xi_bar(&self) -> f64 {
        let w = self.opts.selection;
        w * self.xi[0] + (1.0 - w) * self.xi[1] - self.pair.sigma * self.t
    }

    pub fn finish(mut self) -> ShiftPair {
        self.sample();
        self.pair
    }
}

/// Right-hand side of the inclusion for one curve: the RH speed of the traces
/// at a numerical shock, `q(ξ, u(ξ), c)` elsewhere.
fn shift_rate(flux: &FluxModel, field: &SolutionField, xi: f64, c: f64, opts: &ShiftOptions) -> Result<f64> {
    let (u_l, u_r) = field.offset_traces(xi, opts.offset)?;
    if u_l - u_r > opts.jump_floor && is_steep(field, xi, opts.offset, u_l - u_r) {
        flux.rh_speed(xi, u_l, u_r)
    } else {
        Ok(eval_q(flux, xi, field.value_at(xi), c))
    }
}

// A numerical shock concentrates its drop in a few cells; a smooth gradient
// spreads it evenly over the trace window.
fn is_steep(field: &SolutionField, x: f64, offset: usize, total: f64) -> bool {
    let g = &field.grid;
    let c = g.cell_of(x);
    let lo = c.saturating_sub(offset + 1);
    let hi = (c + offset + 1).min(g.n_cells - 1);
    let drop = (lo..hi)
        .map(|i| field.values[i] - field.values[i + 1])
        .fold(0.0, f64::max);
    drop >= 0.25 * total
}

/// Integrates the shift curves through a stored history, sub-stepping each
/// snapshot interval at the CFL-limited rate with the earlier snapshot frozen.
pub fn integrate_shift_curves(history: &History, flux: &FluxModel, opts: ShiftOptions) -> Result<ShiftPair> {
    let snaps = &history.snapshots;
    if snaps.is_empty() {
        return Err(invalid("history", "no snapshots"));
    }
    let mut it = ShiftIntegrator::new(flux, &snaps[0], opts)?;
    for w in snaps.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let span = b.time - a.time;
        let bound = flux.speed_bound(a.min(), a.max()).max(flux.speed_bound(flux.u_plus(), flux.u_minus()));
        let h_max = 0.5 * a.grid.dx() / bound;
        let m = (span / h_max).ceil().max(1.0) as usize;
        let h = span / m as f64;
        for k in 0..m {
            let field = if k + 1 == m { b } else { a };
            it.observe(field, h)?;
        }
        it.sample();
    }
    Ok(it.finish())
}

/// `‖u - Φ(· - p)‖₂` with `p = shift + sigma_t`, integrating the cell cut by
/// the jump exactly.
pub fn relative_l2(field: &SolutionField, flux: &FluxModel, shift: f64, sigma_t: f64) -> f64 {
    let (um, up) = (flux.u_minus(), flux.u_plus());
    let p = shift + sigma_t;
    let g = &field.grid;
    let dx = g.dx();
    let mut sum = 0.0;
    for (i, &u) in field.values.iter().enumerate() {
        let left = ((p - g.interface(i)) / dx).clamp(0.0, 1.0);
        sum += dx * (left * (u - um) * (u - um) + (1.0 - left) * (u - up) * (u - up));
    }
    sum.sqrt()
}

/// Shift-magnitude constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftBound {
    pub k: f64,
    pub l: f64,
    pub sigma: f64,
    pub v: f64,
    pub initial_norm: f64,
}

impl ShiftBound {
    /// `K √t`.
    pub fn sqrt_envelope(&self, t: f64) -> f64 {
        self.k * t.max(0.0).sqrt()
    }

    /// `(L + |σ|) t`.
    pub fn linear_envelope(&self, t: f64) -> f64 {
        (self.l + self.sigma.abs()) * t
    }
}

/// `K = (√(L+|σ|) + √(L+|σ|+V)) ‖u0 - Φ‖₂ / (u_- - u_+)` with
/// `V = sup_x f_u(x, ‖u0‖_∞)`.
pub fn shift_bound_k(flux: &FluxModel, u0: &SolutionField, l: f64) -> ShiftBound {
    let sigma = flux.sigma();
    let sup = u0.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let v = flux.theta(sup);
    let initial_norm = relative_l2(u0, flux, 0.0, 0.0);
    let a = l + sigma.abs();
    let k = (a.sqrt() + (a + v).sqrt()) * initial_norm / (flux.u_minus() - flux.u_plus());
    ShiftBound {
        k,
        l,
        sigma,
        v,
        initial_norm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilitySample {
    pub t: f64,
    pub relative_l2: f64,
    pub xi_plus: f64,
    pub xi_minus: f64,
    pub xi_bar: f64,
    pub k_sqrt_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub flux: String,
    pub n_cells: usize,
    pub dx: f64,
    pub initial_norm: f64,
    pub num_tol: f64,
    pub ordering_tol: f64,
    pub samples: Vec<StabilitySample>,
    /// `max(0, max_t ‖·‖(t) - ‖·‖(0))`.
    pub excess: f64,
    pub contraction_pass: bool,
    pub max_ordering_gap: f64,
    pub ordering_pass: bool,
    pub bound: ShiftBound,
    pub sqrt_envelope_pass: bool,
    /// Positive heterogeneity holds on the measured solution range.
    pub p_validated: bool,
    pub solution_range: (f64, f64),
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,relative_l2,xi_plus,xi_minus,xi_bar,K_sqrt_t_envelope")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.relative_l2, s.xi_plus, s.xi_minus, s.xi_bar, s.k_sqrt_t
            )?;
        }
        Ok(())
    }
}

/// Runs `data` to `horizon`, integrating the shift curves at every solver
/// step and sampling the relative L² norm every `every` steps.
pub fn stability_run(
    flux: &FluxModel,
    data: &InitialData,
    grid: Grid1D,
    horizon: f64,
    cfl: f64,
    every: usize,
) -> Result<StabilityReport> {
    stability_run_with(flux, data, grid, horizon, cfl, every, ShiftOptions::new(flux, grid.dx()), None)
}

/// [`stability_run`] with explicit shift options and an optional override of
/// the contraction tolerance `5 √dx ‖u0‖_∞`.
#[allow(clippy::too_many_arguments)]
pub fn stability_run_with(
    flux: &FluxModel,
    data: &InitialData,
    grid: Grid1D,
    horizon: f64,
    cfl: f64,
    every: usize,
    opts: ShiftOptions,
    num_tol: Option<f64>,
) -> Result<StabilityReport> {
    let field = SolutionField::from_data(data, flux, grid, Default::default())?;
    let mut shifts = ShiftIntegrator::new(flux, &field, opts)?;
    let initial_norm = relative_l2(&field, flux, 0.0, 0.0);
    let sigma = flux.sigma();
    let every = every.max(1);
    let mut norms = vec![(0.0, initial_norm)];
    let (mut lo, mut hi) = (field.min(), field.max());
    let mut max_gap = f64::NEG_INFINITY;
    let mut k = 0usize;
    let mut solver = Solver::new(flux, grid, cfl)?;
    let mut state = field.clone();
    solver.advance_with(&mut state, horizon, |f, dt| {
        shifts.observe(f, dt)?;
        let (xp, xm) = shifts.xi();
        max_gap = max_gap.max(xp - xm);
        lo = lo.min(f.min());
        hi = hi.max(f.max());
        k += 1;
        if k % every == 0 || f.time >= horizon {
            shifts.sample();
            norms.push((f.time, relative_l2(f, flux, shifts.xi_bar(), sigma * f.time)));
        }
        Ok(())
    })?;
    let pair = shifts.finish();
    let bound = shift_bound_k(flux, &field, pair.lipschitz);
    let samples: Vec<StabilitySample> = pair
        .samples
        .iter()
        .zip(&norms)
        .map(|(s, &(t, n))| StabilitySample {
            t,
            relative_l2: n,
            xi_plus: s.xi_plus,
            xi_minus: s.xi_minus,
            xi_bar: s.xi_bar,
            k_sqrt_t: bound.sqrt_envelope(t),
        })
        .collect();
    let sup0 = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let num_tol = num_tol.unwrap_or(5.0 * grid.dx().sqrt() * sup0);
    let excess = samples
        .iter()
        .map(|s| s.relative_l2 - initial_norm)
        .fold(0.0, f64::max);
    let sqrt_envelope_pass = samples
        .iter()
        .all(|s| s.xi_bar.abs() <= s.k_sqrt_t + 2.0 * grid.dx());
    let x_range = (grid.x_left, grid.x_right);
    let p_validated = validate_assumptions(flux, x_range, (lo, hi), 64).passes(Assumption::PositiveHeterogeneity);
    Ok(StabilityReport {
        flux: flux.family().tag().to_string(),
        n_cells: grid.n_cells,
        dx: grid.dx(),
        initial_norm,
        num_tol,
        ordering_tol: opts.ordering_tol,
        excess,
        contraction_pass: excess <= num_tol,
        max_ordering_gap: max_gap.max(0.0),
        ordering_pass: max_gap <= opts.ordering_tol,
        bound,
        sqrt_envelope_pass,
        p_validated,
        solution_range: (lo, hi),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub flux: String,
    pub reference: f64,
    pub times: Vec<f64>,
    /// `‖u(t) - reference‖₂`.
    pub norms: Vec<f64>,
    /// End of the initial window on which the norm strictly increases.
    pub increasing_until: f64,
    /// `max_t norm(t) - norm(0)` over the classical window.
    pub increase: f64,
    /// Largest `|u_x|` seen, and the time classical behaviour ended (if it did).
    pub max_gradient: f64,
    pub classical_until: f64,
    /// Sign of `∫∫ -2 (u - y) f_xu(x, y)` over the initial data; positive
    /// means the entropy production feeds the norm.
    pub production_sign: f64,
}

impl GrowthReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Evolves `reference + psi` and records `‖u(t) - reference‖₂`. With
/// `reference = None` the flux's `u_minus` is used.
pub fn growth_run(
    flux: &FluxModel,
    psi: Option<Bump>,
    reference: Option<f64>,
    grid: Grid1D,
    horizon: f64,
    cfl: f64,
) -> Result<GrowthReport> {
    let c = reference.unwrap_or(flux.u_minus());
    if flux.dx(0.0, c).abs() > 1e-12 || validate_stationary(flux, c, &grid) > 1e-10 {
        return Err(invalid("reference", format!("{c} is not a stationary state of the flux")));
    }
    let data = InitialData::Constant { value: c, bump: psi };
    let field = SolutionField::from_data(&data, flux, grid, crate::solver::BoundaryMode::Fixed { left: c, right: c })?;
    let norm = |f: &SolutionField| {
        (f.values.iter().map(|u| (u - c) * (u - c)).sum::<f64>() * f.grid.dx()).sqrt()
    };
    let gradient = |f: &SolutionField| {
        f.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
            / f.grid.dx()
    };
    let g0 = gradient(&field);
    // classical while the steepest slope stays within a few times its initial value
    let blowup = 4.0 * g0.max(1e-300);
    let mut times = vec![0.0];
    let mut norms = vec![norm(&field)];
    let mut max_gradient = g0;
    let mut classical_until = horizon;
    let mut state = field.clone();
    let mut solver = Solver::new(flux, grid, cfl)?;
    solver.advance_with(&mut state, horizon, |f, _| {
        times.push(f.time);
        norms.push(norm(f));
        let g = gradient(f);
        max_gradient = max_gradient.max(g);
        if g > blowup && classical_until == horizon {
            classical_until = f.time;
        }
        Ok(())
    })?;
    let classical = times.partition_point(|&t| t <= classical_until);
    let increasing = norms[..classical].windows(2).take_while(|w| w[1] > w[0]).count();
    let increase = norms[..classical]
        .iter()
        .map(|n| n - norms[0])
        .fold(0.0, f64::max);
    let production = production_integral(flux, &field, c);
    Ok(GrowthReport {
        flux: flux.family().tag().to_string(),
        reference: c,
        increasing_until: times[increasing],
        times,
        norms,
        increase,
        max_gradient,
        classical_until,
        production_sign: if production == 0.0 { 0.0 } else { production.signum() },
    })
}

fn validate_stationary(flux: &FluxModel, c: f64, grid: &Grid1D) -> f64 {
    (0..=64)
        .map(|k| grid.x_left + (grid.x_right - grid.x_left) * k as f64 / 64.0)
        .map(|x| flux.dx(x, c).abs())
        .fold(0.0, f64::max)
}

// d/dt ∫ (u - c)² for smooth u and stationary c: ∫ -2 ∫_c^u (u - y) f_xu(x, y) dy dx.
fn production_integral(flux: &FluxModel, field: &SolutionField, c: f64) -> f64 {
    let g = &field.grid;
    let rule = gauss32();
    field
        .values
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let x = g.center(i);
            -2.0 * rule.integrate_on(c, u, |y| (u - y) * flux.dxu(x, y)) * g.dx()
        })
        .sum()
}

/// Negative-heterogeneity check: growth under the decreasing-φ flux
/// and the drift of the same data under its increasing-φ twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeGrowth {
    pub negative: GrowthReport,
    pub control: GrowthReport,
    /// `max(0, control increase)`.
    pub control_drift: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub fn negative_heterogeneity_growth(
    flux: &FluxModel,
    psi: Option<Bump>,
    grid: Grid1D,
    horizon: f64,
    cfl: f64,
) -> Result<NegativeGrowth> {
    let FluxFamily::NegativeHeterogeneity { .. } = flux.family() else {
        return Err(invalid("flux", "negative_heterogeneity_growth needs the negative_heterogeneity family"));
    };
    let twin = FluxModel::new(flux.family().positive_twin().expect("negative family has a twin"))?;
    let c = flux.u_minus();
    let negative = growth_run(flux, psi, Some(c), grid, horizon, cfl)?;
    if psi.is_some() && negative.classical_until < horizon && negative.increasing_until <= 0.0 {
        return Err(Error::ShockFormedEarly {
            time: negative.classical_until,
        });
    }
    let control = growth_run(&twin, psi, Some(c), grid, horizon, cfl)?;
    let control_drift = control.increase.max(0.0);
    let scale = negative.norms[0].max(f64::MIN_POSITIVE);
    let threshold = (10.0 * f64::EPSILON * scale).max(5.0 * control_drift);
    let pass = psi.is_some() && negative.increasing_until > 0.0 && negative.increase >= threshold;
    Ok(NegativeGrowth {
        negative,
        control,
        control_drift,
        threshold,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyResidual {
    /// Largest positive cell residual of `η_t + Q_x`.
    pub max_positive: f64,
    /// `Σ max(R, 0) dx dt` over the history.
    pub total_positive: f64,
    /// `Σ min(R, 0) dx dt`: the entropy dissipated.
    pub total_negative: f64,
}

/// Discrete residual of `η(u, c)_t + Q(x, u, c)_x` between consecutive
/// snapshots, with `Q` evaluated at the Godunov interface state.
pub fn entropy_residual(history: &History, flux: &FluxModel, c: f64) -> Result<EntropyResidual> {
    let pair = EntropyPair { c };
    let mut out = EntropyResidual {
        max_positive: 0.0,
        total_positive: 0.0,
        total_negative: 0.0,
    };
    for w in history.snapshots.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.time - a.time;
        if !(dt > 0.0) {
            continue;
        }
        let g = &a.grid;
        let n = g.n_cells;
        let (gl, gr) = match a.boundary {
            crate::solver::BoundaryMode::FarField => (flux.u_minus(), flux.u_plus()),
            crate::solver::BoundaryMode::Periodic => (a.values[n - 1], a.values[0]),
            crate::solver::BoundaryMode::Fixed { left, right } => (left, right),
        };
        let q: Vec<f64> = (0..=n)
            .map(|k| {
                let ul = if k == 0 { gl } else { a.values[k - 1] };
                let ur = if k == n { gr } else { a.values[k] };
                let x = g.interface(k);
                let w = interface_state(flux, x, ul, ur)?;
                Ok(pair.flux(flux, x, w))
            })
            .collect::<Result<_>>()?;
        for i in 0..n {
            let r = (pair.eta(b.values[i]) - pair.eta(a.values[i])) / dt + (q[i + 1] - q[i]) / g.dx();
            out.max_positive = out.max_positive.max(r);
            if r > 0.0 {
                out.total_positive += r * g.dx() * dt;
            } else {
                out.total_negative += r * g.dx() * dt;
            }
        }
    }
    Ok(out)
}

/// State of the frozen-interface Riemann solution on the interface.
fn interface_state(flux: &FluxModel, x: f64, ul: f64, ur: f64) -> Result<f64> {
    let sonic = flux.solve_du(x, 0.0, 0.5 * (ul + ur))?;
    Ok(if ul <= ur {
        sonic.clamp(ul, ur)
    } else {
        let fl = flux.eval(x, ul);
        let fr = flux.eval(x, ur);
        debug_assert!((fl.max(fr) - godunov_flux(flux, x, ul, ur)?).abs() < 1e-12);
        if fl >= fr {
            ul
        } else {
            ur
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::build_flux;
    use crate::quadrature::gauss64;
    use crate::solver::{BoundaryMode, DEFAULT_CFL};

    #[test]
    fn q_closed_form_for_burgers() {
        let f = build_flux(FluxFamily::burgers()).unwrap();
        assert!((eval_q(&f, 0.0, 1.0, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        for &(u, c) in &[(0.3, -0.2), (-1.0, 2.0), (0.7, 0.7)] {
            let exact = c + 2.0 / 3.0 * (u - c);
            assert!((eval_q(&f, 1.3, u, c) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn q_at_reference_is_characteristic_speed() {
        let f = build_flux(FluxFamily::convex_combination()).unwrap();
        for &x in &[-1.0, 0.1, 2.0] {
            assert!((eval_q(&f, x, 0.4, 0.4) - f.du(x, 0.4)).abs() < 1e-14);
        }
    }

    #[test]
    fn q_is_normalized_entropy_flux() {
        let f = build_flux(FluxFamily::convex_combination()).unwrap();
        for &(x, u, c) in &[(0.2f64, 1.7f64, 0.0f64), (-0.3, -0.4, 1.0), (0.0, 0.5, 0.9)] {
            // split where f_u(x, ·) changes polynomial piece
            let mut cuts = vec![c.min(u), c.max(u)];
            cuts.extend([-0.6, -0.4, 1.4, 1.6].iter().filter(|&&k| k > c.min(u) && k < c.max(u)));
            cuts.sort_by(f64::total_cmp);
            let big: f64 = cuts
                .windows(2)
                .map(|w| gauss64().integrate_on(w[0], w[1], |y| 2.0 * (y - c) * f.du(x, y)))
                .sum::<f64>()
                * (u - c).signum();
            let q = eval_q(&f, x, u, c);
            let rel = (q - big / ((u - c) * (u - c))).abs();
            assert!(rel < 1e-13, "{rel:e}");
            assert!((entropy_flux(&f, x, u, c) - big).abs() < 1e-13);
        }
    }

    #[test]
    fn relative_l2_of_shifted_phi() {
        let f = build_flux(FluxFamily::lwr_constant(1.0)).unwrap();
        let g = Grid1D::new(-1.0, 1.0, 100).unwrap();
        let field = SolutionField::from_data(&InitialData::riemann_phi(), &f, g, BoundaryMode::FarField).unwrap();
        assert_eq!(relative_l2(&field, &f, 0.0, 0.0), 0.0);
        for &d in &[0.013, 0.2, -0.05] {
            let n = relative_l2(&field, &f, d, 0.0);
            assert!((n - f64::abs(d).sqrt()).abs() < 1e-12, "{d}: {n}");
        }
    }

    #[test]
    fn stationary_shock_shift_curves_stay_put() {
        let f = build_flux(FluxFamily::lwr_constant(1.0)).unwrap();
        let g = Grid1D::new(-2.0, 2.0, 200).unwrap();
        let r = stability_run(&f, &InitialData::riemann_phi(), g, 1.0, DEFAULT_CFL, 10).unwrap();
        for s in &r.samples {
            assert_eq!((s.xi_plus, s.xi_minus, s.xi_bar), (0.0, 0.0, 0.0));
            assert!(s.relative_l2 < 1e-14);
        }
        assert_eq!(r.bound.k, 0.0);
    }

    #[test]
    fn constant_minus_state_moves_with_characteristic_speed() {
        let f = build_flux(FluxFamily::burgers()).unwrap();
        let g = Grid1D::new(-2.0, 2.0, 100).unwrap();
        let data = InitialData::Constant { value: 1.0, bump: None };
        let field = SolutionField::from_data(&data, &f, g, BoundaryMode::FarField).unwrap();
        let it = ShiftIntegrator::new(&f, &field, ShiftOptions::new(&f, g.dx())).unwrap();
        // ξ̇_- = q(ξ, u_-, u_-) = f_u(ξ, u_-) = 1
        assert!((it.rate[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn entropy_residual_examples() {
        let f = build_flux(FluxFamily::lwr_constant(1.0)).unwrap();
        let g = Grid1D::new(-1.0, 1.0, 100).unwrap();
        let run = |d: &InitialData, b: BoundaryMode| {
            let field = SolutionField::from_data(d, &f, g, b).unwrap();
            Solver::new(&f, g, DEFAULT_CFL).unwrap().run(field, 0.2, 1).unwrap()
        };
        let constant = run(
            &InitialData::Constant { value: 0.0, bump: None },
            BoundaryMode::Fixed { left: 0.0, right: 0.0 },
        );
        let r = entropy_residual(&constant, &f, 0.0).unwrap();
        assert_eq!(r.max_positive, 0.0);
        assert_eq!(r.total_negative, 0.0);

        let shock = run(&InitialData::riemann_phi(), BoundaryMode::FarField);
        let r = entropy_residual(&shock, &f, 0.3).unwrap();
        assert!(r.max_positive <= 1e-12);
        assert!(r.total_negative < 0.0);
    }
}
