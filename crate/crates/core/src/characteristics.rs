//! Characteristic system `ẏ = f_u(y, z)`, `ż = -f_x(y, z)`, integrated with
//! classical RK4. Along every solution `f(y, z)` is constant.

use crate::error::{invalid, Error, Result};
use crate::flux::FluxModel;
use crate::solver::History;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharState {
    pub y: f64,
    pub z: f64,
    pub t: f64,
}

impl CharState {
    pub fn new(y: f64, z: f64, t: f64) -> Self {
        CharState { y, z, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharSample {
    pub t: f64,
    pub y: f64,
    pub z: f64,
    pub y_dot: f64,
    pub z_dot: f64,
    /// `f(y, z) - f(y(0), z(0))`.
    pub f_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharTrajectory {
    pub direction: Direction,
    pub samples: Vec<CharSample>,
    /// `max_t |f(y(t), z(t)) - f(y(0), z(0))|`.
    pub max_f_residual: f64,
}

impl CharTrajectory {
    pub fn start(&self) -> &CharSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &CharSample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,y,z,f_residual")?;
        for s in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.y, s.z, s.f_residual)?;
        }
        Ok(())
    }
}

#[inline]
fn rhs(flux: &FluxModel, y: f64, z: f64) -> (f64, f64) {
    (flux.du(y, z), -flux.dx(y, z))
}

#[inline]
fn rk4(flux: &FluxModel, y: f64, z: f64, h: f64) -> (f64, f64) {
    let (k1y, k1z) = rhs(flux, y, z);
    let (k2y, k2z) = rhs(flux, y + 0.5 * h * k1y, z + 0.5 * h * k1z);
    let (k3y, k3z) = rhs(flux, y + 0.5 * h * k2y, z + 0.5 * h * k2z);
    let (k4y, k4z) = rhs(flux, y + h * k3y, z + h * k3z);
    (
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
    )
}

/// Integrates from `start` to `t_end` (either direction) with step `dt`; the
/// last step is shortened to land on `t_end`.
pub fn integrate_char(flux: &FluxModel, start: CharState, t_end: f64, dt: f64) -> Result<CharTrajectory> {
    integrate_until(flux, start, t_end, dt, |_| Ok(()))
}

fn integrate_until(
    flux: &FluxModel,
    start: CharState,
    t_end: f64,
    dt: f64,
    mut check: impl FnMut(&CharSample) -> Result<()>,
) -> Result<CharTrajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if t_end == start.t || !t_end.is_finite() {
        return Err(invalid("t_end", "must differ from the start time"));
    }
    let direction = if t_end > start.t {
        Direction::Forward
    } else {
        Direction::Backward
    };
    let sign = if direction == Direction::Forward { 1.0 } else { -1.0 };
    let f0 = flux.eval(start.y, start.z);
    let sample = |t: f64, y: f64, z: f64| {
        let (y_dot, z_dot) = rhs(flux, y, z);
        CharSample {
            t,
            y,
            z,
            y_dot,
            z_dot,
            f_residual: flux.eval(y, z) - f0,
        }
    };
    let span = (t_end - start.t).abs();
    let steps = (span / dt).ceil().max(1.0) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let first = sample(start.t, start.y, start.z);
    check(&first)?;
    samples.push(first);
    let (mut y, mut z) = (start.y, start.z);
    let mut max_res: f64 = 0.0;
    for k in 1..=steps {
        let t_prev = start.t + sign * dt * (k - 1) as f64;
        let t = if k == steps { t_end } else { start.t + sign * dt * k as f64 };
        (y, z) = rk4(flux, y, z, t - t_prev);
        if !y.is_finite() || !z.is_finite() {
            return Err(Error::NonFiniteState { time: t, index: k });
        }
        let s = sample(t, y, z);
        check(&s)?;
        max_res = max_res.max(s.f_residual.abs());
        samples.push(s);
    }
    Ok(CharTrajectory {
        direction,
        samples,
        max_f_residual: max_res,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardCharacteristic {
    pub trajectory: CharTrajectory,
    /// `y(0)`.
    pub foot: f64,
}

/// Default ODE step tying characteristics to grid resolution: `dx / (4 θ)`.
pub fn default_dt(flux: &FluxModel, dx: f64, state_bound: (f64, f64)) -> f64 {
    let speed = flux.speed_bound(state_bound.0, state_bound.1).max(1e-12);
    dx / (4.0 * speed)
}

/// Seeds `z` from the requested trace of the stored solution at `(x, t)` and
/// integrates the characteristic system back to `t = 0`.
pub fn backward_char_from(
    history: &History,
    flux: &FluxModel,
    x: f64,
    t: f64,
    side: Side,
    dt: Option<f64>,
) -> Result<BackwardCharacteristic> {
    if !(t > 0.0) {
        return Err(invalid("t", "backward characteristics need t > 0"));
    }
    if history.snapshots.is_empty() || history.first().time > 0.0 || history.last().time < t {
        return Err(invalid("history", format!("snapshots do not cover [0, {t}]")));
    }
    let grid = history.first().grid;
    let (l, r) = history.traces_at(x, t, 0)?;
    let z = match side {
        Side::Left => l,
        Side::Right => r,
    };
    let (lo, hi) = history
        .snapshots
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.min()), b.max(s.max())));
    let dt = dt.unwrap_or_else(|| default_dt(flux, grid.dx(), (lo, hi)));
    let trajectory = integrate_until(flux, CharState::new(x, z, t), 0.0, dt, |s| {
        if grid.contains(s.y) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                x: s.y,
                lo: grid.x_left,
                hi: grid.x_right,
            })
        }
    })?;
    let foot = trajectory.end().y;
    Ok(BackwardCharacteristic { trajectory, foot })
}

pub const CROSSING_TOL: f64 = 1e-6;

/// First time the characteristics from `a` and `b` (with `a.y < b.y` at a
/// common start time) come within `tol` of each other, if before `t_max`.
pub fn crossing_time(flux: &FluxModel, a: CharState, b: CharState, t_max: f64, dt: f64, tol: f64) -> Option<f64> {
    let t0 = a.t.max(b.t);
    if a.t != b.t || !(a.y < b.y) || !(t_max > t0) || !(dt > 0.0) {
        return None;
    }
    let (mut ya, mut za) = (a.y, a.z);
    let (mut yb, mut zb) = (b.y, b.z);
    if yb - ya <= tol {
        return Some(t0);
    }
    let mut t = t0;
    while t < t_max {
        let h = dt.min(t_max - t);
        let gap_prev = yb - ya;
        (ya, za) = rk4(flux, ya, za, h);
        (yb, zb) = rk4(flux, yb, zb, h);
        let gap = yb - ya;
        if !gap.is_finite() {
            return None;
        }
        if gap <= tol {
            // linear interpolation of the gap inside the step
            let w = ((gap_prev - tol) / (gap_prev - gap)).clamp(0.0, 1.0);
            return Some(t + w * h);
        }
        t += h;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{build_flux, FluxFamily};
    use crate::solver::{BoundaryMode, Grid1D, InitialData, SolutionField, Solver, DEFAULT_CFL};

    #[test]
    fn homogeneous_characteristics_are_straight() {
        let f = build_flux(FluxFamily::burgers()).unwrap();
        let tr = integrate_char(&f, CharState::new(0.0, 1.0, 0.0), 2.0, 0.01).unwrap();
        for s in &tr.samples {
            assert!((s.y - s.t).abs() < 1e-13);
            assert_eq!(s.z, 1.0);
        }
        assert_eq!(tr.end().t, 2.0);
    }

    #[test]
    fn gaussian_fixed_point() {
        let f = build_flux(FluxFamily::GaussianLwr).unwrap();
        let tr = integrate_char(&f, CharState::new(0.0, 0.5, 0.0), 3.0, 0.01).unwrap();
        assert!(tr.samples.iter().all(|s| s.y == 0.0 && s.z == 0.5));
    }

    #[test]
    fn gaussian_initial_z_rate() {
        let f = build_flux(FluxFamily::GaussianLwr).unwrap();
        let tr = integrate_char(&f, CharState::new(1.0, 0.5, 0.0), 0.1, 0.01).unwrap();
        let expected = 2.0 * (-1.0f64).exp() * (0.25 - 0.5);
        assert!((tr.start().z_dot - expected).abs() < 1e-15);
    }

    #[test]
    fn backward_integration_reverses_time() {
        let f = build_flux(FluxFamily::convex_combination()).unwrap();
        let fwd = integrate_char(&f, CharState::new(-0.3, 0.8, 0.0), 1.0, 1e-3).unwrap();
        let e = fwd.end();
        let back = integrate_char(&f, CharState::new(e.y, e.z, 1.0), 0.0, 1e-3).unwrap();
        assert_eq!(back.direction, Direction::Backward);
        assert!((back.end().y + 0.3).abs() < 1e-10);
        assert!((back.end().z - 0.8).abs() < 1e-10);
    }

    #[test]
    fn crossing_examples() {
        let f = build_flux(FluxFamily::burgers()).unwrap();
        let t = crossing_time(&f, CharState::new(0.0, 1.0, 0.0), CharState::new(1.0, 0.0, 0.0), 5.0, 1e-3, CROSSING_TOL)
            .unwrap();
        assert!((t - 1.0).abs() < 1e-5);
        let parallel = crossing_time(&f, CharState::new(0.0, 0.5, 0.0), CharState::new(1.0, 0.5, 0.0), 5.0, 1e-3, CROSSING_TOL);
        assert!(parallel.is_none());

        let g = build_flux(FluxFamily::GaussianLwr).unwrap();
        let mid = CharState::new(0.0, 0.5, 0.0);
        let right = CharState::new(1.0, 0.5, 0.0);
        assert!(crossing_time(&g, mid, right, 20.0, 1e-3, CROSSING_TOL).is_some());
    }

    #[test]
    fn backward_char_in_constant_region() {
        let f = build_flux(FluxFamily::lwr_constant(1.0)).unwrap();
        let grid = Grid1D::new(-4.0, 4.0, 400).unwrap();
        let field = SolutionField::from_data(&InitialData::riemann_phi(), &f, grid, BoundaryMode::FarField).unwrap();
        let h = Solver::new(&f, grid, DEFAULT_CFL).unwrap().run(field, 1.0, 10).unwrap();
        let b = backward_char_from(&h, &f, -1.0, 1.0, Side::Left, None).unwrap();
        assert!(b.trajectory.samples.iter().all(|s| s.z == 1.0));
        // f_u(·, 1) = 1 for V ≡ 1
        assert!((b.foot + 2.0).abs() < 1e-12);

        let left = backward_char_from(&h, &f, 0.0, 1.0, Side::Left, None).unwrap();
        let right = backward_char_from(&h, &f, 0.0, 1.0, Side::Right, None).unwrap();
        assert_eq!(left.trajectory.start().z, 1.0);
        assert_eq!(right.trajectory.start().z, 0.0);
        assert!(left.foot < right.foot);
    }
}
