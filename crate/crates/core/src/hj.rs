//! Hamilton–Jacobi value function `v_t + f(x, v_x) = 0` by one-step
//! dynamic programming with the Legendre transform as running cost, and the
//! check that `v_x` matches the finite-volume solution.

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::flux::FluxModel;
use crate::solver::{Grid1D, SolutionField};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// `f*(x, p) = sup_u { u p - f(x, u) }` and the maximizing `u`.
pub fn legendre(flux: &FluxModel, x: f64, p: f64) -> Result<(f64, f64)> {
    flux.conjugate(x, p)
}

/// Samples of `v(·, t)` at the grid interfaces `x_0, …, x_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueField {
    pub grid: Grid1D,
    pub time: f64,
    pub values: Vec<f64>,
    /// Slopes used to extend `v` linearly beyond the left and right ends.
    pub far_slopes: (f64, f64),
}

impl ValueField {
    /// `v0(x) = ∫_{x_left}^x u0`, exact for the piecewise-constant field.
    pub fn from_field(field: &SolutionField, far_slopes: (f64, f64)) -> Self {
        let dx = field.grid.dx();
        let mut values = Vec::with_capacity(field.values.len() + 1);
        let mut acc = 0.0;
        values.push(acc);
        for &u in &field.values {
            acc += u * dx;
            values.push(acc);
        }
        ValueField {
            grid: field.grid,
            time: field.time,
            values,
            far_slopes,
        }
    }

    /// Piecewise-linear interpolant, extended linearly outside the grid.
    pub fn eval(&self, y: f64) -> f64 {
        let g = &self.grid;
        let n = g.n_cells;
        if y <= g.x_left {
            return self.values[0] + self.far_slopes.0 * (y - g.x_left);
        }
        if y >= g.x_right {
            return self.values[n] + self.far_slopes.1 * (y - g.x_right);
        }
        let s = (y - g.x_left) / g.dx();
        let k = (s.floor() as usize).min(n - 1);
        let w = s - k as f64;
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// `(v_{k+1} - v_k) / dx` per cell.
    pub fn slopes(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        self.values.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x,v")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.grid.interface(k), v)?;
        }
        Ok(())
    }
}

const GOLDEN_ITERS: usize = 36;
const CONE_SAFETY: f64 = 1.5;

fn golden(a: f64, b: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    // the endpoints are candidates too: the objective is only piecewise smooth
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for y in [a, b] {
        let v = f(y)?;
        if v < best.1 {
            best = (y, v);
        }
    }
    Ok(best)
}

/// One dynamic-programming step:
/// `v(x, t+dt) = min_{|x-y| ≤ R dt} v(y, t) + dt f*((x+y)/2, (x-y)/dt)`.
pub fn dp_step(flux: &FluxModel, v: &ValueField, dt: f64, reach: f64, exec: Exec) -> Result<ValueField> {
    let g = v.grid;
    let dx = g.dx();
    let half = reach * dt;
    let results: Vec<Result<f64>> = exec.map(&(0..v.values.len()).collect::<Vec<_>>(), |&k| {
        let x = g.interface(k);
        let (lo, hi) = (x - half, x + half);
        let cost = |y: f64| -> Result<f64> {
            let (fs, _) = legendre(flux, 0.5 * (x + y), (x - y) / dt)?;
            Ok(v.eval(y) + dt * fs)
        };
        // pieces of the interpolant inside the cone
        let mut cuts = vec![lo];
        let first = ((lo - g.x_left) / dx).floor() + 1.0;
        let mut j = first;
        while g.x_left + j * dx < hi {
            cuts.push(g.x_left + j * dx);
            j += 1.0;
        }
        cuts.push(hi);
        let mut best = (f64::NAN, f64::INFINITY);
        for w in cuts.windows(2) {
            let cand = golden(w[0], w[1], cost)?;
            if cand.1 < best.1 {
                best = cand;
            }
        }
        let edge = 1e-9 * dx;
        if best.0 - lo <= edge || hi - best.0 <= edge {
            return Err(Error::ConeTooNarrow { x });
        }
        Ok(best.1)
    });
    Ok(ValueField {
        grid: g,
        time: v.time + dt,
        values: results.into_iter().collect::<Result<_>>()?,
        far_slopes: v.far_slopes,
    })
}

/// Largest admissible DP step: `dx / θ` over the slope range of `v`.
pub fn max_dp_step(flux: &FluxModel, v: &ValueField) -> f64 {
    let s = v.slopes();
    let lo = s.iter().copied().fold(v.far_slopes.0.min(v.far_slopes.1), f64::min);
    let hi = s.iter().copied().fold(v.far_slopes.0.max(v.far_slopes.1), f64::max);
    v.grid.dx() / flux.speed_bound(lo, hi).max(1e-12)
}

/// Marches `v0` to `t_end` with steps of at most `dt` (default: the largest
/// admissible step); the last step lands on `t_end`.
pub fn dp_value(flux: &FluxModel, v0: &ValueField, t_end: f64, dt: Option<f64>, exec: Exec) -> Result<ValueField> {
    if t_end < v0.time {
        return Err(invalid("t_end", "precedes the initial time"));
    }
    let limit = max_dp_step(flux, v0);
    let dt = dt.unwrap_or(limit);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(invalid("dt", format!("need 0 < dt <= dx/θ = {limit}, got {dt}")));
    }
    let s = v0.slopes();
    let lo = s.iter().copied().fold(v0.far_slopes.0.min(v0.far_slopes.1), f64::min);
    let hi = s.iter().copied().fold(v0.far_slopes.0.max(v0.far_slopes.1), f64::max);
    let reach = CONE_SAFETY * flux.speed_bound(lo, hi).max(1e-12);
    let mut v = v0.clone();
    while v.time < t_end {
        let remaining = t_end - v.time;
        let (h, last) = if dt >= remaining * (1.0 - 1e-12) {
            (remaining, true)
        } else {
            (dt, false)
        };
        v = dp_step(flux, &v, h, reach, exec)?;
        if last {
            v.time = t_end;
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub n_cells: usize,
    pub dx: f64,
    /// `Σ |v_x - u| dx`.
    pub l1: f64,
    pub max: f64,
    /// Cell of the largest pointwise discrepancy.
    pub argmax: usize,
}

/// Compares the cell slopes of `value` with the cell averages of `field`.
pub fn correspondence_check(value: &ValueField, field: &SolutionField) -> Result<Discrepancy> {
    if value.grid != field.grid {
        return Err(Error::GridMismatch("value and solution grids differ".into()));
    }
    if (value.time - field.time).abs() > 1e-12 * value.time.abs().max(1.0) {
        return Err(Error::GridMismatch(format!(
            "value at t = {} but field at t = {}",
            value.time, field.time
        )));
    }
    let dx = field.grid.dx();
    let (mut l1, mut max, mut argmax) = (0.0, 0.0, 0);
    for (i, (s, u)) in value.slopes().iter().zip(&field.values).enumerate() {
        let d = (s - u).abs();
        l1 += d * dx;
        if d > max {
            max = d;
            argmax = i;
        }
    }
    Ok(Discrepancy {
        n_cells: field.grid.n_cells,
        dx,
        l1,
        max,
        argmax,
    })
}
