//! Shock curves diagnosed from the finite-volume field, and detection of the
//! finite-time emergence of the simple shock.

use crate::error::{invalid, Error, Result};
use crate::flux::FluxModel;
use crate::solver::{History, InitialData, SolutionField};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Cells between the steepest drop of a numerical shock and its traces.
pub const TRACE_OFFSET: usize = 3;

/// Default jump floor: `1e-3 · (u_minus - u_plus)`.
pub fn default_jump_floor(flux: &FluxModel) -> f64 {
    1e-3 * (flux.u_minus() - flux.u_plus())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockSample {
    pub t: f64,
    pub s: f64,
    pub u_l: f64,
    pub u_r: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockCurve {
    pub origin: (f64, f64),
    pub samples: Vec<ShockSample>,
}

impl ShockCurve {
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let s = &self.samples;
        let k = s.partition_point(|p| p.t <= t);
        if k == 0 || s.is_empty() {
            return None;
        }
        if k == s.len() {
            return (s[k - 1].t == t).then_some(s[k - 1].s);
        }
        let (a, b) = (&s[k - 1], &s[k]);
        Some(a.s + (t - a.t) / (b.t - a.t) * (b.s - a.s))
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,s,u_l,u_r,speed")?;
        for p in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", p.t, p.s, p.u_l, p.u_r, p.speed)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions {
    pub jump_floor: f64,
    pub offset: usize,
}

impl TrackOptions {
    pub fn for_flux(flux: &FluxModel) -> Self {
        TrackOptions {
            jump_floor: default_jump_floor(flux),
            offset: TRACE_OFFSET,
        }
    }
}

/// A located numerical discontinuity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub s: f64,
    pub u_l: f64,
    pub u_r: f64,
}

/// Finds the steepest downward jump within `window` cells of `near` and
/// places it at sub-cell accuracy by conservation of mass across the layer.
pub fn locate_jump(field: &SolutionField, near: f64, window: usize, offset: usize) -> Located {
    let g = &field.grid;
    let u = &field.values;
    let n = g.n_cells;
    let c = g.cell_of(near);
    let lo = c.saturating_sub(window);
    let hi = (c + window).min(n - 2);
    let mut best = lo.min(n - 2);
    let mut drop = f64::NEG_INFINITY;
    for i in lo..=hi {
        let d = u[i] - u[i + 1];
        // ties resolved towards the prediction
        if d > drop || (d == drop && i.abs_diff(c) < best.abs_diff(c)) {
            drop = d;
            best = i;
        }
    }
    let left = best.saturating_sub(offset);
    let right = (best + 1 + offset).min(n - 1);
    let (u_l, u_r) = (u[left], u[right]);
    let (a, b) = (left + 1, right);
    let (x_lo, x_hi) = (g.interface(a), g.interface(b));
    let s = if u_l - u_r > 0.0 && b > a {
        let mass: f64 = u[a..b].iter().sum::<f64>() * g.dx();
        (x_lo + (mass - u_r * (x_hi - x_lo)) / (u_l - u_r)).clamp(x_lo, x_hi)
    } else {
        g.interface(best + 1)
    };
    Located { s, u_l, u_r }
}

/// Follows the discontinuity seeded at `seed = (x, t)` through the history.
pub fn track_shock(history: &History, flux: &FluxModel, seed: (f64, f64), opts: TrackOptions) -> Result<ShockCurve> {
    let snaps = &history.snapshots;
    let start = snaps.partition_point(|f| f.time < seed.1);
    if start == snaps.len() {
        return Err(invalid("seed", format!("t = {} beyond the stored history", seed.1)));
    }
    let dx = snaps[start].grid.dx();
    let mut samples: Vec<ShockSample> = Vec::new();
    let mut predicted = seed.0;
    let mut speed = 0.0;
    let mut last_t = snaps[start].time;
    for field in &snaps[start..] {
        let dt = field.time - last_t;
        let window = ((speed * dt).abs() / dx).ceil() as usize + 4;
        predicted += speed * dt;
        let loc = locate_jump(field, predicted, window, opts.offset);
        let jump = loc.u_l - loc.u_r;
        if jump <= opts.jump_floor {
            return Err(Error::LostShock {
                time: field.time,
                x: loc.s,
                jump,
            });
        }
        speed = flux.rh_speed(loc.s, loc.u_l, loc.u_r)?;
        samples.push(ShockSample {
            t: field.time,
            s: loc.s,
            u_l: loc.u_l,
            u_r: loc.u_r,
            speed,
        });
        predicted = loc.s;
        last_t = field.time;
    }
    Ok(ShockCurve {
        origin: seed,
        samples,
    })
}

/// Joins two curves at their first common sample closer than `tol`; the
/// continuation takes the left curve's left trace and the right curve's
/// right trace.
pub fn merge_shocks(a: &ShockCurve, b: &ShockCurve, flux: &FluxModel, tol: f64) -> Result<ShockCurve> {
    let (left, right) = match (a.samples.first(), b.samples.first()) {
        (Some(p), Some(q)) if p.s <= q.s => (a, b),
        (Some(_), Some(_)) => (b, a),
        _ => return Err(Error::NoIntersection),
    };
    let mut j = 0;
    for (i, p) in left.samples.iter().enumerate() {
        while j < right.samples.len() && right.samples[j].t < p.t {
            j += 1;
        }
        let Some(q) = right.samples.get(j) else { break };
        if q.t != p.t || (q.s - p.s) > tol {
            continue;
        }
        let mut samples = Vec::new();
        for (p, q) in left.samples[i..].iter().zip(&right.samples[j..]) {
            if p.t != q.t {
                break;
            }
            let s = 0.5 * (p.s + q.s);
            let speed = flux.rh_speed(s, p.u_l, q.u_r)?;
            samples.push(ShockSample {
                t: p.t,
                s,
                u_l: p.u_l,
                u_r: q.u_r,
                speed,
            });
        }
        return Ok(ShockCurve {
            origin: (samples[0].s, samples[0].t),
            samples,
        });
    }
    Err(Error::NoIntersection)
}

/// Best placement of the simple shock against one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockFit {
    pub t: f64,
    /// Sub-cell jump position.
    pub position: f64,
    /// `min_p ‖u - Φ(· - p)‖_{L1}`.
    pub l1: f64,
}

/// Minimizes `‖u - Φ(· - p)‖_{L1}` over `p`. The objective is piecewise
/// linear in `p` with kinks at interfaces, so a scan over interfaces finds
/// the exact minimum; the reported position is then refined by mass balance.
pub fn fit_simple_shock(field: &SolutionField, flux: &FluxModel) -> ShockFit {
    let (um, up) = (flux.u_minus(), flux.u_plus());
    let u = &field.values;
    let g = &field.grid;
    let dx = g.dx();
    let n = u.len();
    // right[k] = Σ_{i≥k} |u_i - u_+|
    let mut right = vec![0.0; n + 1];
    for i in (0..n).rev() {
        right[i] = right[i + 1] + (u[i] - up).abs();
    }
    let mut left = 0.0;
    let mut best = (right[0], 0usize);
    for k in 1..=n {
        left += (u[k - 1] - um).abs();
        let v = left + right[k];
        if v < best.0 {
            best = (v, k);
        }
    }
    let k = best.1;
    let band = 10;
    let (a, b) = (k.saturating_sub(band), (k + band).min(n));
    let (x_lo, x_hi) = (g.interface(a), g.interface(b));
    let mass: f64 = u[a..b].iter().sum::<f64>() * dx;
    let position = (x_lo + (mass - up * (x_hi - x_lo)) / (um - up)).clamp(x_lo, x_hi);
    ShockFit {
        t: field.time,
        position,
        l1: best.0 * dx,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceReport {
    pub emerged: bool,
    pub t_detected: f64,
    pub x_detected: f64,
    pub sigma_measured: f64,
    pub sigma_rh: f64,
    pub t_bound_analytic: Option<f64>,
    /// Largest L1 distance to the best shifted `Φ` after `t_detected`.
    pub post_emergence_error: f64,
    pub tolerance: f64,
    pub note: Option<String>,
    pub fits: Vec<ShockFit>,
}

impl EmergenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Earliest stored time after which every snapshot lies within `tolerance`
/// (L1) of a shifted simple shock.
pub fn detect_emergence(
    history: &History,
    flux: &FluxModel,
    tolerance: f64,
    t_bound_analytic: Option<f64>,
) -> Result<EmergenceReport> {
    if history.snapshots.is_empty() {
        return Err(invalid("history", "no snapshots"));
    }
    let fits: Vec<ShockFit> = history.snapshots.iter().map(|f| fit_simple_shock(f, flux)).collect();
    let sigma_rh = flux.sigma();
    let last = history.last();
    let floor = default_jump_floor(flux);
    let max_drop = last
        .values
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0, f64::max);
    let last_fit = fits[fits.len() - 1];
    if max_drop <= floor {
        return Ok(EmergenceReport {
            emerged: false,
            t_detected: f64::NAN,
            x_detected: f64::NAN,
            sigma_measured: f64::NAN,
            sigma_rh,
            t_bound_analytic,
            post_emergence_error: last_fit.l1,
            tolerance,
            note: Some("no discontinuity present; the simple shock cannot emerge".into()),
            fits,
        });
    }
    let first_bad = fits.iter().rposition(|f| f.l1 > tolerance);
    let k = match first_bad {
        None => 0,
        Some(i) if i + 1 < fits.len() => i + 1,
        Some(_) => {
            return Err(Error::NotEmerged {
                last_distance: last_fit.l1,
            })
        }
    };
    let after = &fits[k..];
    let post = after.iter().map(|f| f.l1).fold(0.0, f64::max);
    let sigma_measured = if after.len() >= 2 {
        slope(after.iter().map(|f| (f.t, f.position)))
    } else {
        sigma_rh
    };
    Ok(EmergenceReport {
        emerged: true,
        t_detected: fits[k].t,
        x_detected: fits[k].position,
        sigma_measured,
        sigma_rh,
        t_bound_analytic,
        post_emergence_error: post,
        tolerance,
        note: (after.len() < 2).then(|| "emerged at the final snapshot; speed not measured".into()),
        fits,
    })
}

/// Least-squares slope.
pub(crate) fn slope(points: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let n = points.clone().count() as f64;
    let (mt, my) = points.clone().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (num, den) = points.fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmergenceBound {
    /// Time by which `s_+` must meet the `u_minus` characteristic.
    pub t_right: f64,
    /// Time by which `s_-` must meet the `u_plus` characteristic.
    pub t_left: f64,
    /// `max(t_left, t_right)`: a partial bound, not a full emergence time.
    pub t_partial: f64,
}

/// Reduction-to-special-case times for piecewise-constant four-state data.
pub fn emergence_bound(flux: &FluxModel, data: &InitialData) -> Result<EmergenceBound> {
    let InitialData::Piecewise4 {
        x_minus,
        x0,
        x_plus,
        u_m,
        u_big,
    } = data
    else {
        return Err(invalid("data", "emergence bound needs piecewise4 data"));
    };
    data.validate(flux)?;
    let (um, up) = (flux.u_minus(), flux.u_plus());
    let d2 = flux.alpha() * (um - up) * (um - up);
    let t_right = 2.0 * (u_big - up) * (x_plus - x0) / d2;
    let t_left = 2.0 * (um - u_m) * (x0 - x_minus) / d2;
    Ok(EmergenceBound {
        t_right,
        t_left,
        t_partial: t_right.max(t_left),
    })
}
