//! Weights `w_alpha`, Bessel potentials `(delta^2 - Laplacian)^{-s/2}` and kernel property checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::grid::{delta_at, euclid, GridFunction, GridSpec, Multiplier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselParams {
    pub s: f64,
    pub delta: f64,
}

impl BesselParams {
    pub fn new(s: f64, delta: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Bessel order s = {s} must be positive"
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Bessel scale {delta} must be positive"
            )));
        }
        Ok(Self { s, delta })
    }
}

/// `w_alpha(x)`; the logarithmic case is clamped at zero for `|x| >= 1`.
pub fn weight_w(alpha: f64, x: &[f64]) -> Result<f64> {
    let r = euclid(x);
    if r == 0.0 {
        return Err(Error::InvalidParameter("w_alpha is singular at x = 0".into()));
    }
    Ok(weight_radial(alpha, r, x.len()))
}

pub fn weight_radial(alpha: f64, r: f64, n: usize) -> f64 {
    let nf = n as f64;
    if alpha < nf {
        r.powf(alpha - nf)
    } else if alpha == nf {
        (1.0 / r).ln().max(0.0)
    } else {
        1.0
    }
}

/// True when the logarithmic weight would go negative somewhere inside radius `delta`.
pub fn weight_clamps(alpha: f64, n: usize, delta: f64) -> bool {
    alpha == n as f64 && delta > 1.0
}

pub fn bessel_multiplier(spec: &GridSpec, params: BesselParams) -> Result<Multiplier> {
    let d2 = params.delta * params.delta;
    let e = -params.s / 2.0;
    Multiplier::new(*spec, |xi| {
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        Complex64::new((d2 + r2).powf(e), 0.0)
    })
}

pub fn apply_bessel(params: BesselParams, f: &GridFunction) -> Result<GridFunction> {
    bessel_multiplier(f.spec(), params)?.apply(f)
}

/// `G_{s,delta}` sampled on the grid.
pub fn bessel_kernel(params: BesselParams, spec: GridSpec) -> Result<GridFunction> {
    let origin = vec![0.0; spec.n()];
    apply_bessel(params, &delta_at(spec, &origin)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub s: f64,
    pub delta: f64,
    /// Max relative deviation of `G_{s,delta}(x)` from `delta^{n-s} G_s(delta x)`.
    pub scaling_violation: f64,
    /// Fitted `C` in `G_s <= C w_s` on `0 < |x| < 1/2`.
    pub near_origin_upper: f64,
    /// Smallest ratio `G_s / w_s` on the same set (the converse bound).
    pub near_origin_lower: f64,
    /// Fitted `(C, a)` for `G_s <= C e^{-a|x|}` on `|x| > 1`.
    pub tail_constant: f64,
    pub tail_rate: f64,
    /// Raw decay rate from a log-linear regression of the tail.
    pub fitted_decay: f64,
    pub boundary_ratio: f64,
}

const BOUNDARY_TOL: f64 = 1e-8;

pub fn bessel_kernel_checks(params: BesselParams, grid: GridSpec) -> Result<PropertyReport> {
    let n = grid.n();
    let g_delta = bessel_kernel(params, grid)?;
    let g_one = bessel_kernel(BesselParams::new(params.s, 1.0)?, grid)?;
    let boundary = g_delta.boundary_ratio().max(g_one.boundary_ratio());
    if boundary > BOUNDARY_TOL {
        return Err(Error::InsufficientResolution(format!(
            "kernel boundary ratio {boundary:e} exceeds {BOUNDARY_TOL:e}"
        )));
    }

    // G_s on the dilated lattice delta * x_j, computed independently.
    let dilated = grid.rescaled(params.delta)?;
    let g_scaled = bessel_kernel(BesselParams::new(params.s, 1.0)?, dilated)?;
    let factor = params.delta.powf(n as f64 - params.s);
    let peak = g_delta.max_abs();
    let mut scaling_violation: f64 = 0.0;
    for i in 0..grid.len() {
        let a = g_delta.at(i).re;
        if a.abs() < 1e-10 * peak {
            continue;
        }
        let b = factor * g_scaled.at(i).re;
        scaling_violation = scaling_violation.max((a - b).abs() / a.abs());
    }

    let mut upper: f64 = 0.0;
    let mut lower = f64::INFINITY;
    let mut tail_r = Vec::new();
    let mut tail_log = Vec::new();
    let peak_one = g_one.max_abs();
    let mut tail_samples = Vec::new();
    for i in 0..grid.len() {
        let x = grid.coords(i);
        let r = euclid(&x[..n]);
        let g = g_one.at(i).re;
        if r > 0.0 && r < 0.5 {
            let w = weight_radial(params.s, r, n);
            if w > 0.0 {
                upper = upper.max(g / w);
                lower = lower.min(g / w);
            }
        }
        if r > 1.0 && grid.in_window(i, 0.8) && g > 1e-12 * peak_one {
            tail_r.push(r);
            tail_log.push(g.ln());
            tail_samples.push((r, g));
        }
    }
    let fitted_decay = fit_line(&tail_r, &tail_log)
        .map(|f| -f.slope)
        .ok_or_else(|| Error::InsufficientResolution("too few tail samples".into()))?;
    let tail_rate = 0.9 * fitted_decay.clamp(1e-6, 1.0);
    let tail_constant = tail_samples
        .iter()
        .map(|(r, g)| g * (tail_rate * r).exp())
        .fold(0.0, f64::max);

    Ok(PropertyReport {
        s: params.s,
        delta: params.delta,
        scaling_violation,
        near_origin_upper: upper,
        near_origin_lower: if lower.is_finite() { lower } else { 0.0 },
        tail_constant,
        tail_rate,
        fitted_decay,
        boundary_ratio: boundary,
    })
}

/// Fitted constant in `G_s^q <= C G_{q(s-n)+n}`, sampled over `0 < |x|` inside the window.
pub fn bessel_power_constant(s: f64, q: f64, grid: GridSpec) -> Result<f64> {
    let n = grid.n() as f64;
    let target = q * (s - n) + n;
    if target <= 0.0 {
        return Err(Error::InvalidParameter(format!("q(s-n)+n = {target} must be positive")));
    }
    let gs = bessel_kernel(BesselParams::new(s, 1.0)?, grid)?;
    let gt = bessel_kernel(BesselParams::new(target, 1.0)?, grid)?;
    let floor = 1e-10 * gs.max_abs().powf(q);
    let origin = grid.origin_index();
    let mut c: f64 = 0.0;
    for i in 0..grid.len() {
        if i == origin || !grid.in_window(i, 0.8) {
            continue;
        }
        let a = gs.at(i).re.max(0.0).powf(q);
        let b = gt.at(i).re;
        if a > floor && b > 0.0 {
            c = c.max(a / b);
        }
    }
    Ok(c)
}
