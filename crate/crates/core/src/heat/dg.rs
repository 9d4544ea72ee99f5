//! Davies-Gaffney mass transfer between separated sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares, r_squared};
use crate::grid::{lp_norm, GridFunction, GridSpec, SetRegion};
use crate::schechter::PotentialSpec;
use crate::symbol::EllipticSymbol;

use super::{contour_apply, decay_exponent, semigroup_apply, ContourSpec, DenseSemigroup, Method};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgOptions {
    pub method: Method,
    pub contour: ContourSpec,
    /// Adds a `w t` term to the regression.
    pub local: bool,
    pub floor: f64,
    pub min_r2: f64,
}

impl Default for DgOptions {
    fn default() -> Self {
        Self {
            method: Method::Spectral,
            contour: ContourSpec::default(),
            local: false,
            floor: 1e-14,
            min_r2: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgRow {
    pub t: f64,
    pub mass: f64,
    pub y: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgReport {
    pub c5: f64,
    pub w: Option<f64>,
    pub intercept: f64,
    pub r2: f64,
    pub distance: f64,
    pub exponent: f64,
    pub rows: Vec<DgRow>,
    pub pass: bool,
}

/// Regresses `log(||e^{-tL} 1_E||_{L^2(F)} / ||1_E||_2)` on `-d(E,F)^{2m/(2m-1)} t^{-1/(2m-1)}`.
pub fn davies_gaffney_measure(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    e: &SetRegion,
    f: &SetRegion,
    t_values: &[f64],
    grid: &GridSpec,
    opts: &DgOptions,
) -> Result<DgReport> {
    e.validate(grid)?;
    f.validate(grid)?;
    let d = e.distance(f);
    if d < 4.0 * grid.spacing() {
        return Err(Error::InvalidParameter(format!(
            "d(E, F) = {d} is below four cells ({})",
            4.0 * grid.spacing()
        )));
    }
    let need = if opts.local { 4 } else { 3 };
    if t_values.len() < need || t_values.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "need at least {need} positive t values"
        )));
    }
    let n = grid.n();
    let indicator = GridFunction::from_real_fn(*grid, |x| if e.contains(&x[..n]) { 1.0 } else { 0.0 })?;
    let norm = lp_norm(&indicator, 2.0, None)?;
    if norm == 0.0 {
        return Err(Error::InvalidParameter("E contains no lattice points".into()));
    }
    let start = indicator.scale(Complex64::new(1.0 / norm, 0.0));
    let dense = match opts.method {
        Method::Dense => Some(DenseSemigroup::new(p, v, grid, None)?),
        _ => None,
    };
    let m = p.m();
    let beta = decay_exponent(m);
    let mut rows = Vec::with_capacity(t_values.len());
    let mut censored = Vec::new();
    for &t in t_values {
        let u = match (&dense, opts.method) {
            (Some(ds), _) => ds.apply(t, &start)?,
            (None, Method::Contour) => contour_apply(p, v, t, &start, &opts.contour, None)?.0,
            _ => semigroup_apply(p, v, t, &start, opts.method, None, None)?,
        };
        let mass = lp_norm(&u, 2.0, Some(f))?;
        if mass < opts.floor {
            censored.push(t);
            continue;
        }
        rows.push(DgRow {
            t,
            mass,
            y: mass.ln(),
            x: -d.powf(beta) * t.powf(-1.0 / (2.0 * m as f64 - 1.0)),
        });
    }
    if !censored.is_empty() {
        return Err(Error::MassBelowFloor { censored });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.y).collect();
    let regs: Vec<&[f64]> = if opts.local { vec![&xs, &ts] } else { vec![&xs] };
    let coef = least_squares(&regs, &ys).ok_or_else(|| Error::InvalidParameter("singular regression".into()))?;
    let r2 = r_squared(&regs, &ys, &coef);
    let c5 = coef[1];
    Ok(DgReport {
        c5,
        w: opts.local.then(|| coef[2]),
        intercept: coef[0],
        r2,
        distance: d,
        exponent: beta,
        rows,
        pass: c5 > 0.0 && r2 >= opts.min_r2,
    })
}
