//! Potentials and the local weighted norms `M_{alpha,r,t,delta}(V)`, with class verdicts,
//! the Kato check, Morrey norms and reverse-Hölder ratios.
//!
//! `N_delta(x)^r = sum_j A_j K_{x-j}` where `A_j` is the cell average of `|V|^r` and
//! `K_k = int_{cell_k ∩ B(0,delta)} w_alpha`. Both are exact in 1D; for n >= 2 cells near
//! the origin or on the sphere are sub-sampled and the origin cell uses its equal-volume ball.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{weight_clamps, weight_radial};
use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::grid::{
    cell_equivalent_radius, circular_convolve, euclid, power_cell_average, unit_ball_volume, GridFunction, GridSpec,
    SetRegion,
};

/// Fraction of the box (in sup norm) over which sup/L^t norms are reported.
pub const WINDOW: f64 = 0.8;
/// Verdict margin on fitted log-log slopes.
pub const SLOPE_MARGIN: f64 = 0.02;

const SUB_BOUNDARY: usize = 8;
const SUB_NEAR: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialFamily {
    /// `sign * c * |x|^a`
    Power,
    /// `sign * c * (1 + |x|)^a`
    ShiftedPower,
    /// `sign * c`
    Constant,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub sign: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<GridFunction>,
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    fn checked(family: PotentialFamily, a: f64, sign: f64, scale: f64) -> Result<Self> {
        let v = Self {
            family,
            a,
            sign,
            scale,
            table: None,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn power(a: f64, sign: f64, scale: f64) -> Result<Self> {
        Self::checked(PotentialFamily::Power, a, sign, scale)
    }

    pub fn shifted_power(a: f64, sign: f64, scale: f64) -> Result<Self> {
        Self::checked(PotentialFamily::ShiftedPower, a, sign, scale)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::checked(
            PotentialFamily::Constant,
            0.0,
            if c < 0.0 { -1.0 } else { 1.0 },
            c.abs(),
        )
    }

    pub fn zero() -> Self {
        Self {
            family: PotentialFamily::Constant,
            a: 0.0,
            sign: 1.0,
            scale: 0.0,
            table: None,
        }
    }

    /// Real samples on a grid; imaginary parts must vanish.
    pub fn tabulated(table: GridFunction) -> Result<Self> {
        let v = Self {
            family: PotentialFamily::Tabulated,
            a: 0.0,
            sign: 1.0,
            scale: 1.0,
            table: Some(table),
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponent a = {} must be finite",
                self.a
            )));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::InvalidParameter(format!(
                "sign must be +1 or -1, got {}",
                self.sign
            )));
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(Error::InvalidParameter(format!("scale {} must be >= 0", self.scale)));
        }
        if self.family == PotentialFamily::Tabulated {
            let t = self
                .table
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("tabulated potential needs a table".into()))?;
            if t.max_imag() > 0.0 {
                return Err(Error::InvalidParameter("tabulated potential must be real".into()));
            }
        }
        Ok(())
    }

    /// Same potential times `c > 0`.
    pub fn scaled_by(&self, c: f64) -> Self {
        let mut out = self.clone();
        if let Some(t) = out.table.as_mut() {
            *t = t.scale(num_complex::Complex64::new(c, 0.0));
        } else {
            out.scale *= c;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        match &self.table {
            Some(t) => t.is_zero(),
            None => self.scale == 0.0,
        }
    }

    pub fn is_power_family(&self) -> bool {
        matches!(self.family, PotentialFamily::Power | PotentialFamily::ShiftedPower)
    }

    /// Point value; `|x|^a` with `a < 0` is infinite at the origin.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let c = self.sign * self.scale;
        match self.family {
            PotentialFamily::Power => {
                if c == 0.0 {
                    0.0
                } else {
                    c * euclid(x).powf(self.a)
                }
            }
            PotentialFamily::ShiftedPower => c * (1.0 + euclid(x)).powf(self.a),
            PotentialFamily::Constant => c,
            PotentialFamily::Tabulated => f64::NAN,
        }
    }

    fn check_table(&self, grid: &GridSpec) -> Result<&GridFunction> {
        let t = self
            .table
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("tabulated potential needs a table".into()))?;
        if t.spec() != grid {
            return Err(Error::GridMismatch);
        }
        Ok(t)
    }

    /// Samples at lattice points. The singular origin cell of a power potential holds its
    /// cell average instead of the point value.
    pub fn samples(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if self.family == PotentialFamily::Tabulated {
            return Ok(self.check_table(grid)?.values().iter().map(|v| v.re).collect());
        }
        let n = grid.n();
        let origin = grid.origin_index();
        let mut out: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| self.eval(&grid.coords(i)[..n]))
            .collect();
        if self.family == PotentialFamily::Power && self.scale != 0.0 {
            if self.a <= -(n as f64) {
                return Err(Error::DivergentLocalIntegral(format!(
                    "|x|^{} is not integrable at the origin in dimension {n}",
                    self.a
                )));
            }
            out[origin] = self.sign * self.scale * power_cell_average(self.a, grid);
        }
        Ok(out)
    }

    pub fn to_grid_function(&self, grid: &GridSpec) -> Result<GridFunction> {
        let s = self.samples(grid)?;
        GridFunction::new(
            *grid,
            s.into_iter().map(|v| num_complex::Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Cell averages of `|V|^r` (exact in 1D for the power family).
    pub fn cell_power_averages(&self, r: f64, grid: &GridSpec) -> Result<Vec<f64>> {
        let n = grid.n();
        let cr = self.scale.powf(r);
        match self.family {
            PotentialFamily::Tabulated => Ok(self
                .check_table(grid)?
                .values()
                .iter()
                .map(|v| v.re.abs().powf(r))
                .collect()),
            PotentialFamily::Constant => Ok(vec![cr; grid.len()]),
            PotentialFamily::ShiftedPower => {
                let b = self.a * r;
                Ok((0..grid.len())
                    .into_par_iter()
                    .map(|i| cr * (1.0 + euclid(&grid.coords(i)[..n])).powf(b))
                    .collect())
            }
            PotentialFamily::Power => {
                if cr == 0.0 {
                    return Ok(vec![0.0; grid.len()]);
                }
                let b = self.a * r;
                if b <= -(n as f64) {
                    return Err(Error::DivergentLocalIntegral(format!(
                        "|V|^{r} ~ |x|^{b} is not integrable at the origin"
                    )));
                }
                let h = grid.spacing();
                let mut out: Vec<f64> = if n == 1 {
                    let anti = |y: f64| y.signum() * y.abs().powf(b + 1.0) / (b + 1.0);
                    (0..grid.len())
                        .map(|i| {
                            let x = grid.coords(i)[0];
                            cr * (anti(x + 0.5 * h) - anti(x - 0.5 * h)) / h
                        })
                        .collect()
                } else {
                    (0..grid.len())
                        .into_par_iter()
                        .map(|i| cr * euclid(&grid.coords(i)[..n]).powf(b))
                        .collect()
                };
                out[grid.origin_index()] = cr * power_cell_average(b, grid);
                Ok(out)
            }
        }
    }

    /// `||V||_{L^t}` over R^n (sup of the samples for `t = inf`).
    pub fn lt_norm(&self, t: f64, grid: &GridSpec) -> Result<f64> {
        if t.is_nan() || t < 1.0 {
            return Err(Error::InvalidExponent(format!("t = {t} must be >= 1")));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        let nf = grid.n() as f64;
        let infinite = match self.family {
            PotentialFamily::Power => true,
            PotentialFamily::ShiftedPower => t.is_finite() && self.a * t >= -nf || t.is_infinite() && self.a > 0.0,
            PotentialFamily::Constant => t.is_finite(),
            PotentialFamily::Tabulated => false,
        };
        if infinite && !(self.family == PotentialFamily::Power && t.is_infinite() && self.a == 0.0) {
            return Err(Error::InvalidParameter(format!("V is not in L^{t}(R^n)")));
        }
        if t.is_infinite() {
            return Ok(self.samples(grid)?.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
        let a = self.cell_power_averages(t, grid)?;
        Ok((grid.cell_volume() * a.iter().sum::<f64>()).powf(1.0 / t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchechterParams {
    pub alpha: f64,
    pub r: f64,
    pub t: f64,
    #[serde(rename = "S", default)]
    pub s_index: f64,
}

impl SchechterParams {
    pub fn new(alpha: f64, r: f64, t: f64, s_index: f64) -> Result<Self> {
        let p = Self { alpha, r, t, s_index };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be positive",
                self.alpha
            )));
        }
        if !(self.r.is_finite() && self.r >= 1.0) {
            return Err(Error::InvalidExponent(format!("r = {} must be in [1, inf)", self.r)));
        }
        if self.t.is_nan() || self.t < 1.0 {
            return Err(Error::InvalidExponent(format!("t = {} must be in [1, inf]", self.t)));
        }
        if !self.s_index.is_finite() {
            return Err(Error::InvalidParameter("S must be finite".into()));
        }
        Ok(())
    }

    /// `min(alpha, n)`: above `n` the weight is 1 and the local homogeneity is that of `n`.
    pub fn alpha_eff(&self, n: usize) -> f64 {
        self.alpha.min(n as f64)
    }

    /// `n / t` with the convention `n / inf = 0`.
    pub fn n_over_t(&self, n: usize) -> f64 {
        if self.t.is_infinite() {
            0.0
        } else {
            n as f64 / self.t
        }
    }
}

// int_0^v u^{b+n-1} w_alpha(u) du for the radial weight.
fn radial_moment(alpha: f64, b: f64, n: usize, v: f64) -> f64 {
    let nf = n as f64;
    if alpha < nf {
        v.powf(b + alpha) / (b + alpha)
    } else if alpha == nf {
        let v = v.min(1.0);
        v.powf(b + nf) / (b + nf) * ((1.0 / v).ln() + 1.0 / (b + nf))
    } else {
        v.powf(b + nf) / (b + nf)
    }
}

/// `int_{cell_0} |y|^b w_alpha(y) dy`, with the cell replaced by its equal-volume ball for n > 1.
fn origin_cell_integral(alpha: f64, b: f64, grid: &GridSpec) -> f64 {
    let n = grid.n();
    n as f64 * unit_ball_volume(n) * radial_moment(alpha, b, n, cell_equivalent_radius(grid))
}

fn weight_antiderivative(alpha: f64, u: f64) -> f64 {
    let v = u.abs();
    let g = if alpha < 1.0 {
        v.powf(alpha) / alpha
    } else if alpha == 1.0 {
        if v == 0.0 {
            0.0
        } else if v <= 1.0 {
            v * (1.0 - v.ln())
        } else {
            1.0
        }
    } else {
        v
    };
    u.signum() * g
}

// Nearest and farthest distance from `center` to the cell around `c`.
fn cell_distances(c: &[f64], h: f64, center: &[f64]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for (x, y) in c.iter().zip(center) {
        let d = (x - y).abs();
        near += (d - 0.5 * h).max(0.0).powi(2);
        far += (d + 0.5 * h).powi(2);
    }
    (near.sqrt(), far.sqrt())
}

// Midpoint-rule integral of g over cell ∩ B(center, radius) on a sub^n partition.
fn subsampled(c: &[f64], h: f64, center: &[f64], radius: f64, sub: usize, g: &dyn Fn(&[f64]) -> f64) -> f64 {
    let n = c.len();
    let step = h / sub as f64;
    let total = sub.pow(n as u32);
    let mut p = [0.0; 3];
    let mut acc = 0.0;
    for k in 0..total {
        let mut rem = k;
        let mut d2 = 0.0;
        for a in 0..n {
            let j = rem % sub;
            rem /= sub;
            p[a] = c[a] - 0.5 * h + (j as f64 + 0.5) * step;
            d2 += (p[a] - center[a]).powi(2);
        }
        if d2.sqrt() < radius {
            acc += g(&p[..n]);
        }
    }
    acc * step.powi(n as i32)
}

/// `K` in FFT layout: `K_k = int_{cell_k ∩ B(0, delta)} w_alpha`.
fn weight_kernel(alpha: f64, delta: f64, grid: &GridSpec) -> Vec<f64> {
    let n = grid.n();
    let h = grid.spacing();
    let reach = (delta / h).ceil() as i64 + 1;
    let mut kernel = vec![0.0; grid.len()];
    if n == 1 {
        for k in -reach..=reach {
            let lo = ((k as f64 - 0.5) * h).max(-delta);
            let hi = ((k as f64 + 0.5) * h).min(delta);
            if hi > lo {
                kernel[grid.shifted_index(0, &[k])] =
                    weight_antiderivative(alpha, hi) - weight_antiderivative(alpha, lo);
            }
        }
        return kernel;
    }
    let side = (2 * reach + 1) as usize;
    let cells = side.pow(n as u32);
    let origin = [0.0; 3];
    let w = |p: &[f64]| weight_radial(alpha, euclid(p), n);
    let entries: Vec<(usize, f64)> = (0..cells)
        .into_par_iter()
        .filter_map(|flat| {
            let mut rem = flat;
            let mut off = [0i64; 3];
            let mut c = [0.0; 3];
            for a in 0..n {
                off[a] = (rem % side) as i64 - reach;
                rem /= side;
                c[a] = off[a] as f64 * h;
            }
            let (near, far) = cell_distances(&c[..n], h, &origin[..n]);
            if near >= delta {
                return None;
            }
            let ring = off[..n].iter().map(|o| o.abs()).max().unwrap_or(0);
            let val = if ring == 0 {
                origin_cell_integral(alpha, 0.0, grid)
            } else if ring <= 2 {
                subsampled(&c[..n], h, &origin[..n], delta, SUB_NEAR, &w)
            } else if far <= delta {
                w(&c[..n]) * grid.cell_volume()
            } else {
                subsampled(&c[..n], h, &origin[..n], delta, SUB_BOUNDARY, &w)
            };
            Some((grid.shifted_index(0, &off[..n]), val))
        })
        .collect();
    for (i, v) in entries {
        kernel[i] = v;
    }
    kernel
}

/// Profile of `N_delta(x)^r = int_{|y-x|<delta} |V(y)|^r w_alpha(x-y) dy` at every lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalProfile {
    pub values: Vec<f64>,
    /// The logarithmic weight was clamped at zero inside the ball (`alpha = n`, `delta > 1`).
    pub clamped: bool,
}

fn check_resolution(delta: f64, grid: &GridSpec) -> Result<()> {
    let h = grid.spacing();
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    if delta < 4.0 * h {
        return Err(Error::UnderResolved(format!(
            "delta = {delta} is below 4h = {}",
            4.0 * h
        )));
    }
    if delta > (1.0 - WINDOW) * grid.half_width() + 1e-12 {
        return Err(Error::InsufficientResolution(format!(
            "delta = {delta} exceeds {} R; balls around window points would wrap",
            1.0 - WINDOW
        )));
    }
    Ok(())
}

fn check_local_integrability(v: &PotentialSpec, alpha: f64, r: f64, n: usize) -> Result<()> {
    if v.family != PotentialFamily::Power || v.scale == 0.0 {
        return Ok(());
    }
    let b = v.a * r;
    let nf = n as f64;
    if b <= -nf || b + alpha.min(nf) <= 0.0 {
        return Err(Error::DivergentLocalIntegral(format!(
            "a r + min(alpha, n) = {} <= 0 at the origin",
            b + alpha.min(nf)
        )));
    }
    Ok(())
}

pub fn local_profile(v: &PotentialSpec, alpha: f64, r: f64, delta: f64, grid: &GridSpec) -> Result<LocalProfile> {
    v.validate()?;
    check_resolution(delta, grid)?;
    check_local_integrability(v, alpha, r, grid.n())?;
    let avg = v.cell_power_averages(r, grid)?;
    if avg.iter().all(|&x| x == 0.0) {
        return Ok(LocalProfile {
            values: vec![0.0; grid.len()],
            clamped: false,
        });
    }
    let kernel = weight_kernel(alpha, delta, grid);
    let mut values = circular_convolve(grid, &avg, &kernel);
    if v.family == PotentialFamily::Power {
        let o = grid.origin_index();
        let exact = v.scale.powf(r) * origin_cell_integral(alpha, v.a * r, grid);
        values[o] += exact - avg[o] * kernel[0];
    }
    for x in values.iter_mut() {
        *x = x.max(0.0);
    }
    Ok(LocalProfile {
        values,
        clamped: weight_clamps(alpha, grid.n(), delta),
    })
}

fn window_norm(values: impl Iterator<Item = (usize, f64)>, t: f64, grid: &GridSpec) -> f64 {
    let inside = values.filter(|(i, _)| grid.in_window(*i, WINDOW));
    if t.is_infinite() {
        inside.map(|(_, v)| v).fold(0.0, f64::max)
    } else {
        (grid.cell_volume() * inside.map(|(_, v)| v.powf(t)).sum::<f64>()).powf(1.0 / t)
    }
}

/// `M_{alpha,r,t,delta}(V)`: the L^t norm of `N_delta` over the inner window
/// (a lower bound on the sup when `t = inf`).
pub fn schechter_norm(v: &PotentialSpec, p: &SchechterParams, delta: f64, grid: &GridSpec) -> Result<f64> {
    p.validate()?;
    if v.family == PotentialFamily::Power && v.scale != 0.0 {
        let a = v.a;
        let nf = grid.n() as f64;
        let tail_ok = if p.t.is_infinite() { a <= 0.0 } else { a * p.t < -nf };
        if !tail_ok {
            return Err(Error::InvalidParameter(format!(
                "N_delta ~ |x|^{a} at infinity is not in L^{}",
                p.t
            )));
        }
    }
    let prof = local_profile(v, p.alpha, p.r, delta, grid)?;
    let inv_r = 1.0 / p.r;
    Ok(window_norm(
        prof.values.iter().enumerate().map(|(i, x)| (i, x.powf(inv_r))),
        p.t,
        grid,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassVerdict {
    InTilde,
    InM,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormSample {
    pub delta: f64,
    pub m_value: f64,
    pub scaled: f64,
}

/// Numerical evidence only: fitted trends over a finite δ range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub sup: f64,
    pub small_delta_slope: Option<f64>,
    pub large_delta_slope: Option<f64>,
    pub full_slope: Option<f64>,
    pub verdict: ClassVerdict,
    pub margin: f64,
    pub samples: Vec<SeminormSample>,
    pub clamped: bool,
}

fn check_log_grid(deltas: &[f64], min_len: usize) -> Result<()> {
    if deltas.len() < min_len {
        return Err(Error::InvalidParameter(format!(
            "need at least {min_len} scales, got {}",
            deltas.len()
        )));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidParameter("scales must be positive".into()));
    }
    let ratios: Vec<f64> = deltas.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let first = ratios[0];
    if first == 0.0 || ratios.iter().any(|r| (r - first).abs() > 0.01 * first.abs()) {
        return Err(Error::InvalidParameter("scales must be logarithmically spaced".into()));
    }
    Ok(())
}

pub fn scaled_seminorm(
    v: &PotentialSpec,
    p: &SchechterParams,
    deltas: &[f64],
    grid: &GridSpec,
) -> Result<SeminormReport> {
    check_log_grid(deltas, 8)?;
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let values: Vec<f64> = sorted
        .par_iter()
        .map(|&d| schechter_norm(v, p, d, grid))
        .collect::<Result<_>>()?;
    let samples: Vec<SeminormSample> = sorted
        .iter()
        .zip(&values)
        .map(|(&d, &m)| SeminormSample {
            delta: d,
            m_value: m,
            scaled: d.powf(p.s_index) * m,
        })
        .collect();
    let sup = samples.iter().map(|s| s.scaled).fold(0.0, f64::max);
    let clamped = sorted.iter().any(|&d| weight_clamps(p.alpha, grid.n(), d));
    if sup == 0.0 {
        return Ok(SeminormReport {
            sup,
            small_delta_slope: None,
            large_delta_slope: None,
            full_slope: None,
            verdict: ClassVerdict::InTilde,
            margin: SLOPE_MARGIN,
            samples,
            clamped,
        });
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.delta).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.scaled).collect();
    let half = xs.len() / 2;
    let small = log_log_slope(&xs[..half], &ys[..half]).map(|f| f.slope);
    let large = log_log_slope(&xs[half..], &ys[half..]).map(|f| f.slope);
    let full = log_log_slope(&xs, &ys).map(|f| f.slope);
    let verdict = match (small, large) {
        (Some(s), _) if s > SLOPE_MARGIN => ClassVerdict::InTilde,
        (Some(s), Some(l)) if s >= -SLOPE_MARGIN && l <= SLOPE_MARGIN => ClassVerdict::InM,
        _ => ClassVerdict::Out,
    };
    Ok(SeminormReport {
        sup,
        small_delta_slope: small,
        large_delta_slope: large,
        full_slope: full,
        verdict,
        margin: SLOPE_MARGIN,
        samples,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Member,
    NonMember,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub family: PotentialFamily,
    pub a: f64,
    /// `S + min(alpha,n)/r + a + n/t`.
    pub exponent_sum: f64,
    pub locally_integrable: bool,
    pub norm_finite: bool,
    pub in_m: Membership,
    pub in_tilde_m: Membership,
    /// Kato class `K_alpha`, independent of `(r, t, S)`.
    pub kato: bool,
    pub notes: Vec<String>,
}

/// Closed-form class membership for `±c|x|^a` and `±c(1+|x|)^a`.
pub fn power_membership(v: &PotentialSpec, p: &SchechterParams, n: usize) -> Result<MembershipVerdict> {
    p.validate()?;
    if !v.is_power_family() {
        return Err(Error::InvalidParameter(
            "closed-form membership needs a power or shifted-power potential".into(),
        ));
    }
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("dimension {n} out of range")));
    }
    let a = v.a;
    let nf = n as f64;
    let ae = p.alpha_eff(n);
    let nt = p.n_over_t(n);
    let local = p.s_index + ae / p.r;
    let exponent_sum = local + a + nt;
    let mut notes = Vec::new();
    if p.alpha > nf {
        notes.push(format!("alpha > n: the weight is 1 and behaves like alpha = {n}"));
    }
    let tail_ok = if p.t.is_infinite() { a <= 0.0 } else { a < -nt };

    let (locally_integrable, in_m, in_tilde, kato) = match v.family {
        PotentialFamily::Power => {
            let li = a * p.r > -nf && a * p.r + ae > 0.0;
            let finite = li && tail_ok;
            let (m, tm) = if !finite {
                (Membership::NonMember, Membership::NonMember)
            } else {
                let m = if exponent_sum == 0.0 {
                    if p.alpha == nf {
                        notes.push("alpha = n: the log weight breaks exact scaling".into());
                        Membership::Undetermined
                    } else {
                        Membership::Member
                    }
                } else {
                    // δ^S M_δ ∝ δ^e is unbounded at one end unless e = 0.
                    Membership::NonMember
                };
                let tm = if exponent_sum > 0.0 {
                    Membership::Member
                } else {
                    Membership::NonMember
                };
                (m, tm)
            };
            (li, m, tm, a > -ae && a <= 0.0)
        }
        _ => {
            let finite = tail_ok;
            let tm = if !finite {
                Membership::NonMember
            } else if local > 0.0 {
                Membership::Member
            } else {
                Membership::NonMember
            };
            let m = if !finite || local < 0.0 {
                Membership::NonMember
            } else {
                notes.push("shifted power: large-δ behaviour not decided in closed form".into());
                Membership::Undetermined
            };
            (true, m, tm, a <= 0.0)
        }
    };
    Ok(MembershipVerdict {
        family: v.family,
        a,
        exponent_sum,
        locally_integrable,
        norm_finite: locally_integrable && tail_ok,
        in_m,
        in_tilde_m: in_tilde,
        kato,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoReport {
    pub alpha: f64,
    /// `(delta, sup_x int_{|y-x|<delta} |V| w_alpha)`.
    pub samples: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    pub decaying: bool,
    pub divergent: bool,
}

pub fn kato_check(v: &PotentialSpec, alpha: f64, deltas: &[f64], grid: &GridSpec) -> Result<KatoReport> {
    if deltas.len() < 2 || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("δ sequence must be strictly decreasing".into()));
    }
    let p = SchechterParams::new(alpha, 1.0, f64::INFINITY, 0.0)?;
    let values: Result<Vec<f64>> = deltas.par_iter().map(|&d| schechter_norm(v, &p, d, grid)).collect();
    let values = match values {
        Ok(v) => v,
        Err(Error::DivergentLocalIntegral(_)) => {
            return Ok(KatoReport {
                alpha,
                samples: Vec::new(),
                slope: None,
                divergent: true,
                decaying: false,
            })
        }
        Err(e) => return Err(e),
    };
    let slope = log_log_slope(deltas, &values).map(|f| f.slope);
    let zero = values.iter().all(|&x| x == 0.0);
    Ok(KatoReport {
        alpha,
        samples: deltas.iter().copied().zip(values).collect(),
        slope,
        decaying: zero || slope.is_some_and(|s| s > SLOPE_MARGIN),
        divergent: false,
    })
}

/// `(index, |cell ∩ region|)` for every cell meeting the region. Exact for boxes and 1D balls.
pub fn region_weights(grid: &GridSpec, region: &SetRegion) -> Result<Vec<(usize, f64)>> {
    region.validate(grid)?;
    let n = grid.n();
    let h = grid.spacing();
    let big = grid.half_width();
    let (center, reach): (Vec<f64>, Vec<f64>) = match region {
        SetRegion::Box { center, half_widths } => (center.clone(), half_widths.clone()),
        SetRegion::Ball { center, radius } => (center.clone(), vec![*radius; n]),
    };
    for a in 0..n {
        if center[a] - reach[a] < -big - 0.5 * h || center[a] + reach[a] > big - 0.5 * h {
            return Err(Error::InvalidParameter("region must lie inside the box".into()));
        }
    }
    let overlap = |c: f64, lo: f64, hi: f64| ((c + 0.5 * h).min(hi) - (c - 0.5 * h).max(lo)).max(0.0);
    let ranges: Vec<(usize, usize)> = (0..n)
        .map(|a| {
            let lo = ((center[a] - reach[a] + big) / h - 0.5).floor().max(0.0) as usize;
            let hi = (((center[a] + reach[a] + big) / h + 0.5).ceil() as usize).min(grid.points() - 1);
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    let mut multi = [0usize; 3];
    let counts: Vec<usize> = ranges.iter().map(|(lo, hi)| hi - lo + 1).collect();
    let total: usize = counts.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut c = [0.0; 3];
        for a in 0..n {
            multi[a] = ranges[a].0 + rem % counts[a];
            rem /= counts[a];
            c[a] = grid.axis_coord(multi[a]);
        }
        let w = match region {
            SetRegion::Box { .. } => (0..n)
                .map(|a| overlap(c[a], center[a] - reach[a], center[a] + reach[a]))
                .product(),
            SetRegion::Ball { radius, .. } => {
                if n == 1 {
                    overlap(c[0], center[0] - radius, center[0] + radius)
                } else {
                    let (near, far) = cell_distances(&c[..n], h, &center);
                    if near >= *radius {
                        0.0
                    } else if far <= *radius {
                        grid.cell_volume()
                    } else {
                        subsampled(&c[..n], h, &center, *radius, SUB_BOUNDARY, &|_| 1.0)
                    }
                }
            }
        };
        if w > 0.0 {
            out.push((grid.ravel(&multi[..n]), w));
        }
    }
    Ok(out)
}

/// Lower bound on `||V||_{L_{p,lambda}}` from the sampled balls.
pub fn morrey_norm(
    v: &PotentialSpec,
    p: f64,
    lambda: f64,
    centers: &[Vec<f64>],
    radii: &[f64],
    grid: &GridSpec,
) -> Result<f64> {
    let nf = grid.n() as f64;
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::InvalidExponent(format!("p = {p} must be in [1, inf)")));
    }
    if !(0.0..=nf).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "Morrey index {lambda} outside [0, {nf}]"
        )));
    }
    if centers.is_empty() || radii.is_empty() {
        return Err(Error::InvalidParameter("need at least one center and radius".into()));
    }
    let h = grid.spacing();
    if let Some(r) = radii.iter().find(|&&r| r < 4.0 * h) {
        return Err(Error::UnderResolved(format!("radius {r} is below 4h = {}", 4.0 * h)));
    }
    let avg = v.cell_power_averages(p, grid)?;
    let mut best: f64 = 0.0;
    for c in centers {
        for &r in radii {
            let ball = SetRegion::ball(c.clone(), r);
            let integral: f64 = region_weights(grid, &ball)?.iter().map(|(i, w)| avg[*i] * w).sum();
            best = best.max((r.powf(lambda - nf) * integral).powf(1.0 / p));
        }
    }
    Ok(best)
}

/// Lower bound on the `RH_p` constant: max over regions of `(avg V^p)^{1/p} / avg V`.
pub fn reverse_holder_ratio(v: &PotentialSpec, p: f64, balls: &[SetRegion], grid: &GridSpec) -> Result<f64> {
    if p.is_nan() || p <= 1.0 || p.is_infinite() {
        return Err(Error::InvalidExponent(format!("p = {p} must be in (1, inf)")));
    }
    let samples = v.samples(grid)?;
    let avg_p = v.cell_power_averages(p, grid)?;
    let avg_1 = v.cell_power_averages(1.0, grid)?;
    let n = grid.n();
    let mut best: Option<f64> = None;
    for ball in balls {
        let weights = region_weights(grid, ball)?;
        if let Some((i, _)) = weights.iter().find(|(i, _)| samples[*i] < 0.0) {
            return Err(Error::SignError {
                value: samples[*i],
                position: grid.coords(*i)[..n].to_vec(),
            });
        }
        let vol: f64 = weights.iter().map(|(_, w)| w).sum();
        let mp: f64 = weights.iter().map(|(i, w)| avg_p[*i] * w).sum::<f64>() / vol;
        let m1: f64 = weights.iter().map(|(i, w)| avg_1[*i] * w).sum::<f64>() / vol;
        if m1 > 0.0 {
            let ratio = mp.powf(1.0 / p) / m1;
            best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("potential vanishes on every sampled ball".into()))
}
