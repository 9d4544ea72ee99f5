//! `T_{s,delta} = V (delta^2 - Laplacian)^{-s/2}`: application, empirical norm probing,
//! the four branch bounds and the `M_{|lambda|}(V) < 1` condition checker.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_multiplier, BesselParams};
use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::grid::{GridFunction, GridSpec, Multiplier};
use crate::schechter::{schechter_norm, PotentialSpec, SchechterParams, SLOPE_MARGIN};

const POWER_ITERATIONS: usize = 400;
const BOYD_ITERATIONS: usize = 60;

pub fn apply_t(v: &PotentialSpec, s: f64, delta: f64, f: &GridFunction) -> Result<GridFunction> {
    let samples = v.samples(f.spec())?;
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("potential samples".into()));
    }
    let b = bessel_multiplier(f.spec(), BesselParams::new(s, delta)?)?.apply(f)?;
    Ok(b.map_indexed(|i, z| z * samples[i]))
}

// Real-valued T and its adjoint on raw sample vectors.
struct RealT<'a> {
    v: &'a [f64],
    mult: Multiplier,
    grid: GridSpec,
}

impl RealT<'_> {
    fn bessel(&self, f: &[f64]) -> Vec<f64> {
        let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.mult.apply_in_place(&mut data);
        data.into_iter().map(|z| z.re).collect()
    }

    fn forward(&self, f: &[f64]) -> Vec<f64> {
        let mut g = self.bessel(f);
        for (x, v) in g.iter_mut().zip(self.v) {
            *x *= v;
        }
        g
    }

    fn adjoint(&self, g: &[f64]) -> Vec<f64> {
        let vg: Vec<f64> = g.iter().zip(self.v).map(|(x, v)| x * v).collect();
        self.bessel(&vg)
    }

    fn norm(&self, f: &[f64], p: f64) -> f64 {
        let h = self.grid.cell_volume();
        if p.is_infinite() {
            f.iter().fold(0.0, |m, x| m.max(x.abs()))
        } else {
            (h * f.iter().map(|x| x.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
        }
    }

    fn ratio(&self, f: &[f64], p: f64, q: f64) -> f64 {
        let nf = self.norm(f, p);
        if nf == 0.0 {
            return 0.0;
        }
        self.norm(&self.forward(f), q) / nf
    }
}

fn duality_map(g: &[f64], q: f64) -> Vec<f64> {
    g.iter().map(|x| x.signum() * x.abs().powf(q - 1.0)).collect()
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Trial functions in the rescaled variable `delta * x`, so the dictionary at one scale is the
/// dilation of the dictionary at another.
fn trial_dictionary(grid: &GridSpec, delta: f64, trials: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = grid.n();
    let h = grid.spacing();
    let reach = 0.25 * grid.half_width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = |center: &[f64], width: f64| -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                let d2: f64 = (0..n).map(|a| (x[a] - center[a]).powi(2)).sum();
                (-d2 / (2.0 * width * width)).exp()
            })
            .collect()
    };
    let mut out = vec![vec![1.0; grid.len()]];
    let zero = vec![0.0; n];
    for k in [0.25, 0.5, 1.0, 2.0, 4.0] {
        out.push(gaussian(&zero, (k / delta).clamp(2.0 * h, reach)));
    }
    out.push(gaussian(&zero, 1.5 * h));
    while out.len() < trials {
        let width = (2f64.powf(rng.gen_range(-3.0..3.0)) / delta).clamp(2.0 * h, reach);
        let center: Vec<f64> = (0..n)
            .map(|_| (rng.gen_range(-4.0..4.0) / delta).clamp(-reach, reach))
            .collect();
        if out.len() % 4 == 3 {
            out.push(gaussian(&center, 1.5 * h));
        } else {
            out.push(gaussian(&center, width));
        }
    }
    out
}

/// Lower bound on `||T_{s,delta}||_{L^p -> L^q}`; tight (power iteration) for `p = q = 2`.
pub fn empirical_opnorm(
    v: &PotentialSpec,
    s: f64,
    delta: f64,
    p_in: f64,
    q_out: f64,
    trials: usize,
    grid: &GridSpec,
) -> Result<f64> {
    empirical_opnorm_seeded(v, s, delta, p_in, q_out, trials, grid, 0)
}

#[allow(clippy::too_many_arguments)]
pub fn empirical_opnorm_seeded(
    v: &PotentialSpec,
    s: f64,
    delta: f64,
    p_in: f64,
    q_out: f64,
    trials: usize,
    grid: &GridSpec,
    seed: u64,
) -> Result<f64> {
    if trials < 16 {
        return Err(Error::InvalidParameter(format!(
            "need at least 16 trials, got {trials}"
        )));
    }
    for (name, e) in [("p", p_in), ("q", q_out)] {
        if e.is_nan() || e < 1.0 {
            return Err(Error::InvalidExponent(format!("{name} = {e} must be >= 1")));
        }
    }
    let samples = v.samples(grid)?;
    if samples.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let op = RealT {
        v: &samples,
        mult: bessel_multiplier(grid, BesselParams::new(s, delta)?)?,
        grid: *grid,
    };
    let dict = trial_dictionary(grid, delta, trials, seed);
    let mut scored: Vec<(f64, usize)> = dict
        .par_iter()
        .enumerate()
        .map(|(k, f)| (op.ratio(f, p_in, q_out), k))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0].0;
    if best == 0.0 {
        return Err(Error::DegenerateTrial);
    }

    if p_in == 2.0 && q_out == 2.0 {
        // power iteration on T*T from the best trial and a seeded random start
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let random: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for start in [dict[scored[0].1].clone(), random] {
            best = best.max(power_iteration(&op, start));
        }
        return Ok(best);
    }

    if p_in > 1.0 && p_in.is_finite() && q_out.is_finite() {
        let pc = conjugate(p_in);
        for &(_, k) in scored.iter().take(3) {
            let mut f = dict[k].clone();
            let mut last = op.ratio(&f, p_in, q_out);
            for _ in 0..BOYD_ITERATIONS {
                let g = op.forward(&f);
                let next = duality_map(&op.adjoint(&duality_map(&g, q_out)), pc);
                let nn = op.norm(&next, p_in);
                if nn == 0.0 || !nn.is_finite() {
                    break;
                }
                f = next.iter().map(|x| x / nn).collect();
                let r = op.ratio(&f, p_in, q_out);
                best = best.max(r);
                if (r - last).abs() <= 1e-10 * r {
                    break;
                }
                last = r;
            }
        }
    }
    Ok(best)
}

fn power_iteration(op: &RealT<'_>, start: Vec<f64>) -> f64 {
    let mut f = start;
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let nf = op.norm(&f, 2.0);
        if nf == 0.0 {
            return est;
        }
        f.iter_mut().for_each(|x| *x /= nf);
        let tf = op.forward(&f);
        let r = op.norm(&tf, 2.0);
        let next = op.adjoint(&tf);
        if (r - est).abs() <= 1e-13 * r {
            return r;
        }
        est = est.max(r);
        f = next;
    }
    est
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    A2,
    A3,
    A4,
    A5,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One branch of the Schechter-type conditions, with its scale index `S_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSet {
    pub branch: Branch,
    pub m: usize,
    pub n: usize,
    pub q: f64,
    pub p: f64,
    pub s: f64,
    pub alpha: Option<f64>,
    pub r: Option<f64>,
    pub t: Option<f64>,
    pub sigma: Option<f64>,
    #[serde(rename = "S_index")]
    pub s_index: f64,
    pub constant_product: f64,
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn violation(branch: Branch, inequality: impl Into<String>) -> Error {
    Error::BranchViolation {
        branch: branch.to_string(),
        inequality: inequality.into(),
    }
}

const EPS: f64 = 1e-12;

fn check_base(branch: Branch, m: usize, n: usize, q: f64, p: f64, s: f64) -> Result<()> {
    if m == 0 || !(1..=3).contains(&n) {
        return Err(violation(branch, "m >= 1 and n in 1..=3"));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(violation(branch, "q in (1, inf)"));
    }
    if !(p >= q && p.is_finite()) {
        return Err(violation(branch, "p in [q, inf)"));
    }
    let two_m = 2.0 * m as f64;
    if !(s > 0.0 && s <= two_m) {
        return Err(violation(branch, "s in (0, 2m]"));
    }
    let gap = n as f64 * (1.0 / q - 1.0 / p);
    if gap < -EPS || gap > two_m - s + EPS {
        return Err(violation(branch, "0 <= n(1/q - 1/p) <= 2m - s"));
    }
    if s >= n as f64 {
        return Err(violation(branch, "s in (0, n) for the T-operator bound"));
    }
    Ok(())
}

impl ConditionSet {
    fn prefactor(m: usize, n: usize, q: f64, p: f64, s: f64) -> f64 {
        s - 2.0 * m as f64 + n as f64 * (1.0 / q - 1.0 / p)
    }

    pub fn a2(m: usize, n: usize, q: f64, p: f64, s: f64, alpha: f64) -> Result<Self> {
        let b = Branch::A2;
        check_base(b, m, n, q, p, s)?;
        let nf = n as f64;
        if q >= nf / (nf - s) {
            return Err(violation(b, "q in (1, n/(n-s))"));
        }
        if !(alpha > 0.0 && alpha <= (s - nf) * q + nf + EPS) {
            return Err(violation(b, "alpha in (0, (s-n)q + n]"));
        }
        Ok(Self {
            branch: b,
            m,
            n,
            q,
            p,
            s,
            alpha: Some(alpha),
            r: Some(q),
            t: Some(conjugate(p)),
            sigma: None,
            s_index: Self::prefactor(m, n, q, p, s) + nf - s + (alpha - nf) / q,
            constant_product: 1.0,
        })
    }

    /// `sigma` is determined by `1/q = 1/t + 1/sigma`.
    pub fn a3(m: usize, n: usize, q: f64, p: f64, s: f64, t: f64) -> Result<Self> {
        let b = Branch::A3;
        check_base(b, m, n, q, p, s)?;
        let nf = n as f64;
        if t.is_nan() || t < 1.0 {
            return Err(violation(b, "t in [1, inf]"));
        }
        let inv_sigma = 1.0 / q - inv(t);
        if !(-EPS..=1.0 + EPS).contains(&inv_sigma) {
            return Err(violation(b, "1/q = 1/t + 1/sigma with sigma in [1, inf]"));
        }
        let inv_sigma = inv_sigma.max(0.0);
        if 1.0 / p < inv_sigma - EPS || 1.0 / p > inv_sigma + s / nf + EPS {
            return Err(violation(b, "1/sigma <= 1/p <= 1/sigma + s/n"));
        }
        // Algebraically S_2 = -2m + n(1/q - 1/sigma) = -2m + n/t.
        let s_index = -2.0 * m as f64 + nf * inv(t);
        Ok(Self {
            branch: b,
            m,
            n,
            q,
            p,
            s,
            alpha: None,
            r: None,
            t: Some(t),
            sigma: Some(if inv_sigma == 0.0 {
                f64::INFINITY
            } else {
                1.0 / inv_sigma
            }),
            s_index,
            constant_product: 1.0,
        })
    }

    /// `r` is determined by `1/t + 1/r = 1/q`; the bound acts on `L^2`, so `p = 2`.
    pub fn a4(m: usize, n: usize, q: f64, s: f64, alpha: f64, t: f64) -> Result<Self> {
        let b = Branch::A4;
        let p = 2.0;
        check_base(b, m, n, q, p, s)?;
        let nf = n as f64;
        if !(s < nf / 2.0) {
            return Err(violation(b, "s in (0, n/2)"));
        }
        if q < 2.0 {
            return Err(violation(b, "q in [2, inf)"));
        }
        if t.is_nan() || t < q {
            return Err(violation(b, "t in [q, inf]"));
        }
        let inv_r = 1.0 / q - inv(t);
        if inv_r <= 0.0 {
            return Err(violation(b, "1/t + 1/r = 1/q with r finite"));
        }
        let r = 1.0 / inv_r;
        if r < q - EPS || r >= 2.0 * nf / (nf - 2.0 * s) {
            return Err(violation(b, "r in [q, 2n/(n-2s))"));
        }
        if !(alpha > 0.0 && alpha <= nf + (2.0 * s - nf) * r / 2.0 + EPS) {
            return Err(violation(b, "alpha in (0, n + (2s-n)r/2]"));
        }
        Ok(Self {
            branch: b,
            m,
            n,
            q,
            p,
            s,
            alpha: Some(alpha),
            r: Some(r),
            t: Some(t),
            sigma: None,
            s_index: Self::prefactor(m, n, q, p, s) + ((nf - 2.0 * s) * r / 2.0 + alpha - nf) / r,
            constant_product: 1.0,
        })
    }

    pub fn a5(m: usize, n: usize, p: f64, s: f64, alpha: f64) -> Result<Self> {
        let b = Branch::A5;
        check_base(b, m, n, p, p, s)?;
        let nf = n as f64;
        if p > 2.0 {
            return Err(violation(b, "p = q in (1, 2]"));
        }
        if !(alpha > 0.0 && alpha < nf) {
            return Err(violation(b, "alpha in (0, n)"));
        }
        let pc = conjugate(p);
        if alpha - nf > p * (s - nf) + nf * p / pc + EPS {
            return Err(violation(b, "alpha - n <= p(s-n) + np/p'"));
        }
        if 2.0 * nf <= pc * (nf - s) {
            return Err(violation(b, "2n > p'(n-s)"));
        }
        Ok(Self {
            branch: b,
            m,
            n,
            q: p,
            p,
            s,
            alpha: Some(alpha),
            r: Some(p),
            t: Some(f64::INFINITY),
            sigma: None,
            s_index: alpha / p - 2.0 * m as f64,
            constant_product: 1.0,
        })
    }

    pub fn with_constant_product(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "constant product {c} must be positive"
            )));
        }
        self.constant_product = c;
        Ok(self)
    }

    /// Exponent of the bare power of `delta` in the branch bound.
    pub fn delta_power(&self) -> f64 {
        let nf = self.n as f64;
        let s = self.s;
        match self.branch {
            Branch::A2 => ((nf - s) * self.q + self.alpha.unwrap_or(0.0) - nf) / self.q,
            Branch::A3 => {
                let theta = (nf / s) * (1.0 / self.p - inv(self.sigma.unwrap_or(f64::INFINITY)));
                -s * (1.0 - theta)
            }
            Branch::A4 => {
                let r = self.r.unwrap_or(2.0);
                ((nf - 2.0 * s) * r / 2.0 + self.alpha.unwrap_or(0.0) - nf) / r
            }
            Branch::A5 => self.alpha.unwrap_or(0.0) / self.p - s,
        }
    }

    /// The potential factor of the bound at Schechter scale `scale`.
    pub fn potential_factor(&self, v: &PotentialSpec, scale: f64, grid: &GridSpec) -> Result<f64> {
        if v.is_zero() {
            return Ok(0.0);
        }
        let alpha = self.alpha.unwrap_or(1.0);
        match self.branch {
            Branch::A3 => v.lt_norm(self.t.unwrap_or(f64::INFINITY), grid),
            Branch::A2 => {
                let p = SchechterParams::new(alpha, self.q, conjugate(self.p), 0.0)?;
                schechter_norm(v, &p, scale, grid)
            }
            Branch::A4 => {
                let p = SchechterParams::new(alpha, self.r.unwrap_or(2.0), self.t.unwrap_or(f64::INFINITY), 0.0)?;
                schechter_norm(v, &p, scale, grid)
            }
            Branch::A5 => {
                let p = SchechterParams::new(alpha, self.p, f64::INFINITY, 0.0)?;
                schechter_norm(v, &p, scale, grid)
            }
        }
    }
}

/// The branch bound on `||T_{s,delta}||` with the Schechter window at `1/delta`.
pub fn theoretical_bound(cs: &ConditionSet, v: &PotentialSpec, delta: f64, grid: &GridSpec) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    let factor = cs.potential_factor(v, 1.0 / delta, grid)?;
    Ok(cs.constant_product * delta.powf(cs.delta_power()) * factor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TBoundReport {
    pub branch: Branch,
    pub delta: f64,
    pub empirical_norm: f64,
    pub theoretical_value: f64,
    pub ratio: Option<f64>,
}

pub fn t_bound_report(
    cs: &ConditionSet,
    v: &PotentialSpec,
    delta: f64,
    trials: usize,
    grid: &GridSpec,
    seed: u64,
) -> Result<TBoundReport> {
    let empirical = empirical_opnorm_seeded(v, cs.s, delta, cs.p, cs.q, trials, grid, seed)?;
    let theoretical = theoretical_bound(cs, v, delta, grid)?;
    let ratio = (theoretical > 0.0 && theoretical.is_finite()).then(|| empirical / theoretical);
    Ok(TBoundReport {
        branch: cs.branch,
        delta,
        empirical_norm: empirical,
        theoretical_value: theoretical,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConditionStatus {
    Global,
    Local,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionSample {
    pub lambda_abs: f64,
    #[serde(rename = "M_value")]
    pub m_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub branch: Branch,
    pub params: ConditionSet,
    #[serde(rename = "S_index")]
    pub s_index: f64,
    pub samples: Vec<ConditionSample>,
    pub sup: f64,
    pub fitted_exponent: Option<f64>,
    pub small_end_slope: Option<f64>,
    pub large_end_slope: Option<f64>,
    pub status: ConditionStatus,
    /// For LOCAL: the bound holds for `|lambda| > w/2`.
    pub w: Option<f64>,
}

/// Samples `M_{|lambda|}(V) = constant_product * |lambda|^{S_i} * factor(1/|lambda|)`.
pub fn check_conditions(
    cs: &ConditionSet,
    v: &PotentialSpec,
    lambda_grid: &[f64],
    grid: &GridSpec,
) -> Result<ConditionReport> {
    if lambda_grid.len() < 8 || lambda_grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::InvalidParameter(
            "need at least 8 positive |lambda| samples".into(),
        ));
    }
    let mut lambdas = lambda_grid.to_vec();
    lambdas.sort_by(|a, b| a.total_cmp(b));
    let values: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| Ok(cs.constant_product * l.powf(cs.s_index) * cs.potential_factor(v, 1.0 / l, grid)?))
        .collect::<Result<_>>()?;
    let samples: Vec<ConditionSample> = lambdas
        .iter()
        .zip(&values)
        .map(|(&l, &m)| ConditionSample {
            lambda_abs: l,
            m_value: m,
        })
        .collect();
    let sup = values.iter().cloned().fold(0.0, f64::max);
    let half = lambdas.len() / 2;
    let fitted = log_log_slope(&lambdas, &values).map(|f| f.slope);
    let small = log_log_slope(&lambdas[..half], &values[..half]).map(|f| f.slope);
    let large = log_log_slope(&lambdas[half..], &values[half..]).map(|f| f.slope);

    let (status, w) = if sup == 0.0 {
        (ConditionStatus::Global, None)
    } else {
        let large_ok = large.is_some_and(|l| l <= SLOPE_MARGIN);
        let small_ok = small.is_some_and(|s| s >= -SLOPE_MARGIN);
        if sup < 1.0 && large_ok && small_ok {
            (ConditionStatus::Global, None)
        } else {
            // smallest lambda_0 with every sample at or above it below 1
            let mut start = None;
            for k in (0..values.len()).rev() {
                if values[k] < 1.0 {
                    start = Some(k);
                } else {
                    break;
                }
            }
            match start {
                Some(k) if large_ok => (ConditionStatus::Local, Some(2.0 * lambdas[k])),
                _ => (ConditionStatus::Fail, None),
            }
        }
    };
    Ok(ConditionReport {
        branch: cs.branch,
        params: cs.clone(),
        s_index: cs.s_index,
        samples,
        sup,
        fitted_exponent: fitted,
        small_end_slope: small,
        large_end_slope: large,
        status,
        w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::apply_bessel;
    use crate::fit::logspace;
    use crate::grid::make_grid;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn apply_examples() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let f = GridFunction::from_real_fn(g, |x| (-(x[0] - 1.0).powi(2)).exp()).unwrap();
        let one = PotentialSpec::constant(1.0).unwrap();
        let b = apply_bessel(BesselParams::new(1.3, 0.7).unwrap(), &f).unwrap();
        assert_eq!(apply_t(&one, 1.3, 0.7, &f).unwrap(), b);
        assert!(apply_t(&PotentialSpec::zero(), 1.3, 0.7, &f).unwrap().is_zero());
        let ones = GridFunction::constant(g, c(1.0));
        let out = apply_t(&PotentialSpec::constant(2.5).unwrap(), 1.3, 0.7, &ones).unwrap();
        let expect = 2.5 * 0.7f64.powf(-1.3);
        assert!(out.values().iter().all(|z| (z.re - expect).abs() < 1e-12 * expect));
    }

    #[test]
    fn linear_in_potential() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let f = GridFunction::from_real_fn(g, |x| (-(x[0]).powi(2)).exp() * x[0]).unwrap();
        let v = PotentialSpec::shifted_power(-2.0, -1.0, 0.4).unwrap();
        let a = apply_t(&v.scaled_by(3.0), 0.5, 1.0, &f).unwrap();
        let b = apply_t(&v, 0.5, 1.0, &f).unwrap().scale(c(3.0));
        assert!(a.sub(&b).unwrap().max_abs() < 1e-14);
        let n1 = empirical_opnorm(&v, 0.5, 1.0, 2.0, 2.0, 16, &g).unwrap();
        let n3 = empirical_opnorm(&v.scaled_by(3.0), 0.5, 1.0, 2.0, 2.0, 16, &g).unwrap();
        assert!((n3 - 3.0 * n1).abs() < 1e-8 * n3);
    }

    #[test]
    fn opnorm_examples() {
        let g = make_grid(1, 16.0, 512).unwrap();
        assert_eq!(
            empirical_opnorm(&PotentialSpec::zero(), 1.0, 1.0, 2.0, 2.0, 16, &g).unwrap(),
            0.0
        );
        let one = PotentialSpec::constant(1.0).unwrap();
        for (s, d) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)] {
            let e = empirical_opnorm(&one, s, d, 2.0, 2.0, 16, &g).unwrap();
            let exact = d.powf(-s);
            assert!((e - exact).abs() < 1e-6 * exact, "{e} vs {exact}");
        }
        assert!(empirical_opnorm(&one, 1.0, 1.0, 2.0, 2.0, 8, &g).is_err());
    }

    #[test]
    fn power_iteration_matches_dense_norm() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let v = PotentialSpec::shifted_power(-3.0, -1.0, 0.7).unwrap();
        let (s, d) = (0.8, 0.9);
        let e = empirical_opnorm(&v, s, d, 2.0, 2.0, 16, &g).unwrap();
        // dense matrix of T, columns = T e_j
        let vs = v.samples(&g).unwrap();
        let mult = bessel_multiplier(&g, BesselParams::new(s, d).unwrap()).unwrap();
        let nn = g.len();
        let mat = nalgebra::DMatrix::from_fn(nn, nn, |i, j| {
            let mut e = vec![Complex64::new(0.0, 0.0); nn];
            e[j] = c(1.0);
            mult.apply_in_place(&mut e);
            vs[i] * e[i].re
        });
        let top = mat.singular_values().max();
        assert!((e - top).abs() < 1e-8 * top, "{e} vs {top}");
    }

    #[test]
    fn branch_arithmetic() {
        let cs = ConditionSet::a5(1, 1, 2.0, 0.6, 1.0 - 1e-9).unwrap();
        assert!((cs.s_index - (0.5 - 2.0)).abs() < 1e-8);
        // alpha = 1 needs n >= 2 for A5
        let cs = ConditionSet::a5(1, 2, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(cs.s_index, -1.5);
        let cs = ConditionSet::a3(1, 1, 2.0, 2.0, 0.5, f64::INFINITY).unwrap();
        assert_eq!(cs.delta_power(), -0.5);
        let cs = ConditionSet::a3(1, 3, 1.2, 1.2, 2.0, 1.5).unwrap();
        assert_eq!(cs.s_index, 0.0);
        assert!((cs.sigma.unwrap() - 6.0).abs() < 1e-12);
        assert!(matches!(
            ConditionSet::a2(1, 1, 25.0, 25.0, 0.95, 0.5),
            Err(Error::BranchViolation { .. })
        ));
        assert!(matches!(
            ConditionSet::a5(1, 1, 2.0, 0.2, 0.8),
            Err(Error::BranchViolation { .. })
        ));
        assert!(ConditionSet::a4(1, 1, 2.0, 0.4, 0.5, f64::INFINITY).is_ok());
    }

    #[test]
    fn zero_potential_bounds_and_conditions() {
        let g = make_grid(1, 32.0, 2048).unwrap();
        let cs = ConditionSet::a2(1, 1, 1.25, 1.25, 0.95, 0.9).unwrap();
        assert_eq!(theoretical_bound(&cs, &PotentialSpec::zero(), 1.0, &g).unwrap(), 0.0);
        let rep = check_conditions(&cs, &PotentialSpec::zero(), &logspace(0.25, 4.0, 8), &g).unwrap();
        assert_eq!(rep.status, ConditionStatus::Global);
    }

    #[test]
    fn a5_condition_exponent() {
        let g = make_grid(1, 32.0, 4096).unwrap();
        let a = -0.25;
        let cs = ConditionSet::a5(1, 1, 2.0, 0.6, 0.8).unwrap();
        let v = PotentialSpec::power(a, -1.0, 1.0).unwrap();
        let rep = check_conditions(&cs, &v, &logspace(0.25, 4.0, 9), &g).unwrap();
        let e = rep.fitted_exponent.unwrap();
        assert!((e - (-a - 2.0)).abs() < 0.05 * (a + 2.0).abs(), "{e}");
        assert_ne!(rep.status, ConditionStatus::Global);
    }

    #[test]
    fn a3_small_constant_is_global() {
        let g = make_grid(1, 32.0, 1024).unwrap();
        let cs = ConditionSet::a3(1, 1, 2.0, 2.0, 0.5, f64::INFINITY).unwrap();
        let v = PotentialSpec::shifted_power(-3.0, -1.0, 0.01).unwrap();
        // S_2 = -2 < 0, so only large |lambda| is controlled
        let rep = check_conditions(&cs, &v, &logspace(0.5, 8.0, 8), &g).unwrap();
        assert_eq!(rep.status, ConditionStatus::Local);
        assert!(rep.w.is_some());
    }

    #[test]
    fn bessel_scale_one_over_delta_in_bound() {
        let g = make_grid(1, 32.0, 4096).unwrap();
        let cs = ConditionSet::a5(1, 1, 2.0, 0.6, 0.8).unwrap();
        let v = PotentialSpec::power(-0.25, 1.0, 1.0).unwrap();
        let b1 = theoretical_bound(&cs, &v, 1.0, &g).unwrap();
        let b2 = theoretical_bound(&cs, &v, 2.0, &g).unwrap();
        // delta^{alpha/p - s} * (1/delta)^{alpha/p + a}
        let expect = 2f64.powf(0.4 - 0.6 - (0.4 - 0.25));
        assert!((b2 / b1 - expect).abs() < 1e-3 * expect);
    }
}
