//! `e^{-tL} f` as a contour integral of resolvent powers over an arc-plus-rays path.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::resolvent::{NeumannOptions, PerturbedResolvent, SpectralPoint};
use crate::schechter::PotentialSpec;
use crate::symbol::{ComplexShift, EllipticSymbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContourSpec {
    /// Ray angle in `(0, pi/2)`.
    pub mu: f64,
    /// Arc radius; `None` uses `1/t`.
    pub radius: Option<f64>,
    /// Resolvent power index; `None` picks the smallest `l` with `2(l+1) > n/(2m)`.
    pub l: Option<usize>,
    pub nodes_arc: usize,
    /// Nodes per unit panel of the log-substituted ray variable.
    pub nodes_ray: usize,
    pub ray_cutoff: f64,
    pub neumann: NeumannOptions,
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self {
            mu: PI / 4.0,
            radius: None,
            l: None,
            nodes_arc: 64,
            nodes_ray: 64,
            ray_cutoff: 1e-16,
            neumann: NeumannOptions {
                tol: 1e-12,
                max_terms: 200,
            },
        }
    }
}

pub fn minimal_index(n: usize, m: usize) -> usize {
    let ratio = n as f64 / (2.0 * m as f64);
    (0..).find(|&l| 2.0 * (l as f64 + 1.0) > ratio).unwrap_or(0)
}

impl ContourSpec {
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < PI / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "contour angle {} outside (0, pi/2)",
                self.mu
            )));
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidParameter(format!("contour radius {r} must be positive")));
            }
        }
        if let Some(l) = self.l {
            if 2.0 * (l as f64 + 1.0) <= n as f64 / (2.0 * m as f64) {
                return Err(Error::InvalidParameter(format!("index l = {l} needs 2(l+1) > n/(2m)")));
            }
        }
        if self.nodes_arc < 2 || self.nodes_ray < 2 {
            return Err(Error::InvalidParameter("at least 2 quadrature nodes per piece".into()));
        }
        if !(self.ray_cutoff > 0.0 && self.ray_cutoff < 1.0) {
            return Err(Error::InvalidParameter("ray cutoff must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Quadrature nodes `lambda_j` and weights `w_j` with `int_Gamma g dlambda ~ sum w_j g(lambda_j)`.
    pub fn nodes(&self, t: f64) -> Vec<(Complex64, Complex64)> {
        let r = self.radius.unwrap_or(1.0 / t);
        let mut out = Vec::new();
        let (x, w) = gauss_legendre(self.nodes_arc);
        let (a, b) = (self.mu, 2.0 * PI - self.mu);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = 0.5 * (b - a) * xi + 0.5 * (a + b);
            let lam = Complex64::from_polar(r, theta);
            out.push((lam, Complex64::i() * lam * (0.5 * (b - a) * wi)));
        }
        let r_max = (1.0 / self.ray_cutoff).ln() / (t * self.mu.cos());
        if r_max > r {
            let u_max = (r_max / r).ln();
            let panels = u_max.ceil().max(1.0) as usize;
            let du = u_max / panels as f64;
            let (x, w) = gauss_legendre(self.nodes_ray);
            for k in 0..panels {
                let (a, b) = (k as f64 * du, (k + 1) as f64 * du);
                for (xi, wi) in x.iter().zip(&w) {
                    let u = 0.5 * (b - a) * xi + 0.5 * (a + b);
                    let weight = 0.5 * (b - a) * wi;
                    let lower = Complex64::from_polar(r * u.exp(), -self.mu);
                    let upper = lower.conj();
                    out.push((lower, lower * weight));
                    out.push((upper, -upper * weight));
                }
            }
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourDiagnostics {
    pub nodes: usize,
    pub resolvent_power: usize,
    pub radius: f64,
    pub max_terms: usize,
    pub max_ratio: f64,
    pub max_residual: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn contour_apply(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    t: f64,
    f: &GridFunction,
    spec: &ContourSpec,
    shift: Option<&ComplexShift>,
) -> Result<(GridFunction, ContourDiagnostics)> {
    spec.validate(p.n(), p.m())?;
    let grid = *f.spec();
    let l = spec.l.unwrap_or_else(|| minimal_index(p.n(), p.m()));
    let k = 2 * (l + 1);
    let nodes = spec.nodes(t);

    struct NodeOut {
        sum: Vec<Complex64>,
        failed: Vec<usize>,
        terms: usize,
        ratio: f64,
        residual: f64,
    }
    let empty = || NodeOut {
        sum: vec![Complex64::new(0.0, 0.0); grid.len()],
        failed: Vec::new(),
        terms: 0,
        ratio: 0.0,
        residual: 0.0,
    };
    let out = nodes
        .par_iter()
        .enumerate()
        .map(|(j, &(lam, w))| -> Result<NodeOut> {
            let mut o = empty();
            let res = PerturbedResolvent::new(p, v, SpectralPoint::new(lam)?, &grid, shift, spec.neumann)?;
            let mut u = f.values().to_vec();
            for _ in 0..k {
                let (next, d) = res.solve_raw(&u);
                o.terms = o.terms.max(d.terms_used);
                o.ratio = o.ratio.max(d.contraction_estimate);
                o.residual = o.residual.max(d.residual);
                if !d.converged {
                    o.failed.push(j);
                    return Ok(o);
                }
                u = next;
            }
            let c = w * (-t * lam).exp();
            for (s, x) in o.sum.iter_mut().zip(&u) {
                *s = c * x;
            }
            Ok(o)
        })
        .try_reduce(empty, |mut a, b| {
            for (x, y) in a.sum.iter_mut().zip(&b.sum) {
                *x += y;
            }
            a.failed.extend(b.failed);
            a.terms = a.terms.max(b.terms);
            a.ratio = a.ratio.max(b.ratio);
            a.residual = a.residual.max(b.residual);
            Ok(a)
        })?;
    if !out.failed.is_empty() {
        let mut nodes = out.failed;
        nodes.sort_unstable();
        return Err(Error::NodeFailure { nodes });
    }
    let pre = factorial(k - 1) / (Complex64::new(0.0, 2.0 * PI) * Complex64::new(-t, 0.0).powi(k as i32 - 1));
    let values = out.sum.into_iter().map(|x| pre * x).collect();
    Ok((
        GridFunction::new(grid, values)?,
        ContourDiagnostics {
            nodes: nodes.len(),
            resolvent_power: k,
            radius: spec.radius.unwrap_or(1.0 / t),
            max_terms: out.terms,
            max_ratio: out.ratio,
            max_residual: out.residual,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rules() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact for degree 9
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((i - 2.0 / 9.0).abs() < 1e-14);
        let (_, w) = gauss_legendre(64);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn scalar_cauchy_formula() {
        // with L = a scalar, the quadrature must reproduce e^{-ta}
        let spec = ContourSpec::default();
        for (t, a) in [(0.1, 3.0), (1.0, 0.2), (0.5, -0.3)] {
            let k = 2;
            let s: Complex64 = spec
                .nodes(t)
                .iter()
                .map(|&(lam, w)| w * (-t * lam).exp() / (lam - a).powi(k))
                .sum();
            let val = s / (Complex64::new(0.0, 2.0 * PI) * Complex64::new(-t, 0.0));
            assert!((val - (-t * a).exp()).norm() < 1e-10, "t={t} a={a} {val}");
        }
    }

    #[test]
    fn index_choice() {
        assert_eq!(minimal_index(1, 1), 0);
        assert_eq!(minimal_index(3, 1), 0);
        assert!(ContourSpec {
            l: Some(0),
            ..Default::default()
        }
        .validate(3, 1)
        .is_ok());
        assert!(ContourSpec {
            mu: 2.0,
            ..Default::default()
        }
        .validate(1, 1)
        .is_err());
    }
}
