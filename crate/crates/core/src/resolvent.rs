//! Free and perturbed resolvents of `L = P(D) + V` on the periodic lattice.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Multiplier};
use crate::schechter::PotentialSpec;
use crate::symbol::{ComplexShift, EllipticSymbol};
use crate::toperator::{empirical_opnorm_seeded, theoretical_bound, ConditionSet};

const SPECTRUM_GAP: f64 = 1e-12;

/// A spectral parameter off the half line `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub z: Complex64,
}

impl SpectralPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("spectral parameter".into()));
        }
        let sp = Self { z };
        if sp.distance() <= 0.0 {
            return Err(Error::InvalidParameter(format!("z = {z} lies on [0, inf)")));
        }
        Ok(sp)
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0))
    }

    /// `d(z, [0, inf))`.
    pub fn distance(&self) -> f64 {
        if self.z.re < 0.0 {
            self.z.norm()
        } else {
            self.z.im.abs()
        }
    }

    pub fn abs(&self) -> f64 {
        self.z.norm()
    }
}

/// `(z - P_eta(xi))^{-1}` sampled on the lattice.
pub fn resolvent_multiplier(
    p: &EllipticSymbol,
    z: SpectralPoint,
    spec: &GridSpec,
    shift: Option<&ComplexShift>,
) -> Result<Multiplier> {
    let sym = p.multiplier(spec, shift)?;
    let gap = sym
        .values()
        .iter()
        .map(|v| (z.z - v).norm())
        .fold(f64::INFINITY, f64::min);
    if gap < SPECTRUM_GAP {
        return Err(Error::SpectrumHit { gap });
    }
    Multiplier::from_values(*spec, sym.values().iter().map(|v| 1.0 / (z.z - v)).collect())
}

pub fn free_resolvent(
    p: &EllipticSymbol,
    z: SpectralPoint,
    f: &GridFunction,
    shift: Option<&ComplexShift>,
) -> Result<GridFunction> {
    resolvent_multiplier(p, z, f.spec(), shift)?.apply(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannOptions {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_terms: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannDiagnostics {
    pub z: Complex64,
    /// Observed geometric ratio of successive series terms.
    pub contraction_estimate: f64,
    pub terms_used: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Cached pieces of `(z - P_eta(D) - V)^{-1}` for repeated solves at one `z`.
pub struct PerturbedResolvent {
    z: SpectralPoint,
    spec: GridSpec,
    free: Multiplier,
    symbol: Multiplier,
    v: Vec<f64>,
    opts: NeumannOptions,
    /// Roundoff level of the defect: `eps * cond(z - P_eta)`, scaled.
    defect_floor: f64,
}

impl PerturbedResolvent {
    pub fn new(
        p: &EllipticSymbol,
        v: &PotentialSpec,
        z: SpectralPoint,
        spec: &GridSpec,
        shift: Option<&ComplexShift>,
        opts: NeumannOptions,
    ) -> Result<Self> {
        if !(opts.tol > 0.0) || opts.max_terms == 0 {
            return Err(Error::InvalidParameter("tol > 0 and max_terms >= 1 required".into()));
        }
        let v_samples = v.samples(spec)?;
        if v_samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("potential samples".into()));
        }
        let symbol = p.multiplier(spec, shift)?;
        let vmax = v_samples.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let (lo, hi) = symbol.values().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
            let g = (z.z - s).norm();
            (lo.min(g), hi.max(g))
        });
        let defect_floor = 1e3 * f64::EPSILON * (hi + vmax) / lo;
        Ok(Self {
            z,
            spec: *spec,
            free: resolvent_multiplier(p, z, spec, shift)?,
            symbol,
            v: v_samples,
            opts,
            defect_floor,
        })
    }

    pub fn z(&self) -> SpectralPoint {
        self.z
    }

    pub(crate) fn solve_raw(&self, f: &[Complex64]) -> (Vec<Complex64>, NeumannDiagnostics) {
        let fnorm = l2_raw(f);
        let mut term = f.to_vec();
        self.free.apply_in_place(&mut term);
        let mut u = term.clone();
        let mut terms = 1;
        let mut ratio = 0.0;
        let mut prev = l2_raw(&term);
        let zero_v = self.v.iter().all(|&x| x == 0.0);
        let mut diverging = 0;
        let mut converged = zero_v || fnorm == 0.0;
        while !converged && terms < self.opts.max_terms {
            for (t, v) in term.iter_mut().zip(&self.v) {
                *t *= v;
            }
            self.free.apply_in_place(&mut term);
            terms += 1;
            let norm = l2_raw(&term);
            ratio = if prev > 0.0 { norm / prev } else { 0.0 };
            prev = norm;
            for (a, b) in u.iter_mut().zip(&term) {
                *a += b;
            }
            if norm <= self.opts.tol * fnorm {
                converged = true;
            } else if ratio >= 1.0 {
                diverging += 1;
                if diverging >= 3 {
                    break;
                }
            } else {
                diverging = 0;
            }
        }
        let residual = self.defect(&u, f, fnorm);
        let converged = converged && residual <= (10.0 * self.opts.tol).max(self.defect_floor);
        (
            u,
            NeumannDiagnostics {
                z: self.z.z,
                contraction_estimate: ratio,
                terms_used: terms,
                residual,
                converged,
            },
        )
    }

    fn defect(&self, u: &[Complex64], f: &[Complex64], fnorm: f64) -> f64 {
        if fnorm == 0.0 {
            return 0.0;
        }
        let mut pu = u.to_vec();
        self.symbol.apply_in_place(&mut pu);
        let d: Vec<Complex64> = (0..u.len())
            .map(|i| self.z.z * u[i] - pu[i] - self.v[i] * u[i] - f[i])
            .collect();
        l2_raw(&d) / fnorm
    }

    pub fn solve(&self, f: &GridFunction) -> Result<(GridFunction, NeumannDiagnostics)> {
        if *f.spec() != self.spec {
            return Err(Error::GridMismatch);
        }
        if f.values().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("right-hand side".into()));
        }
        let (u, d) = self.solve_raw(f.values());
        Ok((GridFunction::new(self.spec, u)?, d))
    }
}

fn l2_raw(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Neumann series for `(z - P_eta(D) - V)^{-1} f`. Non-convergence is reported in the
/// diagnostics rather than as an error.
pub fn perturbed_resolvent(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    z: SpectralPoint,
    f: &GridFunction,
    opts: NeumannOptions,
    shift: Option<&ComplexShift>,
) -> Result<(GridFunction, NeumannDiagnostics)> {
    PerturbedResolvent::new(p, v, z, f.spec(), shift, opts)?.solve(f)
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormSource {
    /// Power iteration / trial dictionary norm of `T_{s, mu}`.
    Empirical { trials: usize, seed: u64 },
    /// The branch bound of the given condition set.
    Theoretical(ConditionSet),
}

/// `mu^{-[2m - s + n(1/p - 1/q)]} ||T_{s,mu}||_{p -> q}` with `mu = |z|^{1/(2m)}`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_factor(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    z: SpectralPoint,
    s: f64,
    p_in: f64,
    q_out: f64,
    grid: &GridSpec,
    source: &NormSource,
) -> Result<f64> {
    let two_m = 2.0 * p.m() as f64;
    let n = grid.n() as f64;
    let gap = n * (1.0 / q_out - 1.0 / p_in);
    if !(s > 0.0 && s <= two_m) || gap < -1e-12 || gap > two_m - s + 1e-12 {
        return Err(Error::BranchViolation {
            branch: "ap1".into(),
            inequality: "0 <= n(1/q - 1/p) <= 2m - s".into(),
        });
    }
    if v.is_zero() {
        return Ok(0.0);
    }
    let mu = z.abs().powf(1.0 / two_m);
    let t_norm = match source {
        NormSource::Empirical { trials, seed } => empirical_opnorm_seeded(v, s, mu, p_in, q_out, *trials, grid, *seed)?,
        NormSource::Theoretical(cs) => theoretical_bound(cs, v, mu, grid)?,
    };
    Ok(mu.powf(-(two_m - s + n * (1.0 / p_in - 1.0 / q_out))) * t_norm)
}

fn check_periodic_shift(eta: &ComplexShift, spec: &GridSpec) -> Result<()> {
    let r = spec.half_width();
    for (j, e) in eta.eta.iter().enumerate() {
        if e.re != 0.0 {
            return Err(Error::NonPeriodicShift(format!("component {j} has real part {}", e.re)));
        }
        let k = e.im * r / std::f64::consts::PI;
        if (k - k.round()).abs() > 1e-9 * k.abs().max(1.0) {
            return Err(Error::NonPeriodicShift(format!(
                "component {j}: 2R Im(eta) = {} is not a multiple of 2 pi",
                2.0 * r * e.im
            )));
        }
    }
    Ok(())
}

/// `||(z - L_eta)^{-1} f - e^{-eta x} (z - L)^{-1}(e^{eta x} f)||_2 / ||f||_2` for a grid-periodic
/// imaginary shift.
pub fn conjugation_residual(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    z: SpectralPoint,
    eta: &ComplexShift,
    f: &GridFunction,
    opts: NeumannOptions,
) -> Result<f64> {
    let spec = *f.spec();
    if eta.eta.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: eta.eta.len(),
        });
    }
    check_periodic_shift(eta, &spec)?;
    let phase = |sign: f64| {
        GridFunction::from_fn(spec, |x| {
            let dot: Complex64 = eta.eta.iter().zip(x).map(|(e, xi)| e * xi).sum();
            (sign * dot).exp()
        })
    };
    let fnorm = f.l2();
    if fnorm == 0.0 {
        return Ok(0.0);
    }
    let solved = |g: &GridFunction, shift: Option<&ComplexShift>| -> Result<GridFunction> {
        let (u, d) = perturbed_resolvent(p, v, z, g, opts, shift)?;
        if !d.converged {
            return Err(Error::NoConvergence {
                terms: d.terms_used,
                ratio: d.contraction_estimate,
            });
        }
        Ok(u)
    };
    let lhs = solved(f, Some(eta))?;
    let rhs = phase(-1.0)?.mul(&solved(&phase(1.0)?.mul(f)?, None)?)?;
    Ok(lhs.sub(&rhs)?.l2() / fnorm)
}

/// Dense matrix of `P_eta(D) + V` acting on lattice samples.
pub fn dense_operator(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    spec: &GridSpec,
    shift: Option<&ComplexShift>,
) -> Result<DMatrix<Complex64>> {
    let sym = p.multiplier(spec, shift)?;
    let len = spec.len();
    let mut kernel = vec![Complex64::new(0.0, 0.0); len];
    kernel[0] = Complex64::new(1.0, 0.0);
    sym.apply_in_place(&mut kernel);
    let vs = v.samples(spec)?;
    let n = spec.n();
    let pts = spec.points();
    let mut mat = DMatrix::from_fn(len, len, |i, j| {
        let (a, b) = (spec.unravel(i), spec.unravel(j));
        let diff: Vec<usize> = (0..n).map(|k| (a[k] + pts - b[k]) % pts).collect();
        kernel[spec.ravel(&diff)]
    });
    for (i, x) in vs.iter().enumerate() {
        mat[(i, i)] += x;
    }
    Ok(mat)
}

/// Dense LU solve of `(z - P_eta(D) - V) u = f`.
pub fn dense_resolvent_solve(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    z: SpectralPoint,
    f: &GridFunction,
    shift: Option<&ComplexShift>,
) -> Result<GridFunction> {
    let spec = *f.spec();
    let l = dense_operator(p, v, &spec, shift)?;
    let a = DMatrix::from_diagonal_element(spec.len(), spec.len(), z.z) - l;
    let b = DVector::from_column_slice(f.values());
    let u = a.lu().solve(&b).ok_or(Error::SpectrumHit { gap: 0.0 })?;
    GridFunction::new(spec, u.iter().copied().collect())
}
