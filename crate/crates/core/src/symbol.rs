//! Homogeneous elliptic symbols `P(xi) = sum_{|alpha| = 2m} a_alpha xi^alpha` and their
//! exponential conjugations `P(D + eta)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Multiplier};

pub const DEFAULT_SPHERE_SAMPLES: usize = 4096;

/// Complex exponential shift `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexShift {
    pub eta: Vec<Complex64>,
}

impl ComplexShift {
    pub fn new(eta: Vec<Complex64>) -> Result<Self> {
        if eta.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("shift components".into()));
        }
        Ok(Self { eta })
    }

    pub fn real(eta: &[f64]) -> Self {
        Self {
            eta: eta.iter().map(|&e| Complex64::new(e, 0.0)).collect(),
        }
    }

    pub fn imaginary(kappa: &[f64]) -> Self {
        Self {
            eta: kappa.iter().map(|&k| Complex64::new(0.0, k)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.eta.iter().all(|c| c.norm() == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticSymbol {
    m: usize,
    n: usize,
    coeffs: BTreeMap<Vec<u32>, f64>,
    ell_const: f64,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn multinomial(parts: &[u32]) -> f64 {
    let mut total = 0u32;
    let mut out = 1.0;
    for &p in parts {
        total += p;
        out *= binomial(total, p);
    }
    out
}

fn monomial(alpha: &[u32], xi: &[Complex64]) -> Complex64 {
    alpha
        .iter()
        .zip(xi)
        .fold(Complex64::new(1.0, 0.0), |acc, (&e, &x)| acc * x.powu(e))
}

fn monomial_real(alpha: &[u32], xi: &[f64]) -> f64 {
    alpha.iter().zip(xi).fold(1.0, |acc, (&e, &x)| acc * x.powi(e as i32))
}

impl EllipticSymbol {
    pub fn new(m: usize, n: usize, coeffs: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        Self::with_samples(m, n, coeffs, DEFAULT_SPHERE_SAMPLES)
    }

    pub fn with_samples(m: usize, n: usize, coeffs: Vec<(Vec<u32>, f64)>, samples: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("half-order m must be positive".into()));
        }
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidParameter(format!("dimension {n} not in 1..=3")));
        }
        let mut map = BTreeMap::new();
        for (alpha, a) in coeffs {
            if alpha.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: alpha.len(),
                });
            }
            let order: u32 = alpha.iter().sum();
            if order as usize != 2 * m {
                return Err(Error::InvalidParameter(format!(
                    "multi-index {alpha:?} has order {order}, expected {}",
                    2 * m
                )));
            }
            if !a.is_finite() {
                return Err(Error::NonFinite("symbol coefficient".into()));
            }
            *map.entry(alpha).or_insert(0.0) += a;
        }
        let mut sym = Self {
            m,
            n,
            coeffs: map,
            ell_const: 0.0,
        };
        sym.ell_const = ellipticity_constant(&sym, samples)?;
        Ok(sym)
    }

    /// `|xi|^{2m}` expanded into monomials.
    pub fn polyharmonic(m: usize, n: usize) -> Result<Self> {
        let mut coeffs = Vec::new();
        let mut parts = vec![0u32; n];
        fill_parts(&mut parts, 0, m as u32, &mut |p| {
            let alpha: Vec<u32> = p.iter().map(|k| 2 * k).collect();
            coeffs.push((alpha, multinomial(p)));
        });
        Self::new(m, n, coeffs)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        2 * self.m
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.coeffs
    }

    pub fn ell_const(&self) -> f64 {
        self.ell_const
    }

    pub fn eval_real(&self, xi: &[f64]) -> f64 {
        self.coeffs.iter().map(|(alpha, a)| a * monomial_real(alpha, xi)).sum()
    }

    /// Expansion of `P(xi - i eta)` as a polynomial in `xi` with complex coefficients.
    pub fn shifted(&self, shift: Option<&ComplexShift>) -> Result<ShiftedSymbol> {
        let eta: Vec<Complex64> = match shift {
            Some(s) => {
                if s.eta.len() != self.n {
                    return Err(Error::DimensionMismatch {
                        expected: self.n,
                        got: s.eta.len(),
                    });
                }
                s.eta.clone()
            }
            None => vec![Complex64::new(0.0, 0.0); self.n],
        };
        let minus_i = Complex64::new(0.0, -1.0);
        let mut terms: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (alpha, &a) in &self.coeffs {
            // prod_j (xi_j - i eta_j)^{alpha_j} = prod_j sum_b C(alpha_j, b) xi_j^b (-i eta_j)^{alpha_j - b}
            let mut partial: Vec<(Vec<u32>, Complex64)> = vec![(Vec::new(), Complex64::new(a, 0.0))];
            for (j, &e) in alpha.iter().enumerate() {
                let base = minus_i * eta[j];
                let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                for (beta, c) in &partial {
                    for b in 0..=e {
                        let coef = *c * binomial(e, b) * base.powu(e - b);
                        if coef.norm() == 0.0 {
                            continue;
                        }
                        let mut beta2 = beta.clone();
                        beta2.push(b);
                        next.push((beta2, coef));
                    }
                }
                partial = next;
            }
            for (beta, c) in partial {
                *terms.entry(beta).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        Ok(ShiftedSymbol {
            n: self.n,
            terms: terms.into_iter().collect(),
        })
    }

    /// Lattice samples of `P(xi - i eta)`.
    pub fn multiplier(&self, spec: &GridSpec, shift: Option<&ComplexShift>) -> Result<Multiplier> {
        if spec.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: spec.n(),
            });
        }
        match shift {
            Some(s) if !s.is_zero() => {
                let sh = self.shifted(Some(s))?;
                Multiplier::new(*spec, |xi| sh.eval_real(xi))
            }
            _ => Multiplier::new(*spec, |xi| Complex64::new(self.eval_real(xi), 0.0)),
        }
    }
}

fn fill_parts(parts: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut impl FnMut(&[u32])) {
    if pos == parts.len() - 1 {
        parts[pos] = remaining;
        out(parts);
        return;
    }
    for k in 0..=remaining {
        parts[pos] = k;
        fill_parts(parts, pos + 1, remaining - k, out);
    }
}

/// Polynomial in `xi` with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedSymbol {
    n: usize,
    terms: Vec<(Vec<u32>, Complex64)>,
}

impl ShiftedSymbol {
    pub fn eval(&self, xi: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|(beta, c)| c * monomial(beta, xi)).sum()
    }

    pub fn eval_real(&self, xi: &[f64]) -> Complex64 {
        self.terms.iter().map(|(beta, c)| c * monomial_real(beta, xi)).sum()
    }

    pub fn terms(&self) -> &[(Vec<u32>, Complex64)] {
        &self.terms
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn eval_symbol(p: &EllipticSymbol, xi: &[Complex64]) -> Complex64 {
    p.coeffs.iter().map(|(alpha, a)| a * monomial(alpha, xi)).sum()
}

fn sphere_point(n: usize, angles: &[f64]) -> [f64; 3] {
    match n {
        1 => [angles[0].signum(), 0.0, 0.0],
        2 => [angles[0].cos(), angles[0].sin(), 0.0],
        _ => {
            let (th, ph) = (angles[0], angles[1]);
            [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
        }
    }
}

/// Minimum of `P` over a deterministic unit-sphere sampling, refined locally around the
/// best samples. Fails with `NonElliptic` if the minimum is not positive.
pub fn ellipticity_constant(p: &EllipticSymbol, samples: usize) -> Result<f64> {
    if samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "{samples} sphere samples, need >= 100"
        )));
    }
    let n = p.n;
    let eval = |angles: &[f64]| p.eval_real(&sphere_point(n, angles)[..n]);
    if n == 1 {
        let min = p.eval_real(&[1.0]).min(p.eval_real(&[-1.0]));
        if min <= 0.0 {
            return Err(Error::NonElliptic { min });
        }
        return Ok(min);
    }
    // (angles, value) for each sample point.
    let mut pts: Vec<(Vec<f64>, f64)> = if n == 2 {
        (0..samples)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / samples as f64;
                (vec![th], eval(&[th]))
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..samples)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / samples as f64;
                let a = vec![z.acos(), golden * k as f64];
                let v = eval(&a);
                (a, v)
            })
            .collect()
    };
    let sampled_min = pts.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    if sampled_min <= 0.0 {
        return Err(Error::NonElliptic { min: sampled_min });
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let spacing = if n == 2 {
        2.0 * PI / samples as f64
    } else {
        (4.0 * PI / samples as f64).sqrt()
    };
    let mut best = sampled_min;
    for (start, v0) in pts.iter().take(8) {
        let (_, v) = pattern_search(&eval, start.clone(), *v0, 2.0 * spacing);
        best = best.min(v);
    }
    if best <= 0.0 {
        return Err(Error::NonElliptic { min: best });
    }
    Ok(best)
}

fn pattern_search(f: &impl Fn(&[f64]) -> f64, mut x: Vec<f64>, mut fx: f64, mut step: f64) -> (Vec<f64>, f64) {
    while step > 1e-12 {
        let mut improved = false;
        for d in 0..x.len() {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] += sgn * step;
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Applies `P(D)` (or `P(D + eta)` when a shift is given) through its multiplier.
pub fn apply_operator(p: &EllipticSymbol, f: &GridFunction, shift: Option<&ComplexShift>) -> Result<GridFunction> {
    if f.spec().n() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            got: f.spec().n(),
        });
    }
    p.multiplier(f.spec(), shift)?.apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        let lap = EllipticSymbol::polyharmonic(1, 1).unwrap();
        assert_eq!(eval_symbol(&lap, &[c(3.0)]), c(9.0));
        let bi = EllipticSymbol::polyharmonic(2, 1).unwrap();
        assert_eq!(eval_symbol(&bi, &[c(2.0)]), c(16.0));
        let p3 = EllipticSymbol::polyharmonic(2, 3).unwrap();
        assert_eq!(eval_symbol(&p3, &[c(0.0); 3]), c(0.0));
        let xi = [1.0, -2.0, 0.5];
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        assert!((p3.eval_real(&xi) - r2 * r2).abs() < 1e-12);
    }

    #[test]
    fn ellipticity_examples() {
        assert!((EllipticSymbol::polyharmonic(1, 2).unwrap().ell_const() - 1.0).abs() < 1e-12);
        let quartic = EllipticSymbol::new(2, 2, vec![(vec![4, 0], 1.0), (vec![0, 4], 1.0)]).unwrap();
        assert!((quartic.ell_const() - 0.5).abs() < 1e-9);
        let degenerate = EllipticSymbol::new(2, 2, vec![(vec![2, 2], 1.0)]);
        assert!(matches!(degenerate, Err(Error::NonElliptic { .. })));
        assert!(EllipticSymbol::new(1, 1, vec![(vec![2], -1.0)]).is_err());
        assert!(EllipticSymbol::new(1, 1, vec![(vec![3], 1.0)]).is_err());
    }

    #[test]
    fn ellipticity_lower_bound_holds_for_random_xi() {
        let syms = [
            EllipticSymbol::new(
                2,
                2,
                vec![
                    (vec![4, 0], 1.0),
                    (vec![2, 2], 0.3),
                    (vec![0, 4], 2.0),
                    (vec![3, 1], 0.4),
                ],
            )
            .unwrap(),
            EllipticSymbol::new(
                1,
                3,
                vec![
                    (vec![2, 0, 0], 1.0),
                    (vec![0, 2, 0], 2.0),
                    (vec![0, 0, 2], 0.7),
                    (vec![1, 1, 0], 0.5),
                ],
            )
            .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in &syms {
            for _ in 0..1000 {
                let xi: Vec<f64> = (0..p.n()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                let lower = p.ell_const() * r2.powi(p.m() as i32) * (1.0 - 1e-9);
                assert!(p.eval_real(&xi) >= lower);
            }
        }
    }

    #[test]
    fn homogeneity() {
        let p = EllipticSymbol::new(2, 2, vec![(vec![4, 0], 1.0), (vec![1, 3], 0.2), (vec![0, 4], 1.5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let cst = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let xi = [
                Complex64::new(rng.gen(), rng.gen()),
                Complex64::new(rng.gen(), -rng.gen::<f64>()),
            ];
            let lhs = eval_symbol(&p, &[cst * xi[0], cst * xi[1]]);
            let rhs = cst.powu(4) * eval_symbol(&p, &xi);
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
        }
    }

    #[test]
    fn shifted_symbol_matches_direct_substitution() {
        let p = EllipticSymbol::new(2, 2, vec![(vec![4, 0], 1.0), (vec![2, 2], 0.6), (vec![0, 4], 1.0)]).unwrap();
        let shift = ComplexShift::new(vec![Complex64::new(0.3, -0.2), Complex64::new(-0.7, 0.1)]).unwrap();
        let sh = p.shifted(Some(&shift)).unwrap();
        let xi = [0.4, -1.3];
        let arg: Vec<Complex64> = xi
            .iter()
            .zip(&shift.eta)
            .map(|(&x, &e)| Complex64::new(x, 0.0) - Complex64::i() * e)
            .collect();
        let direct = eval_symbol(&p, &arg);
        assert!((sh.eval_real(&xi) - direct).norm() < 1e-12);
    }

    #[test]
    fn operator_on_fourier_mode() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let k0 = 3.0 * PI / 8.0;
        let f = GridFunction::from_fn(g, |x| Complex64::from_polar(1.0, k0 * x[0])).unwrap();
        let lap = EllipticSymbol::polyharmonic(1, 1).unwrap();
        let out = apply_operator(&lap, &f, None).unwrap();
        assert!(out.sub(&f.scale(c(k0 * k0))).unwrap().max_abs() < 1e-12);
        let zero = ComplexShift::real(&[0.0]);
        let out0 = apply_operator(&lap, &f, Some(&zero)).unwrap();
        assert!(out0.sub(&out).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn shifted_operator_matches_finite_differences() {
        // e^{-eta x} d^4 (e^{eta x} e^{i xi0 x}) at a point, against the substituted symbol.
        let bi = EllipticSymbol::polyharmonic(2, 1).unwrap();
        let xi0 = 1.3;
        let eta = 0.4;
        let shift = ComplexShift::real(&[eta]);
        let symbol_value = bi.shifted(Some(&shift)).unwrap().eval_real(&[xi0]);
        let g = |x: f64| Complex64::new(eta, xi0).scale(x).exp();
        let x0 = 0.37;
        let mut errs = Vec::new();
        for h in [0.02, 0.01] {
            let d4 = (g(x0 - 2.0 * h) - g(x0 - h) * 4.0 + g(x0) * 6.0 - g(x0 + h) * 4.0 + g(x0 + 2.0 * h)) / h.powi(4);
            let fd = (-eta * x0).exp() * d4 / Complex64::from_polar(1.0, xi0 * x0);
            errs.push((fd - symbol_value).norm());
        }
        assert!(errs[0] < 1e-2 && errs[1] < errs[0] / 3.0);
    }

    #[test]
    fn real_input_gives_real_output() {
        // The odd mixed term breaks symmetry only at the Nyquist mode, so resolve f well past it.
        let g = make_grid(2, 8.0, 128).unwrap();
        let p = EllipticSymbol::new(2, 2, vec![(vec![4, 0], 1.0), (vec![3, 1], 0.3), (vec![0, 4], 1.2)]).unwrap();
        let f = GridFunction::from_real_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() * (1.0 + x[0])).unwrap();
        let out = apply_operator(&p, &f, None).unwrap();
        assert!(out.max_imag() <= 1e-10 * out.max_abs());
    }
}
