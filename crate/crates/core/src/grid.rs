//! Periodic box discretization, grid functions and the lattice Fourier facility.
//!
//! The box is `[-R, R)^n` sampled at `x_j = -R + j h` with `h = 2R/N`. Frequencies
//! are `xi_k = pi k / R` for `k` in `[-N/2, N/2)`, stored in FFT order.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    half_width: f64,
    points: usize,
}

/// Sizes accepted per axis: powers of two, and three times a power of two.
fn fft_friendly(points: usize) -> bool {
    points.is_power_of_two() || (points.is_multiple_of(3) && (points / 3).is_power_of_two())
}

pub fn make_grid(n: usize, half_width: f64, points: usize) -> Result<GridSpec> {
    GridSpec::new(n, half_width, points)
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension {n} not in 1..=3")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        if points < 8 {
            return Err(Error::InvalidGrid(format!("{points} points per axis, need at least 8")));
        }
        if !fft_friendly(points) {
            return Err(Error::InvalidGrid(format!(
                "{points} points per axis is not a power of two (or 3 times one)"
            )));
        }
        Ok(Self { n, half_width, points })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    /// Total number of samples, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Signed wavenumber of FFT slot `j`.
    pub fn axis_wavenumber(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn axis_frequency(&self, j: usize) -> f64 {
        PI * self.axis_wavenumber(j) as f64 / self.half_width
    }

    /// Multi-index of flat index `idx` (last axis fastest).
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.n).rev() {
            out[a] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi[..self.n].iter().fold(0usize, |acc, &j| acc * self.points + j)
    }

    /// Flat index after a periodic shift by `offset` lattice steps per axis.
    pub fn shifted_index(&self, idx: usize, offset: &[i64]) -> usize {
        let multi = self.unravel(idx);
        let np = self.points as i64;
        let mut out = [0usize; 3];
        for a in 0..self.n {
            out[a] = (multi[a] as i64 + offset[a]).rem_euclid(np) as usize;
        }
        self.ravel(&out)
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let multi = self.unravel(idx);
        let mut x = [0.0; 3];
        for a in 0..self.n {
            x[a] = self.axis_coord(multi[a]);
        }
        x
    }

    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let multi = self.unravel(idx);
        let mut xi = [0.0; 3];
        for a in 0..self.n {
            xi[a] = self.axis_frequency(multi[a]);
        }
        xi
    }

    /// Flat index of the lattice point `y`, if it is one.
    pub fn lattice_index(&self, y: &[f64]) -> Result<usize> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        let h = self.spacing();
        let mut multi = [0usize; 3];
        for a in 0..self.n {
            let j = (y[a] + self.half_width) / h;
            let jr = j.round();
            if (j - jr).abs() > 1e-9 || jr < 0.0 || jr >= self.points as f64 {
                return Err(Error::OffLattice(y.to_vec()));
            }
            multi[a] = jr as usize;
        }
        Ok(self.ravel(&multi))
    }

    /// Index of the lattice point at the origin.
    pub fn origin_index(&self) -> usize {
        self.ravel(&[self.points / 2; 3])
    }

    /// True when the sample lies inside the centred window `|x|_inf <= fraction * R`.
    pub fn in_window(&self, idx: usize, fraction: f64) -> bool {
        let x = self.coords(idx);
        x[..self.n]
            .iter()
            .all(|c| c.abs() <= fraction * self.half_width + 1e-12)
    }

    /// Same lattice, box scaled by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.n, self.half_width * factor, self.points)
    }
}

pub fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => {
            let nf = n as f64;
            PI.powf(nf / 2.0) / gamma_half_int(n + 2)
        }
    }
}

// Gamma(k/2) for positive integer k.
fn gamma_half_int(k: usize) -> f64 {
    if k == 1 {
        PI.sqrt()
    } else if k == 2 {
        1.0
    } else {
        (k as f64 / 2.0 - 1.0) * gamma_half_int(k - 2)
    }
}

/// Radius of the ball whose volume equals one grid cell.
pub fn cell_equivalent_radius(spec: &GridSpec) -> f64 {
    (spec.cell_volume() / unit_ball_volume(spec.n())).powf(1.0 / spec.n() as f64)
}

/// Analytic average of `|x|^a` over the origin cell (equal-volume ball for n > 1,
/// exact for n = 1). Requires `a > -n`.
pub fn power_cell_average(a: f64, spec: &GridSpec) -> f64 {
    let n = spec.n() as f64;
    let rho = cell_equivalent_radius(spec);
    n * rho.powf(a) / (n + a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("grid function samples".into()));
        }
        Ok(Self { spec, values })
    }

    pub(crate) fn from_vec_unchecked(spec: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    pub fn constant(spec: GridSpec, c: Complex64) -> Self {
        Self {
            spec,
            values: vec![c; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let values = (0..spec.len()).map(|i| f(&spec.coords(i)[..spec.n()])).collect();
        Self::new(spec, values)
    }

    pub fn from_real_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(spec, |x| Complex64::new(f(x), 0.0))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_vec_unchecked(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn map_indexed(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self::from_vec_unchecked(
            self.spec,
            self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect(),
        )
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_vec_unchecked(
            self.spec,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn axpy(&mut self, c: Complex64, other: &Self) -> Result<()> {
        self.check_same(other)?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Discrete L2 norm with cell weights.
    pub fn l2(&self) -> f64 {
        (self.spec.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Largest |f| on the outer shell `|x|_inf >= 0.9 R` relative to the peak |f|.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let shell = (0..self.spec.len())
            .filter(|&i| self.on_shell_edge(i))
            .map(|i| self.values[i].norm())
            .fold(0.0, f64::max);
        shell / peak
    }

    fn on_shell_edge(&self, idx: usize) -> bool {
        let x = self.spec.coords(idx);
        x[..self.spec.n()]
            .iter()
            .any(|c| c.abs() >= 0.9 * self.spec.half_width() - 1e-12)
    }

    /// Energy computed on the frequency side: `(h^n / N^n) sum |F_k|^2`.
    pub fn spectral_energy(&self) -> f64 {
        let mut data = self.values.clone();
        fft_nd(&mut data, &self.spec, false);
        self.spec.cell_volume() / self.spec.len() as f64 * data.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Flat binary layout: n, N (u64 LE), R (f64 LE), then re/im pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.spec.n() as u64).to_le_bytes())?;
        w.write_all(&(self.spec.points() as u64).to_le_bytes())?;
        w.write_all(&self.spec.half_width().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)
                .map_err(|e| Error::io("<binary grid function>", e))?;
            Ok(word)
        };
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let points = u64::from_le_bytes(next(&mut r)?) as usize;
        let half_width = f64::from_le_bytes(next(&mut r)?);
        let spec = GridSpec::new(n, half_width, points)?;
        let mut values = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            let re = f64::from_le_bytes(next(&mut r)?);
            let im = f64::from_le_bytes(next(&mut r)?);
            values.push(Complex64::new(re, im));
        }
        Self::new(spec, values)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(BufReader::new(file))
    }

    /// CSV with index columns, coordinate columns, re, im.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.spec.n();
        let idx_cols: Vec<String> = (0..n).map(|a| format!("i{a}")).collect();
        let x_cols: Vec<String> = (0..n).map(|a| format!("x{a}")).collect();
        writeln!(w, "{},{},re,im", idx_cols.join(","), x_cols.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let multi = self.spec.unravel(i);
            let x = self.spec.coords(i);
            let idx: Vec<String> = multi[..n].iter().map(|j| j.to_string()).collect();
            let xs: Vec<String> = x[..n].iter().map(|c| format!("{c:.12e}")).collect();
            writeln!(w, "{},{},{:.17e},{:.17e}", idx.join(","), xs.join(","), v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(spec: GridSpec, r: R) -> Result<Self> {
        let n = spec.n();
        let mut values = vec![Complex64::new(0.0, 0.0); spec.len()];
        let mut seen = 0usize;
        for (lineno, line) in BufReader::new(r).lines().enumerate().skip(1) {
            let line = line.map_err(|e| Error::io("<csv grid function>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || Error::config(format!("csv line {}", lineno + 1), "malformed row");
            if cols.len() != 2 * n + 2 {
                return Err(bad());
            }
            let mut multi = [0usize; 3];
            for a in 0..n {
                multi[a] = cols[a].trim().parse().map_err(|_| bad())?;
                if multi[a] >= spec.points() {
                    return Err(bad());
                }
            }
            let re: f64 = cols[2 * n].trim().parse().map_err(|_| bad())?;
            let im: f64 = cols[2 * n + 1].trim().parse().map_err(|_| bad())?;
            values[spec.ravel(&multi)] = Complex64::new(re, im);
            seen += 1;
        }
        if seen != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                got: seen,
            });
        }
        Self::new(spec, values)
    }
}

/// Axis-aligned box or Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetRegion {
    Box { center: Vec<f64>, half_widths: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl SetRegion {
    pub fn interval(lo: f64, hi: f64) -> Self {
        SetRegion::Box {
            center: vec![0.5 * (lo + hi)],
            half_widths: vec![0.5 * (hi - lo)],
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        SetRegion::Ball { center, radius }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            SetRegion::Box { center, .. } | SetRegion::Ball { center, .. } => center,
        }
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        let n = spec.n();
        if self.center().len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.center().len(),
            });
        }
        let r = spec.half_width();
        let reach: Vec<f64> = match self {
            SetRegion::Box { half_widths, .. } => {
                if half_widths.len() != n || half_widths.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::InvalidParameter("box half-widths must be positive".into()));
                }
                half_widths.clone()
            }
            SetRegion::Ball { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("ball radius must be positive".into()));
                }
                vec![*radius; n]
            }
        };
        let intersects = self.center().iter().zip(&reach).all(|(c, w)| c + w > -r && c - w < r);
        if !intersects {
            return Err(Error::InvalidParameter("region does not meet the grid box".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SetRegion::Box { center, half_widths } => x
                .iter()
                .zip(center)
                .zip(half_widths)
                .all(|((xi, c), w)| (xi - c).abs() <= *w + 1e-12),
            SetRegion::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() <= radius + 1e-12
            }
        }
    }

    /// Euclidean distance between two regions (zero if they overlap).
    pub fn distance(&self, other: &SetRegion) -> f64 {
        match (self, other) {
            (SetRegion::Ball { center: c1, radius: r1 }, SetRegion::Ball { center: c2, radius: r2 }) => {
                let d: Vec<f64> = c1.iter().zip(c2).map(|(a, b)| a - b).collect();
                (euclid(&d) - r1 - r2).max(0.0)
            }
            (
                SetRegion::Box {
                    center: c1,
                    half_widths: w1,
                },
                SetRegion::Box {
                    center: c2,
                    half_widths: w2,
                },
            ) => {
                let gaps: Vec<f64> = (0..c1.len())
                    .map(|a| ((c1[a] - c2[a]).abs() - w1[a] - w2[a]).max(0.0))
                    .collect();
                euclid(&gaps)
            }
            (SetRegion::Box { center, half_widths }, SetRegion::Ball { center: cb, radius })
            | (SetRegion::Ball { center: cb, radius }, SetRegion::Box { center, half_widths }) => {
                let gaps: Vec<f64> = (0..center.len())
                    .map(|a| ((cb[a] - center[a]).abs() - half_widths[a]).max(0.0))
                    .collect();
                (euclid(&gaps) - radius).max(0.0)
            }
        }
    }
}

/// Riemann-sum L^p norm, optionally restricted to a region. `p = f64::INFINITY` gives the max.
pub fn lp_norm(f: &GridFunction, p: f64, region: Option<&SetRegion>) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(format!("p = {p} must be >= 1")));
    }
    let spec = f.spec();
    if let Some(r) = region {
        r.validate(spec)?;
    }
    let selected = (0..spec.len()).filter(|&i| match region {
        Some(r) => r.contains(&spec.coords(i)[..spec.n()]),
        None => true,
    });
    if p.is_infinite() {
        return Ok(selected.map(|i| f.values[i].norm()).fold(0.0, f64::max));
    }
    let sum: f64 = selected.map(|i| f.values[i].norm().powf(p)).sum();
    Ok((spec.cell_volume() * sum).powf(1.0 / p))
}

/// Discrete point mass of unit integral at the lattice point `y`.
pub fn delta_at(spec: GridSpec, y: &[f64]) -> Result<GridFunction> {
    let idx = spec.lattice_index(y)?;
    let mut f = GridFunction::zeros(spec);
    f.values[idx] = Complex64::new(1.0 / spec.cell_volume(), 0.0);
    Ok(f)
}

/// Circular convolution `sum_j a_j k_{i-j}` of two real lattice arrays (kernel in FFT layout).
pub(crate) fn circular_convolve(spec: &GridSpec, a: &[f64], kernel: &[f64]) -> Vec<f64> {
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fk: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut fa, spec, false);
    fft_nd(&mut fk, spec, false);
    for (x, y) in fa.iter_mut().zip(&fk) {
        *x *= y;
    }
    fft_nd(&mut fa, spec, true);
    let scale = 1.0 / spec.len() as f64;
    fa.iter().map(|v| v.re * scale).collect()
}

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANNER: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// In-place n-dimensional FFT (unnormalized in both directions).
pub(crate) fn fft_nd(data: &mut [Complex64], spec: &GridSpec, inverse: bool) {
    let np = spec.points();
    let n = spec.n();
    let fft = plan(np, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);
    if n == 1 {
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); np];
    for axis in 0..n - 1 {
        let stride = np.pow((n - 1 - axis) as u32);
        let block = stride * np;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, slot) in line.iter().enumerate() {
                    data[base + j * stride] = *slot;
                }
            }
        }
    }
}

/// Lattice samples of a Fourier multiplier, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl Multiplier {
    pub fn new(spec: GridSpec, sigma: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let values: Vec<Complex64> = (0..spec.len()).map(|i| sigma(&spec.frequency(i)[..spec.n()])).collect();
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("multiplier at a lattice frequency".into()));
        }
        Ok(Self { spec, values })
    }

    pub(crate) fn from_values(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("multiplier at a lattice frequency".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn compose(&self, other: &Multiplier) -> Result<Multiplier> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        Multiplier::from_values(
            self.spec,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        )
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if *f.spec() != self.spec {
            return Err(Error::GridMismatch);
        }
        let mut data = f.values().to_vec();
        self.apply_in_place(&mut data);
        GridFunction::new(self.spec, data)
    }

    pub(crate) fn apply_in_place(&self, data: &mut [Complex64]) {
        fft_nd(data, &self.spec, false);
        let norm = 1.0 / self.spec.len() as f64;
        for (v, m) in data.iter_mut().zip(&self.values) {
            *v *= m * norm;
        }
        fft_nd(data, &self.spec, true);
    }
}

/// `inverse_transform(sigma(xi) * transform(f))`.
pub fn apply_multiplier(f: &GridFunction, sigma: impl Fn(&[f64]) -> Complex64) -> Result<GridFunction> {
    Multiplier::new(*f.spec(), sigma)?.apply(f)
}
