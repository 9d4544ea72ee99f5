//! The semigroup `e^{-tL}` for `L = P(D) + V`, kernel columns and the envelope, Holder and
//! Davies-Gaffney verifiers.

mod contour;
mod dense;
mod dg;
mod envelope;

pub use contour::{contour_apply, minimal_index, ContourDiagnostics, ContourSpec};
pub use dense::{DenseSemigroup, DENSE_LIMIT};
pub use dg::{davies_gaffney_measure, DgOptions, DgReport, DgRow};
pub use envelope::{
    count_violations, envelope_samples, gaussian_envelope_fit, holder_exponent_estimate, EnvelopeFit, EnvelopeOptions,
    HolderReport, KernelColumn,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{delta_at, GridFunction, GridSpec, Multiplier};
use crate::schechter::PotentialSpec;
use crate::symbol::{ComplexShift, EllipticSymbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact multiplier `e^{-tP(xi)}`; only for `V = 0`.
    Spectral,
    Dense,
    Contour,
}

/// Exponent `2m/(2m-1)` of the off-diagonal decay.
pub fn decay_exponent(m: usize) -> f64 {
    2.0 * m as f64 / (2.0 * m as f64 - 1.0)
}

pub fn semigroup_apply(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    t: f64,
    f: &GridFunction,
    method: Method,
    contour: Option<&ContourSpec>,
    shift: Option<&ComplexShift>,
) -> Result<GridFunction> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be positive")));
    }
    match method {
        Method::Spectral => {
            if !v.is_zero() {
                return Err(Error::MethodUnavailable("spectral route requires V = 0".into()));
            }
            let sym = p.multiplier(f.spec(), shift)?;
            let values: Vec<Complex64> = sym.values().iter().map(|s| (-t * s).exp()).collect();
            Multiplier::from_values(*f.spec(), values)?.apply(f)
        }
        Method::Dense => DenseSemigroup::new(p, v, f.spec(), shift)?.apply(t, f),
        Method::Contour => {
            let spec = contour.copied().unwrap_or_default();
            Ok(contour_apply(p, v, t, f, &spec, shift)?.0)
        }
    }
}

/// `p_t(., y) = e^{-tL} delta_y`.
#[allow(clippy::too_many_arguments)]
pub fn kernel_column(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    t: f64,
    y: &[f64],
    grid: &GridSpec,
    method: Method,
    contour: Option<&ContourSpec>,
    shift: Option<&ComplexShift>,
) -> Result<GridFunction> {
    semigroup_apply(p, v, t, &delta_at(*grid, y)?, method, contour, shift)
}
