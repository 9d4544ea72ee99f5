//! Dense matrix exponential of the discretised operator, for small lattices.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::resolvent::dense_operator;
use crate::schechter::PotentialSpec;
use crate::symbol::{ComplexShift, EllipticSymbol};

pub const DENSE_LIMIT: usize = 4096;

/// The matrix of `P_eta(D) + V`, kept for repeated exponentials. Hermitian matrices reuse one
/// eigendecomposition across `t`; others go through scaling and squaring.
pub struct DenseSemigroup {
    spec: GridSpec,
    l: DMatrix<Complex64>,
    hermitian: bool,
    eigen: OnceLock<SymmetricEigen<Complex64, nalgebra::Dyn>>,
}

impl DenseSemigroup {
    pub fn new(p: &EllipticSymbol, v: &PotentialSpec, spec: &GridSpec, shift: Option<&ComplexShift>) -> Result<Self> {
        if spec.len() > DENSE_LIMIT {
            return Err(Error::MethodUnavailable(format!(
                "dense route needs at most {DENSE_LIMIT} lattice points, got {}",
                spec.len()
            )));
        }
        let l = dense_operator(p, v, spec, shift)?;
        let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let skew = (0..l.nrows())
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (l[(i, j)] - l[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        let diag_imag = l.diagonal().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        Ok(Self {
            spec: *spec,
            hermitian: skew.max(diag_imag) <= 1e-12 * scale.max(1.0),
            l,
            eigen: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.l
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `exp(-t L)`.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        if !self.hermitian {
            return (&self.l * Complex64::new(-t, 0.0)).exp();
        }
        let eig = self.eigen.get_or_init(|| SymmetricEigen::new(self.l.clone()));
        let mut q = eig.eigenvectors.clone();
        for (j, lam) in eig.eigenvalues.iter().enumerate() {
            let e = (-t * lam).exp();
            q.column_mut(j).scale_mut(e);
        }
        q * eig.eigenvectors.adjoint()
    }

    /// `exp(-t L)` by scaling and squaring regardless of symmetry.
    pub fn propagator_pade(&self, t: f64) -> DMatrix<Complex64> {
        (&self.l * Complex64::new(-t, 0.0)).exp()
    }

    pub fn apply(&self, t: f64, f: &GridFunction) -> Result<GridFunction> {
        if *f.spec() != self.spec {
            return Err(Error::GridMismatch);
        }
        let x = DVector::from_column_slice(f.values());
        let u = if self.hermitian {
            let eig = self.eigen.get_or_init(|| SymmetricEigen::new(self.l.clone()));
            let mut c = eig.eigenvectors.adjoint() * x;
            for (ci, lam) in c.iter_mut().zip(eig.eigenvalues.iter()) {
                *ci *= (-t * lam).exp();
            }
            &eig.eigenvectors * c
        } else {
            self.propagator_pade(t) * x
        };
        GridFunction::new(self.spec, u.iter().copied().collect())
    }
}
