use num_complex::Complex64;
use schechter_heat::grid::{make_grid, GridFunction};
use schechter_heat::resolvent::{
    conjugation_residual, dense_resolvent_solve, perturbed_resolvent, NeumannOptions, SpectralPoint,
};
use schechter_heat::schechter::PotentialSpec;
use schechter_heat::symbol::{ComplexShift, EllipticSymbol};

fn main() -> schechter_heat::Result<()> {
    let grid = make_grid(1, 8.0, 64)?;
    let p = EllipticSymbol::polyharmonic(1, 1)?;
    let v = PotentialSpec::shifted_power(-3.0, -1.0, 0.3)?;
    let f = GridFunction::from_real_fn(grid, |x| (-x[0] * x[0]).exp())?;
    let z = SpectralPoint::new(Complex64::new(-3.0, 1.0))?;
    let opts = NeumannOptions::default();

    let (u, diag) = perturbed_resolvent(&p, &v, z, &f, opts, None)?;
    let dense = dense_resolvent_solve(&p, &v, z, &f, None)?;
    println!(
        "Neumann: {} terms, ratio {:.3}, relative gap to dense {:.2e}",
        diag.terms_used,
        diag.contraction_estimate,
        u.sub(&dense)?.l2() / dense.l2()
    );

    let eta = ComplexShift::imaginary(&[std::f64::consts::PI / 8.0]);
    println!(
        "conjugation residual {:.2e}",
        conjugation_residual(&p, &v, z, &eta, &f, opts)?
    );
    Ok(())
}
