//! Parseval on a periodic grid and a Fourier multiplier round trip.

use num_complex::Complex64;
use schechter_heat::grid::{apply_multiplier, lp_norm, make_grid, GridFunction};

fn main() -> schechter_heat::Result<()> {
    let grid = make_grid(1, 8.0, 256)?;
    let f = GridFunction::from_real_fn(grid, |x| (-x[0] * x[0]).exp())?;
    println!("h = {}, ||f||_2 = {:.12}", grid.spacing(), lp_norm(&f, 2.0, None)?);
    println!("spectral energy = {:.12}", f.spectral_energy());

    // e^{-|xi|^2/250} followed by its inverse returns f
    let smoothed = apply_multiplier(&f, |xi| Complex64::new((-0.004 * xi[0] * xi[0]).exp(), 0.0))?;
    let back = apply_multiplier(&smoothed, |xi| Complex64::new((0.004 * xi[0] * xi[0]).exp(), 0.0))?;
    println!("round trip error = {:.3e}", back.sub(&f)?.max_abs());
    println!("boundary ratio = {:.3e}", f.boundary_ratio());
    Ok(())
}
