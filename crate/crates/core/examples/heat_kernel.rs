use schechter_heat::grid::make_grid;
use schechter_heat::heat::{gaussian_envelope_fit, kernel_column, EnvelopeOptions, KernelColumn, Method};
use schechter_heat::schechter::PotentialSpec;
use schechter_heat::symbol::EllipticSymbol;

fn main() -> schechter_heat::Result<()> {
    let grid = make_grid(1, 32.0, 1024)?;
    let v = PotentialSpec::shifted_power(-3.0, -1.0, 0.1)?;
    for m in [1, 2] {
        let p = EllipticSymbol::polyharmonic(m, 1)?;
        let columns = [0.25, 0.5, 1.0, 2.0]
            .iter()
            .map(|&t| {
                let values = kernel_column(&p, &v, t, &[0.0], &grid, Method::Contour, None, None)?;
                Ok(KernelColumn {
                    t,
                    y: vec![0.0],
                    values,
                })
            })
            .collect::<schechter_heat::Result<Vec<_>>>()?;
        let fit = gaussian_envelope_fit(&columns, m, &EnvelopeOptions::default())?;
        println!(
            "m = {m}: C = {:.4}, c = {:.4}, w = {}, exponent {:.4}, violations {}",
            fit.c_const, fit.c_fit, fit.w, fit.exponent_used, fit.n_viol
        );
    }
    Ok(())
}
