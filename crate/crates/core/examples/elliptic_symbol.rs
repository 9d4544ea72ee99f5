use schechter_heat::grid::{make_grid, GridFunction};
use schechter_heat::symbol::{apply_operator, ellipticity_constant, EllipticSymbol};

fn main() -> schechter_heat::Result<()> {
    // xi1^4 + 2 xi1^2 xi2^2 + xi2^4 = |xi|^4
    let p = EllipticSymbol::new(2, 2, vec![(vec![4, 0], 1.0), (vec![2, 2], 2.0), (vec![0, 4], 1.0)])?;
    println!(
        "order {}, ellipticity constant {:.6}",
        p.order(),
        ellipticity_constant(&p, 512)?
    );

    let skew = EllipticSymbol::new(2, 2, vec![(vec![4, 0], 1.0), (vec![0, 4], 1.0)])?;
    println!("xi1^4 + xi2^4: lambda = {:.6} (1/2 expected)", skew.ell_const());

    let grid = make_grid(2, 8.0, 64)?;
    let f = GridFunction::from_real_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1])).exp())?;
    let lf = apply_operator(&p, &f, None)?;
    println!("||Delta^2 f||_inf = {:.6}", lf.max_abs());
    Ok(())
}
