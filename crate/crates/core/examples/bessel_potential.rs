use schechter_heat::bessel::{bessel_kernel_checks, BesselParams};
use schechter_heat::grid::make_grid;

fn main() -> schechter_heat::Result<()> {
    let grid = make_grid(1, 48.0, 6144)?;
    for s in [0.5, 1.0, 1.5] {
        let rep = bessel_kernel_checks(BesselParams::new(s, 1.0)?, grid)?;
        println!(
            "s = {s}: scaling {:.2e}, near origin [{:.3}, {:.3}], tail rate {:.3} (fitted {:.3})",
            rep.scaling_violation, rep.near_origin_lower, rep.near_origin_upper, rep.tail_rate, rep.fitted_decay
        );
    }
    Ok(())
}
