use schechter_heat::fit::logspace;
use schechter_heat::grid::make_grid;
use schechter_heat::schechter::{power_membership, scaled_seminorm, PotentialSpec, SchechterParams};

fn main() -> schechter_heat::Result<()> {
    let grid = make_grid(1, 32.0, 4096)?;
    let deltas = logspace(0.25, 4.0, 9);
    let inf = f64::INFINITY;
    // the last case sits exactly on the scaling exponent, so the seminorm is flat
    for (a, alpha, r, t, s) in [
        (-0.25, 0.5, 1.0, inf, 0.0),
        (-0.5, 0.9, 1.0, 8.0, 0.0),
        (-0.25, 0.5, 1.0, inf, -0.25),
    ] {
        let v = PotentialSpec::power(a, 1.0, 1.0)?;
        let params = SchechterParams::new(alpha, r, t, s)?;
        let closed = power_membership(&v, &params, 1)?;
        let numeric = scaled_seminorm(&v, &params, &deltas, &grid)?;
        println!(
            "|x|^{a} (alpha {alpha}, r {r}, t {t}, S {s}): exponent {:.3}, slope {:.3}, numeric {:?}, M {:?}, tilde M {:?}",
            closed.exponent_sum,
            numeric.full_slope.unwrap_or(f64::NAN),
            numeric.verdict,
            closed.in_m,
            closed.in_tilde_m
        );
    }
    Ok(())
}
