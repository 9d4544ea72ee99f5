use schechter_heat::fit::{log_log_slope, logspace};
use schechter_heat::grid::make_grid;
use schechter_heat::schechter::PotentialSpec;
use schechter_heat::toperator::{t_bound_report, ConditionSet};

fn main() -> schechter_heat::Result<()> {
    let grid = make_grid(1, 32.0, 4096)?;
    let v = PotentialSpec::power(-0.25, 1.0, 1.0)?;
    let cs = ConditionSet::a5(1, 1, 2.0, 0.6, 0.8)?;
    let deltas = logspace(0.5, 5.0, 6);
    let mut emp = Vec::new();
    let mut theo = Vec::new();
    for &d in &deltas {
        let r = t_bound_report(&cs, &v, d, 32, &grid, 7)?;
        println!(
            "delta {d:.3}: ||T|| ~ {:.4e}, bound {:.4e}",
            r.empirical_norm, r.theoretical_value
        );
        emp.push(r.empirical_norm);
        theo.push(r.theoretical_value);
    }
    let e = log_log_slope(&deltas, &emp).map(|f| f.slope);
    let t = log_log_slope(&deltas, &theo).map(|f| f.slope);
    println!("delta exponents: empirical {e:?}, bound {t:?}");
    Ok(())
}
