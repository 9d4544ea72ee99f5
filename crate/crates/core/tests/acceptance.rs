//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schechter_heat::bessel::{apply_bessel, bessel_kernel_checks, BesselParams};
use schechter_heat::fit::{log_log_slope, logspace};
use schechter_heat::grid::{apply_multiplier, delta_at, lp_norm, make_grid, GridFunction, GridSpec, SetRegion};
use schechter_heat::heat::{
    count_violations, davies_gaffney_measure, gaussian_envelope_fit, holder_exponent_estimate, kernel_column,
    semigroup_apply, ContourSpec, DgOptions, EnvelopeOptions, KernelColumn, Method,
};
use schechter_heat::resolvent::{
    conjugation_residual, dense_resolvent_solve, free_resolvent, perturbed_resolvent, NeumannOptions, SpectralPoint,
};
use schechter_heat::schechter::{schechter_norm, PotentialSpec, SchechterParams};
use schechter_heat::symbol::{ComplexShift, EllipticSymbol};
use schechter_heat::toperator::{check_conditions, t_bound_report, ConditionSet};
use schechter_heat::Result;

type Check = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Check);

fn lap(m: usize, n: usize) -> Result<EllipticSymbol> {
    EllipticSymbol::polyharmonic(m, n)
}

fn rel(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    Ok(a.sub(b)?.l2() / b.l2())
}

fn columns(
    p: &EllipticSymbol,
    v: &PotentialSpec,
    times: &[f64],
    grid: &GridSpec,
    method: Method,
) -> Result<Vec<KernelColumn>> {
    let y = vec![0.0; grid.n()];
    times
        .iter()
        .map(|&t| {
            Ok(KernelColumn {
                t,
                y: y.clone(),
                values: kernel_column(p, v, t, &y, grid, method, None, None)?,
            })
        })
        .collect()
}

fn oracle_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let g = make_grid(1, 16.0, 256)?;
    let f = delta_at(g, &[0.0])?;
    for m in [1, 2] {
        let p = lap(m, 1)?;
        for t in [0.1, 0.5, 1.0] {
            let start = Instant::now();
            let a = semigroup_apply(&p, &PotentialSpec::zero(), t, &f, Method::Spectral, None, None)?;
            let b = semigroup_apply(&p, &PotentialSpec::zero(), t, &f, Method::Contour, None, None)?;
            worst = worst.max(rel(&b, &a)?);
            slowest = slowest.max(start.elapsed());
        }
    }
    let g = make_grid(1, 8.0, 64)?;
    let f = delta_at(g, &[0.0])?;
    let v = PotentialSpec::shifted_power(-3.0, -1.0, 0.3)?;
    let mut worst_dense: f64 = 0.0;
    for t in [0.1, 0.5, 1.0] {
        let start = Instant::now();
        let a = semigroup_apply(&lap(1, 1)?, &v, t, &f, Method::Dense, None, None)?;
        let b = semigroup_apply(&lap(1, 1)?, &v, t, &f, Method::Contour, None, None)?;
        worst_dense = worst_dense.max(rel(&b, &a)?);
        slowest = slowest.max(start.elapsed());
    }
    Ok((
        worst <= 1e-6 && worst_dense <= 1e-6 && slowest.as_secs_f64() <= 60.0,
        format!("contour/spectral {worst:.2e}, contour/dense {worst_dense:.2e}, slowest case {slowest:.2?}"),
    ))
}

fn gaussian_envelope() -> Check {
    let g = make_grid(1, 32.0, 1024)?;
    let times = [0.25, 0.5, 1.0, 2.0];
    let opts = EnvelopeOptions::default();
    let zero = PotentialSpec::zero();

    let c1 = columns(&lap(1, 1)?, &zero, &times, &g, Method::Spectral)?;
    let f1 = gaussian_envelope_fit(&c1, 1, &opts)?;
    let ok1 = f1.exponent_used == 2.0 && (0.2..=0.25).contains(&f1.c_fit) && count_violations(&f1, &c1, &opts) == 0;

    let c2 = columns(&lap(2, 1)?, &zero, &times, &g, Method::Spectral)?;
    let f2 = gaussian_envelope_fit(&c2, 2, &opts)?;
    let ok2 = (f2.exponent_used - 4.0 / 3.0).abs() < 1e-12 && f2.c_fit > 0.0 && count_violations(&f2, &c2, &opts) == 0;

    let v = PotentialSpec::shifted_power(-3.0, -1.0, 0.1)?;
    let c3 = columns(&lap(1, 1)?, &v, &times, &g, Method::Contour)?;
    let f3 = gaussian_envelope_fit(&c3, 1, &opts)?;
    let ok3 = f3.w == 0.0 && f3.c_fit > 0.0 && count_violations(&f3, &c3, &opts) == 0;

    Ok((
        ok1 && ok2 && ok3,
        format!(
            "m=1 c={:.4}; m=2 c={:.4} at exponent {:.4}; perturbed c={:.4} w={}",
            f1.c_fit, f2.c_fit, f2.exponent_used, f3.c_fit, f3.w
        ),
    ))
}

fn holder_bound() -> Check {
    let start = Instant::now();
    let g = make_grid(2, 10.0, 48)?;
    let v = PotentialSpec::shifted_power(-3.0, -1.0, 0.1)?;
    let col = columns(&lap(1, 2)?, &v, &[4.0], &g, Method::Contour)?;
    let rep = holder_exponent_estimate(&col, &[1, 2, 3, 4], 1, 0.1, &EnvelopeOptions::default())?;
    let feasible = rep.envelope.as_ref().is_some_and(|e| e.n_viol == 0);
    let elapsed = start.elapsed();
    Ok((
        rep.slope > 0.5 && feasible && elapsed.as_secs_f64() <= 600.0,
        format!(
            "increment slope {:.3} (R2 {:.4}), envelope feasible {feasible}, {elapsed:.2?}",
            rep.slope, rep.r2
        ),
    ))
}

fn davies_gaffney() -> Check {
    let e = SetRegion::interval(-1.0, 0.0);
    let f = SetRegion::interval(2.0, 3.0);
    let g = make_grid(1, 16.0, 1024)?;
    let r1 = davies_gaffney_measure(
        &lap(1, 1)?,
        &PotentialSpec::zero(),
        &e,
        &f,
        &logspace(0.05, 0.5, 8),
        &g,
        &DgOptions::default(),
    )?;
    let ok1 = (r1.c5 - 0.25).abs() <= 0.05 && r1.r2 >= 0.99;

    let g = make_grid(1, 8.0, 512)?;
    let opts = DgOptions {
        method: Method::Dense,
        local: true,
        ..DgOptions::default()
    };
    let v = PotentialSpec::power(-0.5, -1.0, 1.0)?;
    let r2 = davies_gaffney_measure(&lap(2, 1)?, &v, &e, &f, &logspace(0.001, 0.05, 10), &g, &opts)?;
    let ok2 = r2.c5 > 0.0 && r2.r2 >= 0.95;
    Ok((
        ok1 && ok2,
        format!(
            "m=1 c5={:.4} R2={:.5}; m=2 local c5={:.4} R2={:.4} w={:.3}",
            r1.c5,
            r1.r2,
            r2.c5,
            r2.r2,
            r2.w.unwrap_or(f64::NAN)
        ),
    ))
}

fn scaling_exponents() -> Check {
    let g = make_grid(1, 32.0, 8192)?;
    let inf = f64::INFINITY;
    let tuples = [
        (-0.25, 0.5, 1.0, inf),
        (-0.5, 0.9, 1.0, inf),
        (-0.1, 0.8, 2.0, inf),
        (-0.6, 0.9, 1.0, 4.0),
        (-0.5, 0.9, 1.0, 8.0),
        (-0.4, 0.95, 2.0, 4.0),
    ];
    let deltas = logspace(0.25, 4.0, 9);
    let mut worst: f64 = 0.0;
    for (a, alpha, r, t) in tuples {
        let v = PotentialSpec::power(a, 1.0, 1.0)?;
        let p = SchechterParams::new(alpha, r, t, 0.0)?;
        let ms = deltas
            .iter()
            .map(|&d| schechter_norm(&v, &p, d, &g))
            .collect::<Result<Vec<_>>>()?;
        let slope = log_log_slope(&deltas, &ms).map_or(f64::NAN, |f| f.slope);
        let want = alpha / r + a + 1.0 / t;
        worst = worst.max(((slope - want) / want).abs());
    }
    Ok((
        worst <= 0.05,
        format!("worst relative slope error {worst:.4} over {} tuples", tuples.len()),
    ))
}

fn condition_exponents() -> Check {
    let g = make_grid(1, 32.0, 4096)?;
    let lambdas = logspace(0.25, 16.0, 12);
    let cs = ConditionSet::a5(1, 1, 2.0, 0.6, 0.8)?;
    let mut worst: f64 = 0.0;
    for a in [-0.1, -0.25, -0.35] {
        let rep = check_conditions(&cs, &PotentialSpec::power(a, 1.0, 1.0)?, &lambdas, &g)?;
        let want = -a - 2.0;
        let got = rep.fitted_exponent.unwrap_or(f64::NAN);
        worst = worst.max(((got - want) / want).abs());
    }
    let s1 = ConditionSet::a3(1, 3, 1.4, 1.4, 2.0, 1.5)?.s_index;
    let s3 = ConditionSet::a3(1, 3, 1.2, 1.2, 2.0, 1.5)?.s_index;
    Ok((
        worst <= 0.05 && s1 == 0.0 && s3 == 0.0,
        format!("A5 worst relative exponent error {worst:.4}; A3 at t = n/2m: S2 = {s1} (q = 1.4), {s3} (q = 1.2)"),
    ))
}

fn t_operator_ordering() -> Check {
    let g = make_grid(1, 32.0, 4096)?;
    let deltas = logspace(0.5, 5.0, 6);
    let cases = [
        (
            ConditionSet::a2(1, 1, 1.25, 1.25, 0.95, 0.9)?,
            PotentialSpec::power(-0.5, 1.0, 1.0)?,
        ),
        (
            ConditionSet::a3(1, 1, 2.0, 2.0, 0.5, f64::INFINITY)?,
            PotentialSpec::shifted_power(-3.0, -1.0, 0.3)?,
        ),
        (
            ConditionSet::a4(1, 1, 2.0, 0.4, 0.5, f64::INFINITY)?,
            PotentialSpec::power(-0.2, 1.0, 1.0)?,
        ),
        (
            ConditionSet::a5(1, 1, 2.0, 0.6, 0.8)?,
            PotentialSpec::power(-0.25, 1.0, 1.0)?,
        ),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (cs, v) in &cases {
        let rows = deltas
            .iter()
            .map(|&d| t_bound_report(cs, v, d, 32, &g, 7))
            .collect::<Result<Vec<_>>>()?;
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio.unwrap_or(f64::INFINITY)).collect();
        let constant = ratios.iter().cloned().fold(0.0, f64::max);
        let ordered = constant.is_finite()
            && rows
                .iter()
                .all(|r| r.empirical_norm <= constant * r.theoretical_value * (1.0 + 1e-12));
        let emp: Vec<f64> = rows.iter().map(|r| r.empirical_norm).collect();
        let theo: Vec<f64> = rows.iter().map(|r| r.theoretical_value).collect();
        let se = log_log_slope(&deltas, &emp).map_or(f64::NAN, |f| f.slope);
        let st = log_log_slope(&deltas, &theo).map_or(f64::NAN, |f| f.slope);
        ok &= ordered && se >= st - 0.1;
        notes.push(format!("{} C={constant:.3} slopes {se:.3}/{st:.3}", cs.branch));
    }
    Ok((ok, notes.join("; ")))
}

fn resolvent_suite() -> Check {
    let g = make_grid(1, 8.0, 64)?;
    let p = lap(1, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut free_viol = 0;
    let mut drawn = 0;
    while drawn < 100 {
        let z = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let Ok(sp) = SpectralPoint::new(z) else { continue };
        let vals = (0..g.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = GridFunction::new(g, vals)?;
        if free_resolvent(&p, sp, &f, None)?.l2() > f.l2() / sp.distance() * (1.0 + 1e-12) {
            free_viol += 1;
        }
        drawn += 1;
    }

    let f = GridFunction::from_real_fn(g, |x| (-x[0] * x[0]).exp() * (1.2 + x[0].sin()))?;
    let opts = NeumannOptions::default();
    let potentials = [
        PotentialSpec::constant(0.1)?,
        PotentialSpec::shifted_power(-3.0, -1.0, 0.3)?,
        PotentialSpec::power(-0.5, -1.0, 0.5)?,
    ];
    let points = [
        Complex64::new(-4.0, 0.0),
        Complex64::new(-1.0, 2.0),
        Complex64::new(3.0, 1.0),
    ];
    let mut worst_neumann: f64 = 0.0;
    let mut checked = 0;
    for v in &potentials {
        for &z in &points {
            let sp = SpectralPoint::new(z)?;
            let (u, diag) = perturbed_resolvent(&p, v, sp, &f, opts, None)?;
            if diag.contraction_estimate < 0.9 {
                let d = dense_resolvent_solve(&p, v, sp, &f, None)?;
                worst_neumann = worst_neumann.max(rel(&u, &d)?);
                checked += 1;
            }
        }
    }

    let z = SpectralPoint::real(-4.0)?;
    let mut worst_zero: f64 = 0.0;
    let mut worst_const: f64 = 0.0;
    for k in [1.0, -2.0, 3.0, 5.0, -7.0] {
        let eta = ComplexShift::imaginary(&[k * PI / 8.0]);
        worst_zero = worst_zero.max(conjugation_residual(&p, &PotentialSpec::zero(), z, &eta, &f, opts)?);
        worst_const = worst_const.max(conjugation_residual(
            &p,
            &PotentialSpec::constant(0.1)?,
            z,
            &eta,
            &f,
            opts,
        )?);
    }
    Ok((
        free_viol == 0 && checked > 0 && worst_neumann <= 1e-8 && worst_zero < 1e-9 && worst_const < 10.0 * opts.tol,
        format!(
            "free bound violations {free_viol}/100; Neumann vs dense {worst_neumann:.2e} over {checked} solves; conjugation {worst_zero:.2e} (V=0), {worst_const:.2e} (V=0.1)"
        ),
    ))
}

fn invariant_suites() -> Check {
    let start = Instant::now();
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };

    let g2 = make_grid(2, 4.0, 16)?;
    let f = GridFunction::from_fn(g2, |x| Complex64::new(x[0].cos() * x[1], (x[0] * x[1]).sin()))?;
    let energy = lp_norm(&f, 2.0, None)?.powi(2);
    check("parseval", (energy - f.spectral_energy()).abs() <= 1e-10 * energy);

    let g1 = make_grid(1, 8.0, 128)?;
    let bump = GridFunction::from_real_fn(g1, |x| (-(x[0] - 0.5).powi(2)).exp() * (1.2 + x[0].sin()))?;
    let s1 = |xi: &[f64]| Complex64::new(1.0 / (1.0 + xi[0] * xi[0]), xi[0] * 0.1);
    let s2 = |xi: &[f64]| Complex64::new((-0.1 * xi[0] * xi[0]).exp(), 0.0);
    let two_step = apply_multiplier(&apply_multiplier(&bump, s1)?, s2)?;
    let product = apply_multiplier(&bump, |xi: &[f64]| s1(xi) * s2(xi))?;
    check("multiplier composition", rel(&two_step, &product)? <= 1e-12);

    let g = make_grid(2, 6.0, 32)?;
    let f = GridFunction::from_real_fn(g, |x| (-(x[0] - 1.0).powi(2) - x[1] * x[1]).exp())?;
    let a = apply_bessel(BesselParams::new(0.7, 1.3)?, &f)?;
    let ab = apply_bessel(BesselParams::new(1.1, 1.3)?, &a)?;
    let direct = apply_bessel(BesselParams::new(1.8, 1.3)?, &f)?;
    check("bessel semigroup in s", rel(&ab, &direct)? <= 1e-10);

    let rep = bessel_kernel_checks(BesselParams::new(2.0, 2.0)?, make_grid(1, 32.0, 2048)?)?;
    check("bessel scaling", rep.scaling_violation < 1e-6);

    let gs = make_grid(1, 16.0, 1024)?;
    let v = PotentialSpec::power(-0.3, 1.0, 1.0)?;
    let p = SchechterParams::new(0.6, 1.3, f64::INFINITY, 0.0)?;
    for c in [0.05, 3.0, 40.0] {
        let m1 = schechter_norm(&v, &p, 0.7, &gs)?;
        let mc = schechter_norm(&v.scaled_by(c), &p, 0.7, &gs)?;
        check("schechter homogeneity", (mc - c * m1).abs() <= 1e-10 * c * m1);
    }

    let ge = make_grid(1, 32.0, 8192)?;
    let v = PotentialSpec::shifted_power(-2.0, 1.0, 1.0)?;
    let (alpha, a1, r, s) = (0.8, 0.3, 1.5, 0.1);
    let big = SchechterParams::new(alpha, r, 4.0, s)?;
    let small = SchechterParams::new(alpha - a1, r, 4.0, s + a1 / r)?;
    for d in logspace(0.25, 1.0, 5) {
        let lhs = d.powf(big.s_index) * schechter_norm(&v, &big, d, &ge)?;
        let rhs = d.powf(small.s_index) * schechter_norm(&v, &small, d, &ge)?;
        check("embedding", lhs <= rhs * (1.0 + 1e-12));
    }

    let v = PotentialSpec::shifted_power(-3.0, -1.0, 0.3)?;
    let l = lap(1, 1)?;
    for (method, pot) in [(Method::Spectral, PotentialSpec::zero()), (Method::Dense, v.clone())] {
        let a = semigroup_apply(&l, &pot, 0.75, &bump, method, None, None)?;
        let b = semigroup_apply(&l, &pot, 0.45, &bump, method, None, None)?;
        let c = semigroup_apply(&l, &pot, 0.3, &b, method, None, None)?;
        check("semigroup law", rel(&c, &a)? < 1e-8);
    }

    for t in [0.1, 1.0] {
        let base = semigroup_apply(&l, &v, t, &bump, Method::Contour, None, None)?;
        let spec = ContourSpec {
            l: Some(2),
            ..ContourSpec::default()
        };
        let higher = semigroup_apply(&l, &v, t, &bump, Method::Contour, Some(&spec), None)?;
        check("contour index stability", rel(&higher, &base)? < 1e-8);
    }

    failed.dedup();
    let elapsed = start.elapsed();
    Ok((
        failed.is_empty() && elapsed.as_secs_f64() <= 1800.0,
        if failed.is_empty() {
            format!("all suites hold ({elapsed:.2?})")
        } else {
            format!("failed: {}", failed.join(", "))
        },
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("gaussian envelope", gaussian_envelope),
        ("holder bound", holder_bound),
        ("davies-gaffney", davies_gaffney),
        ("schechter scaling exponents", scaling_exponents),
        ("condition-checker exponents", condition_exponents),
        ("t-operator ordering", t_operator_ordering),
        ("resolvent suite", resolvent_suite),
        ("invariant suites", invariant_suites),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!(
            "criterion {} {name}: {} ({detail}) [{:.2?}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
