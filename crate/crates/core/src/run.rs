//! Task dispatch for the command line front end.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{
    family_name, ClassifyTask, ConditionsTask, DgTask, HeatTask, Prepared, ResolventTask, RunConfig, TnormTask,
};
use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::grid::{delta_at, GridFunction};
use crate::heat::{
    davies_gaffney_measure, decay_exponent, envelope_samples, gaussian_envelope_fit, holder_exponent_estimate,
    kernel_column, DenseSemigroup, DgOptions, KernelColumn, Method,
};
use crate::report::{sha256_hex, Plot, Provenance, RunReport, Status, Table};
use crate::resolvent::{
    conjugation_residual, dense_resolvent_solve, free_resolvent, perturbed_resolvent, SpectralPoint,
};
use crate::schechter::{power_membership, scaled_seminorm, ClassVerdict, Membership, SchechterParams};
use crate::symbol::ComplexShift;
use crate::toperator::{check_conditions, t_bound_report, ConditionStatus};

/// Grids above this size skip the dense cross-check in `resolvent-check`.
const DENSE_CHECK_LIMIT: usize = 1024;

struct Outcome {
    pass: bool,
    payload: Value,
    warnings: Vec<String>,
    tables: Vec<Table>,
    plots: Vec<Plot>,
}

impl Outcome {
    fn new(pass: bool, payload: Value) -> Self {
        Self {
            pass,
            payload,
            warnings: Vec::new(),
            tables: Vec::new(),
            plots: Vec::new(),
        }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Validates `config`, runs its task and assembles the report. Only configuration problems
/// are returned as `Err`; task failures land in the report with `Status::Error`.
pub fn run_experiment(config: RunConfig, base: &Path) -> Result<RunReport> {
    let prepared = config.prepare(base)?;
    let start = Instant::now();
    let outcome = match prepared.task {
        "classify" => classify(&prepared, prepared.config.task.classify.as_ref().unwrap()),
        "tnorm" => tnorm(&prepared, prepared.config.task.tnorm.as_ref().unwrap()),
        "resolvent-check" => resolvent_check(&prepared, prepared.config.task.resolvent_check.as_ref().unwrap()),
        "heat" => heat(&prepared, prepared.config.task.heat.as_ref().unwrap()),
        "dg" => dg(&prepared, prepared.config.task.dg.as_ref().unwrap()),
        "conditions" => conditions(&prepared, prepared.config.task.conditions.as_ref().unwrap()),
        other => Err(Error::config("task", format!("unknown task {other}"))),
    };
    let wall = start.elapsed().as_secs_f64();
    let (status, out, error) = match outcome {
        Ok(o) => (if o.pass { Status::Pass } else { Status::Fail }, o, None),
        Err(e) => (Status::Error, Outcome::new(false, Value::Null), Some(e.to_string())),
    };
    let payload_bytes = serde_json::to_vec(&out.payload).unwrap_or_default();
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    Ok(RunReport {
        task: prepared.task.to_string(),
        status,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: prepared.hash.clone(),
            seed: prepared.config.seed,
            payload_hash: sha256_hex(&payload_bytes),
            wall_time_s: wall,
            timestamp,
            threads: rayon::current_num_threads(),
        },
        config: prepared.config,
        payload: out.payload,
        warnings: out.warnings,
        error,
        tables: out.tables,
        plots: out.plots,
    })
}

fn classify(p: &Prepared, task: &ClassifyTask) -> Result<Outcome> {
    let params = SchechterParams::new(task.alpha, task.r, task.t, task.s_index)?;
    let n = p.grid.n();
    let deltas = task.deltas.values();
    let numeric = scaled_seminorm(&p.potential, &params, &deltas, &p.grid)?;
    let analytic = if p.potential.is_power_family() {
        Some(power_membership(&p.potential, &params, n)?)
    } else {
        None
    };
    let expected = analytic.as_ref().and_then(|a| match (a.in_tilde_m, a.in_m) {
        (Membership::Member, _) => Some(ClassVerdict::InTilde),
        (_, Membership::Member) => Some(ClassVerdict::InM),
        (Membership::NonMember, Membership::NonMember) => Some(ClassVerdict::Out),
        _ => None,
    });
    let agree = expected.map(|e| e == numeric.verdict);
    let mut out = Outcome::new(
        agree.unwrap_or(true),
        json!({
            "family": family_name(p.potential.family),
            "numeric": numeric,
            "analytic": analytic,
            "expected_verdict": expected,
            "agree": agree,
        }),
    );
    if numeric.clamped {
        out.warnings
            .push("weight clamps at some scales: alpha exceeds the dimension there".into());
    }
    if expected.is_none() {
        out.warnings
            .push("no closed-form verdict for this potential; numeric evidence only".into());
    }
    let mut t = Table::new("samples", &["delta", "M", "scaled"]);
    for s in &numeric.samples {
        t.push(vec![s.delta, s.m_value, s.scaled]);
    }
    out.tables.push(t);
    Ok(out)
}

fn tnorm(p: &Prepared, task: &TnormTask) -> Result<Outcome> {
    let cs = task.branch.condition_set(p.symbol.m(), p.grid.n(), "task.tnorm")?;
    let deltas = task.deltas.values();
    let rows = deltas
        .iter()
        .map(|&d| t_bound_report(&cs, &p.potential, d, task.trials, &p.grid, p.config.seed))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    if ratios.len() != rows.len() {
        return Err(Error::InvalidParameter(
            "theoretical bound vanished or diverged at some scale".into(),
        ));
    }
    let fitted_constant = ratios.iter().cloned().fold(0.0, f64::max);
    let spread = fitted_constant / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let emp: Vec<f64> = rows.iter().map(|r| r.empirical_norm).collect();
    let theo: Vec<f64> = rows.iter().map(|r| r.theoretical_value).collect();
    let emp_slope = log_log_slope(&deltas, &emp).map(|f| f.slope);
    let theo_slope = log_log_slope(&deltas, &theo).map(|f| f.slope);
    let exponent_ok = match (emp_slope, theo_slope) {
        (Some(e), Some(t)) => e >= t - task.exponent_slack,
        _ => false,
    };
    let ordering_ok = rows
        .iter()
        .all(|r| r.empirical_norm <= fitted_constant * r.theoretical_value * (1.0 + 1e-12));
    let mut out = Outcome::new(
        exponent_ok && ordering_ok,
        json!({
            "branch": cs.branch,
            "condition_set": cs,
            "delta_power": cs.delta_power(),
            "fitted_constant": fitted_constant,
            "ratio_spread": spread,
            "empirical_exponent": emp_slope,
            "theoretical_exponent": theo_slope,
            "exponent_slack": task.exponent_slack,
            "rows": rows,
        }),
    );
    let mut t = Table::new("tnorm", &["delta", "empirical", "theoretical", "ratio"]);
    for (r, ratio) in rows.iter().zip(&ratios) {
        t.push(vec![r.delta, r.empirical_norm, r.theoretical_value, *ratio]);
    }
    out.tables.push(t);
    Ok(out)
}

fn conditions(p: &Prepared, task: &ConditionsTask) -> Result<Outcome> {
    let cs = task.branch.condition_set(p.symbol.m(), p.grid.n(), "task.conditions")?;
    let rep = check_conditions(&cs, &p.potential, &task.lambdas.values(), &p.grid)?;
    let mut out = Outcome::new(rep.status != ConditionStatus::Fail, to_value(&rep));
    if rep.status == ConditionStatus::Local {
        out.warnings.push(format!(
            "conditions hold only for |lambda| > {}",
            rep.w.unwrap_or(f64::NAN) / 2.0
        ));
    }
    let mut t = Table::new("conditions", &["lambda_abs", "M_value"]);
    for s in &rep.samples {
        t.push(vec![s.lambda_abs, s.m_value]);
    }
    out.tables.push(t);
    Ok(out)
}

fn resolvent_check(p: &Prepared, task: &ResolventTask) -> Result<Outcome> {
    let grid = p.grid;
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(p.config.seed);

    // free bound ||(z - P)^{-1} f|| <= ||f|| / d(z, [0, inf)) on random data
    let mut free = Table::new("free_bound", &["re", "im", "ratio", "bound"]);
    let mut free_viol = 0usize;
    while free.rows.len() < task.points {
        let z = Complex64::new(
            rng.gen_range(-task.zmax..task.zmax),
            rng.gen_range(-task.zmax..task.zmax),
        );
        let Ok(sp) = SpectralPoint::new(z) else { continue };
        if sp.distance() < 1e-3 {
            continue;
        }
        let vals = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = GridFunction::new(grid, vals)?;
        let u = free_resolvent(&p.symbol, sp, &f, None)?;
        let ratio = u.l2() / f.l2();
        let bound = 1.0 / sp.distance();
        if ratio > bound * (1.0 + 1e-12) {
            free_viol += 1;
        }
        free.push(vec![z.re, z.im, ratio, bound]);
    }

    let f = GridFunction::from_real_fn(grid, |x| {
        let r2: f64 = x[..n].iter().map(|c| c * c).sum();
        (-r2).exp() * (1.2 + x[0].sin())
    })?;
    let opts = task.neumann;
    let mut warnings = Vec::new();
    let mut per_z = Table::new(
        "resolvent",
        &[
            "re",
            "im",
            "contraction",
            "terms",
            "residual",
            "dense_rel_err",
            "max_conjugation",
        ],
    );
    let mut neumann_rows = Vec::new();
    let mut neumann_ok = true;
    let mut conj_ok = true;
    let conj_tol = if p.potential.is_zero() { 1e-9 } else { 10.0 * opts.tol };
    for zz in &task.z {
        let sp = SpectralPoint::new(Complex64::new(zz[0], zz[1]))?;
        let (u, diag) = perturbed_resolvent(&p.symbol, &p.potential, sp, &f, opts, None)?;
        let dense_err = if grid.len() <= DENSE_CHECK_LIMIT {
            let d = dense_resolvent_solve(&p.symbol, &p.potential, sp, &f, None)?;
            Some(u.sub(&d)?.l2() / d.l2())
        } else {
            None
        };
        let checked = diag.contraction_estimate < 0.9;
        if checked && dense_err.is_some_and(|e| !(e <= 1e-8)) {
            neumann_ok = false;
        }
        if !checked {
            warnings.push(format!(
                "z = {}: contraction {:.3} >= 0.9, dense comparison not binding",
                sp.z, diag.contraction_estimate
            ));
        }
        if dense_err.is_none() {
            warnings.push(format!("grid has {} points; dense cross-check skipped", grid.len()));
        }
        let mut residuals = Vec::new();
        for &k in &task.shifts {
            let mut kappa = vec![0.0; n];
            kappa[0] = k as f64 * std::f64::consts::PI / grid.half_width();
            let eta = ComplexShift::imaginary(&kappa);
            let r = conjugation_residual(&p.symbol, &p.potential, sp, &eta, &f, opts)?;
            if !(r < conj_tol) {
                conj_ok = false;
            }
            residuals.push(json!({ "k": k, "residual": r }));
        }
        let max_conj = residuals
            .iter()
            .filter_map(|r| r["residual"].as_f64())
            .fold(0.0, f64::max);
        per_z.push(vec![
            sp.z.re,
            sp.z.im,
            diag.contraction_estimate,
            diag.terms_used as f64,
            diag.residual,
            dense_err.unwrap_or(f64::NAN),
            max_conj,
        ]);
        neumann_rows.push(json!({
            "z": [sp.z.re, sp.z.im],
            "diagnostics": diag,
            "dense_rel_err": dense_err,
            "conjugation": residuals,
        }));
    }
    warnings.dedup();
    let pass = free_viol == 0 && neumann_ok && conj_ok;
    let mut out = Outcome::new(
        pass,
        json!({
            "free_bound": { "points": task.points, "violations": free_viol },
            "neumann_ok": neumann_ok,
            "conjugation_ok": conj_ok,
            "conjugation_tol": conj_tol,
            "points": neumann_rows,
        }),
    );
    out.warnings = warnings;
    out.tables = vec![free, per_z];
    Ok(out)
}

fn heat(p: &Prepared, task: &HeatTask) -> Result<Outcome> {
    let grid = p.grid;
    let n = grid.n();
    let m = p.symbol.m();
    let y = task.y.clone().unwrap_or_else(|| vec![0.0; n]);
    let dense = match task.method {
        Method::Dense => Some(DenseSemigroup::new(&p.symbol, &p.potential, &grid, None)?),
        _ => None,
    };
    let column = |t: f64| -> Result<KernelColumn> {
        let values = match &dense {
            Some(ds) => ds.apply(t, &delta_at(grid, &y)?)?,
            None => kernel_column(
                &p.symbol,
                &p.potential,
                t,
                &y,
                &grid,
                task.method,
                Some(&task.contour),
                None,
            )?,
        };
        Ok(KernelColumn {
            t,
            y: y.clone(),
            values,
        })
    };
    let columns = task.times.iter().map(|&t| column(t)).collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    for c in &columns {
        let b = c.values.boundary_ratio();
        if b > 1e-8 {
            warnings.push(format!(
                "t = {}: boundary contamination {b:.2e} exceeds 1e-8 of the peak",
                c.t
            ));
        }
    }
    let fit = gaussian_envelope_fit(&columns, m, &task.envelope);
    let (fit_value, mut pass, fit) = match fit {
        Ok(f) => (to_value(&f), f.n_viol == 0, Some(f)),
        Err(Error::NoFeasibleEnvelope(msg)) => {
            warnings.push(format!("no feasible envelope: {msg}"));
            (Value::Null, false, None)
        }
        Err(e) => return Err(e),
    };
    let holder = match &task.holder {
        Some(h) => {
            let col = column(h.t)?;
            let rep = holder_exponent_estimate(&[col], &h.steps, m, h.gamma_min, &task.envelope)?;
            pass &= rep.pass;
            Some(rep)
        }
        None => None,
    };
    let mut out = Outcome::new(
        pass,
        json!({
            "method": task.method,
            "y": y,
            "envelope": fit_value,
            "holder": holder,
            "boundary_ratio": columns.iter().map(|c| c.values.boundary_ratio()).collect::<Vec<_>>(),
        }),
    );
    out.warnings = warnings;

    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..n).map(|a| format!("x{a}")));
    header.extend((0..n).map(|a| format!("y{a}")));
    header.extend(["re".into(), "im".into()]);
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut dump = Table::new("kernel", &header_ref);
    for c in &columns {
        for i in 0..grid.len() {
            let x = grid.coords(i);
            let mut row = vec![c.t];
            row.extend_from_slice(&x[..n]);
            row.extend_from_slice(&c.y);
            let v = c.values.at(i);
            row.extend([v.re, v.im]);
            dump.push(row);
        }
    }
    out.tables.push(dump);

    let beta = task.envelope.exponent.unwrap_or_else(|| decay_exponent(m));
    let tpow = 1.0 / (2.0 * m as f64 - 1.0);
    let points: Vec<(f64, f64)> = envelope_samples(&columns, &task.envelope)
        .iter()
        .map(|s| {
            let w = fit.as_ref().map_or(0.0, |f| f.w);
            (
                s.d.powf(beta) * s.t.powf(-tpow),
                (s.value * s.t.powf(n as f64 / (2.0 * m as f64))).ln() - w * s.t,
            )
        })
        .collect();
    out.plots.push(Plot {
        name: "envelope".into(),
        title: "heat kernel envelope".into(),
        x_label: "|x-y|^beta / t^(1/(2m-1))".into(),
        y_label: "log |p_t| t^(n/2m) - w t".into(),
        points,
        line: fit.as_ref().map(|f| (f.c_const.ln(), -f.c_fit)),
    });
    Ok(out)
}

fn dg(p: &Prepared, task: &DgTask) -> Result<Outcome> {
    let opts = DgOptions {
        method: task.method,
        contour: task.contour,
        local: task.local,
        min_r2: task.min_r2,
        ..DgOptions::default()
    };
    let rep = davies_gaffney_measure(
        &p.symbol,
        &p.potential,
        &task.e,
        &task.f,
        &task.times.values(),
        &p.grid,
        &opts,
    )?;
    let mut out = Outcome::new(rep.pass, to_value(&rep));
    let mut t = Table::new("dg", &["t", "mass", "log_mass", "x"]);
    for r in &rep.rows {
        t.push(vec![r.t, r.mass, r.y, r.x]);
    }
    out.tables.push(t);
    let w = rep.w.unwrap_or(0.0);
    out.plots.push(Plot {
        name: "dg".into(),
        title: "Davies-Gaffney regression".into(),
        x_label: "-d^beta / t^(1/(2m-1))".into(),
        y_label: "log mass - w t".into(),
        points: rep.rows.iter().map(|r| (r.x, r.y - w * r.t)).collect(),
        line: Some((rep.intercept, rep.c5)),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(task: &str) -> RunConfig {
        let text = format!(
            "seed = 11\n[grid]\nn = 1\nR = 32.0\nN = 4096\n[potential]\nfamily = \"power\"\na = -0.25\nsign = -1.0\n{task}"
        );
        RunConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn classify_matches_closed_form() {
        let rep = run_experiment(
            cfg("[task.classify]\nalpha = 0.5\nr = 1.0\ndeltas = { lo = 0.25, hi = 4.0, count = 9 }\n"),
            Path::new("."),
        )
        .unwrap();
        assert_eq!(rep.status, Status::Pass, "{:?}", rep.error);
        assert_eq!(rep.payload["expected_verdict"], "IN_TILDE");
    }

    #[test]
    fn task_errors_are_embedded() {
        let mut c = cfg("[task.heat]\ntimes = [0.25, 0.5, 1.0]\n");
        c.symbol.m = 1;
        // the spectral route refuses a nonzero potential
        let rep = run_experiment(c, Path::new(".")).unwrap();
        assert_eq!(rep.status, Status::Error);
        assert!(rep.error.unwrap().contains("spectral"));
    }
}
