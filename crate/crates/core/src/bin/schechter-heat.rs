use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use schechter_heat::config::{RunConfig, TASKS};
use schechter_heat::report::{emit_report, Status};
use schechter_heat::run::run_experiment;
use schechter_heat::Error;

/// Heat-kernel and potential-class experiments for higher-order Schrodinger operators.
#[derive(Debug, Parser)]
#[command(name = "schechter-heat", version)]
struct Cli {
    /// One of classify, tnorm, resolvent-check, heat, dg, conditions.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(TASKS))]
    task: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn threads_from_env() -> Result<Option<usize>, Error> {
    match std::env::var("SCHECHTER_HEAT_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(
                "SCHECHTER_HEAT_THREADS",
                format!("expected a positive integer, got {s:?}"),
            )),
        },
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<Status, Error> {
    if let Some(n) = threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("SCHECHTER_HEAT_THREADS", e.to_string()))?;
    }
    let mut config = RunConfig::load(&cli.config)?;
    let named = config.task_name()?;
    if named != cli.task {
        return Err(Error::config(
            format!("task.{named}"),
            format!("command line asks for `{}` but the config defines `{named}`", cli.task),
        ));
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output.dir = out;
    }
    let base = cli.config.parent().map(PathBuf::from).unwrap_or_default();
    let report = run_experiment(config, &base)?;
    let written = emit_report(&report, &report.config.output.formats, &report.config.output.dir)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    for p in &written {
        println!("{}", p.display());
    }
    println!("{}: {:?}", report.task, report.status);
    Ok(report.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
