//! Runs one experiment from TOML text and writes its artifacts to a temporary directory.

use std::path::Path;

use schechter_heat::config::RunConfig;
use schechter_heat::report::emit_report;
use schechter_heat::run::run_experiment;

const CONFIG: &str = r#"
seed = 3

[grid]
n = 1
R = 32.0
N = 1024

[task.heat]
times = [0.25, 0.5, 1.0, 2.0]

[output]
formats = ["json", "csv", "svg"]
"#;

fn main() -> schechter_heat::Result<()> {
    let report = run_experiment(RunConfig::from_toml(CONFIG)?, Path::new("."))?;
    println!("{} -> {:?}", report.task, report.status);
    println!("c_fit = {}", report.payload["envelope"]["c_fit"]);
    let dir = std::env::temp_dir().join("schechter-heat-example");
    for path in emit_report(&report, &report.config.output.formats, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
