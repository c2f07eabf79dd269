// Run a TOML-described experiment and list what it wrote.

use sideband::scenario::{run_experiment, RunOptions, ScenarioConfig};
use sideband::Result;

const CONFIG: &str = r#"
[receiver.topology]
kind = "no_if_hybrid"

[receiver.profile]
phase_imbalance_deg = { offset = 4.0, slope_per_ghz = 0.0 }

[receiver.plan]
lo1_ghz = 662.0
lo2_ghz = 7.0
if_grid_mhz = [4000.0, 6000.0, 8000.0]

[receiver.noise]
dv_over_v = 1e-3

[experiment]
kind = "srr_sweep"
seed = 2
"#;

pub fn run_example() -> Result<usize> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let cfg = ScenarioConfig::from_toml_str(CONFIG)?;
    let report = run_experiment(
        &cfg,
        &RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        },
    )?;
    for f in &report.files {
        println!("{}", f.file_name().unwrap_or_default().to_string_lossy());
    }
    for (k, v) in &report.summary {
        println!("  {k} = {v:.2}");
    }
    print!("{}", std::fs::read_to_string(&report.manifest).unwrap_or_default());
    Ok(report.files.len())
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
