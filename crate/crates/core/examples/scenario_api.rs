//! Run a named scenario through the library and write its artifacts.

use nonlocal_lab::experiment::{run_scenario, ExperimentConfig, Scenario};

fn main() -> nonlocal_lab::Result<()> {
    let out = std::env::temp_dir().join("nonlocal-lab-heat-kernel");
    let cfg = ExperimentConfig::new(Scenario::HeatKernel, &out)
        .with("s", 0.5)
        .with("t", 2.0);
    let outcome = run_scenario(&cfg)?;
    for v in &outcome.verdicts {
        println!("{v}");
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
