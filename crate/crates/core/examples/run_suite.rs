//! Runs every episode of a scenario in parallel and prints the summary line.

use toponav::harness::{run_suite, RunConfig, Scenario};

fn main() -> anyhow::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/apartment.scn");
    let scenario = Scenario::load(&path)?;
    let cfg = RunConfig::default();
    let outcome = run_suite(&scenario, &cfg, 4)?;
    for r in &outcome.records {
        println!("{:<4} SR {} NE {:.2} actions {}", r.id, r.metrics.SR, r.metrics.NE, r.metrics.AT);
    }
    println!("{}", serde_json::to_string(&outcome.summary)?);
    Ok(())
}
