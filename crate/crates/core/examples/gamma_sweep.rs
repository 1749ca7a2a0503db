//! Map size as a function of the localization threshold γ.

use toponav::harness::{sweep_gamma, RunConfig, Scenario};

fn main() -> anyhow::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/rooms.scn");
    let scenario = Scenario::load(&path)?;
    for p in sweep_gamma(&scenario, &RunConfig::default(), &[0.25, 0.5, 0.75, 1.0], 4)? {
        println!("{}", serde_json::to_string(&p)?);
    }
    Ok(())
}
