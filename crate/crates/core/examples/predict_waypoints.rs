//! Predicts candidate waypoints from a scan and scores them against the
//! reference sets stored in a scenario.

use toponav::harness::{eval_waypoints, RunConfig, Scenario};
use toponav::waypoint::{build_heatmap, predict_waypoints, HeatmapConfig, NmsWindow};
use toponav::world::{panoramic_scan, AgentState};

fn main() -> anyhow::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/open_room.scn");
    let scenario = Scenario::load(&path)?;
    let ep = &scenario.episodes[0];
    let agent = AgentState::new(ep.start.position, ep.start.heading, scenario.regime.chassis_radius);

    let scan = panoramic_scan(&scenario.world, &agent, 120, 3.5)?;
    let heatmap = build_heatmap(&scan, &HeatmapConfig::default());
    for peak in predict_waypoints(&heatmap, 5, NmsWindow::default()) {
        println!("peak at {:6.1} deg, {:.2} m", peak.rel_heading, peak.distance);
    }

    for rec in eval_waypoints(&scenario, &RunConfig::default())? {
        println!("{}", serde_json::to_string(&rec)?);
    }
    Ok(())
}
