//! Runs one episode end to end and renders it as SVG.
//!
//! `cargo run --example run_episode -- [scenario] [episode-id] [out.svg]`

use toponav::harness::{render_svg, run_episode, PolicyKind, RunConfig, Scenario};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/deadlock.scn"));
    let id = args.next();
    let out = args.next().unwrap_or_else(|| "episode.svg".into());

    let scenario = Scenario::load(&path)?;
    let episode = match &id {
        Some(id) => scenario
            .episodes
            .iter()
            .find(|e| &e.id == id)
            .ok_or_else(|| anyhow::anyhow!("no episode {id}"))?,
        None => &scenario.episodes[0],
    };
    let cfg = RunConfig {
        policy: PolicyKind::TeacherR2r,
        ..RunConfig::default()
    };
    let (record, trace) = run_episode(&scenario, episode, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&record)?);
    std::fs::write(&out, render_svg(&trace))?;
    println!("wrote {out}");
    Ok(())
}
