//! Whole-scenario runs, sweeps and waypoint evaluation.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::episode::{effective_radius, run_episode_in, EpisodeRecord, Status};
use super::scenario::Scenario;
use super::trace::EpisodeTrace;
use crate::error::{Error, Result};
use crate::waypoint::{evaluate_waypoints, predict_from_scan, WaypointEval};
use crate::world::{panoramic_scan, AgentState, ConfigSpace};

/// Per-metric means over the episodes that ran without error.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Summary {
    pub episodes: usize,
    pub ok: usize,
    pub TL: f64,
    pub NE: f64,
    pub SR: f64,
    pub OSR: f64,
    pub SPL: f64,
    pub NDTW: f64,
    pub SDTW: f64,
    pub AT: f64,
    pub RT: f64,
    pub CT: f64,
    pub SG_NE: f64,
    pub n_node: f64,
    pub deadlocks: f64,
    pub tryout_attempts: f64,
}

impl Summary {
    pub fn of(records: &[EpisodeRecord]) -> Self {
        let ok: Vec<&EpisodeRecord> = records.iter().filter(|r| r.status == Status::Ok).collect();
        let n = ok.len();
        let mean = |f: &dyn Fn(&EpisodeRecord) -> f64| {
            if n == 0 {
                0.0
            } else {
                ok.iter().fold(0.0, |acc, r| acc + f(r)) / n as f64
            }
        };
        Summary {
            episodes: records.len(),
            ok: n,
            TL: mean(&|r| r.metrics.TL),
            NE: mean(&|r| r.metrics.NE),
            SR: mean(&|r| r.metrics.SR),
            OSR: mean(&|r| r.metrics.OSR),
            SPL: mean(&|r| r.metrics.SPL),
            NDTW: mean(&|r| r.metrics.NDTW),
            SDTW: mean(&|r| r.metrics.SDTW),
            AT: mean(&|r| r.metrics.AT as f64),
            RT: mean(&|r| r.metrics.RT as f64),
            CT: mean(&|r| r.metrics.CT as f64),
            SG_NE: mean(&|r| r.metrics.SG_NE),
            n_node: mean(&|r| r.n_node as f64),
            deadlocks: mean(&|r| r.deadlocks as f64),
            tryout_attempts: mean(&|r| r.tryout_attempts as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    /// Sorted by episode id.
    pub records: Vec<EpisodeRecord>,
    /// Parallel to `records`; `None` for failed episodes.
    pub traces: Vec<Option<EpisodeTrace>>,
    pub summary: Summary,
}

impl SuiteOutcome {
    /// One JSON record per episode in id order, then the summary line.
    pub fn results_text(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).map_err(|e| Error::InvalidArgument(e.to_string()))?);
            out.push('\n');
        }
        #[derive(Serialize)]
        struct Line<'a> {
            summary: &'a Summary,
        }
        out.push_str(
            &serde_json::to_string(&Line { summary: &self.summary })
                .map_err(|e| Error::InvalidArgument(e.to_string()))?,
        );
        out.push('\n');
        Ok(out)
    }

    /// Writes `results.jsonl` and one trace per episode under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let traces = dir.join("traces");
        std::fs::create_dir_all(&traces).map_err(|e| Error::io(&traces, e))?;
        let path = dir.join("results.jsonl");
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(self.results_text()?.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        for t in self.traces.iter().flatten() {
            t.save(&traces.join(format!("{}.jsonl", t.episode)))?;
        }
        Ok(())
    }
}

/// Runs every episode of `scenario` on a pool of `threads` workers. Episode
/// failures are recorded and do not stop the suite.
pub fn run_suite(scenario: &Scenario, config: &RunConfig, threads: usize) -> Result<SuiteOutcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let space = ConfigSpace::new(&scenario.world, effective_radius(scenario, config));
    let mut results: Vec<(EpisodeRecord, Option<EpisodeTrace>)> = pool.install(|| {
        scenario
            .episodes
            .par_iter()
            .map(|ep| match run_episode_in(scenario, &space, ep, config) {
                Ok((r, t)) => (r, Some(t)),
                Err(e) => (EpisodeRecord::failed(&ep.id, &e), None),
            })
            .collect()
    });
    results.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    let (records, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = Summary::of(&records);
    Ok(SuiteOutcome {
        records,
        traces,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gamma: f64,
    pub summary: Summary,
}

/// Runs the suite once per γ value.
pub fn sweep_gamma(scenario: &Scenario, config: &RunConfig, values: &[f64], threads: usize) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&gamma| {
            let cfg = RunConfig {
                gamma,
                ..config.clone()
            };
            Ok(SweepPoint {
                gamma,
                summary: run_suite(scenario, &cfg, threads)?.summary,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointRecord {
    pub episode: String,
    pub index: usize,
    #[serde(flatten)]
    pub eval: WaypointEval,
}

/// Predicts waypoints at every annotated pose and compares them with the
/// reference sets.
pub fn eval_waypoints(scenario: &Scenario, config: &RunConfig) -> Result<Vec<WaypointRecord>> {
    let radius = effective_radius(scenario, config);
    let predictor = config.predictor();
    let mut out = Vec::new();
    for ep in &scenario.episodes {
        for (i, set) in ep.waypoint_sets.iter().enumerate() {
            let state = AgentState::new(set.pose.position, set.pose.heading, radius);
            let scan = panoramic_scan(&scenario.world, &state, config.scan_rays, config.scan_range)?;
            let predicted: Vec<_> = predict_from_scan(&scan, &predictor, 0)
                .iter()
                .map(|w| w.world_position(&state))
                .collect();
            out.push(WaypointRecord {
                episode: ep.id.clone(),
                index: i,
                eval: evaluate_waypoints(&predicted, &set.points, &scenario.world, &state),
            });
        }
    }
    Ok(out)
}
