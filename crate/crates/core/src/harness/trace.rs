//! Per-episode traces, stored as JSON lines: one `episode` header, one
//! `decision` line per decision step, one `action` line per low-level
//! action, `tryout` lines, and a closing `outcome` line.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::episode::EpisodeRecord;
use super::scenario::Pose;
use crate::controller::{ControlTrace, TryoutEvent};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::planner::{Goal, GoalScores, Plan};
use crate::topomap::{GraphSnapshot, UpdateReport};
use crate::world::{AgentState, LowLevelAction, OccupancyGrid};

/// Grid stored one character per cell, top row first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub resolution: f64,
    pub rows: Vec<String>,
}

impl WorldSnapshot {
    pub fn of(world: &OccupancyGrid) -> Self {
        WorldSnapshot {
            resolution: world.resolution(),
            rows: world.to_ascii(1),
        }
    }

    pub fn to_grid(&self) -> Result<OccupancyGrid> {
        OccupancyGrid::from_ascii(&self.rows, self.resolution, 1)
    }
}

/// A candidate score; masked candidates have no score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredGoal {
    pub goal: Goal,
    pub score: Option<f64>,
}

impl ScoredGoal {
    pub fn from_scores(s: &GoalScores) -> Vec<ScoredGoal> {
        s.candidates
            .iter()
            .zip(&s.scores)
            .map(|(&goal, &v)| ScoredGoal {
                goal,
                score: v.is_finite().then_some(v),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: u32,
    pub agent: AgentState,
    /// Predicted waypoint positions in world coordinates.
    pub waypoints: Vec<Point>,
    pub update: UpdateReport,
    /// Graph after the update, before goal deletion.
    pub graph: GraphSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<ScoredGoal>>,
    pub goal: Goal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
    /// The goal was removed from the graph before control started.
    pub deleted: bool,
    /// Half-open range of action indices executed for this decision.
    pub actions: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgoal_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub scenario: String,
    pub episode: String,
    pub start: Pose,
    pub goal: Point,
    pub reference: Vec<Point>,
    pub world: WorldSnapshot,
    pub decisions: Vec<DecisionRecord>,
    pub control: ControlTrace,
    pub final_state: AgentState,
    pub record: EpisodeRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Episode {
        scenario: String,
        episode: String,
        start: Pose,
        goal: Point,
        reference: Vec<Point>,
        world: WorldSnapshot,
    },
    Decision(Box<DecisionRecord>),
    Action {
        index: usize,
        action: LowLevelAction,
        pose: AgentState,
        collided: bool,
    },
    Tryout(TryoutEvent),
    Outcome {
        final_state: AgentState,
        abandoned: Vec<usize>,
        record: EpisodeRecord,
    },
}

impl EpisodeTrace {
    /// Decision steps are strictly increasing and every non-STOP goal was
    /// deleted before control when `deletion` is on.
    pub fn check(&self, deletion: bool) -> std::result::Result<(), String> {
        for w in self.decisions.windows(2) {
            if w[1].step <= w[0].step {
                return Err(format!("step {} follows step {}", w[1].step, w[0].step));
            }
        }
        for d in &self.decisions {
            if deletion && matches!(d.goal, Goal::Node(_)) && !d.deleted {
                return Err(format!("goal of step {} not deleted before control", d.step));
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let mut emit = |line: &Line| -> Result<()> {
            let s = serde_json::to_string(line).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            writeln!(out, "{s}").map_err(|e| Error::io(Path::new("<trace>"), e))
        };
        emit(&Line::Episode {
            scenario: self.scenario.clone(),
            episode: self.episode.clone(),
            start: self.start,
            goal: self.goal,
            reference: self.reference.clone(),
            world: self.world.clone(),
        })?;
        for d in &self.decisions {
            emit(&Line::Decision(Box::new(d.clone())))?;
        }
        for (i, ((&action, &pose), &collided)) in self
            .control
            .actions
            .iter()
            .zip(&self.control.poses)
            .zip(&self.control.collisions)
            .enumerate()
        {
            emit(&Line::Action {
                index: i,
                action,
                pose,
                collided,
            })?;
        }
        for ev in &self.control.tryout_events {
            emit(&Line::Tryout(*ev))?;
        }
        emit(&Line::Outcome {
            final_state: self.final_state,
            abandoned: self.control.abandoned.clone(),
            record: self.record.clone(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut header = None;
        let mut decisions = Vec::new();
        let mut control = ControlTrace::default();
        let mut outcome = None;
        for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
            match parsed {
                Line::Episode {
                    scenario,
                    episode,
                    start,
                    goal,
                    reference,
                    world,
                } => header = Some((scenario, episode, start, goal, reference, world)),
                Line::Decision(d) => decisions.push(*d),
                Line::Action {
                    action,
                    pose,
                    collided,
                    ..
                } => {
                    control.actions.push(action);
                    control.poses.push(pose);
                    control.collisions.push(collided);
                }
                Line::Tryout(ev) => control.tryout_events.push(ev),
                Line::Outcome {
                    final_state,
                    abandoned,
                    record,
                } => {
                    control.abandoned = abandoned;
                    outcome = Some((final_state, record));
                }
            }
        }
        let (scenario, episode, start, goal, reference, world) =
            header.ok_or_else(|| parse_err(1, "missing episode header".into()))?;
        let (final_state, record) = outcome.ok_or_else(|| parse_err(0, "missing outcome line".into()))?;
        control.set_deadlocks(record.deadlocks);
        Ok(EpisodeTrace {
            scenario,
            episode,
            start,
            goal,
            reference,
            world,
            decisions,
            control,
            final_state,
            record,
        })
    }
}
