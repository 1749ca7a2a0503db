//! The mapping, planning and control loop for one episode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{PolicyKind, RunConfig};
use super::scenario::{Episode, Scenario};
use super::trace::{DecisionRecord, EpisodeTrace, ScoredGoal, WorldSnapshot};
use crate::controller::{execute_plan, ControlConfig, ControlTrace};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::metrics::{episode_metrics, EpisodeResult, EpisodeTrajectory};
use crate::planner::{
    plan_path, score_graph, select_goal, teacher_goal_r2r, teacher_goal_rxr, Goal, GoalScores, PlannerWeights,
    SubgoalTracker, GHOST_SNAP,
};
use crate::topomap::{NodeId, ObservedWaypoint, TopoGraph, UpdateOptions};
use crate::waypoint::{panorama_descriptor, predict_from_scan};
use crate::world::{panoramic_scan, AgentState, ConfigSpace, DistanceField, Sliding};

/// What a policy sees at a decision step.
pub struct DecisionContext<'a> {
    pub graph: &'a TopoGraph,
    pub agent: &'a AgentState,
    pub step: u32,
    pub episode: &'a Episode,
    pub space: &'a ConfigSpace<'a>,
    /// Geodesic field rooted at the episode goal.
    pub goal_field: &'a DistanceField<'a, 'a>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub goal: Goal,
    pub scores: Option<GoalScores>,
}

impl From<Goal> for Selection {
    fn from(goal: Goal) -> Self {
        Selection { goal, scores: None }
    }
}

/// Chooses the next long-term goal: a ghost node or STOP.
pub trait GoalPolicy {
    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Selection>;
}

pub struct TeacherR2r;

impl GoalPolicy for TeacherR2r {
    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Selection> {
        Ok(teacher_goal_r2r(ctx.graph, ctx.agent.position, ctx.goal_field).into())
    }
}

pub struct TeacherRxr<'s, 'w> {
    tracker: SubgoalTracker<'s, 'w>,
}

impl<'s, 'w> TeacherRxr<'s, 'w> {
    pub fn new(space: &'s ConfigSpace<'w>, episode: &Episode) -> Self {
        let mut subgoals = episode.reference.clone();
        if subgoals.last() != Some(&episode.goal) {
            subgoals.push(episode.goal);
        }
        TeacherRxr {
            tracker: SubgoalTracker::new(space, subgoals),
        }
    }
}

impl GoalPolicy for TeacherRxr<'_, '_> {
    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Selection> {
        Ok(teacher_goal_rxr(ctx.graph, ctx.agent.position, &mut self.tracker).into())
    }
}

/// Scores nodes with the graph-aware transformer and selects by argmax or
/// softmax sampling.
pub struct GasaPolicy {
    pub weights: PlannerWeights,
    pub mode: crate::planner::SelectMode,
    pub rng: ChaCha8Rng,
}

impl GoalPolicy for GasaPolicy {
    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Selection> {
        let scores = score_graph(ctx.graph, ctx.agent, &self.weights)?;
        let goal = select_goal(&scores, self.mode, &mut self.rng);
        Ok(Selection {
            goal,
            scores: Some(scores),
        })
    }
}

/// Uniform over STOP and the current ghosts.
pub struct RandomPolicy {
    pub rng: ChaCha8Rng,
}

impl GoalPolicy for RandomPolicy {
    fn select(&mut self, ctx: &DecisionContext<'_>) -> Result<Selection> {
        let mut options = vec![Goal::Stop];
        options.extend(ctx.graph.ghosts().map(|g| Goal::Node(g.id)));
        let i = self.rng.random_range(0..options.len());
        Ok(options[i].into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub id: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(flatten)]
    pub metrics: EpisodeResult,
    /// Nodes in the final graph.
    pub n_node: usize,
    pub decisions: u32,
    pub stopped: bool,
    pub deadlocks: usize,
    pub tryout_attempts: usize,
    /// Most tryout attempts spent on a single deadlock.
    pub max_tryout_per_deadlock: usize,
    /// Decisions that chose a node already chosen earlier in the episode.
    pub repeat_selections: usize,
}

impl EpisodeRecord {
    pub fn failed(id: &str, error: &Error) -> Self {
        EpisodeRecord {
            id: id.to_string(),
            status: Status::Error,
            error: Some(error.to_string()),
            metrics: EpisodeResult::default(),
            n_node: 0,
            decisions: 0,
            stopped: false,
            deadlocks: 0,
            tryout_attempts: 0,
            max_tryout_per_deadlock: 0,
            repeat_selections: 0,
        }
    }
}

/// Seed for an episode's private RNG, independent of scheduling.
pub fn episode_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

/// Chassis radius in effect for `config` on `scenario`.
pub fn effective_radius(scenario: &Scenario, config: &RunConfig) -> f64 {
    config.chassis_radius.unwrap_or(scenario.regime.chassis_radius)
}

pub fn effective_sliding(scenario: &Scenario, config: &RunConfig) -> Sliding {
    config.sliding.unwrap_or(scenario.regime.sliding)
}

/// Runs one episode with the configured built-in policy.
pub fn run_episode(scenario: &Scenario, episode: &Episode, config: &RunConfig) -> Result<(EpisodeRecord, EpisodeTrace)> {
    let space = ConfigSpace::new(&scenario.world, effective_radius(scenario, config));
    run_episode_in(scenario, &space, episode, config)
}

/// As [`run_episode`] with a precomputed configuration space, which must
/// match the effective chassis radius.
pub fn run_episode_in(
    scenario: &Scenario,
    space: &ConfigSpace<'_>,
    episode: &Episode,
    config: &RunConfig,
) -> Result<(EpisodeRecord, EpisodeTrace)> {
    let rng = ChaCha8Rng::seed_from_u64(episode_seed(config.seed, &episode.id));
    match config.policy {
        PolicyKind::TeacherR2r => run_with_policy(scenario, space, episode, config, &mut TeacherR2r),
        PolicyKind::TeacherRxr => {
            let mut p = TeacherRxr::new(space, episode);
            run_with_policy(scenario, space, episode, config, &mut p)
        }
        PolicyKind::Gasa => {
            let weights = match &config.weights {
                Some(path) => PlannerWeights::load(path)?,
                None => PlannerWeights::seeded(config.seed),
            };
            let mut p = GasaPolicy {
                weights,
                mode: config.select,
                rng,
            };
            run_with_policy(scenario, space, episode, config, &mut p)
        }
        PolicyKind::Random => run_with_policy(scenario, space, episode, config, &mut RandomPolicy { rng }),
    }
}

/// Runs the loop with a caller-supplied policy.
pub fn run_with_policy(
    scenario: &Scenario,
    space: &ConfigSpace<'_>,
    episode: &Episode,
    config: &RunConfig,
    policy: &mut dyn GoalPolicy,
) -> Result<(EpisodeRecord, EpisodeTrace)> {
    config.validate()?;
    let world = &scenario.world;
    let radius = effective_radius(scenario, config);
    if (space.radius() - radius).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "configuration space radius {} does not match chassis radius {radius}",
            space.radius()
        )));
    }
    let sliding = effective_sliding(scenario, config);
    let max_predictions = config
        .max_goal_predictions
        .unwrap_or(scenario.regime.max_goal_predictions);
    let invalid = |m: &str| Error::InvalidScenario(format!("episode {}: {m}", episode.id));
    if world.disc_collides(episode.start.position, radius) {
        return Err(invalid("start occluded"));
    }
    if world.disc_collides(episode.goal, radius) {
        return Err(invalid("goal occluded"));
    }
    let goal_field = space
        .distance_field(episode.goal)
        .map_err(|e| invalid(&e.to_string()))?;
    if !goal_field.distance_to(episode.start.position)?.is_finite() {
        return Err(invalid("goal unreachable from start"));
    }

    let predictor = config.predictor();
    let options = UpdateOptions {
        gamma: config.gamma,
        accumulate: config.accumulate,
    };
    let mut state = AgentState::new(episode.start.position, episode.start.heading, radius);
    let mut graph = TopoGraph::new();
    let mut control = ControlTrace::default();
    let mut positions = vec![state.position];
    let mut decisions: Vec<DecisionRecord> = Vec::new();
    let mut subgoal_errors = Vec::new();
    let mut chosen: Vec<NodeId> = Vec::new();
    let mut repeat_selections = 0;
    let mut stopped = false;

    for step in 1..=max_predictions {
        if control.action_count() >= config.action_budget {
            break;
        }
        let scan = panoramic_scan(world, &state, config.scan_rays, config.scan_range)?;
        let predicted = predict_from_scan(&scan, &predictor, step);
        let observed: Vec<ObservedWaypoint> = predicted
            .iter()
            .map(|w| ObservedWaypoint {
                position: w.world_position(&state),
                descriptor: w.descriptor.clone(),
            })
            .collect();
        let update = graph.update(state.position, &panorama_descriptor(&scan), &observed, step, options);
        let snapshot = graph.snapshot();
        let current = graph.current().ok_or(Error::NoCurrentNode)?;

        let selection = {
            let ctx = DecisionContext {
                graph: &graph,
                agent: &state,
                step,
                episode,
                space,
                goal_field: &goal_field,
            };
            policy.select(&ctx)?
        };
        let mut record = DecisionRecord {
            step,
            agent: state,
            waypoints: observed.iter().map(|w| w.position).collect(),
            update,
            graph: snapshot,
            scores: selection.scores.as_ref().map(ScoredGoal::from_scores),
            goal: selection.goal,
            plan: None,
            deleted: false,
            actions: (control.action_count(), control.action_count()),
            subgoal_error: None,
        };
        let goal_id = match selection.goal {
            Goal::Stop => {
                stopped = true;
                decisions.push(record);
                break;
            }
            Goal::Node(id) => id,
        };
        if chosen.contains(&goal_id) {
            repeat_selections += 1;
        }
        chosen.push(goal_id);

        let plan = plan_path(&graph, current, goal_id)?;
        let goal_position = plan.positions.last().copied().unwrap_or(state.position);
        if config.ghost_deletion {
            graph.delete_ghost(goal_id)?;
            record.deleted = true;
        }
        let budget = config.action_budget - control.action_count();
        let ctl = ControlConfig {
            sliding,
            tryout: config.tryout,
            max_actions: config.max_actions_per_plan.min(budget),
        };
        let (next, trace) = execute_plan(world, &state, &plan.positions, &ctl);
        state = next;
        positions.extend(trace.poses.iter().map(|p| p.position));
        control.append(trace);

        let err = match space.distance_field(state.position) {
            Ok(f) => f.distance_near(goal_position, GHOST_SNAP),
            Err(_) => f64::INFINITY,
        };
        let err = if err.is_finite() { err } else { state.position.distance(goal_position) };
        subgoal_errors.push(err);
        record.subgoal_error = Some(err);
        record.plan = Some(plan);
        record.actions.1 = control.action_count();
        decisions.push(record);
    }

    let traj = EpisodeTrajectory {
        positions: &positions,
        reference: &episode.reference,
        actions: control.action_count(),
        rotations: control.rotation_count(),
        collisions: control.collision_count(),
        subgoal_errors: &subgoal_errors,
    };
    let metrics = episode_metrics(&traj, &goal_field, config.distance)?;
    let mut per_deadlock = std::collections::BTreeMap::<usize, usize>::new();
    for ev in &control.tryout_events {
        *per_deadlock.entry(ev.deadlock).or_default() += 1;
    }
    let record = EpisodeRecord {
        id: episode.id.clone(),
        status: Status::Ok,
        error: None,
        metrics,
        n_node: graph.len(),
        decisions: decisions.len() as u32,
        stopped,
        deadlocks: control.deadlock_count(),
        tryout_attempts: control.tryout_events.len(),
        max_tryout_per_deadlock: per_deadlock.values().copied().max().unwrap_or(0),
        repeat_selections,
    };
    let trace = EpisodeTrace {
        scenario: scenario.name.clone(),
        episode: episode.id.clone(),
        start: episode.start,
        goal: episode.goal,
        reference: episode.reference.clone(),
        world: WorldSnapshot::of(world),
        decisions,
        control,
        final_state: state,
        record: record.clone(),
    };
    Ok((record, trace))
}

/// Positions visited by the agent according to a trace.
pub fn trace_positions(trace: &EpisodeTrace) -> Vec<Point> {
    std::iter::once(trace.start.position)
        .chain(trace.control.poses.iter().map(|p| p.position))
        .collect()
}
