//! Rotate-then-forward execution of a topological plan, with the Tryout
//! escape for deadlocks when the chassis may not slide along obstacles.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_delta, Point};
use crate::world::{step, AgentState, LowLevelAction, OccupancyGrid, Sliding, FORWARD_STEP, ROTATE_STEP};

/// Heading offsets tried when a FORWARD is blocked, in order: growing
/// magnitude, left before right. 0° is left out as it just failed.
pub const TRYOUT_OFFSETS: [f64; 6] = [30.0, -30.0, 60.0, -60.0, 90.0, -90.0];

/// Default cap on low-level actions per plan execution.
pub const DEFAULT_MAX_ACTIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlConfig {
    pub sliding: Sliding,
    pub tryout: bool,
    pub max_actions: usize,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            sliding: Sliding::Forbidden,
            tryout: true,
            max_actions: DEFAULT_MAX_ACTIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TryoutEvent {
    /// Index of the deadlock within the trace, counting from 0.
    pub deadlock: usize,
    /// Index in the trace of this attempt's FORWARD.
    pub action_index: usize,
    pub offset: f64,
    pub escaped: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlTrace {
    pub actions: Vec<LowLevelAction>,
    /// Pose after each action.
    pub poses: Vec<AgentState>,
    pub collisions: Vec<bool>,
    pub tryout_events: Vec<TryoutEvent>,
    /// Plan indices of subgoals given up after a failed Tryout.
    pub abandoned: Vec<usize>,
    #[serde(skip)]
    deadlocks: usize,
}

impl ControlTrace {
    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn rotation_count(&self) -> usize {
        self.actions.iter().filter(|a| a.is_rotation()).count()
    }

    pub fn collision_count(&self) -> usize {
        self.collisions.iter().filter(|&&c| c).count()
    }

    pub fn deadlock_count(&self) -> usize {
        self.deadlocks
    }

    pub(crate) fn set_deadlocks(&mut self, n: usize) {
        self.deadlocks = n;
    }

    pub fn append(&mut self, other: ControlTrace) {
        let base = self.actions.len();
        let deadlock_base = self.deadlocks;
        self.actions.extend(other.actions);
        self.poses.extend(other.poses);
        self.collisions.extend(other.collisions);
        self.tryout_events.extend(other.tryout_events.into_iter().map(|mut e| {
            e.action_index += base;
            e.deadlock += deadlock_base;
            e
        }));
        self.abandoned.extend(other.abandoned);
        self.deadlocks += other.deadlocks;
    }
}

/// Quantizes a relative heading and distance into ROTATE actions followed
/// by FORWARD actions (round half away from zero).
pub fn rf_translate(delta_heading: f64, distance: f64) -> Vec<LowLevelAction> {
    let rotations = (delta_heading.abs() / ROTATE_STEP).round() as usize;
    let forwards = (distance.max(0.0) / FORWARD_STEP).round() as usize;
    let turn = if delta_heading > 0.0 {
        LowLevelAction::RotateLeft
    } else {
        LowLevelAction::RotateRight
    };
    std::iter::repeat_n(turn, rotations)
        .chain(std::iter::repeat_n(LowLevelAction::Forward, forwards))
        .collect()
}

struct Executor<'a> {
    world: &'a OccupancyGrid,
    sliding: Sliding,
    max_actions: usize,
    state: AgentState,
    trace: ControlTrace,
}

impl Executor<'_> {
    fn exhausted(&self) -> bool {
        self.trace.actions.len() >= self.max_actions
    }

    /// Runs one action; `None` once the action budget is spent.
    fn act(&mut self, action: LowLevelAction) -> Option<bool> {
        if self.exhausted() {
            return None;
        }
        let out = step(self.world, &self.state, action, self.sliding);
        self.state = out.state;
        self.trace.actions.push(action);
        self.trace.poses.push(out.state);
        self.trace.collisions.push(out.collided);
        Some(out.collided)
    }

    fn rotate_by(&mut self, degrees: f64) -> Option<()> {
        let n = (degrees.abs() / ROTATE_STEP).round() as usize;
        let turn = if degrees > 0.0 {
            LowLevelAction::RotateLeft
        } else {
            LowLevelAction::RotateRight
        };
        for _ in 0..n {
            self.act(turn)?;
        }
        Some(())
    }

    /// Tries each offset heading with one FORWARD. On the first that moves
    /// the agent, turns back to the original heading. `Some(true)` on
    /// escape, `Some(false)` when all offsets stay blocked.
    fn tryout(&mut self) -> Option<bool> {
        let deadlock = self.trace.deadlocks;
        self.trace.deadlocks += 1;
        let mut facing = 0.0;
        for offset in TRYOUT_OFFSETS {
            self.rotate_by(offset - facing)?;
            facing = offset;
            let before = self.state.position;
            self.act(LowLevelAction::Forward)?;
            let escaped = self.state.position != before;
            self.trace.tryout_events.push(TryoutEvent {
                deadlock,
                action_index: self.trace.actions.len() - 1,
                offset,
                escaped,
            });
            if escaped {
                self.rotate_by(-facing)?;
                return Some(true);
            }
        }
        self.rotate_by(-facing)?;
        Some(false)
    }

    fn run(&mut self, subgoals: &[Point], tryout: bool) -> Option<()> {
        for (m, &goal) in subgoals.iter().enumerate() {
            let pos = self.state.position;
            let dist = pos.distance(goal);
            let dtheta = if dist > 0.0 {
                wrap_delta(pos.bearing_to(goal) - self.state.heading)
            } else {
                0.0
            };
            for action in rf_translate(dtheta, dist) {
                if action != LowLevelAction::Forward {
                    self.act(action)?;
                    continue;
                }
                let before = self.state.position;
                self.act(action)?;
                let stuck = self.state.position == before;
                if stuck && tryout && self.sliding == Sliding::Forbidden && !self.tryout()? {
                    self.trace.abandoned.push(m);
                    break;
                }
            }
        }
        Some(())
    }
}

/// Executes the tryout heuristic on its own from `state`, e.g. after a
/// blocked FORWARD. Returns the final state, whether it escaped, and the
/// actions taken.
pub fn tryout(world: &OccupancyGrid, state: &AgentState, sliding: Sliding) -> (AgentState, bool, ControlTrace) {
    let mut ex = Executor {
        world,
        sliding,
        max_actions: usize::MAX,
        state: *state,
        trace: ControlTrace::default(),
    };
    let escaped = ex.tryout().unwrap_or(false);
    (ex.state, escaped, ex.trace)
}

/// Drives the agent through the plan's subgoals in order. Stops early once
/// `config.max_actions` actions have been taken.
pub fn execute_plan(
    world: &OccupancyGrid,
    state: &AgentState,
    subgoals: &[Point],
    config: &ControlConfig,
) -> (AgentState, ControlTrace) {
    let mut ex = Executor {
        world,
        sliding: config.sliding,
        max_actions: config.max_actions,
        state: *state,
        trace: ControlTrace::default(),
    };
    let _ = ex.run(subgoals, config.tryout);
    (ex.state, ex.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::DEFAULT_RESOLUTION;
    use LowLevelAction::*;

    #[test]
    fn translate_examples() {
        assert!(rf_translate(0.0, 0.0).is_empty());
        let a = rf_translate(45.0, 1.0);
        assert_eq!(a, [vec![RotateLeft; 3], vec![Forward; 4]].concat());
        let a = rf_translate(-40.0, 0.30);
        assert_eq!(a, [vec![RotateRight; 3], vec![Forward; 1]].concat());
        // half steps round away from zero
        assert_eq!(rf_translate(7.5, 0.125), vec![RotateLeft, Forward]);
    }

    #[test]
    fn straight_corridor() {
        let w = OccupancyGrid::room(6.0, 2.0, DEFAULT_RESOLUTION).unwrap();
        let s = AgentState::new(Point::new(1.0, 1.0), 0.0, 0.18);
        let goal = Point::new(2.0, 1.0);
        let (end, trace) = execute_plan(&w, &s, &[goal], &ControlConfig::default());
        assert_eq!(trace.actions, vec![Forward; 4]);
        assert!(end.position.distance(goal) <= 0.125);
    }

    #[test]
    fn goal_behind_turns_around() {
        let w = OccupancyGrid::room(6.0, 6.0, DEFAULT_RESOLUTION).unwrap();
        let s = AgentState::new(Point::new(3.0, 3.0), 0.0, 0.18);
        let (_, trace) = execute_plan(&w, &s, &[Point::new(2.0, 3.0)], &ControlConfig::default());
        assert_eq!(&trace.actions[..12], &[RotateLeft; 12]);
        assert_eq!(trace.rotation_count(), 12);
    }

    #[test]
    fn wall_without_tryout_spins_wheels() {
        let mut w = OccupancyGrid::room(6.0, 6.0, DEFAULT_RESOLUTION).unwrap();
        w.fill_rect(Point::new(2.0, 0.0), Point::new(2.2, 6.0));
        let s = AgentState::new(Point::new(1.6, 3.0), 0.0, 0.18);
        let cfg = ControlConfig {
            sliding: Sliding::Forbidden,
            tryout: false,
            max_actions: 500,
        };
        let (end, trace) = execute_plan(&w, &s, &[Point::new(3.0, 3.0)], &cfg);
        assert_eq!(end.position, s.position);
        let f = rf_translate(0.0, 1.4).len();
        assert_eq!(trace.collision_count(), f);
        assert!(trace.tryout_events.is_empty());
    }

    #[test]
    fn tryout_escapes_on_first_offset() {
        // wall block ahead and slightly to the right; +30 clears its corner
        let mut w = OccupancyGrid::room(6.0, 6.0, DEFAULT_RESOLUTION).unwrap();
        w.fill_rect(Point::new(2.0, 2.5), Point::new(2.2, 2.7));
        let s = AgentState::new(Point::new(1.7, 2.8), 0.0, 0.18);
        let blocked = step(&w, &s, Forward, Sliding::Forbidden);
        assert_eq!(blocked.state.position, s.position);
        let (end, escaped, trace) = tryout(&w, &s, Sliding::Forbidden);
        assert!(escaped);
        assert_eq!(trace.tryout_events.len(), 1);
        assert_eq!(trace.tryout_events[0].offset, 30.0);
        assert_eq!(trace.actions, vec![RotateLeft, RotateLeft, Forward, RotateRight, RotateRight]);
        assert_eq!(end.heading, s.heading);
        assert_ne!(end.position, s.position);
    }

    #[test]
    fn tryout_in_alcove_fails_after_six() {
        // alcove open only behind the agent
        let mut w = OccupancyGrid::room(6.0, 6.0, DEFAULT_RESOLUTION).unwrap();
        w.fill_rect(Point::new(1.0, 2.55), Point::new(2.0, 2.6));
        w.fill_rect(Point::new(1.0, 3.0), Point::new(2.0, 3.05));
        w.fill_rect(Point::new(2.0, 2.55), Point::new(2.05, 3.05));
        let s = AgentState::new(Point::new(1.8, 2.8), 0.0, 0.18);
        let (end, escaped, trace) = tryout(&w, &s, Sliding::Forbidden);
        assert!(!escaped);
        assert_eq!(trace.tryout_events.len(), 6);
        assert_eq!(end.position, s.position);
        assert_eq!(end.heading, s.heading);
        // each attempt: rotations to the offset plus one FORWARD
        let rotations = [2, 4, 6, 8, 10, 12].iter().sum::<usize>() + 6;
        assert_eq!(trace.rotation_count(), rotations);
        assert_eq!(trace.actions.len(), rotations + 6);
    }

    #[test]
    fn sliding_mode_never_triggers_tryout() {
        let mut w = OccupancyGrid::room(8.0, 3.0, DEFAULT_RESOLUTION).unwrap();
        w.fill_rect(Point::new(3.0, 0.0), Point::new(3.2, 1.2));
        let s = AgentState::new(Point::new(1.0, 1.0), 0.0, 0.18);
        let cfg = ControlConfig {
            sliding: Sliding::Allowed,
            tryout: true,
            max_actions: 500,
        };
        let (_, trace) = execute_plan(&w, &s, &[Point::new(6.0, 1.5)], &cfg);
        assert!(trace.collision_count() > 0);
        assert!(trace.tryout_events.is_empty());
    }

    #[test]
    fn budget_caps_actions() {
        let w = OccupancyGrid::room(10.0, 3.0, DEFAULT_RESOLUTION).unwrap();
        let s = AgentState::new(Point::new(1.0, 1.5), 0.0, 0.18);
        let cfg = ControlConfig {
            max_actions: 7,
            ..ControlConfig::default()
        };
        let (_, trace) = execute_plan(&w, &s, &[Point::new(8.0, 1.5)], &cfg);
        assert_eq!(trace.actions.len(), 7);
    }
}
