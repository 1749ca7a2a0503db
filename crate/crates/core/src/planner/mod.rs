//! Long-term goal selection over the topological map and path extraction.

mod gasa;
mod path;
mod scoring;
mod teacher;

pub use gasa::{gasa_attention, gasa_forward, GasaWeights};
pub use path::{plan_path, Plan};
pub use scoring::{
    encode_nodes, score_graph, score_nodes, select_goal, Goal, GoalScores, NodeEncodings, PlannerWeights,
    ScoreHead, SelectMode, ENCODING_DIM,
};
pub use teacher::{
    teacher_goal_r2r, teacher_goal_rxr, SubgoalTracker, GHOST_SNAP, SUBGOAL_VISIT_RADIUS, TEACHER_STOP_RADIUS,
};

/// Goal predictions allowed per episode on shortest-path style data.
pub const MAX_PREDICTIONS_R2R: u32 = 15;
/// Goal predictions allowed per episode on path-fidelity style data.
pub const MAX_PREDICTIONS_RXR: u32 = 25;
