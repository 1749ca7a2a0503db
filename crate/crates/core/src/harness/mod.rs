//! Scenario files, the episode loop, suites and their artifacts.

pub mod config;
pub mod episode;
pub mod plot;
pub mod scenario;
pub mod suite;
pub mod trace;

pub use config::{PolicyKind, RunConfig, CONFIG_ENV, ENV_PREFIX};
pub use episode::{
    run_episode, run_episode_in, run_with_policy, DecisionContext, EpisodeRecord, GasaPolicy, GoalPolicy, RandomPolicy,
    Selection, Status, TeacherR2r, TeacherRxr,
};
pub use plot::{plot_trace, render_svg};
pub use scenario::{Episode, Pose, Regime, Scenario, WaypointSet};
pub use suite::{eval_waypoints, run_suite, sweep_gamma, SuiteOutcome, Summary, SweepPoint, WaypointRecord};
pub use trace::{DecisionRecord, EpisodeTrace, ScoredGoal, WorldSnapshot};
