//! Run configuration. Built-in defaults are overridden by a TOML file, which
//! is overridden by `TOPONAV_*` environment variables; command-line flags
//! are applied last by the caller.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DistanceMode;
use crate::planner::SelectMode;
use crate::topomap::DEFAULT_GAMMA;
use crate::waypoint::{HeatmapConfig, NmsWindow, PredictorConfig};
use crate::world::Sliding;

/// Prefix of environment variables that override config fields, e.g.
/// `TOPONAV_GAMMA=0.75`.
pub const ENV_PREFIX: &str = "TOPONAV_";
/// Names the config file itself and is not a field.
pub const CONFIG_ENV: &str = "TOPONAV_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    TeacherR2r,
    TeacherRxr,
    Gasa,
    Random,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "teacher_r2r" | "teacher-r2r" => Ok(PolicyKind::TeacherR2r),
            "teacher_rxr" | "teacher-rxr" => Ok(PolicyKind::TeacherRxr),
            "gasa" => Ok(PolicyKind::Gasa),
            "random" => Ok(PolicyKind::Random),
            other => Err(format!(
                "unknown policy {other:?} (teacher_r2r|teacher_rxr|gasa|random)"
            )),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyKind::TeacherR2r => "teacher_r2r",
            PolicyKind::TeacherRxr => "teacher_rxr",
            PolicyKind::Gasa => "gasa",
            PolicyKind::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub policy: PolicyKind,
    pub gamma: f64,
    /// Overrides the scenario regime when set.
    pub sliding: Option<Sliding>,
    /// Overrides the scenario regime when set.
    pub chassis_radius: Option<f64>,
    /// Overrides the scenario regime when set.
    pub max_goal_predictions: Option<u32>,
    pub tryout: bool,
    pub ghost_deletion: bool,
    pub accumulate: bool,
    pub seed: u64,
    pub waypoints_k: usize,
    pub nms_degrees: f64,
    pub nms_meters: f64,
    pub scan_rays: usize,
    pub scan_range: f64,
    /// Total low-level actions allowed per episode.
    pub action_budget: usize,
    /// Low-level actions allowed per plan execution.
    pub max_actions_per_plan: usize,
    pub select: SelectMode,
    pub distance: DistanceMode,
    /// Planner weights file; seeded weights when unset.
    pub weights: Option<PathBuf>,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            policy: PolicyKind::TeacherR2r,
            gamma: DEFAULT_GAMMA,
            sliding: None,
            chassis_radius: None,
            max_goal_predictions: None,
            tryout: true,
            ghost_deletion: true,
            accumulate: true,
            seed: 0,
            waypoints_k: 5,
            nms_degrees: 30.0,
            nms_meters: 0.5,
            scan_rays: 120,
            scan_range: 3.5,
            action_budget: 5000,
            max_actions_per_plan: crate::controller::DEFAULT_MAX_ACTIONS,
            select: SelectMode::Argmax,
            distance: DistanceMode::Geodesic,
            weights: None,
            threads: 1,
        }
    }
}

impl RunConfig {
    /// Defaults, then `file` if given, then `TOPONAV_*` variables from the
    /// process environment.
    pub fn resolve(file: Option<&Path>) -> Result<Self> {
        Self::resolve_with(file, std::env::vars())
    }

    /// As [`RunConfig::resolve`] with an explicit environment.
    pub fn resolve_with<I>(file: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                text.parse::<toml::Table>().map_err(|e| Error::InvalidArgument(format!(
                    "{}: {}",
                    path.display(),
                    e.message()
                )))?
            }
            None => toml::Table::new(),
        };
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter(|(k, _)| k != CONFIG_ENV)
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|f| (f.to_ascii_lowercase(), v)))
            .collect();
        overrides.sort();
        for (key, raw) in overrides {
            table.insert(key, env_value(&raw));
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidArgument(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if let Some(r) = self.chassis_radius {
            if !(r > 0.0) {
                return bad(format!("chassis_radius must be positive, got {r}"));
            }
        }
        if self.scan_rays < 12 {
            return bad(format!("scan_rays must be at least 12, got {}", self.scan_rays));
        }
        if !(self.scan_range > 0.0) {
            return bad(format!("scan_range must be positive, got {}", self.scan_range));
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn predictor(&self) -> PredictorConfig {
        PredictorConfig {
            heatmap: HeatmapConfig::default(),
            k: self.waypoints_k,
            window: NmsWindow {
                degrees: self.nms_degrees,
                meters: self.nms_meters,
            },
        }
    }
}

/// Reads an environment value as a TOML scalar, falling back to a string so
/// `TOPONAV_POLICY=gasa` works unquoted.
fn env_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
