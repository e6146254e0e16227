//! Run configuration: every hyperparameter with its default, the `key =
//! value` config file format, and override handling.
//!
//! Recognized keys (one per line, `#` starts a comment):
//!
//! ```text
//! gamma                = 0.91
//! epsilon_initial      = 0.47
//! epsilon_factor       = 0.93
//! epsilon_floor        = 0.05
//! memory_capacity      = 60
//! hidden_width         = 167
//! episodes             = 30
//! minibatch_size       = 16
//! reward_new_cell      = 358.74
//! reward_visited_cell  = -31.14
//! reward_non_visitable = -225.17
//! head_mode            = linear      # or softmax
//! eq2_denominator      = remaining   # or visited
//! step_budget          = auto        # timesteps per episode, or an integer
//! time_budget_seconds  = 1800        # none disables the wall clock
//! seed                 = 0
//! learning_rate        = 0.3
//! rmsprop_rho          = 0.5
//! rmsprop_epsilon      = 1e-8
//! ```

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::agent::{ControllerConfig, ControllerMode, EpsilonConfig};
use crate::experiment::{BudgetSpec, ExperimentSpec, MatrixSpec};
use crate::gridworld::{Eq2Mode, GridMap, RewardConfig};
use crate::neural::{HeadMode, RmsPropConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    /// A line that is not `key = value`.
    Parse { line: usize, message: String },
    UnknownKey { line: usize, key: String },
    /// Unparseable value for a known key.
    BadValue { key: String, value: String, expected: &'static str },
    /// Parseable value outside its allowed domain.
    Range { key: String, message: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(e) => write!(f, "config io error: {e}"),
            Self::Parse { line, message } => write!(f, "config line {line}: {message}"),
            Self::UnknownKey { line, key } => {
                write!(f, "config line {line}: unknown key {key:?}")
            }
            Self::BadValue { key, value, expected } => {
                write!(f, "config key {key:?}: cannot parse {value:?} as {expected}")
            }
            Self::Range { key, message } => write!(f, "config key {key:?}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// All run hyperparameters. `Default` is the reference configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub gamma: f64,
    pub epsilon: EpsilonConfig,
    pub memory_capacity: usize,
    pub hidden_width: usize,
    pub episodes: u32,
    pub minibatch_size: usize,
    pub rewards: RewardConfig,
    pub head_mode: HeadMode,
    pub eq2_mode: Eq2Mode,
    /// Timesteps per episode; `None` resolves to 40x the visitable cells.
    pub step_budget: Option<u64>,
    pub time_budget: Option<Duration>,
    pub seed: u64,
    pub optimizer: RmsPropConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 0.91,
            epsilon: EpsilonConfig::default(),
            memory_capacity: 60,
            hidden_width: 167,
            episodes: 30,
            minibatch_size: 16,
            rewards: RewardConfig::default(),
            head_mode: HeadMode::Linear,
            eq2_mode: Eq2Mode::RemainingBefore,
            step_budget: None,
            time_budget: Some(Duration::from_secs(30 * 60)),
            seed: 0,
            optimizer: RmsPropConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config file and applies overrides (later wins) on top.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        if let Some(path) = path {
            let body = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
            config.apply_file(&body)?;
        }
        for (key, value) in overrides {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Parses config file content into `self`.
    pub fn apply_file(&mut self, body: &str) -> Result<(), ConfigError> {
        for (i, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    line: i + 1,
                    message: format!("expected 'key = value', got {raw:?}"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            self.set(key, value).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: i + 1, key },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "gamma" => self.gamma = parse_num(key, value)?,
            "epsilon_initial" => self.epsilon.initial = parse_num(key, value)?,
            "epsilon_factor" => self.epsilon.factor = parse_num(key, value)?,
            "epsilon_floor" => self.epsilon.floor = parse_num(key, value)?,
            "memory_capacity" => self.memory_capacity = parse_num(key, value)?,
            "hidden_width" => self.hidden_width = parse_num(key, value)?,
            "episodes" => self.episodes = parse_num(key, value)?,
            "minibatch_size" => self.minibatch_size = parse_num(key, value)?,
            "reward_new_cell" => self.rewards.new_cell_base = parse_num(key, value)?,
            "reward_visited_cell" => self.rewards.visited_cell = parse_num(key, value)?,
            "reward_non_visitable" => self.rewards.non_visitable = parse_num(key, value)?,
            "head_mode" => {
                self.head_mode = match value {
                    "linear" => HeadMode::Linear,
                    "softmax" => HeadMode::Softmax,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                            expected: "linear|softmax",
                        })
                    }
                }
            }
            "eq2_denominator" => {
                self.eq2_mode = match value {
                    "remaining" => Eq2Mode::RemainingBefore,
                    "visited" => Eq2Mode::VisitedAfter,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                            expected: "remaining|visited",
                        })
                    }
                }
            }
            "step_budget" => {
                self.step_budget =
                    if value == "auto" { None } else { Some(parse_num(key, value)?) }
            }
            "time_budget_seconds" => {
                self.time_budget = if value == "none" {
                    None
                } else {
                    let secs: f64 = parse_num(key, value)?;
                    if !(secs >= 0.0) || !secs.is_finite() {
                        return Err(ConfigError::Range {
                            key: key.into(),
                            message: format!("must be a non-negative number of seconds, got {secs}"),
                        });
                    }
                    if secs == 0.0 {
                        None
                    } else {
                        Some(Duration::from_secs_f64(secs))
                    }
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "learning_rate" => self.optimizer.learning_rate = parse_num(key, value)?,
            "rmsprop_rho" => self.optimizer.rho = parse_num(key, value)?,
            "rmsprop_epsilon" => self.optimizer.epsilon = parse_num(key, value)?,
            _ => return Err(ConfigError::UnknownKey { line: 0, key: key.into() }),
        }
        Ok(())
    }

    /// Domain checks for every field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, ok: bool, message: String| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Range { key: key.into(), message })
            }
        };
        range("gamma", (0.0..=1.0).contains(&self.gamma), format!("{} not in [0, 1]", self.gamma))?;
        range(
            "epsilon_initial",
            (0.0..=1.0).contains(&self.epsilon.initial),
            format!("{} not in [0, 1]", self.epsilon.initial),
        )?;
        range(
            "epsilon_factor",
            self.epsilon.factor > 0.0 && self.epsilon.factor <= 1.0,
            format!("{} not in (0, 1]", self.epsilon.factor),
        )?;
        range(
            "epsilon_floor",
            (0.0..=1.0).contains(&self.epsilon.floor),
            format!("{} not in [0, 1]", self.epsilon.floor),
        )?;
        range("memory_capacity", self.memory_capacity >= 1, "must be at least 1".into())?;
        range("hidden_width", self.hidden_width >= 1, "must be at least 1".into())?;
        range("episodes", self.episodes >= 1, "must be at least 1".into())?;
        range("minibatch_size", self.minibatch_size >= 1, "must be at least 1".into())?;
        range(
            "reward_new_cell",
            self.rewards.new_cell_base.is_finite(),
            "must be finite".into(),
        )?;
        range(
            "reward_visited_cell",
            self.rewards.visited_cell.is_finite(),
            "must be finite".into(),
        )?;
        range(
            "reward_non_visitable",
            self.rewards.non_visitable.is_finite(),
            "must be finite".into(),
        )?;
        range(
            "learning_rate",
            self.optimizer.learning_rate > 0.0 && self.optimizer.learning_rate.is_finite(),
            format!("{} must be positive", self.optimizer.learning_rate),
        )?;
        range(
            "rmsprop_rho",
            (0.0..1.0).contains(&self.optimizer.rho),
            format!("{} not in [0, 1)", self.optimizer.rho),
        )?;
        range(
            "rmsprop_epsilon",
            self.optimizer.epsilon > 0.0 && self.optimizer.epsilon.is_finite(),
            format!("{} must be positive", self.optimizer.epsilon),
        )?;
        Ok(())
    }

    pub fn controller_config(&self, mode: ControllerMode) -> ControllerConfig {
        ControllerConfig {
            mode,
            gamma: self.gamma,
            minibatch_size: self.minibatch_size,
            head_mode: self.head_mode,
            hidden_dim: self.hidden_width,
            memory_capacity: self.memory_capacity,
            optimizer: self.optimizer,
        }
    }

    pub fn budget_spec(&self) -> BudgetSpec {
        BudgetSpec { step_budget: self.step_budget, wall_clock: self.time_budget }
    }

    /// Experiment spec for one map and topology.
    pub fn experiment_spec(
        &self,
        map: GridMap,
        uav_count: usize,
        mode: ControllerMode,
    ) -> ExperimentSpec {
        ExperimentSpec {
            map,
            uav_count,
            episodes: self.episodes,
            seed: self.seed,
            budgets: self.budget_spec(),
            controller: self.controller_config(mode),
            epsilon: self.epsilon,
            rewards: self.rewards,
            eq2_mode: self.eq2_mode,
        }
    }

    /// Matrix spec over square open maps.
    pub fn matrix_spec(&self, sizes: Vec<usize>, uav_counts: Vec<usize>) -> MatrixSpec {
        MatrixSpec {
            sizes,
            uav_counts,
            episodes: self.episodes,
            seed: self.seed,
            budgets: self.budget_spec(),
            controller: self.controller_config(ControllerMode::Global),
            epsilon: self.epsilon,
            rewards: self.rewards,
            eq2_mode: self.eq2_mode,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        expected: std::any::type_name::<T>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_reference_defaults() {
        let config = RunConfig::load(None, &[]).unwrap();
        assert_eq!(config.gamma, 0.91);
        assert_eq!(config.epsilon.initial, 0.47);
        assert_eq!(config.epsilon.factor, 0.93);
        assert_eq!(config.epsilon.floor, 0.05);
        assert_eq!(config.memory_capacity, 60);
        assert_eq!(config.hidden_width, 167);
        assert_eq!(config.episodes, 30);
        assert_eq!(config.minibatch_size, 16);
        assert_eq!(config.rewards.new_cell_base, 358.74);
        assert_eq!(config.rewards.visited_cell, -31.14);
        assert_eq!(config.rewards.non_visitable, -225.17);
        assert_eq!(config.head_mode, HeadMode::Linear);
        assert_eq!(config.eq2_mode, Eq2Mode::RemainingBefore);
        assert_eq!(config.step_budget, None);
        assert_eq!(config.time_budget, Some(Duration::from_secs(1800)));
        assert_eq!(config.optimizer.learning_rate, 0.3);
        assert_eq!(config.optimizer.rho, 0.5);
        assert_eq!(config.optimizer.epsilon, 1e-8);
    }

    #[test]
    fn out_of_range_gamma_is_rejected() {
        let mut config = RunConfig::default();
        config.set("gamma", "1.5").unwrap();
        let err = config.validate().unwrap_err();
        assert!(matches!(err, ConfigError::Range { ref key, .. } if key == "gamma"), "{err}");
    }

    #[test]
    fn overrides_take_precedence_and_leave_the_rest() {
        let config =
            RunConfig::load(None, &[("episodes".into(), "5".into())]).unwrap();
        assert_eq!(config.episodes, 5);
        assert_eq!(config.gamma, 0.91);
    }

    #[test]
    fn file_content_parses_with_comments() {
        let mut config = RunConfig::default();
        config
            .apply_file("# comment\n  gamma = 0.5 # trailing\n\nepisodes=7\nstep_budget = 12\n")
            .unwrap();
        assert_eq!(config.gamma, 0.5);
        assert_eq!(config.episodes, 7);
        assert_eq!(config.step_budget, Some(12));
    }

    #[test]
    fn bad_lines_and_keys_are_located() {
        let mut config = RunConfig::default();
        let err = config.apply_file("gamma 0.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }), "{err}");
        let err = config.apply_file("\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 2, .. }), "{err}");
        let err = config.apply_file("episodes = many\n").unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { .. }), "{err}");
    }

    #[test]
    fn enum_keys_parse_both_variants() {
        let mut config = RunConfig::default();
        config.set("head_mode", "softmax").unwrap();
        assert_eq!(config.head_mode, HeadMode::Softmax);
        config.set("eq2_denominator", "visited").unwrap();
        assert_eq!(config.eq2_mode, Eq2Mode::VisitedAfter);
        assert!(config.set("head_mode", "relu").is_err());
    }

    #[test]
    fn time_budget_none_and_zero_disable_the_wall_clock() {
        let mut config = RunConfig::default();
        config.set("time_budget_seconds", "none").unwrap();
        assert_eq!(config.time_budget, None);
        config.set("time_budget_seconds", "0").unwrap();
        assert_eq!(config.time_budget, None);
        config.set("time_budget_seconds", "90.5").unwrap();
        assert_eq!(config.time_budget, Some(Duration::from_secs_f64(90.5)));
    }
}
