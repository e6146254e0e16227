//! Multi-UAV grid coverage planning with online Q-learning.
//!
//! The toolkit converts a field polygon into a cell grid, trains small dense
//! Q-networks online while a UAV swarm sweeps the grid, and reports
//! coverage, valid-action, and timing metrics over a reproducible experiment
//! matrix.
//!
//! Module map:
//!
//! * [`geometry`] — polygons, bounding rectangles, rasterization
//! * [`gridworld`] — the coverage environment (maps, actions, rewards)
//! * [`neural`] — the dense Q-network, backprop, RMSprop
//! * [`agent`] — epsilon-greedy policy, replay memories, controllers
//! * [`experiment`] — episode/experiment/matrix orchestration
//! * [`metrics`] — performance measures over episode records
//! * [`io`] — file formats: maps, configs, CSV reports, PGM heatmaps

pub mod agent;
pub mod experiment;
pub mod geometry;
pub mod gridworld;
pub mod io;
pub mod metrics;
pub mod neural;

pub use agent::{
    Controller, ControllerConfig, ControllerMode, EpsilonConfig, EpsilonSchedule, ReplayMemory,
    Transition,
};
pub use experiment::{
    run_experiment, run_matrix, BudgetSpec, EpisodeRecord, ExperimentSpec, ExperimentSummary,
    MatrixSpec,
};
pub use geometry::{Mbr, Point, Polygon};
pub use gridworld::{
    Action, Budget, Cell, CellClass, CoverageEnv, Eq2Mode, GridMap, RewardConfig, StepOutcome,
    SwarmState,
};
pub use io::config::RunConfig;
pub use metrics::{CoverageCurve, Heatmap};
pub use neural::{HeadMode, QNetwork, RmsPropConfig, RmsPropState};
