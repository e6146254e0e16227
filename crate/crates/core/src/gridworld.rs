//! The multi-UAV coverage environment: grid maps, movement actions, reward
//! assignment, coverage accounting, and termination.
//!
//! A [`CoverageEnv`] owns the immutable map plus the reward configuration;
//! each episode drives a [`SwarmState`] through it. UAVs act one at a time
//! and share a single visited mask, so the task is joint coverage.

use std::time::Duration;

use serde::{Deserialize, Serialize};

/// A grid cell coordinate, row-major with row 0 at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// The four straight movement actions, with fixed encoding indices 0..3 used
/// for the network's four output units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    North,
    South,
    East,
    West,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            Action::North => 0,
            Action::South => 1,
            Action::East => 2,
            Action::West => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// (row delta, col delta). North decreases the row index.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::North => (-1, 0),
            Action::South => (1, 0),
            Action::East => (0, 1),
            Action::West => (0, -1),
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Action::North => "north",
            Action::South => "south",
            Action::East => "east",
            Action::West => "west",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    EmptyGrid,
    MaskSizeMismatch { expected: usize, got: usize },
    NoVisitableCells,
    NoStarts,
    StartOutOfBounds(Cell),
    StartNotVisitable(Cell),
}

impl std::fmt::Display for GridError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::EmptyGrid => write!(f, "grid must have at least one row and one column"),
            Self::MaskSizeMismatch { expected, got } => {
                write!(f, "visitability mask has {got} entries, expected {expected}")
            }
            Self::NoVisitableCells => write!(f, "map has no visitable cells"),
            Self::NoStarts => write!(f, "map defines no start cells"),
            Self::StartOutOfBounds(c) => write!(f, "start ({}, {}) is out of bounds", c.row, c.col),
            Self::StartNotVisitable(c) => {
                write!(f, "start ({}, {}) is not a visitable cell", c.row, c.col)
            }
        }
    }
}

impl std::error::Error for GridError {}

/// Rasterized field: dimensions, visitability mask, and start cells. One UAV
/// is spawned per start entry; duplicate entries put several UAVs on the same
/// cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    rows: usize,
    cols: usize,
    visitable: Vec<bool>,
    starts: Vec<Cell>,
    visitable_count: usize,
}

impl GridMap {
    pub fn new(
        rows: usize,
        cols: usize,
        visitable: Vec<bool>,
        starts: Vec<Cell>,
    ) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyGrid);
        }
        if visitable.len() != rows * cols {
            return Err(GridError::MaskSizeMismatch {
                expected: rows * cols,
                got: visitable.len(),
            });
        }
        let visitable_count = visitable.iter().filter(|&&v| v).count();
        if visitable_count == 0 {
            return Err(GridError::NoVisitableCells);
        }
        if starts.is_empty() {
            return Err(GridError::NoStarts);
        }
        for &s in &starts {
            if s.row >= rows || s.col >= cols {
                return Err(GridError::StartOutOfBounds(s));
            }
            if !visitable[s.row * cols + s.col] {
                return Err(GridError::StartNotVisitable(s));
            }
        }
        Ok(Self { rows, cols, visitable, starts, visitable_count })
    }

    /// Fully visitable map, one UAV at `start`.
    pub fn open(rows: usize, cols: usize, start: Cell) -> Result<Self, GridError> {
        Self::new(rows, cols, vec![true; rows * cols], vec![start])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn starts(&self) -> &[Cell] {
        &self.starts
    }

    pub fn visitable_count(&self) -> usize {
        self.visitable_count
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn is_visitable(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols && self.visitable[self.index(cell)]
    }

    pub fn visitable_mask(&self) -> &[bool] {
        &self.visitable
    }

    /// Copy of this map with exactly `uav_count` start cells: extra starts
    /// are dropped, missing ones are filled with the first start cell.
    pub fn with_uav_count(&self, uav_count: usize) -> Result<Self, GridError> {
        if uav_count == 0 {
            return Err(GridError::NoStarts);
        }
        let mut starts: Vec<Cell> = self.starts.iter().copied().take(uav_count).collect();
        while starts.len() < uav_count {
            starts.push(self.starts[0]);
        }
        Self::new(self.rows, self.cols, self.visitable.clone(), starts)
    }

    /// Replaces the start list, revalidating.
    pub fn with_starts(&self, starts: Vec<Cell>) -> Result<Self, GridError> {
        Self::new(self.rows, self.cols, self.visitable.clone(), starts)
    }
}

/// Outcome classification for a single action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellClass {
    /// The target cell was visitable and unvisited; the UAV moved and the
    /// cell is now visited.
    NewCell,
    /// The target cell was visitable but already visited; the UAV moved.
    VisitedCell,
    /// The target cell was off-map or non-visitable; the UAV stayed put.
    NonVisitable,
}

/// Result of one action by one UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub cell_class: CellClass,
    pub new_position: Cell,
    pub coverage: f64,
    pub done: bool,
}

/// Per-UAV positions plus the shared visited mask and step counters.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<Cell>,
    pub visited: Vec<bool>,
    /// Total actions taken by all UAVs, including blocked ones.
    pub actions_taken: u64,
    /// Completed timesteps (one timestep = every UAV acts once).
    pub sim_steps: u64,
}

impl SwarmState {
    pub fn uav_count(&self) -> usize {
        self.positions.len()
    }

    pub fn visited_count(&self) -> usize {
        self.visited.iter().filter(|&&v| v).count()
    }
}

/// Reward constants per cell class. The new-cell figure is a base that gets
/// scaled by the discovery bonus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub new_cell_base: f64,
    pub visited_cell: f64,
    pub non_visitable: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { new_cell_base: 358.74, visited_cell: -31.14, non_visitable: -225.17 }
    }
}

/// Denominator used by the new-cell reward `base * (1 + max(rows, cols) / D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Eq2Mode {
    /// D = number of unvisited visitable cells immediately before the action.
    /// The bonus grows as fewer cells remain undiscovered (hill-climbing
    /// direction), and D >= 1 whenever a new cell exists.
    RemainingBefore,
    /// D = number of visited cells counting the newly discovered one. The
    /// literal formula; the bonus shrinks over an episode.
    VisitedAfter,
}

impl Default for Eq2Mode {
    fn default() -> Self {
        Eq2Mode::RemainingBefore
    }
}

/// Episode budget: an action cap plus an optional wall-clock cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Maximum total actions across all UAVs.
    pub max_steps: u64,
    pub wall_clock: Option<Duration>,
}

impl Budget {
    pub fn steps(max_steps: u64) -> Self {
        Self { max_steps, wall_clock: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepError {
    EpisodeFinished,
    BadUavIndex { uav: usize, count: usize },
}

impl std::fmt::Display for StepError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::EpisodeFinished => write!(f, "step called after the episode finished"),
            Self::BadUavIndex { uav, count } => {
                write!(f, "UAV index {uav} out of range for {count} UAVs")
            }
        }
    }
}

impl std::error::Error for StepError {}

/// The coverage environment: map plus reward configuration.
#[derive(Debug, Clone)]
pub struct CoverageEnv {
    map: GridMap,
    rewards: RewardConfig,
    eq2_mode: Eq2Mode,
}

impl CoverageEnv {
    pub fn new(map: GridMap, rewards: RewardConfig, eq2_mode: Eq2Mode) -> Self {
        Self { map, rewards, eq2_mode }
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn rewards(&self) -> &RewardConfig {
        &self.rewards
    }

    pub fn eq2_mode(&self) -> Eq2Mode {
        self.eq2_mode
    }

    /// Observation vector length: four stacked rows x cols channels.
    pub fn observation_len(&self) -> usize {
        4 * self.map.rows * self.map.cols
    }

    /// Fresh state: every UAV on its start cell, exactly the start cells
    /// visited, counters zeroed.
    pub fn reset(&self) -> SwarmState {
        let mut visited = vec![false; self.map.rows * self.map.cols];
        for &s in self.map.starts() {
            visited[self.map.index(s)] = true;
        }
        SwarmState {
            positions: self.map.starts().to_vec(),
            visited,
            actions_taken: 0,
            sim_steps: 0,
        }
    }

    /// Fraction of visitable cells visited so far.
    pub fn coverage(&self, state: &SwarmState) -> f64 {
        state.visited_count() as f64 / self.map.visitable_count() as f64
    }

    fn is_covered(&self, state: &SwarmState) -> bool {
        state.visited_count() == self.map.visitable_count()
    }

    /// Applies one action for one UAV. Blocked and off-map moves leave the
    /// position unchanged and earn the non-visitable penalty; moves onto an
    /// unvisited cell mark it and earn the scaled discovery reward.
    pub fn step(
        &self,
        state: &mut SwarmState,
        uav: usize,
        action: Action,
    ) -> Result<StepOutcome, StepError> {
        if uav >= state.positions.len() {
            return Err(StepError::BadUavIndex { uav, count: state.positions.len() });
        }
        if self.is_covered(state) {
            return Err(StepError::EpisodeFinished);
        }
        let pos = state.positions[uav];
        let (dr, dc) = action.delta();
        let target_row = pos.row as isize + dr;
        let target_col = pos.col as isize + dc;
        let target = if target_row >= 0 && target_col >= 0 {
            Cell::new(target_row as usize, target_col as usize)
        } else {
            // Off-map; reuse the current cell as a sentinel that fails the
            // visitability check below.
            Cell::new(usize::MAX, usize::MAX)
        };

        state.actions_taken += 1;

        let (reward, cell_class, new_position) = if !self.map.is_visitable(target) {
            (self.rewards.non_visitable, CellClass::NonVisitable, pos)
        } else if state.visited[self.map.index(target)] {
            state.positions[uav] = target;
            (self.rewards.visited_cell, CellClass::VisitedCell, target)
        } else {
            let reward = self.new_cell_reward(state);
            state.visited[self.map.index(target)] = true;
            state.positions[uav] = target;
            (reward, CellClass::NewCell, target)
        };

        Ok(StepOutcome {
            reward,
            cell_class,
            new_position,
            coverage: self.coverage(state),
            done: self.is_covered(state),
        })
    }

    /// Discovery reward, evaluated at the moment a new cell is about to be
    /// marked: `base * (1 + max(rows, cols) / D)`.
    fn new_cell_reward(&self, state: &SwarmState) -> f64 {
        let span = self.map.rows.max(self.map.cols) as f64;
        let denominator = match self.eq2_mode {
            Eq2Mode::RemainingBefore => {
                (self.map.visitable_count() - state.visited_count()) as f64
            }
            Eq2Mode::VisitedAfter => (state.visited_count() + 1) as f64,
        };
        self.rewards.new_cell_base * (1.0 + span / denominator)
    }

    /// True once the map is covered or either budget is exhausted.
    pub fn is_terminal(&self, state: &SwarmState, budget: &Budget, elapsed: Duration) -> bool {
        if self.is_covered(state) {
            return true;
        }
        if state.actions_taken >= budget.max_steps {
            return true;
        }
        match budget.wall_clock {
            Some(limit) => elapsed >= limit,
            None => false,
        }
    }

    /// Flattened observation for one UAV: visitability mask, visited mask,
    /// one-hot of this UAV's position, multi-hot of all other UAVs'
    /// positions, concatenated row-major in that order.
    pub fn observation(&self, state: &SwarmState, uav: usize) -> Vec<f64> {
        let n = self.map.rows * self.map.cols;
        let mut obs = vec![0.0; 4 * n];
        for i in 0..n {
            if self.map.visitable[i] {
                obs[i] = 1.0;
            }
            if state.visited[i] {
                obs[n + i] = 1.0;
            }
        }
        obs[2 * n + self.map.index(state.positions[uav])] = 1.0;
        for (i, &p) in state.positions.iter().enumerate() {
            if i != uav {
                obs[3 * n + self.map.index(p)] = 1.0;
            }
        }
        obs
    }
}
