//! Performance measures over episode records: execution time, valid-action
//! fractions, coverage curves, visit heatmaps, and the per-episode time
//! series.

use std::time::Duration;

use crate::experiment::EpisodeRecord;
use crate::gridworld::CellClass;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// The episode contains no actions, so action fractions are undefined.
    UndefinedForEmptyEpisode,
    /// The stored coverage trajectory decreases, which a well-formed episode
    /// cannot produce.
    CorruptRecord(String),
}

impl std::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::UndefinedForEmptyEpisode => {
                write!(f, "episode has no actions; fraction undefined")
            }
            Self::CorruptRecord(what) => write!(f, "corrupt episode record: {what}"),
        }
    }
}

impl std::error::Error for MetricsError {}

/// Coverage after each action: `(action ordinal from 1, coverage fraction)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    pub points: Vec<(u64, f64)>,
}

/// Per-cell entry counts for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
}

impl Heatmap {
    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Episode wall-clock duration, `TE1 - TE0`.
pub fn execution_time(record: &EpisodeRecord) -> Duration {
    Duration::from_secs_f64(record.timing.et_seconds.max(0.0))
}

/// Fraction of actions that discovered a new cell: `PA = VA / TA`.
pub fn valid_action_fraction(record: &EpisodeRecord) -> Result<f64, MetricsError> {
    if record.total_actions == 0 {
        return Err(MetricsError::UndefinedForEmptyEpisode);
    }
    Ok(record.valid_actions as f64 / record.total_actions as f64)
}

/// Per-UAV valid-action fraction; `None` for a UAV that never acted.
pub fn per_uav_valid_fraction(record: &EpisodeRecord) -> Vec<Option<f64>> {
    record
        .per_uav_actions
        .iter()
        .zip(&record.per_uav_valid)
        .map(|(&actions, &valid)| {
            if actions == 0 {
                None
            } else {
                Some(valid as f64 / actions as f64)
            }
        })
        .collect()
}

/// The stored per-action coverage sequence, validated non-decreasing.
pub fn coverage_curve(record: &EpisodeRecord) -> Result<CoverageCurve, MetricsError> {
    for (i, pair) in record.coverage_trajectory.windows(2).enumerate() {
        if pair[1] < pair[0] {
            return Err(MetricsError::CorruptRecord(format!(
                "coverage decreases at action {}: {} -> {}",
                i + 2,
                pair[0],
                pair[1]
            )));
        }
    }
    Ok(CoverageCurve {
        points: record
            .coverage_trajectory
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as u64 + 1, c))
            .collect(),
    })
}

/// Cell-entry counts for the episode. Initial placements count one entry per
/// UAV; blocked moves count nothing.
pub fn visit_heatmap(record: &EpisodeRecord) -> Heatmap {
    Heatmap { rows: record.rows, cols: record.cols, counts: record.visit_counts.clone() }
}

/// Per-episode execution time series, `(episode, ET seconds)`.
pub fn time_evolution(records: &[EpisodeRecord]) -> Vec<(u32, f64)> {
    records.iter().map(|r| (r.episode, r.timing.et_seconds)).collect()
}

/// Count of actions that changed a UAV's position (everything except
/// blocked/off-map moves).
pub fn position_changing_actions(record: &EpisodeRecord) -> u64 {
    record.steps.iter().filter(|s| s.class != CellClass::NonVisitable).count() as u64
}
