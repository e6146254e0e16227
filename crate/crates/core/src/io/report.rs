//! Report and artifact writers: per-episode CSV, run summaries, the matrix
//! report, analysis CSVs, raw episode records, network checkpoints, and the
//! run manifest.
//!
//! CSV schemas are fixed. Numeric columns print with six decimal places;
//! wall-clock-derived columns (`et_seconds`, `min_solution_et_seconds`) are
//! the only nondeterministic fields, so determinism checks can drop them by
//! header name. The manifest and `records.json` keep full double precision.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{Controller, ControllerMode};
use crate::experiment::{EpisodeRecord, ExperimentSummary, MatrixCellOutput};
use crate::io::config::RunConfig;
use crate::io::pgm;
use crate::metrics::{self, Heatmap};
use crate::neural::FormatError;

#[derive(Debug)]
pub enum ReportError {
    Io { path: PathBuf, source: std::io::Error },
    Json(String),
    Checkpoint(FormatError),
    MissingEpisode { episode: u32, available: usize },
}

impl std::fmt::Display for ReportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Json(e) => write!(f, "json error: {e}"),
            Self::Checkpoint(e) => write!(f, "{e}"),
            Self::MissingEpisode { episode, available } => {
                write!(f, "episode {episode} not in run records ({available} episodes)")
            }
        }
    }
}

impl std::error::Error for ReportError {}

impl From<FormatError> for ReportError {
    fn from(e: FormatError) -> Self {
        ReportError::Checkpoint(e)
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), ReportError> {
    fs::write(path, body).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

/// Header of the per-episode CSV, in fixed column order.
pub const EPISODE_CSV_HEADER: &str =
    "episode,epsilon,total_actions,valid_actions,pa,solved,sim_steps,et_seconds,final_coverage";

/// Per-episode metrics table. `pa` is empty for an episode without actions.
pub fn episode_csv(records: &[EpisodeRecord]) -> String {
    let mut out = String::from(EPISODE_CSV_HEADER);
    out.push('\n');
    for r in records {
        let pa = match metrics::valid_action_fraction(r) {
            Ok(v) => fmt6(v),
            Err(_) => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.episode,
            fmt6(r.epsilon),
            r.total_actions,
            r.valid_actions,
            pa,
            r.solved,
            r.sim_steps,
            fmt6(r.timing.et_seconds),
            fmt6(r.final_coverage),
        ));
    }
    out
}

/// Header of the summary / matrix report CSV.
pub const SUMMARY_CSV_HEADER: &str = "map_size,controller,uavs,solutions_found,episodes,\
min_solution_et_seconds,min_solution_sim_steps";

/// One line of the summary table. A failed cell leaves the metric fields
/// empty. `solutions_found` reads "N out of E".
pub fn summary_row(
    map_size: &str,
    controller: &str,
    uavs: usize,
    episodes: u32,
    summary: Option<&ExperimentSummary>,
) -> String {
    match summary {
        Some(s) => format!(
            "{},{},{},{} out of {},{},{},{}",
            map_size,
            controller,
            uavs,
            s.solutions_found,
            s.episodes,
            s.episodes,
            s.min_solution_et_seconds.map(fmt6).unwrap_or_default(),
            s.min_solution_sim_steps.map(|v| v.to_string()).unwrap_or_default(),
        ),
        None => format!("{map_size},{controller},{uavs},,{episodes},,"),
    }
}

/// Coverage-curve CSV over all episodes: `episode,action_ordinal,coverage`.
pub fn coverage_curves_csv(records: &[EpisodeRecord]) -> String {
    let mut out = String::from("episode,action_ordinal,coverage\n");
    for r in records {
        for (i, &coverage) in r.coverage_trajectory.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", r.episode, i + 1, fmt6(coverage)));
        }
    }
    out
}

/// Time-evolution CSV: `episode,et_seconds,sim_steps,solved`.
pub fn time_evolution_csv(records: &[EpisodeRecord]) -> String {
    let mut out = String::from("episode,et_seconds,sim_steps,solved\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.episode,
            fmt6(r.timing.et_seconds),
            r.sim_steps,
            r.solved
        ));
    }
    out
}

/// Per-UAV valid-action fractions, per episode and cumulative across
/// episodes: `episode,uav,total_actions,valid_actions,fraction,cumulative_fraction`.
/// Fraction fields are empty where the denominator is zero.
pub fn action_fractions_csv(records: &[EpisodeRecord]) -> String {
    let mut out =
        String::from("episode,uav,total_actions,valid_actions,fraction,cumulative_fraction\n");
    let uav_count = records.iter().map(|r| r.uav_count).max().unwrap_or(0);
    let mut cumulative_actions = vec![0u64; uav_count];
    let mut cumulative_valid = vec![0u64; uav_count];
    for r in records {
        let fractions = metrics::per_uav_valid_fraction(r);
        for uav in 0..r.uav_count {
            cumulative_actions[uav] += r.per_uav_actions[uav];
            cumulative_valid[uav] += r.per_uav_valid[uav];
            let fraction = fractions[uav].map(fmt6).unwrap_or_default();
            let cumulative = if cumulative_actions[uav] == 0 {
                String::new()
            } else {
                fmt6(cumulative_valid[uav] as f64 / cumulative_actions[uav] as f64)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.episode, uav, r.per_uav_actions[uav], r.per_uav_valid[uav], fraction, cumulative
            ));
        }
    }
    out
}

/// Container for the raw episode records of one run.
#[derive(Debug, Serialize, Deserialize)]
pub struct RecordsFile {
    pub version: u32,
    pub records: Vec<EpisodeRecord>,
}

const RECORDS_VERSION: u32 = 1;

pub fn write_records(path: &Path, records: &[EpisodeRecord]) -> Result<(), ReportError> {
    let file = RecordsFile { version: RECORDS_VERSION, records: records.to_vec() };
    let body = serde_json::to_string(&file).map_err(|e| ReportError::Json(e.to_string()))?;
    write_file(path, &body)
}

pub fn read_records(path: &Path) -> Result<Vec<EpisodeRecord>, ReportError> {
    let body = fs::read_to_string(path)
        .map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    let file: RecordsFile =
        serde_json::from_str(&body).map_err(|e| ReportError::Json(e.to_string()))?;
    if file.version != RECORDS_VERSION {
        return Err(ReportError::Json(format!("unsupported records version {}", file.version)));
    }
    Ok(file.records)
}

/// Everything needed to reproduce a run exactly: the resolved configuration,
/// the canonical map, the swarm size, and the topology. Contains no
/// timestamps, so repeated runs write identical manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub format_version: u32,
    pub command: String,
    /// Canonical grid text of the resolved map (before start replication).
    pub map_grid: String,
    pub uav_count: usize,
    pub controller: ControllerMode,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(
        command: &str,
        map_grid: String,
        uav_count: usize,
        controller: ControllerMode,
        config: RunConfig,
    ) -> Self {
        Self {
            tool: "skycover".into(),
            format_version: 1,
            command: command.into(),
            map_grid,
            uav_count,
            controller,
            config,
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), ReportError> {
    let body =
        serde_json::to_string_pretty(manifest).map_err(|e| ReportError::Json(e.to_string()))?;
    write_file(path, &body)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, ReportError> {
    let body = fs::read_to_string(path)
        .map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&body).map_err(|e| ReportError::Json(e.to_string()))
}

/// Checkpoint file names for a controller: `network_global.json` for the
/// shared topology, `network_uav<i>.json` per UAV otherwise.
pub fn write_checkpoints(dir: &Path, controller: &Controller) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    match controller.config().mode {
        ControllerMode::Global => {
            let path = dir.join("network_global.json");
            controller.networks()[0].save(&path)?;
            written.push(path);
        }
        ControllerMode::PerUav => {
            for (i, net) in controller.networks().iter().enumerate() {
                let path = dir.join(format!("network_uav{i}.json"));
                net.save(&path)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Writes the full output set for one run directory: manifest, per-episode
/// CSV, one-row summary CSV, raw records, and checkpoints.
pub fn write_run_dir(
    dir: &Path,
    manifest: &Manifest,
    records: &[EpisodeRecord],
    summary: &ExperimentSummary,
    controller: &Controller,
    controller_label: &str,
) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    write_manifest(&dir.join("manifest.json"), manifest)?;
    write_file(&dir.join("episodes.csv"), &episode_csv(records))?;
    let map_size = map_size_label(records);
    let mut summary_body = String::from(SUMMARY_CSV_HEADER);
    summary_body.push('\n');
    summary_body.push_str(&summary_row(
        &map_size,
        controller_label,
        manifest.uav_count,
        summary.episodes,
        Some(summary),
    ));
    summary_body.push('\n');
    write_file(&dir.join("summary.csv"), &summary_body)?;
    write_records(&dir.join("records.json"), records)?;
    write_checkpoints(dir, controller)?;
    Ok(())
}

fn map_size_label(records: &[EpisodeRecord]) -> String {
    match records.first() {
        Some(r) => format!("{}x{}", r.rows, r.cols),
        None => String::new(),
    }
}

/// Writes the analysis CSVs derived from stored records into a run directory.
pub fn write_analysis(dir: &Path, records: &[EpisodeRecord]) -> Result<(), ReportError> {
    write_file(&dir.join("coverage_curves.csv"), &coverage_curves_csv(records))?;
    write_file(&dir.join("time_evolution.csv"), &time_evolution_csv(records))?;
    write_file(&dir.join("action_fractions.csv"), &action_fractions_csv(records))?;
    Ok(())
}

/// Writes the heatmap of one episode as a PGM file; returns the path.
pub fn write_heatmap(
    dir: &Path,
    records: &[EpisodeRecord],
    episode: u32,
    output: Option<&Path>,
) -> Result<(PathBuf, Heatmap), ReportError> {
    let record = records
        .iter()
        .find(|r| r.episode == episode)
        .ok_or(ReportError::MissingEpisode { episode, available: records.len() })?;
    let heatmap = metrics::visit_heatmap(record);
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => dir.join(format!("heatmap_ep{episode}.pgm")),
    };
    write_file(&path, &pgm::to_pgm(&heatmap))?;
    Ok((path, heatmap))
}

/// Reproduction record for a matrix run: the cell coordinates plus the base
/// configuration. Scheduling (serial vs parallel) does not affect results,
/// so it is deliberately absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixManifest {
    pub tool: String,
    pub format_version: u32,
    pub command: String,
    pub sizes: Vec<usize>,
    pub uav_counts: Vec<usize>,
    pub config: RunConfig,
}

/// The matrix report plus one run directory per cell under `cells/`.
pub fn write_matrix_dir(
    dir: &Path,
    outputs: &[MatrixCellOutput],
    config: &RunConfig,
) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    let mut sizes: Vec<usize> = outputs.iter().map(|o| o.cell.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut uav_counts: Vec<usize> = outputs.iter().map(|o| o.cell.uav_count).collect();
    uav_counts.sort_unstable();
    uav_counts.dedup();
    let manifest = MatrixManifest {
        tool: "skycover".into(),
        format_version: 1,
        command: "matrix".into(),
        sizes,
        uav_counts,
        config: *config,
    };
    let manifest_body =
        serde_json::to_string_pretty(&manifest).map_err(|e| ReportError::Json(e.to_string()))?;
    write_file(&dir.join("manifest.json"), &manifest_body)?;
    write_file(&dir.join("matrix_report.csv"), &matrix_report_csv(outputs))?;
    for output in outputs {
        let cell = output.cell;
        let cell_dir = dir
            .join("cells")
            .join(format!("s{}_{}_u{}", cell.size, cell.label.as_str(), cell.uav_count));
        match &output.result {
            Ok(run) => {
                let map_grid = crate::io::mapfile::serialize_grid_text(
                    &cell.map().expect("matrix cell map is valid"),
                );
                // The cell manifest carries the derived per-cell seed, so a
                // plain `train` on the embedded map reproduces the cell.
                let mut cell_config = *config;
                cell_config.seed = crate::experiment::cell_seed(
                    config.seed,
                    cell.size,
                    cell.uav_count,
                    cell.label.mode(),
                );
                let manifest = Manifest::new(
                    "matrix-cell",
                    map_grid,
                    cell.uav_count,
                    cell.label.mode(),
                    cell_config,
                );
                write_run_dir(
                    &cell_dir,
                    &manifest,
                    &run.records,
                    &run.summary,
                    &run.controller,
                    cell.label.as_str(),
                )?;
            }
            Err(e) => {
                fs::create_dir_all(&cell_dir)
                    .map_err(|source| ReportError::Io { path: cell_dir.clone(), source })?;
                write_file(&cell_dir.join("error.txt"), &format!("{e}\n"))?;
            }
        }
    }
    Ok(())
}

/// The matrix report body in block order (baseline, per-UAV, global).
pub fn matrix_report_csv(outputs: &[MatrixCellOutput]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for output in outputs {
        let cell = output.cell;
        let map_size = format!("{0}x{0}", cell.size);
        let episodes = match &output.result {
            Ok(run) => run.summary.episodes,
            Err(_) => 0,
        };
        out.push_str(&summary_row(
            &map_size,
            cell.label.as_str(),
            cell.uav_count,
            episodes,
            output.result.as_ref().ok().map(|r| &r.summary),
        ));
        out.push('\n');
    }
    out
}
