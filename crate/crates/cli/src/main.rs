//! Command-line front end for the coverage planner.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use skycover_core::agent::ControllerMode;
use skycover_core::experiment::run_matrix;
use skycover_core::io::mapfile::{self, DimsOverride};
use skycover_core::io::report::{self, Manifest};
use skycover_core::RunConfig;

#[derive(Parser)]
#[command(
    name = "skycover",
    about = "Multi-UAV grid coverage planning with online Q-learning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a polygon map into the grid text format.
    Rasterize(RasterizeArgs),
    /// Train a controller on one map and write episode reports.
    Train(TrainArgs),
    /// Run the full size x swarm x topology experiment matrix.
    Matrix(MatrixArgs),
    /// Derive analysis CSVs from a finished run directory.
    Report(ReportArgs),
    /// Export one episode's visit heatmap as a PGM image.
    Heatmap(HeatmapArgs),
}

#[derive(Args)]
struct RasterizeArgs {
    /// Map file (polygon JSON, or grid text to canonicalize).
    map: PathBuf,
    /// Grid rows (requires --cols).
    #[arg(long, requires = "cols", conflicts_with = "cell_size")]
    rows: Option<usize>,
    /// Grid columns (requires --rows).
    #[arg(long, requires = "rows", conflicts_with = "cell_size")]
    cols: Option<usize>,
    /// Cell edge length in meters; rows/cols by ceiling division.
    #[arg(long)]
    cell_size: Option<f64>,
    /// Output path for the grid text (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Episodes per experiment.
    #[arg(long)]
    episodes: Option<u32>,
    /// Base seed for all random streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Timesteps per episode (every UAV acts once per timestep).
    #[arg(long)]
    step_budget: Option<u64>,
    /// Wall-clock budget per episode, in seconds; 0 disables it.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Network head: linear or softmax.
    #[arg(long)]
    head: Option<String>,
    /// Discovery-reward denominator: remaining or visited.
    #[arg(long)]
    eq2_denominator: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut overrides: Vec<(String, String)> = Vec::new();
        for pair in &self.set {
            let Some((key, value)) = pair.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {pair:?}");
            };
            overrides.push((key.trim().to_string(), value.trim().to_string()));
        }
        if let Some(v) = self.episodes {
            overrides.push(("episodes".into(), v.to_string()));
        }
        if let Some(v) = self.seed {
            overrides.push(("seed".into(), v.to_string()));
        }
        if let Some(v) = self.step_budget {
            overrides.push(("step_budget".into(), v.to_string()));
        }
        if let Some(v) = self.time_budget {
            overrides.push(("time_budget_seconds".into(), v.to_string()));
        }
        if let Some(v) = &self.head {
            overrides.push(("head_mode".into(), v.clone()));
        }
        if let Some(v) = &self.eq2_denominator {
            overrides.push(("eq2_denominator".into(), v.clone()));
        }
        Ok(RunConfig::load(self.config.as_deref(), &overrides)?)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Map file (grid text or polygon JSON).
    map: PathBuf,
    /// Number of UAVs in the swarm.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    uavs: u32,
    /// Controller topology.
    #[arg(long, value_parser = ["global", "per-uav"])]
    controller: String,
    /// Output directory for reports and checkpoints.
    #[arg(long, default_value = "skycover_run")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct MatrixArgs {
    /// Square map sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,6,7,8,9")]
    sizes: Vec<usize>,
    /// Swarm sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    uavs: Vec<usize>,
    /// Run cells sequentially instead of in parallel.
    #[arg(long)]
    serial: bool,
    /// Output directory for the report and per-cell runs.
    #[arg(long, default_value = "skycover_matrix")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// A run directory produced by `train` (or a matrix cell directory).
    run_dir: PathBuf,
}

#[derive(Args)]
struct HeatmapArgs {
    /// A run directory produced by `train` (or a matrix cell directory).
    run_dir: PathBuf,
    /// Episode index to render.
    #[arg(long)]
    episode: u32,
    /// Output path (defaults to `heatmap_ep<K>.pgm` inside the run directory).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rasterize(args) => rasterize(args),
        Command::Train(args) => train(args),
        Command::Matrix(args) => matrix(args),
        Command::Report(args) => report_cmd(args),
        Command::Heatmap(args) => heatmap(args),
    }
}

fn rasterize(args: RasterizeArgs) -> Result<()> {
    let body = std::fs::read_to_string(&args.map)
        .with_context(|| format!("reading {}", args.map.display()))?;
    let dims = match (args.rows, args.cols, args.cell_size) {
        (Some(r), Some(c), None) => Some(DimsOverride::RowsCols(r, c)),
        (None, None, Some(size)) => Some(DimsOverride::CellSize(size)),
        _ => None,
    };
    let parsed = mapfile::parse_map_str_with_dims(&body, dims)?;
    let text = mapfile::serialize_grid_text(&parsed.map);
    match &args.output {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn controller_mode(name: &str) -> ControllerMode {
    match name {
        "per-uav" => ControllerMode::PerUav,
        _ => ControllerMode::Global,
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let config = args.config.resolve()?;
    let parsed = mapfile::parse_map(&args.map)?;
    let mode = controller_mode(&args.controller);
    let uavs = args.uavs as usize;
    let spec = config.experiment_spec(parsed.map.clone(), uavs, mode);
    let output = skycover_core::run_experiment(&spec)?;
    let manifest = Manifest::new(
        "train",
        mapfile::serialize_grid_text(&parsed.map),
        uavs,
        mode,
        config,
    );
    report::write_run_dir(
        &args.out,
        &manifest,
        &output.records,
        &output.summary,
        &output.controller,
        &mode.to_string(),
    )?;
    let summary = &output.summary;
    println!(
        "solutions found: {} out of {} episodes",
        summary.solutions_found, summary.episodes
    );
    match (summary.min_solution_et_seconds, summary.min_solution_sim_steps) {
        (Some(et), Some(steps)) => {
            println!("minimum solution: {et:.3} s wall clock, {steps} timesteps")
        }
        _ => println!("minimum solution: none"),
    }
    println!("outputs written to {}", args.out.display());
    Ok(())
}

fn matrix(args: MatrixArgs) -> Result<()> {
    if args.sizes.is_empty() || args.uavs.is_empty() {
        bail!("--sizes and --uavs must be non-empty");
    }
    let config = args.config.resolve()?;
    let spec = config.matrix_spec(args.sizes.clone(), args.uavs.clone());
    let outputs = run_matrix(&spec, !args.serial);
    report::write_matrix_dir(&args.out, &outputs, &config)?;
    let mut failures = 0;
    for output in &outputs {
        let cell = output.cell;
        match &output.result {
            Ok(run) => println!(
                "{}x{} {} {} UAV(s): {} out of {} episodes",
                cell.size,
                cell.size,
                cell.label,
                cell.uav_count,
                run.summary.solutions_found,
                run.summary.episodes
            ),
            Err(e) => {
                failures += 1;
                eprintln!(
                    "{}x{} {} {} UAV(s): failed: {e}",
                    cell.size, cell.size, cell.label, cell.uav_count
                );
            }
        }
    }
    println!("{} experiments; report in {}", outputs.len(), args.out.display());
    if failures > 0 {
        bail!("{failures} matrix cell(s) failed");
    }
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<()> {
    let records = report::read_records(&args.run_dir.join("records.json"))?;
    report::write_analysis(&args.run_dir, &records)?;
    for name in ["coverage_curves.csv", "time_evolution.csv", "action_fractions.csv"] {
        println!("wrote {}", args.run_dir.join(name).display());
    }
    Ok(())
}

fn heatmap(args: HeatmapArgs) -> Result<()> {
    let records = report::read_records(&args.run_dir.join("records.json"))?;
    let (path, heatmap) =
        report::write_heatmap(&args.run_dir, &records, args.episode, args.output.as_deref())?;
    println!(
        "wrote {} ({}x{}, max count {})",
        path.display(),
        heatmap.rows,
        heatmap.cols,
        heatmap.max_count()
    );
    Ok(())
}
