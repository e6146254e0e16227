//! End-to-end tests against the built binary: exit codes, file outputs, and
//! the determinism contract.

use std::path::Path;
use std::process::{Command, Output};

fn skycover(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skycover"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TRIANGLE_JSON: &str = r#"{
    "version": 1,
    "vertices": [[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]],
    "rows": 3,
    "cols": 3,
    "starts": [[2, 0]]
}"#;

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // Usage errors exit 1.
    let out = skycover(&["bogus-subcommand"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = skycover(&["train", "map.grid"], dir.path()); // missing required flags
    assert_eq!(out.status.code(), Some(1));
    // Help exits 0.
    let out = skycover(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    // Runtime failures exit 2.
    let out = skycover(
        &["train", "missing.grid", "--uavs", "1", "--controller", "global"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    // Bad config values are runtime failures too.
    write(dir.path(), "map.grid", "S.\n..\n");
    let out = skycover(
        &[
            "train", "map.grid", "--uavs", "1", "--controller", "global", "--set", "gamma=1.5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rasterize_writes_grid_text() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "field.json", TRIANGLE_JSON);
    let out = skycover(&["rasterize", "field.json", "-o", "field.grid"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = std::fs::read_to_string(dir.path().join("field.grid")).unwrap();
    assert_eq!(grid, "#.#\n#.#\nS..\n");

    // Stdout mode with an explicit resolution override; the file leaves the
    // resolution to the command line and the start defaults to the first
    // visitable cell.
    write(
        dir.path(),
        "bare.json",
        r#"{"version": 1, "vertices": [[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]]}"#,
    );
    let out = skycover(&["rasterize", "bare.json", "--rows", "1", "--cols", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "S\n");
}

#[test]
fn train_with_zero_budget_reports_no_solutions() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "map.grid", "S.\n..\n");
    let out = skycover(
        &[
            "train", "map.grid", "--uavs", "1", "--controller", "global", "--episodes", "1",
            "--step-budget", "0", "--seed", "1", "--out", "run",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("solutions found: 0 out of 1"));
    let summary = std::fs::read_to_string(dir.path().join("run/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains("0 out of 1"));
    for file in ["manifest.json", "episodes.csv", "records.json", "network_global.json"] {
        assert!(dir.path().join("run").join(file).exists(), "{file} missing");
    }
}

#[test]
fn train_report_heatmap_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "map.grid", "S..\n...\n...\n");
    let out = skycover(
        &[
            "train", "map.grid", "--uavs", "2", "--controller", "per-uav", "--episodes", "2",
            "--step-budget", "60", "--seed", "7", "--time-budget", "0", "--out", "run",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // Per-UAV topology emits one checkpoint per UAV.
    assert!(dir.path().join("run/network_uav0.json").exists());
    assert!(dir.path().join("run/network_uav1.json").exists());
    assert!(!dir.path().join("run/network_global.json").exists());

    let out = skycover(&["report", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["coverage_curves.csv", "time_evolution.csv", "action_fractions.csv"] {
        assert!(dir.path().join("run").join(file).exists(), "{file} missing");
    }

    let out = skycover(&["heatmap", "run", "--episode", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let pgm_text = std::fs::read_to_string(dir.path().join("run/heatmap_ep1.pgm")).unwrap();
    let heatmap = skycover_core::io::pgm::parse_pgm(&pgm_text).unwrap();
    assert_eq!((heatmap.rows, heatmap.cols), (3, 3));
    let records = skycover_core::io::report::read_records(&dir.path().join("run/records.json"))
        .unwrap();
    let record = records.iter().find(|r| r.episode == 1).unwrap();
    assert_eq!(heatmap.counts, record.visit_counts);

    // Asking for an episode outside the run is a runtime failure.
    let out = skycover(&["heatmap", "run", "--episode", "9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn matrix_emits_structured_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = skycover(
        &[
            "matrix", "--sizes", "2,3", "--uavs", "1,2", "--episodes", "2", "--step-budget",
            "6", "--seed", "9", "--out", "m",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("m/matrix_report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    // 2 baseline + 2 per-uav + 2 global rows.
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("2x2,baseline,1,"));
    assert!(lines[2].starts_with("3x3,baseline,1,"));
    assert!(lines[3].starts_with("2x2,per-uav,2,"));
    assert!(lines[5].starts_with("2x2,global,2,"));
    assert!(dir.path().join("m/cells/s2_baseline_u1/episodes.csv").exists());
    assert!(dir.path().join("m/cells/s3_global_u2/records.json").exists());
    assert!(dir.path().join("m/manifest.json").exists());
}

#[test]
fn default_matrix_reproduces_the_25_experiment_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = skycover(
        &[
            "matrix", "--step-budget", "10", "--time-budget", "0", "--seed", "3", "--out",
            "m25",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("m25/matrix_report.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 25);
    let label = |row: &str| row.split(',').nth(1).unwrap().to_string();
    assert!(rows[..5].iter().all(|r| label(r) == "baseline"));
    assert!(rows[5..15].iter().all(|r| label(r) == "per-uav"));
    assert!(rows[15..].iter().all(|r| label(r) == "global"));
    for row in &rows {
        assert!(row.split(',').nth(3).unwrap().ends_with(" out of 30"), "{row}");
    }
}

/// Byte comparison with wall-clock columns removed: drops `et_seconds` /
/// `min_solution_et_seconds` CSV columns by header and `timing` JSON keys.
fn normalized(path: &Path) -> String {
    let body = std::fs::read_to_string(path).unwrap();
    let name = path.file_name().unwrap().to_string_lossy();
    if name.ends_with(".csv") {
        let mut lines = body.lines();
        let header = lines.next().unwrap();
        let columns: Vec<&str> = header.split(',').collect();
        let keep: Vec<usize> = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| !matches!(**c, "et_seconds" | "min_solution_et_seconds"))
            .map(|(i, _)| i)
            .collect();
        std::iter::once(header)
            .chain(lines)
            .map(|line| {
                let fields: Vec<&str> = line.split(',').collect();
                keep.iter().map(|&i| fields[i]).collect::<Vec<_>>().join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    } else if name.ends_with(".json") {
        let mut value: serde_json::Value = serde_json::from_str(&body).unwrap();
        fn scrub(v: &mut serde_json::Value) {
            match v {
                serde_json::Value::Object(map) => {
                    map.remove("timing");
                    map.values_mut().for_each(scrub);
                }
                serde_json::Value::Array(items) => items.iter_mut().for_each(scrub),
                _ => {}
            }
        }
        scrub(&mut value);
        value.to_string()
    } else {
        body
    }
}

#[test]
fn repeated_runs_are_bit_identical_excluding_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "map.grid", "S.#\n...\n.#.\n");
    for run in ["a", "b"] {
        let out = skycover(
            &[
                "train", "map.grid", "--uavs", "2", "--controller", "global", "--episodes",
                "3", "--step-budget", "30", "--seed", "42", "--out", run,
            ],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in [
        "manifest.json",
        "episodes.csv",
        "summary.csv",
        "records.json",
        "network_global.json",
    ] {
        assert_eq!(
            normalized(&dir.path().join("a").join(file)),
            normalized(&dir.path().join("b").join(file)),
            "{file} differs between identical runs"
        );
    }
    // Checkpoints are fully deterministic, including bytes.
    assert_eq!(
        std::fs::read(dir.path().join("a/network_global.json")).unwrap(),
        std::fs::read(dir.path().join("b/network_global.json")).unwrap()
    );
}
