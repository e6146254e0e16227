//! Map file formats.
//!
//! Two formats share one entry point, distinguished by the first non-blank
//! character:
//!
//! * Grid text: one character per cell, `.` visitable, `#` non-visitable,
//!   `S` a visitable start cell. All lines must have equal length and at
//!   least one `S` must appear. This is the canonical fixture format.
//! * Polygon JSON (first character `{`): a field polygon in meters plus a
//!   grid resolution, rasterized on load. Keys: `version` (1), `vertices`
//!   (list of `[x, y]`), either `rows`+`cols` or `cell_size`, and optional
//!   `starts` (list of `[row, col]` cell coordinates).

use std::path::Path;

use serde::Deserialize;

use crate::geometry::{self, GeometryError, Point, Polygon};
use crate::gridworld::{Cell, GridError, GridMap};

#[derive(Debug, Clone, PartialEq)]
pub enum MapError {
    Io(String),
    /// Malformed content, with 1-based line/column where that makes sense.
    Parse { line: usize, col: usize, message: String },
    /// Structurally valid content that violates a map constraint.
    Constraint(String),
    Geometry(GeometryError),
    Grid(GridError),
}

impl std::fmt::Display for MapError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(e) => write!(f, "map io error: {e}"),
            Self::Parse { line, col, message } => {
                write!(f, "map parse error at line {line}, column {col}: {message}")
            }
            Self::Constraint(message) => write!(f, "map constraint violated: {message}"),
            Self::Geometry(e) => write!(f, "map polygon error: {e}"),
            Self::Grid(e) => write!(f, "map grid error: {e}"),
        }
    }
}

impl std::error::Error for MapError {}

impl From<GeometryError> for MapError {
    fn from(e: GeometryError) -> Self {
        MapError::Geometry(e)
    }
}

impl From<GridError> for MapError {
    fn from(e: GridError) -> Self {
        MapError::Grid(e)
    }
}

/// A parsed map plus, for polygon files, the source polygon.
#[derive(Debug, Clone)]
pub struct ParsedMap {
    pub map: GridMap,
    pub polygon: Option<Polygon>,
}

/// Grid resolution supplied on the command line, overriding whatever the
/// polygon file specifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimsOverride {
    RowsCols(usize, usize),
    CellSize(f64),
}

/// Reads a map file, sniffing the format from the first non-blank character.
pub fn parse_map(path: &Path) -> Result<ParsedMap, MapError> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| MapError::Io(format!("{}: {e}", path.display())))?;
    parse_map_str(&body)
}

/// See [`parse_map`]; operates on in-memory content.
pub fn parse_map_str(body: &str) -> Result<ParsedMap, MapError> {
    parse_map_str_with_dims(body, None)
}

/// Parse with an optional resolution override (polygon maps only).
pub fn parse_map_str_with_dims(
    body: &str,
    dims: Option<DimsOverride>,
) -> Result<ParsedMap, MapError> {
    if body.trim_start().starts_with('{') {
        parse_polygon_map(body, dims)
    } else {
        if dims.is_some() {
            return Err(MapError::Constraint(
                "grid resolution flags only apply to polygon maps".into(),
            ));
        }
        Ok(ParsedMap { map: parse_grid_text(body)?, polygon: None })
    }
}

/// Parses the grid text format.
pub fn parse_grid_text(body: &str) -> Result<GridMap, MapError> {
    let lines: Vec<&str> = body.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(MapError::Constraint("map file has no grid lines".into()));
    }
    let cols = lines[0].chars().count();
    let rows = lines.len();
    let mut visitable = Vec::with_capacity(rows * cols);
    let mut starts = Vec::new();
    for (r, line) in lines.iter().enumerate() {
        let width = line.chars().count();
        if width != cols {
            return Err(MapError::Parse {
                line: r + 1,
                col: width.min(cols) + 1,
                message: format!("ragged line: {width} cells, expected {cols}"),
            });
        }
        for (c, ch) in line.chars().enumerate() {
            match ch {
                '.' => visitable.push(true),
                '#' => visitable.push(false),
                'S' => {
                    visitable.push(true);
                    starts.push(Cell::new(r, c));
                }
                other => {
                    return Err(MapError::Parse {
                        line: r + 1,
                        col: c + 1,
                        message: format!("unexpected character {other:?} (expected '.', '#', 'S')"),
                    });
                }
            }
        }
    }
    if starts.is_empty() {
        return Err(MapError::Constraint("no start cell ('S') in grid".into()));
    }
    GridMap::new(rows, cols, visitable, starts).map_err(MapError::from)
}

/// Canonical grid text for a map: `S` on start cells, `.`/`#` elsewhere,
/// one trailing newline.
pub fn serialize_grid_text(map: &GridMap) -> String {
    let mut out = String::with_capacity((map.cols() + 1) * map.rows());
    for r in 0..map.rows() {
        for c in 0..map.cols() {
            let cell = Cell::new(r, c);
            let ch = if map.starts().contains(&cell) {
                'S'
            } else if map.is_visitable(cell) {
                '.'
            } else {
                '#'
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct PolygonMapFile {
    version: u32,
    vertices: Vec<[f64; 2]>,
    #[serde(default)]
    rows: Option<usize>,
    #[serde(default)]
    cols: Option<usize>,
    #[serde(default)]
    cell_size: Option<f64>,
    #[serde(default)]
    starts: Option<Vec<[usize; 2]>>,
}

const POLYGON_MAP_VERSION: u32 = 1;

fn parse_polygon_map(body: &str, dims: Option<DimsOverride>) -> Result<ParsedMap, MapError> {
    let file: PolygonMapFile = serde_json::from_str(body).map_err(|e| MapError::Parse {
        line: e.line(),
        col: e.column(),
        message: e.to_string(),
    })?;
    if file.version != POLYGON_MAP_VERSION {
        return Err(MapError::Constraint(format!(
            "unsupported polygon map version {} (expected {POLYGON_MAP_VERSION})",
            file.version
        )));
    }
    let polygon = Polygon::new(file.vertices.iter().map(|&[x, y]| Point::new(x, y)).collect())?;
    let (rows, cols) = match dims {
        Some(DimsOverride::RowsCols(r, c)) => (r, c),
        Some(DimsOverride::CellSize(size)) => {
            let mbr = geometry::compute_mbr(&polygon);
            geometry::dims_for_cell_size(&mbr, size)?
        }
        None => resolve_dims(&file, &polygon)?,
    };
    let map = geometry::rasterize(&polygon, rows, cols)?;
    let map = match file.starts {
        Some(raw) if !raw.is_empty() => {
            let starts: Vec<Cell> = raw.iter().map(|&[r, c]| Cell::new(r, c)).collect();
            map.with_starts(starts)?
        }
        _ => map,
    };
    Ok(ParsedMap { map, polygon: Some(polygon) })
}

fn resolve_dims(file: &PolygonMapFile, polygon: &Polygon) -> Result<(usize, usize), MapError> {
    match (file.rows, file.cols, file.cell_size) {
        (Some(r), Some(c), None) => Ok((r, c)),
        (None, None, Some(size)) => {
            let mbr = geometry::compute_mbr(polygon);
            geometry::dims_for_cell_size(&mbr, size).map_err(MapError::from)
        }
        (None, None, None) => Err(MapError::Constraint(
            "polygon map needs either rows+cols or cell_size".into(),
        )),
        (Some(_), None, None) | (None, Some(_), None) => Err(MapError::Constraint(
            "polygon map needs both rows and cols".into(),
        )),
        _ => Err(MapError::Constraint(
            "polygon map must use rows+cols or cell_size, not both".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_grid_with_start() {
        let map = parse_grid_text("S.\n..\n").unwrap();
        assert_eq!((map.rows(), map.cols()), (2, 2));
        assert_eq!(map.visitable_count(), 4);
        assert_eq!(map.starts(), &[Cell::new(0, 0)]);
    }

    #[test]
    fn hash_marks_non_visitable() {
        let map = parse_grid_text("S#\n..\n").unwrap();
        assert!(!map.is_visitable(Cell::new(0, 1)));
        assert_eq!(map.visitable_count(), 3);
    }

    #[test]
    fn ragged_lines_are_rejected_with_position() {
        let err = parse_grid_text("S.\n.#.\n").unwrap_err();
        assert!(matches!(err, MapError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_character_is_rejected_with_position() {
        let err = parse_grid_text("S.\n.x\n").unwrap_err();
        assert!(matches!(err, MapError::Parse { line: 2, col: 2, .. }), "{err}");
    }

    #[test]
    fn missing_start_is_a_constraint_error() {
        let err = parse_grid_text("..\n..\n").unwrap_err();
        assert!(matches!(err, MapError::Constraint(_)), "{err}");
    }

    #[test]
    fn multiple_starts_in_reading_order() {
        let map = parse_grid_text("S.\n.S\n").unwrap();
        assert_eq!(map.starts(), &[Cell::new(0, 0), Cell::new(1, 1)]);
    }

    #[test]
    fn grid_round_trip_is_identity() {
        let canonical = "S..#\n.#..\n...S\n";
        let map = parse_grid_text(canonical).unwrap();
        assert_eq!(serialize_grid_text(&map), canonical);
    }

    #[test]
    fn polygon_map_with_explicit_dims_and_starts() {
        let body = r#"{
            "version": 1,
            "vertices": [[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]],
            "rows": 3,
            "cols": 3,
            "starts": [[2, 0]]
        }"#;
        let parsed = parse_map_str(body).unwrap();
        assert!(parsed.polygon.is_some());
        assert_eq!(parsed.map.visitable_count(), 5);
        assert_eq!(parsed.map.starts(), &[Cell::new(2, 0)]);
    }

    #[test]
    fn polygon_map_with_cell_size() {
        let body = r#"{
            "version": 1,
            "vertices": [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]],
            "cell_size": 5.0
        }"#;
        let parsed = parse_map_str(body).unwrap();
        assert_eq!((parsed.map.rows(), parsed.map.cols()), (2, 2));
        assert_eq!(parsed.map.visitable_count(), 4);
    }

    #[test]
    fn polygon_map_start_on_non_visitable_cell_fails() {
        let body = r#"{
            "version": 1,
            "vertices": [[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]],
            "rows": 3,
            "cols": 3,
            "starts": [[0, 0]]
        }"#;
        let err = parse_map_str(body).unwrap_err();
        assert!(matches!(err, MapError::Grid(GridError::StartNotVisitable(_))), "{err}");
    }

    #[test]
    fn polygon_map_rejects_bad_dim_combinations() {
        for extra in ["\"rows\": 2", "\"rows\": 2, \"cols\": 2, \"cell_size\": 1.0", ""] {
            let body = format!(
                r#"{{"version": 1, "vertices": [[0,0],[4,0],[2,3]], {extra}}}"#
            )
            .replace(", }", " }");
            let err = parse_map_str(&body).unwrap_err();
            assert!(matches!(err, MapError::Constraint(_)), "{extra}: {err}");
        }
    }

    #[test]
    fn polygon_map_rejects_unknown_version() {
        let body = r#"{"version": 9, "vertices": [[0,0],[4,0],[2,3]], "rows": 2, "cols": 2}"#;
        assert!(matches!(parse_map_str(body), Err(MapError::Constraint(_))));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_map_str("{ \"version\": 1,,, }").unwrap_err();
        assert!(matches!(err, MapError::Parse { .. }));
    }
}
