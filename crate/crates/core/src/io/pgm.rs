//! Plain (ASCII) PGM "P2" export for visit heatmaps, plus a parser for
//! round-trip checks.

use crate::metrics::Heatmap;

#[derive(Debug, Clone, PartialEq)]
pub enum PgmError {
    Parse(String),
}

impl std::fmt::Display for PgmError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Parse(m) => write!(f, "pgm parse error: {m}"),
        }
    }
}

impl std::error::Error for PgmError {}

/// Renders a heatmap as PGM P2 with maxval equal to the largest count
/// (at least 1, since PGM requires a positive maxval).
pub fn to_pgm(heatmap: &Heatmap) -> String {
    let maxval = heatmap.max_count().max(1);
    let mut out = format!("P2\n{} {}\n{}\n", heatmap.cols, heatmap.rows, maxval);
    for r in 0..heatmap.rows {
        let row = &heatmap.counts[r * heatmap.cols..(r + 1) * heatmap.cols];
        let line: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a P2 file back into a heatmap. Comment lines (`#`) are ignored.
pub fn parse_pgm(body: &str) -> Result<Heatmap, PgmError> {
    let mut tokens = body
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace().map(str::to_owned).collect::<Vec<_>>());
    let magic = tokens.next().ok_or_else(|| PgmError::Parse("empty file".into()))?;
    if magic != "P2" {
        return Err(PgmError::Parse(format!("expected P2 magic, got {magic:?}")));
    }
    let mut next_num = |what: &str| -> Result<u64, PgmError> {
        tokens
            .next()
            .ok_or_else(|| PgmError::Parse(format!("missing {what}")))?
            .parse()
            .map_err(|e| PgmError::Parse(format!("bad {what}: {e}")))
    };
    let cols = next_num("width")? as usize;
    let rows = next_num("height")? as usize;
    let maxval = next_num("maxval")?;
    if maxval == 0 {
        return Err(PgmError::Parse("maxval must be positive".into()));
    }
    let mut counts = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        counts.push(next_num("pixel")?);
    }
    if tokens.next().is_some() {
        return Err(PgmError::Parse("trailing data after pixels".into()));
    }
    Ok(Heatmap { rows, cols, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_counts() {
        let heatmap = Heatmap { rows: 2, cols: 3, counts: vec![0, 1, 2, 3, 4, 5] };
        let text = to_pgm(&heatmap);
        assert!(text.starts_with("P2\n3 2\n5\n"));
        assert_eq!(parse_pgm(&text).unwrap(), heatmap);
    }

    #[test]
    fn all_zero_map_still_has_positive_maxval() {
        let heatmap = Heatmap { rows: 1, cols: 2, counts: vec![0, 0] };
        let text = to_pgm(&heatmap);
        assert!(text.contains("\n1\n"));
        assert_eq!(parse_pgm(&text).unwrap(), heatmap);
    }

    #[test]
    fn parser_rejects_malformed_files() {
        assert!(parse_pgm("").is_err());
        assert!(parse_pgm("P5\n1 1\n1\n0\n").is_err());
        assert!(parse_pgm("P2\n2 2\n4\n1 2 3\n").is_err());
        assert!(parse_pgm("P2\n1 1\n1\n0 0\n").is_err());
    }
}
