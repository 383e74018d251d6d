//! Minimal CSV reading/writing with a pinned dialect: comma separator,
//! `.` decimal point, LF line endings, reals rendered with 17 significant
//! digits so they round-trip exactly. Lines starting with `#` are
//! comments (schema and provenance headers).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Schema tag written as the first comment line of every CSV output.
pub const SCHEMA_LINE: &str = "# volqml-schema v1";

/// Formats a real with 17 significant digits (round-trip exact for f64).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a 64-bit hash; used to fingerprint configs in provenance lines.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// A rendered table: header names plus rows of already-formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Renders the table with the given comment lines on top.
    pub fn render(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "{c}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path, comments: &[String]) -> Result<()> {
        std::fs::write(path, self.render(comments))?;
        Ok(())
    }

    /// Column index by name.
    pub fn col(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Reads a CSV file written in this dialect. Comment lines are skipped;
/// a row with the wrong number of cells is reported with its 1-based
/// line number.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    parse_table(&text).map_err(|msg| {
        Error::InvalidInput(format!("{}: {msg}", path.display()))
    })
}

pub fn parse_table(text: &str) -> std::result::Result<Table, String> {
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        match &columns {
            None => columns = Some(cells),
            Some(header) => {
                if cells.len() != header.len() {
                    return Err(format!(
                        "line {}: expected {} cells, found {}",
                        lineno + 1,
                        header.len(),
                        cells.len()
                    ));
                }
                rows.push(cells);
            }
        }
    }
    let columns = columns.ok_or("no header line found")?;
    Ok(Table { columns, rows })
}

/// Parses a cell as f64, reporting the column name on failure.
pub fn parse_f64(cell: &str, col: &str) -> Result<f64> {
    cell.parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("column {col}: not a number: {cell:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip() {
        for &x in &[0.1, -1.0 / 3.0, 1e-300, 6.02e23, f64::MIN_POSITIVE, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["t", "x"]);
        t.push(vec!["1".into(), fmt_f64(0.25)]);
        t.push(vec!["2".into(), fmt_f64(-0.5)]);
        let text = t.render(&[SCHEMA_LINE.to_string(), "# seed=1".to_string()]);
        let back = parse_table(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = parse_table("a,b\n1,2\n3\n").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }
}
