//! Minimal CSV writer: header row, `.` decimals, shortest round-trip floats,
//! LF line endings, optional trailing `#` comment lines.

use std::fmt::Write as _;
use std::path::Path;

use crate::analytics::MaybeDivergent;

use super::CliError;

pub const DIVERGENCE_NOTE: &str = "diverges: plus quadrature at threshold";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// A value that diverges; written as `inf` with a footer note.
    Divergent(&'static str),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    pub fn maybe(v: MaybeDivergent, note: &'static str) -> Cell {
        match v {
            MaybeDivergent::Finite(x) => Cell::Num(x),
            MaybeDivergent::Divergent => Cell::Divergent(note),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub comments: Vec<String>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
            comments: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        let mut notes: Vec<&str> = Vec::new();
        for row in &self.rows {
            for (j, cell) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Num(x) => write_num(&mut out, *x),
                    Cell::Divergent(note) => {
                        out.push_str("inf");
                        if !notes.contains(note) {
                            notes.push(note);
                        }
                    }
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        for n in notes {
            let _ = writeln!(out, "# {n}");
        }
        out
    }
}

fn write_num(out: &mut String, x: f64) {
    if x.is_nan() {
        out.push_str("nan");
    } else if x.is_infinite() {
        out.push_str(if x > 0.0 { "inf" } else { "-inf" });
    } else {
        // Display prints the shortest string that parses back to `x`
        let _ = write!(out, "{x}");
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

pub fn emit_csv(table: &Table, path: Option<&Path>) -> Result<(), CliError> {
    emit(&table.render(), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let mut t = Table::new(&["beta", "variance"]);
        t.push(vec![0.022.into(), 0.0221.into()]);
        assert_eq!(t.render(), "beta,variance\n0.022,0.0221\n");
    }

    #[test]
    fn divergent_cell_and_footer() {
        let mut t = Table::new(&["beta", "plus"]);
        t.push(vec![0.0.into(), Cell::Divergent(DIVERGENCE_NOTE)]);
        t.push(vec![0.1.into(), Cell::Divergent(DIVERGENCE_NOTE)]);
        assert_eq!(t.render(), "beta,plus\n0,inf\n0.1,inf\n# diverges: plus quadrature at threshold\n");
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(Table::new(&["a", "b"]).render(), "a,b\n");
    }

    #[test]
    fn round_trip_precision() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, 1e-300, -2.5e-12] {
            let mut s = String::new();
            write_num(&mut s, x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn unwritable_path() {
        let r = emit_csv(&Table::new(&["a"]), Some(Path::new("/nonexistent-dir/x.csv")));
        assert!(matches!(r, Err(CliError::Io(_))));
    }
}
