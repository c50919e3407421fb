//! Result tables rendered as CSV or markdown.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::Config(format!("unknown table format {other:?}, expected csv or markdown"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    /// Shortest round-trip representation.
    Plain(f64),
    /// Five decimals in fixed point.
    Fixed(f64),
    /// Five significant digits in scientific notation, two-digit exponent.
    Sci(f64),
    /// Convergence order with four decimals; `None` prints `---`.
    Order(Option<f64>),
    Missing,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Plain(v) => v.to_string(),
            Cell::Fixed(v) => format!("{v:.5}"),
            Cell::Sci(v) => sci5(*v),
            Cell::Order(Some(v)) => format!("{v:.4}"),
            Cell::Order(None) => "---".into(),
            Cell::Missing => "n/a".into(),
        }
    }
}

fn sci5(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.4e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("rendered cells are ASCII"))
    }

    pub fn to_markdown(&self) -> String {
        let line = |cells: Vec<String>| format!("| {} |\n", cells.join(" | "));
        let mut out = line(self.columns.clone());
        out.push_str(&line(vec!["---".into(); self.columns.len()]));
        for row in &self.rows {
            out.push_str(&line(row.iter().map(Cell::render).collect()));
        }
        out
    }

    pub fn render(&self, format: TableFormat) -> Result<String> {
        match format {
            TableFormat::Csv => self.to_csv(),
            TableFormat::Markdown => Ok(self.to_markdown()),
        }
    }
}

/// Renders `table` and writes it to `path` when given.
pub fn emit_table(table: &Table, format: TableFormat, path: Option<&Path>) -> Result<String> {
    let text = table.render(format)?;
    if let Some(path) = path {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &text)?;
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_styles() {
        assert_eq!(Cell::Fixed(3f64.sqrt() / 2.0).render(), "0.86603");
        assert_eq!(Cell::Fixed(3f64.sqrt() / 32.0).render(), "0.05413");
        assert_eq!(Cell::Sci(0.059811).render(), "5.9811e-02");
        assert_eq!(Cell::Sci(4.7832e-11).render(), "4.7832e-11");
        assert_eq!(Cell::Sci(1234.5).render(), "1.2345e+03");
        assert_eq!(Cell::Order(Some(1.17781)).render(), "1.1778");
        assert_eq!(Cell::Order(None).render(), "---");
        assert_eq!(Cell::Plain(50.0).render(), "50");
    }

    #[test]
    fn single_row_has_header_and_one_line() {
        let mut t = Table::new(&["level", "h"]);
        t.push(vec![Cell::Int(0), Cell::Fixed(0.5)]);
        assert_eq!(t.to_csv().unwrap(), "level,h\n0,0.50000\n");
        assert_eq!(t.to_markdown(), "| level | h |\n| --- | --- |\n| 0 | 0.50000 |\n");
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let t = Table::new(&["a"]);
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        assert!(emit_table(&t, TableFormat::Csv, Some(&blocker.join("out.csv"))).is_err());
    }

    #[test]
    fn format_names_parse() {
        assert_eq!("markdown".parse::<TableFormat>().unwrap(), TableFormat::Markdown);
        assert!("xlsx".parse::<TableFormat>().is_err());
    }
}
