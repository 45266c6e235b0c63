//! Rendering of command results as JSON, CSV or aligned text.

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Rounds to six significant digits for human-readable output.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A flat list of named values, the common shape of most outputs.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    fn full(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn short(&self) -> String {
        match self {
            Cell::Num(x) => sig6(*x),
            other => other.full(),
        }
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_escape(&c.full())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::short).collect())
            .collect();
        let mut width: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (i, c) in row.iter().enumerate() {
                width[i] = width[i].max(c.len());
            }
        }
        let line = |items: &[String]| {
            items
                .iter()
                .enumerate()
                .map(|(i, s)| format!("{s:<w$}", w = width[i]))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Prints `value` as JSON, or `table` as CSV/text.
pub fn emit<T: Serialize>(format: Format, value: &T, table: &Table) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("serializable output")
        ),
        Format::Csv => print!("{}", table.csv()),
        Format::Text => print!("{}", table.text()),
    }
}

/// Two-column key/value table.
pub fn pairs(items: Vec<(&str, Cell)>) -> Table {
    let mut t = Table::new(&["key", "value"]);
    for (k, v) in items {
        t.push(vec![k.into(), v]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(4.123456789), "4.12346");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(2.0), "2");
        assert_eq!(sig6(1.5e9), "1.50000e9");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn csv_and_text_layout() {
        let mut t = Table::new(&["check", "statistic"]);
        t.push(vec!["foster".into(), 1.234567891e-15.into()]);
        assert_eq!(
            t.csv(),
            "check,statistic\nfoster,0.000000000000001234567891\n"
        );
        assert!(t.text().contains("1.23457e-15"));
    }
}
