//! Table emission. CSV numbers use 17 significant digits so every value
//! round-trips; JSON relies on serde_json's shortest round-trip form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self::with_columns(name, columns.iter().map(|c| c.to_string()).collect())
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Table { name: name.to_string(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match cell {
                    Cell::Num(x) => s.push_str(&fmt_num(*x)),
                    Cell::Int(n) => write!(s, "{n}").unwrap(),
                    Cell::Text(t) => s.push_str(t),
                    Cell::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|c| match c {
                            Cell::Num(x) => json!(x),
                            Cell::Int(n) => json!(n),
                            Cell::Text(t) => json!(t),
                            Cell::Bool(b) => json!(b),
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }
}

/// Collects the files of one command and writes them under `dir`.
pub struct Sink {
    dir: PathBuf,
    format: Format,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Sink { dir: dir.to_path_buf(), format, written: Vec::new() })
    }

    fn write(&mut self, file: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(file);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn table(&mut self, t: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.write(&format!("{}.csv", t.name), &t.to_csv()),
            Format::Json => {
                let text = serde_json::to_string_pretty(&t.to_json()).expect("tables serialize");
                self.write(&format!("{}.json", t.name), &(text + "\n"))
            }
        }
    }

    /// Summaries are JSON regardless of the table format.
    pub fn summary(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("summaries serialize");
        self.write(&format!("{name}.json"), &(text + "\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips() {
        let mut t = Table::new("x", &["a", "b", "c"]);
        let v = 0.1 + 0.2;
        t.push(vec![v.into(), 3usize.into(), true.into()]);
        let csv = t.to_csv();
        assert!(csv.starts_with("a,b,c\n"));
        let field = csv.lines().nth(1).unwrap().split(',').next().unwrap();
        assert_eq!(field.parse::<f64>().unwrap(), v);
        assert_eq!(csv.lines().nth(1).unwrap(), format!("{},3,true", fmt_num(v)));
    }

    #[test]
    fn json_shape() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![1.5.into(), "edge".into()]);
        assert_eq!(t.to_json(), json!({"columns": ["a", "b"], "rows": [[1.5, "edge"]]}));
    }

    #[test]
    fn non_finite_numbers() {
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NAN), "NaN");
    }
}
