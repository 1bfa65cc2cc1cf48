//! Tables and their CSV/JSON serialization.

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// Shortest representation that parses back to the same double.
    fn to_csv(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(format!("{x:?}")),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
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

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra JSON fields such as residuals and warnings.
    pub metadata: Map<String, Value>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .map(|r| match &r[j] {
                Cell::Float(x) => *x,
                Cell::Int(i) => *i as f64,
                _ => f64::NAN,
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(|e| CliError::Output(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_csv))
                .map_err(|e| CliError::Output(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn to_json(&self, command: &str, cfg: &RunConfig) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(r.iter().map(Cell::to_json))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config_version": cfg.version,
            "config_hash": cfg.hash(),
            "command": command,
            "columns": self.columns,
            "rows": rows,
            "metadata": Value::Object(self.metadata.clone()),
        })
    }

    pub fn render(&self, command: &str, cfg: &RunConfig) -> Result<String, CliError> {
        match cfg.output.format {
            Format::Csv => self.to_csv(),
            Format::Json => serde_json::to_string_pretty(&self.to_json(command, cfg))
                .map(|s| s + "\n")
                .map_err(|e| CliError::Output(e.to_string())),
        }
    }
}
