//! CSV and JSON artifacts. Floats use the shortest round-trip representation,
//! so identical results give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    I(i64),
    S(String),
    B(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(x) => format!("{x}"),
            Cell::U(x) => x.to_string(),
            Cell::I(x) => x.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or(Value::String(format!("{x}"))),
            Cell::U(x) => Value::from(*x),
            Cell::I(x) => Value::from(*x),
            Cell::S(s) => Value::from(s.clone()),
            Cell::B(b) => Value::from(*b),
        }
    }
}

pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Table { headers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

pub struct Artifacts {
    dir: PathBuf,
    format: Format,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), format, written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `stem.csv` or `stem.json` depending on the selected format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        let path = match self.format {
            Format::Csv => {
                let path = self.dir.join(format!("{stem}.csv"));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&table.headers)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                w.flush()?;
                path
            }
            Format::Json => {
                let path = self.dir.join(format!("{stem}.json"));
                let rows: Vec<Value> = table
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            table.headers.iter().zip(row).map(|(h, c)| (h.to_string(), c.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                fs::write(&path, serde_json::to_string_pretty(&rows)? + "\n")?;
                path
            }
        };
        self.written.push(path);
        Ok(())
    }

    /// Writes a JSON summary (always JSON).
    pub fn json<T: Serialize>(&mut self, stem: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(format!("{stem}.json"));
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
        self.written.push(path);
        Ok(())
    }
}
