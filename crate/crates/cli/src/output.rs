use std::collections::BTreeMap;
use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Scientific notation with `precision` significant digits.
pub fn format_float(v: f64, precision: usize) -> String {
    if v.is_finite() {
        format!("{:.*e}", precision - 1, v)
    } else {
        v.to_string()
    }
}

impl Cell {
    fn text(&self, precision: usize) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v, precision),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self, precision: usize) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // Round through the printed form so both formats agree.
            Cell::Float(v) => format_float(*v, precision)
                .parse::<f64>()
                .ok()
                .and_then(|x| serde_json::Number::from_f64(x).map(Value::Number))
                .unwrap_or(Value::Null),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Output of one command. `problem` is set when the command produced data
/// but must still exit nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    pub residuals: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub problem: Option<CliError>,
}

impl Report {
    pub fn new(table: Table) -> Self {
        Report {
            table,
            residuals: BTreeMap::new(),
            notes: Vec::new(),
            problem: None,
        }
    }
}

pub fn write_csv<W: Write>(report: &Report, precision: usize, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&report.table.columns).map_err(io)?;
    for row in &report.table.rows {
        w.write_record(row.iter().map(|c| c.text(precision))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn to_json(report: &Report, config: &RunConfig) -> Value {
    let p = config.precision;
    let rows: Vec<Value> = report
        .table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = report
                .table
                .columns
                .iter()
                .zip(row)
                .map(|(k, c)| (k.to_string(), c.json(p)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let residuals: Map<String, Value> = report
        .residuals
        .iter()
        .map(|(k, v)| (k.clone(), Cell::Float(*v).json(p)))
        .collect();
    json!({
        "config": config,
        "results": { "rows": rows, "notes": report.notes },
        "residuals": residuals,
    })
}

pub fn write_report<W: Write>(report: &Report, config: &RunConfig, mut out: W) -> Result<(), CliError> {
    match config.format {
        Format::Csv => write_csv(report, config.precision, out),
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &to_json(report, config)).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn io(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(format_float(2.5, 6), "2.50000e0");
        assert_eq!(format_float(-0.000123456789, 6), "-1.23457e-4");
        let pi = std::f64::consts::PI;
        let back: f64 = format_float(pi, 12).parse().unwrap();
        assert!((back - pi).abs() < 1e-11);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["a", "b", "c"]);
        t.push(vec![1usize.into(), 0.5.into(), Cell::Empty]);
        t.push(vec![Cell::Text("x,y".into()), true.into(), "z".into()]);
        let mut buf = Vec::new();
        write_csv(&Report::new(t), 6, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b,c\n1,5.00000e-1,\n\"x,y\",true,z\n");
    }
}
