//! Tabular output shared by every experiment: CSV with a fixed column
//! order, or the same rows as JSON objects.

use std::io;

use serde_json::{Map, Value};

/// A single table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    /// `None` prints as an empty cell (and `null` in JSON).
    Float(Option<f64>),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(Some(v))
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<u64>> for Cell {
    fn from(v: Option<u64>) -> Self {
        match v {
            Some(v) => Cell::Int(v),
            None => Cell::Text(String::new()),
        }
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

/// Rows with a fixed, documented column order.
pub trait Tabular {
    fn columns() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

/// Six significant digits; scientific notation outside `[1e-4, 1e6)`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

impl Cell {
    /// CSV rendering: floats with six significant digits, `None` empty.
    pub fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(Some(v)) => format_float(*v),
            Cell::Float(None) => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    /// JSON rendering: undefined values and empty text become `null`.
    pub fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(Some(v)) if v.is_finite() => Value::from(*v),
            Cell::Float(_) => Value::Null,
            Cell::Text(s) if s.is_empty() => Value::Null,
            Cell::Text(s) => Value::from(s.clone()),
        }
    }
}

/// Column names plus rows of cells, for output of any shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| (*c).to_owned()).collect(), rows: Vec::new() }
    }

    pub fn from_rows<T: Tabular>(rows: &[T]) -> Self {
        let mut t = Self::new(T::columns());
        t.rows = rows.iter().map(Tabular::cells).collect();
        t
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows as an array of flat objects.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (name, cell) in self.columns.iter().zip(row) {
                        obj.insert(name.clone(), cell.json());
                    }
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

pub fn write_csv<T: Tabular, W: io::Write>(rows: &[T], out: W) -> Result<(), csv::Error> {
    Table::from_rows(rows).write_csv(out)
}

pub fn to_structured<T: Tabular>(rows: &[T]) -> Value {
    Table::from_rows(rows).to_json()
}

/// Semicolon-joined flag names, empty when none apply.
pub(crate) fn flags(items: &[(bool, &str)]) -> String {
    items.iter().filter(|(on, _)| *on).map(|(_, name)| *name).collect::<Vec<_>>().join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Demo(u64, Option<f64>, &'static str);

    impl Tabular for Demo {
        fn columns() -> &'static [&'static str] {
            &["count", "value", "flag"]
        }
        fn cells(&self) -> Vec<Cell> {
            vec![self.0.into(), self.1.into(), self.2.into()]
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_float(0.935123456), "0.935123");
        assert_eq!(format_float(1.0), "1.00000");
        assert_eq!(format_float(123456.7), "123457");
        assert_eq!(format_float(0.000812345), "0.000812345");
        assert_eq!(format_float(1234567.0), "1.23457e6");
        assert_eq!(format_float(0.0000123), "1.23000e-5");
        assert_eq!(format_float(-2.5), "-2.50000");
    }

    #[test]
    fn csv_and_json_shapes() {
        let rows = [Demo(3, Some(0.5), ""), Demo(0, None, "undefined")];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "count,value,flag\n3,0.500000,\n0,,undefined\n");
        let json = to_structured(&rows);
        assert_eq!(json[1]["value"], Value::Null);
        assert_eq!(json[1]["flag"], "undefined");
        assert_eq!(json[0]["count"], 3);
    }
}
