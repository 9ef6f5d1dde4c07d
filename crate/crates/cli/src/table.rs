//! CSV emission with a fixed schema and round-trip-exact floats.

use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    /// Float column that may be empty.
    OptFloat,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    Missing,
    Text(String),
}

impl Value {
    fn fits(&self, kind: Kind) -> bool {
        matches!(
            (self, kind),
            (Value::Int(_), Kind::Int)
                | (Value::Float(_), Kind::Float | Kind::OptFloat)
                | (Value::Missing, Kind::OptFloat)
                | (Value::Text(_), Kind::Text)
        )
    }

    fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format_g17(*v),
            Value::Missing => String::new(),
            Value::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schema {
    pub columns: Vec<(&'static str, Kind)>,
}

impl Schema {
    pub fn result() -> Self {
        Self {
            columns: vec![
                ("t", Kind::Int),
                ("x_true", Kind::Float),
                ("y_initial", Kind::Float),
                ("y_trained", Kind::Float),
                ("phase", Kind::Text),
            ],
        }
    }

    pub fn sweep() -> Self {
        Self {
            columns: vec![
                ("tau", Kind::Float),
                ("seed", Kind::Int),
                ("mse", Kind::OptFloat),
                ("status", Kind::Text),
            ],
        }
    }

    pub fn data() -> Self {
        Self {
            columns: vec![
                ("t", Kind::Int),
                ("x_true", Kind::Float),
                ("phase", Kind::Text),
            ],
        }
    }

    pub fn seed_summary() -> Self {
        Self {
            columns: vec![
                ("seed", Kind::Int),
                ("mse", Kind::OptFloat),
                ("status", Kind::Text),
            ],
        }
    }

    pub fn median() -> Self {
        Self {
            columns: vec![
                ("tau", Kind::Float),
                ("median_mse", Kind::OptFloat),
                ("n_ok", Kind::Int),
            ],
        }
    }

    pub fn header(&self) -> Vec<&'static str> {
        self.columns.iter().map(|c| c.0).collect()
    }

    pub fn check(&self, rows: &[Vec<Value>]) -> CliResult<()> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(CliError::Schema(format!(
                    "row {i} has {} fields, schema has {}",
                    row.len(),
                    self.columns.len()
                )));
            }
            for (value, (name, kind)) in row.iter().zip(&self.columns) {
                if !value.fits(*kind) {
                    return Err(CliError::Schema(format!(
                        "row {i}, column `{name}`: {value:?} is not {kind:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (16 - exp) as usize, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `rows` under `schema`'s header. Rows are checked before the file is
/// created, so a mismatch leaves nothing on disk.
pub fn emit_csv(rows: &[Vec<Value>], schema: &Schema, path: &Path) -> CliResult<()> {
    schema.check(rows)?;
    let csv_err = |e: csv::Error| CliError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(schema.header()).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(Value::render))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Header and raw records of a CSV file.
pub fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let csv_err = |e: csv::Error| CliError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(String::from)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok((header, rows))
}
