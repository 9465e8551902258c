//! CSV series and state dumps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::batch::BatchedWorld;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Formats `x` with 9 significant digits, fixed notation for moderate exponents.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// `x` rounded the way [`fmt_sig9`] writes it.
pub fn round_sig9(x: f64) -> f64 {
    if x.is_finite() {
        fmt_sig9(x).parse().expect("formatted float parses")
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_sig9(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// A table with a fixed header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Series {
    pub fn new(header: &[&str]) -> Self {
        Series { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Numeric column as written to disk (floats rounded to 9 significant digits).
    pub fn column(&self, name: &str) -> Vec<f64> {
        let k = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows
            .iter()
            .filter_map(|r| match &r[k] {
                Cell::Int(v) => Some(*v as f64),
                Cell::Float(v) => Some(round_sig9(*v)),
                Cell::Text(_) => None,
            })
            .collect()
    }

    /// Rows whose `key` cell is written as `value`.
    pub fn filter(&self, key: &str, value: &str) -> Series {
        let k = self.header.iter().position(|h| h == key).unwrap_or_else(|| panic!("no column {key}"));
        Series {
            header: self.header.clone(),
            rows: self.rows.iter().filter(|r| r[k].render() == value).cloned().collect(),
        }
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Writes `series` as RFC-4180 CSV (header row, CRLF line ends).
pub fn emit_csv(series: &Series, path: impl AsRef<Path>) -> Result<(), OutputError> {
    let path = path.as_ref();
    let err = |source| OutputError { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(err)?;
    }
    std::fs::write(path, series.to_csv_bytes()).map_err(err)
}

pub const STATE_COLUMNS: [&str; 15] = ["env", "body", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz"];

/// Full-precision dump of every body of every environment (shortest round-trip decimal).
pub fn state_dump(world: &BatchedWorld) -> String {
    let mut s = STATE_COLUMNS.join(",");
    s.push_str("\r\n");
    for env in 0..world.n_envs() {
        for (i, b) in world.state(env).bodies.iter().enumerate() {
            let v = [
                b.pos.x, b.pos.y, b.pos.z, b.orient.w, b.orient.x, b.orient.y, b.orient.z, b.vel.x, b.vel.y, b.vel.z, b.ang_vel.x,
                b.ang_vel.y, b.ang_vel.z,
            ];
            write!(s, "{env},{i}").unwrap();
            for x in v {
                write!(s, ",{x:?}").unwrap();
            }
            s.push_str("\r\n");
        }
    }
    s
}

pub fn write_state_dump(world: &BatchedWorld, path: impl AsRef<Path>) -> Result<(), OutputError> {
    let path = path.as_ref();
    let err = |source| OutputError { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(err)?;
    }
    std::fs::write(path, state_dump(world)).map_err(err)
}
