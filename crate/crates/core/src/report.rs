//! Serialization of numeric artifacts: values with provenance, matrices and
//! CSV tables with `#` metadata lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid provenanced value: {0}")]
    Invalid(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not rectangular: row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("CSV error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("JSON error on {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, ReportError>;

/// A number with its error estimate, the route that produced it and the
/// truncation parameter in force (0 when none applies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenancedValue {
    pub value: f64,
    pub est_error: f64,
    pub route: String,
    pub truncation: f64,
}

impl ProvenancedValue {
    pub fn new(value: f64, est_error: f64, route: &str, truncation: f64) -> Result<Self> {
        if !(est_error >= 0.0) {
            return Err(ReportError::Invalid(format!("est_error must be >= 0, got {est_error}")));
        }
        if route.trim().is_empty() {
            return Err(ReportError::Invalid("route must be nonempty".into()));
        }
        Ok(ProvenancedValue { value, est_error, route: route.to_string(), truncation })
    }

    /// Exact value with zero error.
    pub fn exact(value: f64, route: &str) -> Self {
        ProvenancedValue { value, est_error: 0.0, route: route.to_string(), truncation: 0.0 }
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// Rows of string cells under a header, preceded by `# key: value` lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { metadata: Vec::new(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |source| ReportError::Io { path: path.to_path_buf(), source };
        let file = File::create(path).map_err(io)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# nblab {}", env!("CARGO_PKG_VERSION")).map_err(io)?;
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {}", v.replace('\n', " ")).map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
        let mut metadata = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line[1..].split_once(':') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(String::from).collect());
        }
        Ok(CsvTable { metadata, header, rows })
    }

    /// Column `name` parsed as floats.
    pub fn float_column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| parse_f64(&r[c])).collect()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|source| ReportError::Json { path: path.to_path_buf(), source })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| ReportError::Json { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorLayout {
    /// `c0,c0_err,c1,c1_err,...` in one file.
    #[default]
    Inline,
    /// Values in the main file, errors in `<stem>.err.csv`.
    Sidecar,
}

/// Path of the error sidecar written next to `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.err.csv"))
}

fn is_symmetric(m: &[Vec<ProvenancedValue>]) -> bool {
    let n = m.len();
    n > 0 && m.iter().all(|r| r.len() == n) && (0..n).all(|i| (0..i).all(|j| m[i][j].value == m[j][i].value))
}

/// Writes a rectangular matrix; the metadata records the shape, the routes
/// used, the largest truncation and whether the values are symmetric.
pub fn emit_matrix(m: &[Vec<ProvenancedValue>], path: &Path, layout: ErrorLayout) -> Result<()> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            return Err(ReportError::Ragged { row: i, len: r.len(), expected: cols });
        }
        for (j, v) in r.iter().enumerate() {
            if !v.value.is_finite() || !v.est_error.is_finite() {
                return Err(ReportError::NonFinite { row: i, col: j });
            }
        }
    }
    let mut routes: Vec<&str> = m.iter().flatten().map(|v| v.route.as_str()).collect();
    routes.sort_unstable();
    routes.dedup();
    let truncation = m.iter().flatten().map(|v| v.truncation).fold(0.0, f64::max);

    let names: Vec<String> = (0..cols).map(|j| format!("c{j}")).collect();
    let mut main = CsvTable::default();
    main.meta("rows", rows).meta("cols", cols).meta("symmetric", is_symmetric(m));
    main.meta("routes", routes.join(" ")).meta("truncation", fmt_f64(truncation));
    let mut errs = main.clone();
    match layout {
        ErrorLayout::Inline => {
            main.meta("layout", "inline");
            main.header = names.iter().flat_map(|c| [c.clone(), format!("{c}_err")]).collect();
            for r in m {
                main.push_row(r.iter().flat_map(|v| [fmt_f64(v.value), fmt_f64(v.est_error)]).collect());
            }
        }
        ErrorLayout::Sidecar => {
            main.meta("layout", "sidecar");
            let side = sidecar_path(path);
            main.meta("errors", side.file_name().unwrap().to_string_lossy());
            main.header = names.clone();
            errs.header = names;
            for r in m {
                main.push_row(r.iter().map(|v| fmt_f64(v.value)).collect());
                errs.push_row(r.iter().map(|v| fmt_f64(v.est_error)).collect());
            }
            errs.write(&side)?;
        }
    }
    main.write(path)
}

/// Values and error estimates of a matrix written by [`emit_matrix`].
pub fn read_matrix(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let parse_err = |msg: String| ReportError::Parse { path: path.to_path_buf(), msg };
    let t = CsvTable::read(path)?;
    let parse_rows = |t: &CsvTable| -> Result<Vec<Vec<f64>>> {
        t.rows
            .iter()
            .map(|r| r.iter().map(|c| parse_f64(c).ok_or_else(|| parse_err(format!("bad number {c}")))).collect())
            .collect()
    };
    match t.meta_value("layout") {
        Some("sidecar") => {
            let errs = CsvTable::read(&sidecar_path(path))?;
            Ok((parse_rows(&t)?, parse_rows(&errs)?))
        }
        Some("inline") => {
            let all = parse_rows(&t)?;
            let vals = all.iter().map(|r| r.iter().step_by(2).copied().collect()).collect();
            let errs = all.iter().map(|r| r.iter().skip(1).step_by(2).copied().collect()).collect();
            Ok((vals, errs))
        }
        other => Err(parse_err(format!("unknown layout {other:?}"))),
    }
}
