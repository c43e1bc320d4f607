//! File formats at the command-line boundary.
//!
//! * spectroscopy grid CSV: the first row holds the probe frequencies (GHz)
//!   after a corner cell, every further row a coil current (A) followed by
//!   the magnitudes at those frequencies;
//! * decay CSV with columns `delay_us,population`;
//! * sweep CSV with columns `current_A,flux_ratio,line_kind,frequency_GHz,status`;
//! * residual CSV with one row per assigned peak;
//! * JSON for fit results.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::decay::DecayTrace;
use crate::error::DataError;
use crate::fit::FitResult;
use crate::peaks::SpectroscopyDataset;
use crate::sweep::SweepRow;

/// Corner cell written in the top-left of a spectroscopy grid.
pub const GRID_CORNER: &str = "current_A\\frequency_GHz";

fn io_err(path: &Path, e: impl std::fmt::Display) -> DataError {
    DataError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn create(path: &Path) -> Result<File, DataError> {
    File::create(path).map_err(|e| io_err(path, e))
}

fn parse_cell(s: &str, row: usize, col: usize) -> Result<f64, DataError> {
    let t = s.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    t.parse().map_err(|_| DataError::Malformed(format!("row {row}, column {col}: `{t}` is not a number")))
}

/// Parse a spectroscopy grid. Rows may come in any current order; they are
/// sorted ascending. A descending frequency axis is reversed.
pub fn parse_spectroscopy_csv<R: Read>(reader: R) -> Result<SpectroscopyDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| DataError::Malformed("empty file".into()))?
        .map_err(|e| DataError::Malformed(e.to_string()))?;
    let mut frequencies = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, s)| parse_cell(s, 0, c))
        .collect::<Result<Vec<f64>, _>>()?;

    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    for (r, rec) in records.enumerate() {
        let rec = rec.map_err(|e| DataError::Malformed(e.to_string()))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let current = parse_cell(&rec[0], r + 1, 0)?;
        if !current.is_finite() {
            return Err(DataError::Malformed(format!("row {}: missing current", r + 1)));
        }
        let values = rec.iter().enumerate().skip(1).map(|(c, s)| parse_cell(s, r + 1, c)).collect::<Result<Vec<_>, _>>()?;
        rows.push((current, values));
    }
    if rows.is_empty() {
        return Err(DataError::Malformed("no data rows".into()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if frequencies.len() > 1 && frequencies[0] > frequencies[frequencies.len() - 1] {
        frequencies.reverse();
        for (_, v) in &mut rows {
            v.reverse();
        }
    }
    let (currents, magnitudes) = rows.into_iter().unzip();
    SpectroscopyDataset::new(currents, frequencies, magnitudes)
}

pub fn read_spectroscopy_csv(path: &Path) -> Result<SpectroscopyDataset, DataError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    parse_spectroscopy_csv(f).map_err(|e| match e {
        DataError::Malformed(m) => io_err(path, m),
        other => other,
    })
}

pub fn write_spectroscopy_csv(path: &Path, ds: &SpectroscopyDataset) -> Result<(), DataError> {
    format_spectroscopy_csv(create(path)?, ds).map_err(|e| match e {
        DataError::Malformed(m) => io_err(path, m),
        other => other,
    })
}

pub fn format_spectroscopy_csv<W: Write>(writer: W, ds: &SpectroscopyDataset) -> Result<(), DataError> {
    let err = |e: csv::Error| DataError::Malformed(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    let header = std::iter::once(GRID_CORNER.to_string()).chain(ds.frequencies.iter().map(|f| f.to_string()));
    w.write_record(header).map_err(err)?;
    for (c, row) in ds.currents.iter().zip(&ds.magnitudes) {
        let rec = std::iter::once(c.to_string()).chain(row.iter().map(|v| v.to_string()));
        w.write_record(rec).map_err(err)?;
    }
    w.flush().map_err(|e| DataError::Malformed(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct DecayRecord {
    delay_us: f64,
    population: f64,
}

pub fn parse_decay_csv<R: Read>(reader: R) -> Result<DecayTrace, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut delays = Vec::new();
    let mut pop = Vec::new();
    for (i, rec) in rdr.deserialize::<DecayRecord>().enumerate() {
        let rec = rec.map_err(|e| DataError::Malformed(format!("record {}: {e}", i + 1)))?;
        delays.push(rec.delay_us);
        pop.push(rec.population);
    }
    DecayTrace::new(delays, pop)
}

pub fn read_decay_csv(path: &Path) -> Result<DecayTrace, DataError> {
    parse_decay_csv(File::open(path).map_err(|e| io_err(path, e))?).map_err(|e| match e {
        DataError::Malformed(m) => io_err(path, m),
        other => other,
    })
}

pub fn write_decay_csv(path: &Path, trace: &DecayTrace) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for (d, p) in trace.delays_us.iter().zip(&trace.population) {
        w.serialize(DecayRecord { delay_us: *d, population: *p }).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow]) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| DataError::Malformed(e.to_string()))?;
    }
    w.flush().map_err(|e| DataError::Malformed(e.to_string()))
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, DataError> {
    let mut rdr = csv::Reader::from_reader(File::open(path).map_err(|e| io_err(path, e))?);
    rdr.deserialize().collect::<Result<Vec<SweepRow>, _>>().map_err(|e| io_err(path, e))
}

/// One assigned peak of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    #[serde(rename = "current_A")]
    pub current_a: f64,
    pub line_kind: String,
    #[serde(rename = "observed_GHz")]
    pub observed_ghz: f64,
    #[serde(rename = "predicted_GHz")]
    pub predicted_ghz: f64,
    #[serde(rename = "residual_GHz")]
    pub residual_ghz: f64,
}

pub fn residual_rows(result: &FitResult) -> Vec<ResidualRow> {
    result
        .peaks
        .assigned()
        .zip(&result.residuals)
        .map(|(p, r)| ResidualRow {
            current_a: p.current,
            line_kind: p.line.as_ref().map(ToString::to_string).unwrap_or_default(),
            observed_ghz: p.frequency,
            predicted_ghz: p.frequency + r,
            residual_ghz: *r,
        })
        .collect()
}

pub fn write_residual_csv(path: &Path, result: &FitResult) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in residual_rows(result) {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_residual_csv(path: &Path) -> Result<Vec<ResidualRow>, DataError> {
    let mut rdr = csv::Reader::from_reader(File::open(path).map_err(|e| io_err(path, e))?);
    rdr.deserialize().collect::<Result<Vec<ResidualRow>, _>>().map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

pub fn read_fit_result(path: &Path) -> Result<FitResult, DataError> {
    read_json(path)
}
