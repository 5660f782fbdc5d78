//! File formats: dataset and load-series CSV, JSON documents and digests.

use std::fs;
use std::io::Write;
use std::path::Path;

use fleetwise_core::data::schema::{all_columns, SCADA_COLUMNS, TIMESTAMP_COLUMN};
use fleetwise_core::data::Dataset;
use fleetwise_core::fatigue::LoadSeries;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SERIES_TIME_COLUMN: &str = "t_s";
pub const SERIES_MOMENT_COLUMN: &str = "moment_MNm";

/// Rows whose spacing deviates from the first interval by more than this
/// fraction make a load series non-uniform.
const SERIES_DT_TOLERANCE: f64 = 1e-6;

/// Result of [`read_dataset`].
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    /// Rows with an empty or `NaN` cell, removed before returning.
    pub dropped: usize,
}

/// Reads a dataset CSV.
///
/// The header must contain `timestamp` (Unix seconds) and the seven SCADA
/// columns; any other header must be a known wave, accelerometer or label
/// column. Empty and `NaN` cells mark gap rows, which are dropped and
/// counted. The turbine id is the file stem.
pub fn read_dataset(path: &Path) -> Result<LoadedDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let ts_col = header
        .iter()
        .position(|h| h == TIMESTAMP_COLUMN)
        .ok_or_else(|| Error::parse(path, format!("missing mandatory column `{TIMESTAMP_COLUMN}`")))?;
    for required in SCADA_COLUMNS {
        if !header.iter().any(|h| h == required) {
            return Err(Error::parse(path, format!("missing mandatory column `{required}`")));
        }
    }
    let known = all_columns();
    let mut names = Vec::new();
    let mut positions = Vec::new();
    for (i, h) in header.iter().enumerate() {
        if i == ts_col {
            continue;
        }
        if !known.contains(h) {
            return Err(Error::parse(path, format!("unknown column `{h}`")));
        }
        if names.contains(h) {
            return Err(Error::parse(path, format!("duplicate column `{h}`")));
        }
        names.push(h.clone());
        positions.push(i);
    }

    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e))?;
        let line = r + 2;
        let ts = record.get(ts_col).unwrap_or("");
        let ts: i64 = ts
            .parse()
            .map_err(|_| Error::parse(path, format!("line {line}: bad timestamp `{ts}`")))?;
        timestamps.push(ts);
        for (c, &pos) in positions.iter().enumerate() {
            let cell = record.get(pos).unwrap_or("");
            columns[c].push(parse_cell(cell).ok_or_else(|| {
                Error::parse(path, format!("line {line}, column `{}`: cannot parse `{cell}`", names[c]))
            })?);
        }
    }
    let turbine = path.file_stem().and_then(|s| s.to_str()).unwrap_or("turbine");
    let (dataset, dropped) = Dataset::from_raw(turbine, timestamps, names, columns)?;
    Ok(LoadedDataset { dataset, dropped })
}

fn parse_cell(cell: &str) -> Option<f64> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes `timestamp` followed by the dataset columns; values use the
/// shortest representation that round-trips exactly.
pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let mut out = String::new();
    out.push_str(TIMESTAMP_COLUMN);
    for n in ds.names() {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for r in 0..ds.len() {
        out.push_str(&ds.timestamps()[r].to_string());
        for col in ds.columns() {
            out.push(',');
            out.push_str(&col[r].to_string());
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

/// Reads a `t_s,moment_MNm` series; the time column must be uniformly spaced.
pub fn read_load_series(path: &Path) -> Result<LoadSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, format!("missing column `{name}`")))
    };
    let (t_col, m_col) = (col(SERIES_TIME_COLUMN)?, col(SERIES_MOMENT_COLUMN)?);
    let mut times = Vec::new();
    let mut moments = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e))?;
        let get = |c: usize| {
            let cell = record.get(c).unwrap_or("");
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, format!("line {}: cannot parse `{cell}`", r + 2)))
        };
        times.push(get(t_col)?);
        moments.push(get(m_col)?);
    }
    if times.len() < 2 {
        return Err(Error::parse(path, "a load series needs at least two samples"));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::parse(path, "time column must increase"));
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > SERIES_DT_TOLERANCE * dt.max(1.0) {
            return Err(Error::parse(path, format!("non-uniform sampling at line {}", k + 3)));
        }
    }
    Ok(LoadSeries::new(moments, dt)?)
}

pub fn write_load_series(path: &Path, series: &LoadSeries) -> Result<()> {
    let mut out = format!("{SERIES_TIME_COLUMN},{SERIES_MOMENT_COLUMN}\n");
    for (k, m) in series.samples().iter().enumerate() {
        out.push_str(&format!("{},{m}\n", k as f64 * series.dt()));
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// Writes a CSV from a header and rows of already formatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::parse(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::parse(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::parse(path, e.to_string()))?;
    write_bytes(path, &bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
