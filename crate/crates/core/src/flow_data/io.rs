use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{preprocess, FlowDataset, MinMaxScaler, RawTable};
use crate::{Error, Result};

/// Reads a comma-separated file with a header row. Cells stay strings; header
/// names are trimmed.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        if record.len() != headers.len() {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                line: record
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or(rows.len() + 2),
                expected: headers.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    RawTable::new(path.display().to_string(), headers, rows)
}

/// Loads and concatenates several files that share a header.
pub fn load_many<P: AsRef<Path>>(paths: &[P]) -> Result<RawTable> {
    let tables = paths.iter().map(load_csv).collect::<Result<Vec<_>>>()?;
    RawTable::concat(tables)
}

/// Sidecar document written next to every stored dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub rows: usize,
    pub feature_names: Vec<String>,
    pub normalized: bool,
    pub scaler: Option<MinMaxScaler>,
    pub dropped_columns: Vec<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informative: Option<Vec<usize>>,
}

impl DatasetMetadata {
    pub fn describe(ds: &FlowDataset, dropped_columns: Vec<String>, seed: u64) -> Self {
        Self {
            rows: ds.n_rows(),
            feature_names: ds.feature_names().to_vec(),
            normalized: ds.is_normalized(),
            scaler: ds.scaler().cloned(),
            dropped_columns,
            seed,
            informative: None,
        }
    }
}

/// Writes the dataset as CSV (feature columns then `Label`, 17 significant digits).
pub fn write_dataset(path: impl AsRef<Path>, ds: &FlowDataset) -> Result<()> {
    let path = path.as_ref();
    let raw = ds.to_raw();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    writer.write_record(&raw.headers).map_err(csv_err)?;
    for row in &raw.rows {
        writer.write_record(row).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_metadata(path: impl AsRef<Path>, meta: &DatasetMetadata) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    text.push('\n');
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn read_metadata(path: impl AsRef<Path>) -> Result<DatasetMetadata> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a dataset written by [`write_dataset`]; a normalized sidecar restores
/// the scaler and the normalized flag.
pub fn read_dataset(path: impl AsRef<Path>, meta: Option<&DatasetMetadata>) -> Result<FlowDataset> {
    let raw = load_csv(path.as_ref())?;
    let ds = preprocess(&raw, &[])?;
    match meta {
        Some(m) if m.normalized => {
            let scaler = m.scaler.clone().ok_or_else(|| Error::Format {
                path: path.as_ref().to_path_buf(),
                message: "normalized metadata without scaler".into(),
            })?;
            ds.with_scaler(scaler)
        }
        _ => Ok(ds),
    }
}
