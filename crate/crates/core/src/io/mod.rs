//! File formats: run configuration, scan sequences, ground truth and map
//! export. All readers validate eagerly and report file and line on failure.

mod config;
mod ground_truth;
mod map_file;
mod scan_file;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use config::RunConfig;
pub use ground_truth::{load_ground_truth, write_ground_truth, GroundTruthGrid};
pub use map_file::{export_map, import_map, write_ply, ExportFormat, MapMethod, MapRow, MapTable};
pub(crate) use scan_file::scan_file_names;
pub use scan_file::{
    load_manifest, load_scan, load_scan_files, load_sequence, write_scan, Manifest, ScanEntry,
    MANIFEST_NAME,
};

/// Shortest decimal text that parses back to the identical `f64`.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub(crate) fn parse_real(field: &str) -> std::result::Result<f64, String> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| format!("`{field}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value `{field}`"));
    }
    Ok(v)
}

pub(crate) fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().from_writer(file))
}

pub(crate) fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}
