//! Scan sequences on disk.
//!
//! A sequence directory holds `manifest.json`, which lists the scans in
//! integration order. Each scan is a CSV of sensor-frame points
//! (`x,y,z,e_0,...,e_{K-1}`) plus a JSON sidecar with the sequence number and
//! the row-major 4x4 sensor-to-world pose.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{csv_reader, csv_writer, format_real, line_of, parse_real, read_json, write_json};
use crate::error::{Error, Result};
use crate::evidence::ClassEvidence;
use crate::scan::{PointFrame, Pose, ScanFrame};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanEntry {
    /// Point CSV, relative to the manifest directory.
    pub points: String,
    /// Pose sidecar, relative to the manifest directory.
    pub pose: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub num_classes: usize,
    pub scans: Vec<ScanEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    /// Free-form record of how the sequence was produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseSidecar {
    seq: u64,
    pose: Vec<f64>,
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_NAME);
    let manifest: Manifest = read_json(&path)?;
    if manifest.num_classes < 2 {
        return Err(Error::invalid(format!(
            "{}: num_classes must be >= 2",
            path.display()
        )));
    }
    Ok(manifest)
}

/// Loads every scan listed in the manifest, in manifest order.
pub fn load_sequence(dir: &Path) -> Result<(Manifest, Vec<ScanFrame<f64>>)> {
    let manifest = load_manifest(dir)?;
    let scans = manifest
        .scans
        .iter()
        .map(|entry| {
            let scan = load_scan_files(&dir.join(&entry.points), &dir.join(&entry.pose))?;
            if scan.num_classes() != manifest.num_classes {
                return Err(Error::ClassMismatch {
                    expected: manifest.num_classes,
                    actual: scan.num_classes(),
                });
            }
            Ok(scan)
        })
        .collect::<Result<_>>()?;
    Ok((manifest, scans))
}

/// Loads `path` and its pose sidecar (same stem, `.json` extension).
pub fn load_scan(path: &Path) -> Result<ScanFrame<f64>> {
    load_scan_files(path, &path.with_extension("json"))
}

pub fn load_scan_files(points_path: &Path, pose_path: &Path) -> Result<ScanFrame<f64>> {
    let sidecar: PoseSidecar = read_json(pose_path)?;
    let pose_values: [f64; 16] = sidecar.pose.as_slice().try_into().map_err(|_| {
        Error::parse(
            pose_path,
            1,
            format!("pose needs 16 values, got {}", sidecar.pose.len()),
        )
    })?;
    let pose = Pose::from_row_major(&pose_values)
        .map_err(|e| Error::parse(pose_path, 1, e.to_string()))?;

    let mut reader = csv_reader(points_path)?;
    let header = reader.headers()?.clone();
    let k = header.len().saturating_sub(3);
    let expected: Vec<String> = ["x", "y", "z"]
        .into_iter()
        .map(String::from)
        .chain((0..k).map(|i| format!("e_{i}")))
        .collect();
    if k < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::parse(
            points_path,
            1,
            format!(
                "header must be x,y,z,e_0,...,e_{{K-1}} with K >= 2, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut points = Vec::new();
    let mut evidence = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != k + 3 {
            return Err(Error::parse(
                points_path,
                line,
                format!("expected {} columns, found {}", k + 3, record.len()),
            ));
        }
        let values: Vec<f64> = record
            .iter()
            .map(parse_real)
            .collect::<std::result::Result<_, _>>()
            .map_err(|m| Error::parse(points_path, line, m))?;
        points.push([values[0], values[1], values[2]]);
        let e = ClassEvidence::new(values[3..].to_vec())
            .map_err(|err| Error::parse(points_path, line, err.to_string()))?;
        evidence.push(e);
    }
    ScanFrame::new(sidecar.seq, pose, k, points, evidence)
}

/// Writes the scan's points in the sensor frame plus its pose sidecar.
pub fn write_scan(scan: &ScanFrame<f64>, points_path: &Path, pose_path: &Path) -> Result<()> {
    let to_sensor = scan.pose().inverse();
    let mut w = csv_writer(points_path)?;
    let mut header = vec!["x".to_string(), "y".into(), "z".into()];
    header.extend((0..scan.num_classes()).map(|i| format!("e_{i}")));
    w.write_record(&header)?;
    for (p, e) in scan.points().iter().zip(scan.evidence()) {
        let p = match scan.frame() {
            PointFrame::Sensor => *p,
            PointFrame::World => to_sensor.transform_point(*p),
        };
        let row = p.iter().chain(e.values()).map(|v| format_real(*v));
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(points_path, e))?;
    write_json(
        pose_path,
        &PoseSidecar {
            seq: scan.seq(),
            pose: scan.pose().to_row_major().to_vec(),
        },
    )
}

/// File names used for scan `i` of a generated sequence.
pub(crate) fn scan_file_names(i: usize) -> (ScanEntry, PathBuf, PathBuf) {
    let entry = ScanEntry {
        points: format!("scan_{i:04}.csv"),
        pose: format!("scan_{i:04}.json"),
    };
    let (p, q) = (PathBuf::from(&entry.points), PathBuf::from(&entry.pose));
    (entry, p, q)
}
