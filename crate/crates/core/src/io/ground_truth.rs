use std::collections::BTreeMap;
use std::path::Path;

use super::{csv_reader, csv_writer, line_of};
use crate::error::{Error, Result};
use crate::voxmap::CellIndex;

/// Reference class label per voxel, ordered by index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruthGrid {
    labels: BTreeMap<CellIndex, usize>,
}

impl GroundTruthGrid {
    /// Fails on duplicate cells or labels `>= num_classes`.
    pub fn new(
        num_classes: usize,
        entries: impl IntoIterator<Item = (CellIndex, usize)>,
    ) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for (idx, label) in entries {
            if label >= num_classes {
                return Err(Error::ClassIndex {
                    index: label,
                    len: num_classes,
                });
            }
            if labels.insert(idx, label).is_some() {
                return Err(Error::invalid(format!("duplicate ground-truth cell {idx}")));
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, idx: CellIndex) -> Option<usize> {
        self.labels.get(&idx).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellIndex, usize)> + '_ {
        self.labels.iter().map(|(k, v)| (*k, *v))
    }

    pub fn max_label(&self) -> Option<usize> {
        self.labels.values().copied().max()
    }
}

/// Reads `ix,iy,iz,label` rows.
pub fn load_ground_truth(path: &Path, num_classes: usize) -> Result<GroundTruthGrid> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(["ix", "iy", "iz", "label"]) {
        return Err(Error::parse(path, 1, "header must be ix,iy,iz,label"));
    }
    let mut labels = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != 4 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 4 columns, found {}", record.len()),
            ));
        }
        let int = |i: usize| {
            record[i].parse::<i64>().map_err(|_| {
                Error::parse(path, line, format!("`{}` is not an integer", &record[i]))
            })
        };
        let idx = CellIndex::new(int(0)?, int(1)?, int(2)?);
        let label = record[3].parse::<usize>().map_err(|_| {
            Error::parse(path, line, format!("`{}` is not a class label", &record[3]))
        })?;
        if label >= num_classes {
            return Err(Error::parse(
                path,
                line,
                format!("label {label} out of range for {num_classes} classes"),
            ));
        }
        if labels.insert(idx, label).is_some() {
            return Err(Error::parse(path, line, format!("duplicate cell {idx}")));
        }
    }
    Ok(GroundTruthGrid { labels })
}

pub fn write_ground_truth(gt: &GroundTruthGrid, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["ix", "iy", "iz", "label"])?;
    for (idx, label) in gt.iter() {
        w.write_record([
            idx.x.to_string(),
            idx.y.to_string(),
            idx.z.to_string(),
            label.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
