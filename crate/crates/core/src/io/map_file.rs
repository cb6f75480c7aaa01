//! Map export and import.
//!
//! CSV rows are `ix,iy,iz,cx,cy,cz,label,uncertainty,n_obs` followed by the
//! cell state: `b_0..b_{K-1},u` for evidential maps or `a_0..a_{K-1}`
//! (Dirichlet concentrations) for the kernel baseline. Rows are in
//! lexicographic index order. PLY output is ASCII 1.0 with one colored vertex
//! per cell center and the uncertainty in the alpha channel.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{csv_reader, csv_writer, format_real, line_of, parse_real};
use crate::baseline::{SbkiCellState, SbkiMap};
use crate::error::{Error, Result};
use crate::evidence::{BeliefAssignment, UncertaintyMeasure};
use crate::voxmap::{cell_center, CellIndex, CellState, MapConfig, VoxelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapMethod {
    Evidential,
    Sbki,
}

impl MapMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Evidential => "evidential",
            Self::Sbki => "sbki",
        }
    }

    /// Uncertainty each method reports by default.
    pub fn default_measure(self) -> UncertaintyMeasure {
        match self {
            Self::Evidential => UncertaintyMeasure::Vacuity,
            Self::Sbki => UncertaintyMeasure::Variance,
        }
    }
}

impl fmt::Display for MapMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evidential" => Ok(Self::Evidential),
            "sbki" => Ok(Self::Sbki),
            _ => Err(Error::Unknown {
                kind: "mapping method",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Ply,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "ply" => Ok(Self::Ply),
            _ => Err(Error::Unknown {
                kind: "export format",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapRow {
    pub index: CellIndex,
    pub center: [f64; 3],
    pub label: usize,
    pub uncertainty: f64,
    pub n_obs: u64,
    /// Singleton beliefs (evidential) or concentrations (baseline).
    pub state: Vec<f64>,
    /// Present for evidential maps only.
    pub vacuity: Option<f64>,
}

impl MapRow {
    fn belief(&self) -> Result<BeliefAssignment<f64>> {
        let u = self
            .vacuity
            .ok_or_else(|| Error::invalid("row carries no opinion"))?;
        BeliefAssignment::new(self.state.clone(), u)
    }

    fn sbki(&self) -> SbkiCellState<f64> {
        SbkiCellState {
            alpha: self.state.clone(),
            n_obs: self.n_obs,
            last_scan: 0,
        }
    }

    pub(crate) fn record(&self) -> Vec<String> {
        let i = self.index;
        let mut out = vec![i.x.to_string(), i.y.to_string(), i.z.to_string()];
        out.extend(self.center.iter().map(|v| format_real(*v)));
        out.push(self.label.to_string());
        out.push(format_real(self.uncertainty));
        out.push(self.n_obs.to_string());
        out.extend(self.state.iter().map(|v| format_real(*v)));
        if let Some(u) = self.vacuity {
            out.push(format_real(u));
        }
        out
    }
}

/// Exported view of a map: one row per stored cell, sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTable {
    pub method: MapMethod,
    pub num_classes: usize,
    /// Source of the `uncertainty` column, when known.
    pub measure: Option<UncertaintyMeasure>,
    pub rows: Vec<MapRow>,
}

impl MapTable {
    pub fn from_evidential(map: &VoxelMap<f64>, measure: UncertaintyMeasure) -> Self {
        let vs = map.config().voxel_size;
        let rows = map
            .cells_sorted()
            .into_iter()
            .map(|(index, cell)| MapRow {
                index,
                center: cell_center(index, vs),
                label: cell.predict_label(),
                uncertainty: cell.uncertainty(measure),
                n_obs: cell.n_obs,
                state: cell.mass.belief().to_vec(),
                vacuity: Some(cell.mass.vacuity()),
            })
            .collect();
        Self {
            method: MapMethod::Evidential,
            num_classes: map.config().num_classes,
            measure: Some(measure),
            rows,
        }
    }

    pub fn from_sbki(map: &SbkiMap<f64>, measure: UncertaintyMeasure) -> Result<Self> {
        let vs = map.config().voxel_size;
        let rows = map
            .cells_sorted()
            .into_iter()
            .map(|(index, cell)| {
                Ok(MapRow {
                    index,
                    center: cell_center(index, vs),
                    label: cell.predict_label(),
                    uncertainty: cell.uncertainty(measure)?,
                    n_obs: cell.n_obs,
                    state: cell.alpha.clone(),
                    vacuity: None,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            method: MapMethod::Sbki,
            num_classes: map.config().num_classes,
            measure: Some(measure),
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn find(&self, idx: CellIndex) -> Option<&MapRow> {
        self.rows
            .binary_search_by_key(&idx, |r| r.index)
            .ok()
            .map(|i| &self.rows[i])
    }

    /// Recomputes one row's uncertainty from its stored cell state.
    pub fn row_measure(&self, row: &MapRow, measure: UncertaintyMeasure) -> Result<f64> {
        match self.method {
            MapMethod::Evidential => Ok(row.belief()?.measure(measure)),
            MapMethod::Sbki => row.sbki().uncertainty(measure),
        }
    }

    /// Largest expected class probability of a row.
    pub fn row_confidence(&self, row: &MapRow) -> Result<f64> {
        match self.method {
            MapMethod::Evidential => {
                let m = row.belief()?;
                Ok(CellState {
                    mass: m,
                    n_obs: row.n_obs,
                    last_scan: 0,
                }
                .confidence())
            }
            MapMethod::Sbki => Ok(row.sbki().confidence()),
        }
    }

    /// Copy whose `uncertainty` column comes from `measure`.
    pub fn with_measure(&self, measure: UncertaintyMeasure) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                Ok(MapRow {
                    uncertainty: self.row_measure(r, measure)?,
                    ..r.clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            measure: Some(measure),
            rows,
            ..self.clone()
        })
    }

    pub fn to_voxel_map(&self, config: MapConfig<f64>) -> Result<VoxelMap<f64>> {
        if self.method != MapMethod::Evidential {
            return Err(Error::invalid("not an evidential map"));
        }
        let mut map = VoxelMap::new(config)?;
        for r in &self.rows {
            let cell = CellState {
                mass: r.belief()?,
                n_obs: r.n_obs,
                last_scan: 0,
            };
            map.insert(r.index, cell)?;
        }
        Ok(map)
    }

    pub fn to_sbki_map(&self, config: MapConfig<f64>, prior: f64) -> Result<SbkiMap<f64>> {
        if self.method != MapMethod::Sbki {
            return Err(Error::invalid("not a baseline map"));
        }
        let mut map = SbkiMap::new(config, prior)?;
        for r in &self.rows {
            map.insert(r.index, r.sbki())?;
        }
        Ok(map)
    }

    pub(crate) fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "ix",
            "iy",
            "iz",
            "cx",
            "cy",
            "cz",
            "label",
            "uncertainty",
            "n_obs",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        match self.method {
            MapMethod::Evidential => {
                h.extend((0..self.num_classes).map(|k| format!("b_{k}")));
                h.push("u".into());
            }
            MapMethod::Sbki => h.extend((0..self.num_classes).map(|k| format!("a_{k}"))),
        }
        h
    }
}

pub fn export_map(table: &MapTable, format: ExportFormat, path: &Path) -> Result<()> {
    if table.is_empty() {
        return Err(Error::invalid("refusing to export an empty map"));
    }
    match format {
        ExportFormat::Csv => write_csv(table, path),
        ExportFormat::Ply => write_ply(table, path),
    }
}

fn write_csv(table: &MapTable, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(table.header())?;
    for row in &table.rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn import_map(path: &Path) -> Result<MapTable> {
    let mut reader = csv_reader(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    let fixed = [
        "ix",
        "iy",
        "iz",
        "cx",
        "cy",
        "cz",
        "label",
        "uncertainty",
        "n_obs",
    ];
    let bad_header = || {
        Error::parse(
            path,
            1,
            format!("unrecognized map header `{}`", header.join(",")),
        )
    };
    if header.len() < fixed.len() + 2 || header[..fixed.len()].iter().ne(fixed) {
        return Err(bad_header());
    }
    let tail = &header[fixed.len()..];
    let (method, k) = if tail.last().map(String::as_str) == Some("u") {
        (MapMethod::Evidential, tail.len() - 1)
    } else {
        (MapMethod::Sbki, tail.len())
    };
    let prefix = if method == MapMethod::Evidential {
        "b"
    } else {
        "a"
    };
    if k < 2 || (0..k).any(|i| tail[i] != format!("{prefix}_{i}")) {
        return Err(bad_header());
    }

    let mut rows: Vec<MapRow> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != header.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} columns, found {}", header.len(), record.len()),
            ));
        }
        let err = |m: String| Error::parse(path, line, m);
        let int = |i: usize| {
            record[i]
                .parse::<i64>()
                .map_err(|_| err(format!("`{}` is not an integer", &record[i])))
        };
        let real = |i: usize| parse_real(&record[i]).map_err(err);
        let index = CellIndex::new(int(0)?, int(1)?, int(2)?);
        let label = record[6]
            .parse::<usize>()
            .ok()
            .filter(|l| *l < k)
            .ok_or_else(|| err(format!("bad class label `{}`", &record[6])))?;
        let n_obs = record[8]
            .parse::<u64>()
            .map_err(|_| err(format!("bad observation count `{}`", &record[8])))?;
        let state = (0..k)
            .map(|i| real(fixed.len() + i))
            .collect::<Result<Vec<_>>>()?;
        let vacuity = match method {
            MapMethod::Evidential => Some(real(fixed.len() + k)?),
            MapMethod::Sbki => None,
        };
        let row = MapRow {
            index,
            center: [real(3)?, real(4)?, real(5)?],
            label,
            uncertainty: real(7)?,
            n_obs,
            state,
            vacuity,
        };
        match method {
            MapMethod::Evidential => {
                row.belief().map_err(|e| err(e.to_string()))?;
            }
            MapMethod::Sbki => {
                if row.state.iter().any(|a| *a <= 0.0) {
                    return Err(err("concentrations must be > 0".into()));
                }
            }
        }
        if let Some(prev) = rows.last() {
            if prev.index >= row.index {
                return Err(err(format!(
                    "cell {} out of lexicographic order",
                    row.index
                )));
            }
        }
        rows.push(row);
    }
    Ok(MapTable {
        method,
        num_classes: k,
        measure: None,
        rows,
    })
}

fn palette(k: usize) -> [u8; 3] {
    const BASE: [[u8; 3]; 10] = [
        [31, 119, 180],
        [255, 127, 14],
        [44, 160, 44],
        [214, 39, 40],
        [148, 103, 189],
        [140, 86, 75],
        [227, 119, 194],
        [127, 127, 127],
        [188, 189, 34],
        [23, 190, 207],
    ];
    if k < BASE.len() {
        return BASE[k];
    }
    // golden-angle hue walk for larger label sets
    let h = (k as f64 * 137.507_764_05).rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8]
}

/// ASCII PLY with per-class colors; alpha encodes the uncertainty scaled by
/// the range of its measure.
pub fn write_ply(table: &MapTable, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let scale = table.measure.map_or(1.0, |m| m.max_value());
    let measure = table.measure.map_or("unknown", |m| m.as_str());
    let io = |e| Error::io(path, e);
    write!(
        w,
        "ply\nformat ascii 1.0\ncomment method {} uncertainty {}\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nproperty uchar alpha\n\
         end_header\n",
        table.method,
        measure,
        table.rows.len()
    )
    .map_err(io)?;
    for r in &table.rows {
        let [red, green, blue] = palette(r.label);
        let alpha = ((r.uncertainty / scale).clamp(0.0, 1.0) * 255.0).round() as u8;
        writeln!(
            w,
            "{} {} {} {red} {green} {blue} {alpha}",
            r.center[0] as f32, r.center[1] as f32, r.center[2] as f32
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::ClassEvidence;
    use crate::kernel::KernelParams;
    use crate::scan::ScanFrame;

    fn config() -> MapConfig<f64> {
        MapConfig::new(3, 0.5, KernelParams::new(1.0, 0.6).unwrap()).unwrap()
    }

    fn scan() -> ScanFrame<f64> {
        let pts = vec![[0.3, 0.2, 0.1], [1.1, 0.4, 0.2], [0.7, -0.3, 0.0]];
        let ev = [[3.0, 1.0, 0.0], [0.0, 5.0, 1.0], [1.0, 1.0, 2.5]]
            .iter()
            .map(|e| ClassEvidence::new(e.to_vec()).unwrap())
            .collect();
        ScanFrame::in_world(0, 3, pts, ev).unwrap()
    }

    #[test]
    fn csv_round_trip_preserves_masses() {
        let mut map = VoxelMap::new(config()).unwrap();
        map.integrate_scan(&scan()).unwrap();
        let table = MapTable::from_evidential(&map, UncertaintyMeasure::Vacuity);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        export_map(&table, ExportFormat::Csv, &p).unwrap();
        let back = import_map(&p).unwrap();
        assert_eq!(back.rows, table.rows);
        let rebuilt = back.to_voxel_map(config()).unwrap();
        for (idx, cell) in map.cells_sorted() {
            let got = rebuilt.get(idx).unwrap();
            assert_eq!(got.mass, cell.mass);
            assert_eq!(got.n_obs, cell.n_obs);
        }
    }

    #[test]
    fn baseline_round_trip() {
        let mut map = SbkiMap::new(config(), 1e-3).unwrap();
        map.integrate_scan(&scan()).unwrap();
        let table = MapTable::from_sbki(&map, UncertaintyMeasure::Variance).unwrap();
        assert!(MapTable::from_sbki(&map, UncertaintyMeasure::Vacuity).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        export_map(&table, ExportFormat::Csv, &p).unwrap();
        let back = import_map(&p).unwrap();
        assert_eq!(back.method, MapMethod::Sbki);
        assert_eq!(back.rows, table.rows);
        let rebuilt = back.to_sbki_map(config(), 1e-3).unwrap();
        assert_eq!(rebuilt.len(), map.len());
    }

    #[test]
    fn single_cell_export_is_byte_stable() {
        let mut map = VoxelMap::new(config()).unwrap();
        let m = BeliefAssignment::new(vec![0.25, 0.0, 0.0], 0.75).unwrap();
        map.insert(
            CellIndex::new(0, 0, 0),
            CellState {
                mass: m,
                n_obs: 1,
                last_scan: 0,
            },
        )
        .unwrap();
        let table = MapTable::from_evidential(&map, UncertaintyMeasure::Vacuity);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        export_map(&table, ExportFormat::Csv, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "ix,iy,iz,cx,cy,cz,label,uncertainty,n_obs,b_0,b_1,b_2,u\n\
             0,0,0,0.25,0.25,0.25,0,0.75,1,0.25,0,0,0.75\n"
        );
        export_map(&table, ExportFormat::Csv, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), text);
    }

    #[test]
    fn ply_has_one_vertex_per_cell() {
        let mut map = VoxelMap::new(config()).unwrap();
        map.integrate_scan(&scan()).unwrap();
        let table = MapTable::from_evidential(&map, UncertaintyMeasure::Vacuity);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ply");
        export_map(&table, ExportFormat::Ply, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let (head, body) = text.split_once("end_header\n").unwrap();
        assert!(head.starts_with("ply\nformat ascii 1.0\n"));
        assert!(head.contains(&format!("element vertex {}\n", map.len())));
        assert_eq!(body.lines().count(), map.len());
        for line in body.lines() {
            assert_eq!(line.split(' ').count(), 7);
        }
    }

    #[test]
    fn empty_map_and_bad_names_rejected() {
        let map = VoxelMap::new(config()).unwrap();
        let table = MapTable::from_evidential(&map, UncertaintyMeasure::Vacuity);
        let dir = tempfile::tempdir().unwrap();
        assert!(export_map(&table, ExportFormat::Csv, &dir.path().join("m.csv")).is_err());
        assert!("obj".parse::<ExportFormat>().is_err());
        assert!("bki".parse::<MapMethod>().is_err());
    }

    #[test]
    fn import_rejects_corrupt_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let head = "ix,iy,iz,cx,cy,cz,label,uncertainty,n_obs,b_0,b_1,u\n";
        std::fs::write(
            &p,
            format!("{head}0,0,0,0.25,0.25,0.25,0,0.5,1,0.5,0.2,0.5\n"),
        )
        .unwrap();
        assert!(matches!(import_map(&p), Err(Error::Parse { line: 2, .. })));
        std::fs::write(
            &p,
            format!("{head}0,0,0,0.25,0.25,0.25,5,0.5,1,0.3,0.2,0.5\n"),
        )
        .unwrap();
        assert!(import_map(&p).is_err());
        std::fs::write(&p, "ix,iy,iz,label\n").unwrap();
        assert!(import_map(&p).is_err());
    }

    #[test]
    fn palette_is_deterministic() {
        assert_eq!(palette(0), [31, 119, 180]);
        assert_eq!(palette(25), palette(25));
        assert_ne!(palette(11), palette(12));
    }
}
