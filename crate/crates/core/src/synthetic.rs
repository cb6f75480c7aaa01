//! Seeded synthetic scan sequences with known ground truth.
//!
//! The scene is a flat ground plane split into Voronoi regions, each carrying
//! one class. A sensor circles above the plane and every scan samples points
//! uniformly over it. Points far from a region boundary get clean evidence
//! `strength * onehot(true class)`. Closer to a boundary a point is corrupted
//! more often and more strongly: part of its evidence leaks to the
//! neighboring region's class and part is withheld altogether, which raises
//! the point's vacuity. `boundary_noise` scales the corruption probability.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::ClassEvidence;
use crate::io::{self, GroundTruthGrid, Manifest};
use crate::scan::{Pose, ScanFrame};
use crate::voxmap::{cell_center, world_to_cell};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    /// Side of the square scene in meters.
    pub extent: f64,
    pub num_classes: usize,
    pub num_scans: usize,
    pub points_per_scan: usize,
    /// Corruption probability scale in `[0, 1]`.
    pub boundary_noise: f64,
    /// Total evidence of a clean point.
    pub evidence_strength: f64,
    /// Voxel size used to express the ground truth.
    pub voxel_size: f64,
    pub regions_per_class: usize,
    /// Decay length (m) of boundary proximity.
    pub boundary_band: f64,
    pub ground_height: f64,
    pub sensor_height: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            extent: 20.0,
            num_classes: 3,
            num_scans: 5,
            points_per_scan: 2000,
            boundary_noise: 0.5,
            evidence_strength: 10.0,
            voxel_size: 0.5,
            regions_per_class: 3,
            boundary_band: 1.0,
            ground_height: 0.1,
            sensor_height: 1.5,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(Error::invalid(format!("degenerate extent {}", self.extent)));
        }
        if !(0.0..=1.0).contains(&self.boundary_noise) {
            return Err(Error::invalid("boundary_noise must lie in [0, 1]"));
        }
        if !(self.evidence_strength.is_finite() && self.evidence_strength >= 0.0) {
            return Err(Error::invalid("evidence_strength must be >= 0"));
        }
        if !(self.voxel_size.is_finite() && self.voxel_size > 0.0) {
            return Err(Error::invalid("voxel_size must be > 0"));
        }
        if !(self.boundary_band.is_finite() && self.boundary_band > 0.0) {
            return Err(Error::invalid("boundary_band must be > 0"));
        }
        if self.regions_per_class == 0 {
            return Err(Error::invalid("regions_per_class must be >= 1"));
        }
        if !(self.ground_height.is_finite() && self.sensor_height.is_finite()) {
            return Err(Error::invalid("heights must be finite"));
        }
        Ok(())
    }
}

/// Planar class layout: nearest labeled site wins.
#[derive(Debug, Clone)]
pub struct Layout {
    sites: Vec<([f64; 2], usize)>,
}

/// Class at a location and how close the nearest differently-labeled region is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointTruth {
    pub class: usize,
    pub neighbor_class: usize,
    /// Distance (m) to the bisector with the nearest site of another class.
    pub boundary_distance: f64,
}

impl Layout {
    fn random(rng: &mut ChaCha8Rng, p: &SynthParams) -> Self {
        let n = p.num_classes * p.regions_per_class;
        let sites = (0..n)
            .map(|i| {
                let xy = [rng.gen_range(0.0..p.extent), rng.gen_range(0.0..p.extent)];
                (xy, i % p.num_classes)
            })
            .collect();
        Self { sites }
    }

    pub fn truth(&self, x: f64, y: f64) -> PointTruth {
        let d2 = |s: [f64; 2]| (s[0] - x).powi(2) + (s[1] - y).powi(2);
        let (near, &(near_xy, class)) = self
            .sites
            .iter()
            .enumerate()
            .min_by(|a, b| d2(a.1 .0).total_cmp(&d2(b.1 .0)))
            .expect("layout has sites");
        let mut best = (f64::INFINITY, class);
        for (j, &(s, c)) in self.sites.iter().enumerate() {
            if j == near || c == class {
                continue;
            }
            let sep = ((s[0] - near_xy[0]).powi(2) + (s[1] - near_xy[1]).powi(2)).sqrt();
            if sep == 0.0 {
                continue;
            }
            let dist = (d2(s) - d2(near_xy)) / (2.0 * sep);
            if dist < best.0 {
                best = (dist, c);
            }
        }
        PointTruth {
            class,
            neighbor_class: best.1,
            boundary_distance: best.0.max(0.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub seed: u64,
    pub params: SynthParams,
    pub layout: Layout,
    pub scans: Vec<ScanFrame<f64>>,
    /// Per scan, per point.
    pub point_truth: Vec<Vec<PointTruth>>,
    pub ground_truth: GroundTruthGrid,
}

fn corrupt(rng: &mut ChaCha8Rng, p: &SynthParams, truth: &PointTruth) -> Vec<f64> {
    let k = p.num_classes;
    let mut q = vec![0.0; k];
    q[truth.class] = 1.0;
    let proximity = (-truth.boundary_distance / p.boundary_band).exp();
    if p.boundary_noise > 0.0 && rng.gen::<f64>() < p.boundary_noise * proximity {
        let intensity = proximity.sqrt() * rng.gen::<f64>();
        let leak = rng.gen::<f64>();
        q[truth.class] = 1.0 - intensity;
        q[truth.neighbor_class] += intensity * leak;
    }
    q.into_iter().map(|v| p.evidence_strength * v).collect()
}

/// Deterministic in `seed`: identical inputs give identical scans and labels.
pub fn generate_synthetic_sequence(seed: u64, params: &SynthParams) -> Result<SyntheticSequence> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = Layout::random(&mut rng, params);
    let mut scans = Vec::with_capacity(params.num_scans);
    let mut point_truth = Vec::with_capacity(params.num_scans);
    let mut covered = BTreeMap::new();
    let mid = params.extent / 2.0;
    let orbit = params.extent / 4.0;

    for s in 0..params.num_scans {
        let theta = std::f64::consts::TAU * s as f64 / params.num_scans.max(1) as f64;
        let pose = Pose::from_yaw(
            theta + std::f64::consts::FRAC_PI_2,
            [
                mid + orbit * theta.cos(),
                mid + orbit * theta.sin(),
                params.sensor_height,
            ],
        );
        let to_sensor = pose.inverse();
        let mut points = Vec::with_capacity(params.points_per_scan);
        let mut evidence = Vec::with_capacity(params.points_per_scan);
        let mut truths = Vec::with_capacity(params.points_per_scan);
        for _ in 0..params.points_per_scan {
            let x = rng.gen_range(0.0..params.extent);
            let y = rng.gen_range(0.0..params.extent);
            let truth = layout.truth(x, y);
            let sensor = to_sensor.transform_point([x, y, params.ground_height]);
            // index what the mapper will see after transforming back
            let cell = world_to_cell(pose.transform_point(sensor), params.voxel_size)?;
            covered.entry(cell).or_insert_with(|| {
                let c = cell_center(cell, params.voxel_size);
                layout.truth(c[0], c[1]).class
            });
            evidence.push(ClassEvidence::new(corrupt(&mut rng, params, &truth))?);
            points.push(sensor);
            truths.push(truth);
        }
        scans.push(ScanFrame::new(
            s as u64,
            pose,
            params.num_classes,
            points,
            evidence,
        )?);
        point_truth.push(truths);
    }

    Ok(SyntheticSequence {
        seed,
        params: params.clone(),
        layout,
        scans,
        point_truth,
        ground_truth: GroundTruthGrid::new(params.num_classes, covered)?,
    })
}

pub const GROUND_TRUTH_NAME: &str = "gt.csv";

/// Writes scans, `gt.csv` and `manifest.json` (which records seed and parameters).
pub fn write_sequence(seq: &SyntheticSequence, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(seq.scans.len());
    for (i, scan) in seq.scans.iter().enumerate() {
        let (entry, points, pose) = io::scan_file_names(i);
        io::write_scan(scan, &dir.join(points), &dir.join(pose))?;
        entries.push(entry);
    }
    io::write_ground_truth(&seq.ground_truth, &dir.join(GROUND_TRUTH_NAME))?;
    let manifest = Manifest {
        num_classes: seq.params.num_classes,
        scans: entries,
        ground_truth: Some(GROUND_TRUTH_NAME.into()),
        generator: Some(serde_json::json!({
            "kind": "voronoi-plane",
            "seed": seq.seed,
            "params": seq.params,
        })),
    };
    io::write_json(&dir.join(io::MANIFEST_NAME), &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(noise: f64) -> SynthParams {
        SynthParams {
            extent: 10.0,
            num_scans: 2,
            points_per_scan: 500,
            boundary_noise: noise,
            ..SynthParams::default()
        }
    }

    #[test]
    fn noiseless_evidence_is_scaled_onehot() {
        let seq = generate_synthetic_sequence(3, &small(0.0)).unwrap();
        for (scan, truths) in seq.scans.iter().zip(&seq.point_truth) {
            for (e, t) in scan.evidence().iter().zip(truths) {
                let mut want = vec![0.0; 3];
                want[t.class] = 10.0;
                assert_eq!(e.values(), want.as_slice());
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate_synthetic_sequence(7, &small(0.4)).unwrap();
        let b = generate_synthetic_sequence(7, &small(0.4)).unwrap();
        assert_eq!(a.scans, b.scans);
        assert_eq!(a.ground_truth, b.ground_truth);
        let c = generate_synthetic_sequence(8, &small(0.4)).unwrap();
        assert_ne!(a.scans, c.scans);
    }

    #[test]
    fn ground_truth_covers_every_point_cell() {
        let seq = generate_synthetic_sequence(5, &small(0.5)).unwrap();
        for scan in &seq.scans {
            for p in scan.to_world().points() {
                let idx = world_to_cell(*p, 0.5).unwrap();
                assert!(seq.ground_truth.get(idx).is_some());
            }
        }
        assert!(seq.ground_truth.iter().all(|(_, l)| l < 3));
    }

    #[test]
    fn boundary_points_are_more_vacuous() {
        let params = SynthParams {
            points_per_scan: 4000,
            ..small(0.5)
        };
        let seq = generate_synthetic_sequence(7, &params).unwrap();
        let (mut band, mut inner) = (Vec::new(), Vec::new());
        for (scan, truths) in seq.scans.iter().zip(&seq.point_truth) {
            for (e, t) in scan.evidence().iter().zip(truths) {
                let u = e.to_dirichlet().to_belief().vacuity();
                if t.boundary_distance < params.boundary_band {
                    band.push(u);
                } else {
                    inner.push(u);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(!band.is_empty() && !inner.is_empty());
        assert!(mean(&band) > mean(&inner));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(generate_synthetic_sequence(
            0,
            &SynthParams {
                num_classes: 1,
                ..small(0.1)
            }
        )
        .is_err());
        assert!(generate_synthetic_sequence(
            0,
            &SynthParams {
                extent: 0.0,
                ..small(0.1)
            }
        )
        .is_err());
        assert!(generate_synthetic_sequence(
            0,
            &SynthParams {
                boundary_noise: 1.5,
                ..small(0.1)
            }
        )
        .is_err());
    }

    #[test]
    fn written_sequence_reloads() {
        let seq = generate_synthetic_sequence(1, &small(0.3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_sequence(&seq, dir.path()).unwrap();
        let (manifest, scans) = io::load_sequence(dir.path()).unwrap();
        assert_eq!(manifest.num_classes, 3);
        assert_eq!(scans, seq.scans);
        let gt = io::load_ground_truth(&dir.path().join(GROUND_TRUTH_NAME), 3).unwrap();
        assert_eq!(gt, seq.ground_truth);
    }
}
