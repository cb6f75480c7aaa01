//! Sparse voxel map of fused opinions and the per-scan integration loop.
//!
//! Each in-range point becomes an opinion via its evidence. For every cell
//! whose center lies inside the kernel support, that opinion is discounted by
//! the normalized kernel weight and combined into the cell with Dempster's
//! rule. Absent cells are vacuous, so the first contribution initializes them.
//!
//! Integration runs in two phases. Points are resolved to their cells in
//! parallel and grouped per cell in point order; cells are then updated in
//! parallel, each by a single worker. The per-cell order of combinations is
//! therefore fixed, and maps are bit-identical for any thread count.

pub(crate) mod gather;
pub mod index;

use std::collections::HashMap;
use std::ops::AddAssign;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{BeliefAssignment, UncertaintyMeasure};
use crate::fusion::{combine, discount};
use crate::kernel::KernelParams;
use crate::scalar::Scalar;
use crate::scan::ScanFrame;
pub use index::{cell_center, world_to_cell, CellIndex};

pub const DEFAULT_MIN_WEIGHT: f64 = 1e-3;
pub const DEFAULT_MAX_RANGE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapConfig<T> {
    pub num_classes: usize,
    /// Voxel edge length in meters.
    pub voxel_size: T,
    pub kernel: KernelParams<T>,
    /// Points farther than this from the sensor origin are dropped.
    pub max_range: T,
    /// Kernel weights below this are skipped.
    pub min_weight: T,
}

impl<T: Scalar> MapConfig<T> {
    pub fn new(num_classes: usize, voxel_size: T, kernel: KernelParams<T>) -> Result<Self> {
        let c = Self {
            num_classes,
            voxel_size,
            kernel,
            max_range: T::lit(DEFAULT_MAX_RANGE),
            min_weight: T::lit(DEFAULT_MIN_WEIGHT),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.voxel_size) {
            return Err(Error::invalid(format!(
                "voxel size {} must be > 0",
                self.voxel_size
            )));
        }
        if !positive(self.max_range) {
            return Err(Error::invalid(format!(
                "max range {} must be > 0",
                self.max_range
            )));
        }
        if !(self.min_weight >= T::zero() && self.min_weight < T::one()) {
            return Err(Error::invalid(format!(
                "min weight {} must lie in [0, 1)",
                self.min_weight
            )));
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub points_kept: u64,
    /// Beyond `max_range`.
    pub points_dropped: u64,
    /// Non-finite coordinates.
    pub points_invalid: u64,
    pub cells_created: u64,
    pub cells_updated: u64,
    /// Point-to-cell links applied.
    pub contributions: u64,
}

impl AddAssign for IntegrationStats {
    fn add_assign(&mut self, o: Self) {
        self.points_kept += o.points_kept;
        self.points_dropped += o.points_dropped;
        self.points_invalid += o.points_invalid;
        self.cells_created += o.cells_created;
        self.cells_updated += o.cells_updated;
        self.contributions += o.contributions;
    }
}

/// Fused opinion stored for one voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState<T> {
    pub mass: BeliefAssignment<T>,
    pub n_obs: u64,
    pub last_scan: u64,
}

impl<T: Scalar> CellState<T> {
    pub fn vacuous(num_classes: usize) -> Self {
        Self {
            mass: BeliefAssignment::vacuous(num_classes),
            n_obs: 0,
            last_scan: 0,
        }
    }

    /// Most probable class under the projected probabilities; lowest index on ties.
    pub fn predict_label(&self) -> usize {
        self.mass.predicted_class()
    }

    pub fn uncertainty(&self, measure: UncertaintyMeasure) -> T {
        self.mass.measure(measure)
    }

    /// Largest projected class probability.
    pub fn confidence(&self) -> T {
        let p = self.mass.expected_probabilities();
        p[crate::evidence::argmax(&p)]
    }
}

#[derive(Debug, Clone)]
pub struct VoxelMap<T> {
    config: MapConfig<T>,
    cells: HashMap<CellIndex, CellState<T>>,
}

impl<T: Scalar> VoxelMap<T> {
    pub fn new(config: MapConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            cells: HashMap::new(),
        })
    }

    pub fn config(&self) -> &MapConfig<T> {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, idx: CellIndex) -> Option<&CellState<T>> {
        self.cells.get(&idx)
    }

    /// Stored opinion, or the vacuous one for unobserved cells.
    pub fn mass_at(&self, idx: CellIndex) -> BeliefAssignment<T> {
        self.cells
            .get(&idx)
            .map(|c| c.mass.clone())
            .unwrap_or_else(|| BeliefAssignment::vacuous(self.config.num_classes))
    }

    /// Cells in lexicographic index order.
    pub fn cells_sorted(&self) -> Vec<(CellIndex, &CellState<T>)> {
        let mut v: Vec<_> = self.cells.iter().map(|(k, c)| (*k, c)).collect();
        v.sort_unstable_by_key(|(k, _)| *k);
        v
    }

    /// Inserts a cell directly, as when loading an exported map.
    pub fn insert(&mut self, idx: CellIndex, cell: CellState<T>) -> Result<()> {
        if cell.mass.num_classes() != self.config.num_classes {
            return Err(Error::ClassMismatch {
                expected: self.config.num_classes,
                actual: cell.mass.num_classes(),
            });
        }
        self.cells.insert(idx, cell);
        Ok(())
    }

    /// Fuses one scan into the map. Points are processed in scan order and
    /// each cell applies its contributions in that order.
    pub fn integrate_scan(&mut self, scan: &ScanFrame<T>) -> Result<IntegrationStats> {
        let gathered = gather::gather(&self.config, scan)?;
        let masses: Vec<BeliefAssignment<T>> = scan
            .evidence()
            .par_iter()
            .map(|e| e.to_dirichlet().to_belief())
            .collect();
        let k = self.config.num_classes;
        let seq = scan.seq();
        let cells = &self.cells;

        let updated: Vec<(CellIndex, CellState<T>, bool)> = gathered
            .cells
            .into_par_iter()
            .map(|(idx, contribs)| {
                let existing = cells.get(&idx);
                let mut state = existing.cloned().unwrap_or_else(|| CellState::vacuous(k));
                for c in &contribs {
                    let incoming = discount(&masses[c.point], c.weight)?;
                    state.mass = combine(&state.mass, &incoming)?;
                }
                state.n_obs += contribs.len() as u64;
                state.last_scan = seq;
                Ok((idx, state, existing.is_none()))
            })
            .collect::<Result<_>>()?;

        let mut stats = gathered.stats;
        for (idx, state, created) in updated {
            if created {
                stats.cells_created += 1;
            } else {
                stats.cells_updated += 1;
            }
            self.cells.insert(idx, state);
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::evidence::ClassEvidence;
    use crate::fusion::fuse_sequence;
    use crate::scan::Pose;

    fn config(k: usize, voxel: f64, l: f64) -> MapConfig<f64> {
        MapConfig::new(k, voxel, KernelParams::new(1.0, l).unwrap()).unwrap()
    }

    fn world_scan(seq: u64, k: usize, pts: &[([f64; 3], Vec<f64>)]) -> ScanFrame<f64> {
        ScanFrame::in_world(
            seq,
            k,
            pts.iter().map(|(p, _)| *p).collect(),
            pts.iter()
                .map(|(_, e)| ClassEvidence::new(e.clone()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_scan_changes_nothing() {
        let mut map = VoxelMap::new(config(3, 0.5, 0.6)).unwrap();
        let stats = map.integrate_scan(&world_scan(0, 3, &[])).unwrap();
        assert_eq!(stats, IntegrationStats::default());
        assert!(map.is_empty());
    }

    #[test]
    fn single_point_single_cell() {
        let mut map = VoxelMap::new(config(3, 0.5, 0.2)).unwrap();
        let scan = world_scan(4, 3, &[([0.25, 0.25, 0.25], vec![1.0, 0.0, 0.0])]);
        let stats = map.integrate_scan(&scan).unwrap();
        assert_eq!(stats.points_kept, 1);
        assert_eq!(stats.cells_created, 1);
        assert_eq!(map.len(), 1);
        let cell = map.get(CellIndex::new(0, 0, 0)).unwrap();
        assert_eq!(cell.mass.belief(), &[0.25, 0.0, 0.0]);
        assert_eq!(cell.mass.vacuity(), 0.75);
        assert_eq!(cell.n_obs, 1);
        assert_eq!(cell.last_scan, 4);

        let stats = map.integrate_scan(&scan).unwrap();
        assert_eq!(stats.cells_updated, 1);
        let cell = map.get(CellIndex::new(0, 0, 0)).unwrap();
        assert_abs_diff_eq!(cell.mass.belief()[0], 0.4375, epsilon = 1e-15);
        assert_abs_diff_eq!(cell.mass.vacuity(), 0.5625, epsilon = 1e-15);
        assert_eq!(cell.n_obs, 2);
    }

    #[test]
    fn range_and_invalid_points_are_counted() {
        let mut cfg = config(2, 0.5, 0.6);
        cfg.max_range = 5.0;
        let mut map = VoxelMap::new(cfg).unwrap();
        let scan = world_scan(
            0,
            2,
            &[
                ([1.0, 1.0, 0.0], vec![2.0, 0.0]),
                ([10.0, 0.0, 0.0], vec![2.0, 0.0]),
                ([f64::NAN, 0.0, 0.0], vec![2.0, 0.0]),
            ],
        );
        let stats = map.integrate_scan(&scan).unwrap();
        assert_eq!(
            (
                stats.points_kept,
                stats.points_dropped,
                stats.points_invalid
            ),
            (1, 1, 1)
        );
    }

    #[test]
    fn range_measured_from_sensor_origin() {
        let mut cfg = config(2, 0.5, 0.6);
        cfg.max_range = 2.0;
        let mut map = VoxelMap::new(cfg).unwrap();
        let e = ClassEvidence::new(vec![1.0, 0.0]).unwrap();
        let pose = Pose::from_yaw(0.0, [50.0, 0.0, 0.0]);
        let scan = ScanFrame::new(0, pose, 2, vec![[1.0, 0.0, 0.0]], vec![e]).unwrap();
        let stats = map.integrate_scan(&scan).unwrap();
        assert_eq!(stats.points_kept, 1);
        assert!(map.get(CellIndex::new(102, 0, 0)).is_some());
    }

    #[test]
    fn class_mismatch_is_fatal() {
        let mut map = VoxelMap::new(config(3, 0.5, 0.6)).unwrap();
        let scan = world_scan(0, 2, &[([0.0; 3], vec![1.0, 0.0])]);
        assert!(matches!(
            map.integrate_scan(&scan),
            Err(Error::ClassMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn label_and_uncertainty_examples() {
        let cell = |b: &[f64], u: f64| CellState {
            mass: BeliefAssignment::new(b.to_vec(), u).unwrap(),
            n_obs: 1,
            last_scan: 0,
        };
        let c = cell(&[0.25, 0.0, 0.0], 0.75);
        assert_eq!(c.predict_label(), 0);
        assert_eq!(c.uncertainty(UncertaintyMeasure::Vacuity), 0.75);
        assert_abs_diff_eq!(
            c.uncertainty(UncertaintyMeasure::Variance),
            0.05,
            epsilon = 1e-15
        );
        let v = CellState::<f64>::vacuous(3);
        assert_eq!(v.predict_label(), 0);
        assert_eq!(v.uncertainty(UncertaintyMeasure::default()), 1.0);
        assert_eq!(cell(&[0.1, 0.4], 0.5).predict_label(), 1);
    }

    #[test]
    fn matches_fuse_sequence_oracle() {
        let mut cfg = config(3, 0.5, 0.6);
        cfg.min_weight = 0.0;
        let mut map = VoxelMap::new(cfg).unwrap();
        let pts = [
            ([0.3, 0.2, 0.1], vec![4.0, 1.0, 0.0]),
            ([0.6, 0.3, 0.2], vec![0.0, 3.0, 1.0]),
            ([0.1, 0.45, 0.3], vec![2.0, 2.0, 2.0]),
        ];
        map.integrate_scan(&world_scan(0, 3, &pts[..2])).unwrap();
        map.integrate_scan(&world_scan(1, 3, &pts[2..])).unwrap();
        let target = CellIndex::new(0, 0, 0);
        let center = cell_center(target, 0.5);
        let contribs: Vec<_> = pts
            .iter()
            .map(|(p, e)| {
                let d = index::distance(*p, center);
                let w = crate::kernel::normalized_weight(d, &cfg.kernel).unwrap();
                let m = ClassEvidence::new(e.clone())
                    .unwrap()
                    .to_dirichlet()
                    .to_belief();
                discount(&m, w).unwrap()
            })
            .collect();
        let oracle = fuse_sequence(&contribs).unwrap();
        let got = map.mass_at(target);
        for (a, b) in got.belief().iter().zip(oracle.belief()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(map.get(target).unwrap().n_obs, 3);
    }

    #[test]
    fn absent_cell_reads_vacuous() {
        let map = VoxelMap::new(config(4, 0.5, 0.6)).unwrap();
        assert!(map.mass_at(CellIndex::new(9, 9, 9)).is_vacuous());
    }
}
