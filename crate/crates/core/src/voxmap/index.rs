use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Integer voxel address. Ordering is lexicographic in (x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl CellIndex {
    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Self { x, y, z }
    }

    pub fn offset(self, dx: i64, dy: i64, dz: i64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.z + dz)
    }
}

impl From<[i64; 3]> for CellIndex {
    fn from([x, y, z]: [i64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

fn axis_index<T: Scalar>(v: T, voxel_size: T) -> Result<i64> {
    (v / voxel_size)
        .floor()
        .to_i64()
        .ok_or_else(|| Error::invalid(format!("coordinate {v} has no voxel index")))
}

/// Floor-divides a world position into its containing voxel.
pub fn world_to_cell<T: Scalar>(p: [T; 3], voxel_size: T) -> Result<CellIndex> {
    if p.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite point ({}, {}, {})",
            p[0], p[1], p[2]
        )));
    }
    Ok(CellIndex::new(
        axis_index(p[0], voxel_size)?,
        axis_index(p[1], voxel_size)?,
        axis_index(p[2], voxel_size)?,
    ))
}

pub fn cell_center<T: Scalar>(idx: CellIndex, voxel_size: T) -> [T; 3] {
    let half = T::lit(0.5);
    let c = |i: i64| (T::from_i64(i).expect("index representable") + half) * voxel_size;
    [c(idx.x), c(idx.y), c(idx.z)]
}

pub(crate) fn distance<T: Scalar>(a: [T; 3], b: [T; 3]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn world_to_cell_examples() {
        assert_eq!(
            world_to_cell([0.0, 0.0, 0.0], 0.5).unwrap(),
            CellIndex::new(0, 0, 0)
        );
        assert_eq!(
            world_to_cell([0.7, -0.2, 1.0], 0.5).unwrap(),
            CellIndex::new(1, -1, 2)
        );
        assert_eq!(
            world_to_cell([-0.5, 0.0, 0.0], 0.5).unwrap(),
            CellIndex::new(-1, 0, 0)
        );
        assert!(world_to_cell([f64::NAN, 0.0, 0.0], 0.5).is_err());
        assert!(world_to_cell([0.0, f64::INFINITY, 0.0], 0.5).is_err());
    }

    #[test]
    fn cell_center_examples() {
        assert_eq!(
            cell_center(CellIndex::new(0, 0, 0), 0.5),
            [0.25, 0.25, 0.25]
        );
        assert_eq!(
            cell_center(CellIndex::new(1, -1, 2), 0.5),
            [0.75, -0.25, 1.25]
        );
    }

    #[test]
    fn ordering_is_lexicographic() {
        let mut v = vec![
            CellIndex::new(1, 0, 0),
            CellIndex::new(0, 1, -1),
            CellIndex::new(0, 0, 5),
            CellIndex::new(0, 1, -2),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                CellIndex::new(0, 0, 5),
                CellIndex::new(0, 1, -2),
                CellIndex::new(0, 1, -1),
                CellIndex::new(1, 0, 0),
            ]
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn center_round_trips(
            x in -100_000i64..100_000, y in -100_000i64..100_000, z in -100_000i64..100_000,
            vs in prop::sample::select(vec![0.05, 0.1, 0.2, 0.25, 0.3, 0.5, 1.0, 2.0]),
        ) {
            let idx = CellIndex::new(x, y, z);
            prop_assert_eq!(world_to_cell(cell_center(idx, vs), vs).unwrap(), idx);
        }
    }
}
