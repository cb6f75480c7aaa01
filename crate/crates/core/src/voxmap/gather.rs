//! First phase of scan integration: resolve every point to the cells it
//! reaches and group the weighted contributions per cell in point order.

use std::collections::HashMap;

use rayon::prelude::*;

use super::index::{distance, CellIndex};
use super::{IntegrationStats, MapConfig};
use crate::error::{Error, Result};
use crate::kernel::{neighbor_cells_with_distance, normalized_weight};
use crate::scalar::Scalar;
use crate::scan::ScanFrame;

/// Kernel-weighted link from point `point` to one cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Contribution<T> {
    pub point: usize,
    pub weight: T,
}

pub(crate) struct Gathered<T> {
    /// Cells sorted by index, each with its contributions in point order.
    pub cells: Vec<(CellIndex, Vec<Contribution<T>>)>,
    pub stats: IntegrationStats,
}

pub(crate) fn gather<T: Scalar>(config: &MapConfig<T>, scan: &ScanFrame<T>) -> Result<Gathered<T>> {
    if scan.num_classes() != config.num_classes {
        return Err(Error::ClassMismatch {
            expected: config.num_classes,
            actual: scan.num_classes(),
        });
    }
    let world = scan.to_world();
    let origin = world.sensor_origin();

    enum Fate<T> {
        Invalid,
        OutOfRange,
        Kept(Vec<(CellIndex, T)>),
    }

    let fates: Vec<Fate<T>> = world
        .points()
        .par_iter()
        .map(|&p| {
            if p.iter().any(|c| !c.is_finite()) {
                return Ok(Fate::Invalid);
            }
            if distance(p, origin) > config.max_range {
                return Ok(Fate::OutOfRange);
            }
            let mut links = Vec::new();
            for (cell, d) in
                neighbor_cells_with_distance(p, config.voxel_size, config.kernel.length)?
            {
                let w = normalized_weight(d, &config.kernel)?;
                if w > T::zero() && w >= config.min_weight {
                    links.push((cell, w));
                }
            }
            Ok(Fate::Kept(links))
        })
        .collect::<Result<_>>()?;

    let mut stats = IntegrationStats::default();
    let mut per_cell: HashMap<CellIndex, Vec<Contribution<T>>> = HashMap::new();
    for (point, fate) in fates.into_iter().enumerate() {
        match fate {
            Fate::Invalid => stats.points_invalid += 1,
            Fate::OutOfRange => stats.points_dropped += 1,
            Fate::Kept(links) => {
                stats.points_kept += 1;
                stats.contributions += links.len() as u64;
                for (cell, weight) in links {
                    per_cell
                        .entry(cell)
                        .or_default()
                        .push(Contribution { point, weight });
                }
            }
        }
    }
    let mut cells: Vec<_> = per_cell.into_iter().collect();
    cells.sort_unstable_by_key(|(c, _)| *c);
    Ok(Gathered { cells, stats })
}
