//! Sequence-level driver shared by the command line and the experiments.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::SbkiMap;
use crate::error::{Error, Result};
use crate::io::{MapMethod, MapTable, RunConfig};
use crate::scan::ScanFrame;
use crate::voxmap::{IntegrationStats, VoxelMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub method: MapMethod,
    pub scans: usize,
    pub cells: usize,
    pub stats: IntegrationStats,
    pub seconds: f64,
}

/// Integrates `scans` in order with the chosen method and returns the map in
/// export form. `threads` bounds the worker pool (`None` uses every core);
/// the result does not depend on it.
pub fn build_map(
    config: &RunConfig,
    scans: &[ScanFrame<f64>],
    method: MapMethod,
    threads: Option<usize>,
) -> Result<(MapTable, BuildSummary)> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        let start = Instant::now();
        let mut stats = IntegrationStats::default();
        let table = match method {
            MapMethod::Evidential => {
                let mut map = VoxelMap::new(config.map_config())?;
                for scan in scans {
                    stats += map.integrate_scan(scan)?;
                }
                MapTable::from_evidential(&map, config.measure)
            }
            MapMethod::Sbki => {
                let mut map = SbkiMap::new(config.map_config(), config.sbki_prior)?;
                for scan in scans {
                    stats += map.integrate_scan(scan)?;
                }
                MapTable::from_sbki(&map, method.default_measure())?
            }
        };
        let summary = BuildSummary {
            method,
            scans: scans.len(),
            cells: table.len(),
            stats,
            seconds: start.elapsed().as_secs_f64(),
        };
        Ok((table, summary))
    })
}
