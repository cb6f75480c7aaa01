//! Semantic Bayesian kernel inference baseline.
//!
//! Each cell keeps Dirichlet concentrations that start at a small prior and
//! accumulate `k(d) * y` for every nearby point, where `y` is the point's
//! expected class distribution. Uncertainty is the posterior variance of the
//! predicted class. Dense cells drive that variance toward zero even when the
//! accumulated labels disagree.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evidence::{argmax, dirichlet_variance, UncertaintyMeasure};
use crate::scalar::Scalar;
use crate::scan::ScanFrame;
use crate::voxmap::gather::gather;
use crate::voxmap::{CellIndex, IntegrationStats, MapConfig};

pub const DEFAULT_PRIOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SbkiCellState<T> {
    pub alpha: Vec<T>,
    pub n_obs: u64,
    pub last_scan: u64,
}

impl<T: Scalar> SbkiCellState<T> {
    pub fn with_prior(num_classes: usize, prior: T) -> Self {
        Self {
            alpha: vec![prior; num_classes],
            n_obs: 0,
            last_scan: 0,
        }
    }

    /// Largest concentration; lowest index on ties.
    pub fn predict_label(&self) -> usize {
        argmax(&self.alpha)
    }

    pub fn expected_probabilities(&self) -> Vec<T> {
        let s = self.alpha.iter().fold(T::zero(), |acc, &a| acc + a);
        self.alpha.iter().map(|&a| a / s).collect()
    }

    pub fn confidence(&self) -> T {
        let p = self.expected_probabilities();
        p[argmax(&p)]
    }

    /// Posterior variance of the predicted class.
    pub fn variance(&self) -> T {
        dirichlet_variance(&self.alpha, self.predict_label()).expect("label within alpha")
    }

    /// Normalized entropy of the posterior mean.
    pub fn entropy(&self) -> T {
        let h = self
            .expected_probabilities()
            .into_iter()
            .filter(|p| *p > T::zero())
            .fold(T::zero(), |acc, p| acc - p * p.ln());
        h / T::from_count(self.alpha.len()).ln()
    }

    /// Variance and entropy are defined for the baseline; vacuity is not.
    pub fn uncertainty(&self, measure: UncertaintyMeasure) -> Result<T> {
        match measure {
            UncertaintyMeasure::Variance => Ok(self.variance()),
            UncertaintyMeasure::Entropy => Ok(self.entropy()),
            UncertaintyMeasure::Vacuity => Err(Error::Unknown {
                kind: "baseline uncertainty measure",
                name: measure.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SbkiMap<T> {
    config: MapConfig<T>,
    prior: T,
    cells: HashMap<CellIndex, SbkiCellState<T>>,
}

impl<T: Scalar> SbkiMap<T> {
    pub fn new(config: MapConfig<T>, prior: T) -> Result<Self> {
        config.validate()?;
        if !(prior.is_finite() && prior > T::zero()) {
            return Err(Error::invalid(format!(
                "baseline prior {prior} must be > 0"
            )));
        }
        Ok(Self {
            config,
            prior,
            cells: HashMap::new(),
        })
    }

    pub fn config(&self) -> &MapConfig<T> {
        &self.config
    }

    pub fn prior(&self) -> T {
        self.prior
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, idx: CellIndex) -> Option<&SbkiCellState<T>> {
        self.cells.get(&idx)
    }

    pub fn cells_sorted(&self) -> Vec<(CellIndex, &SbkiCellState<T>)> {
        let mut v: Vec<_> = self.cells.iter().map(|(k, c)| (*k, c)).collect();
        v.sort_unstable_by_key(|(k, _)| *k);
        v
    }

    pub fn insert(&mut self, idx: CellIndex, cell: SbkiCellState<T>) -> Result<()> {
        if cell.alpha.len() != self.config.num_classes {
            return Err(Error::ClassMismatch {
                expected: self.config.num_classes,
                actual: cell.alpha.len(),
            });
        }
        self.cells.insert(idx, cell);
        Ok(())
    }

    /// Accumulates `sparse_kernel(d) * y_i` into every reached cell, in point order.
    pub fn integrate_scan(&mut self, scan: &ScanFrame<T>) -> Result<IntegrationStats> {
        let gathered = gather(&self.config, scan)?;
        let labels: Vec<Vec<T>> = scan
            .evidence()
            .par_iter()
            .map(|e| e.to_dirichlet().expected_probabilities())
            .collect();
        let (k, prior, sigma0, seq) = (
            self.config.num_classes,
            self.prior,
            self.config.kernel.sigma0,
            scan.seq(),
        );
        let cells = &self.cells;

        let updated: Vec<(CellIndex, SbkiCellState<T>, bool)> = gathered
            .cells
            .into_par_iter()
            .map(|(idx, contribs)| {
                let existing = cells.get(&idx);
                let mut state = existing
                    .cloned()
                    .unwrap_or_else(|| SbkiCellState::with_prior(k, prior));
                for c in &contribs {
                    // equals sparse_kernel(d) bit for bit
                    let kd = c.weight * sigma0;
                    for (a, &y) in state.alpha.iter_mut().zip(&labels[c.point]) {
                        *a = *a + kd * y;
                    }
                }
                state.n_obs += contribs.len() as u64;
                state.last_scan = seq;
                (idx, state, existing.is_none())
            })
            .collect();

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
