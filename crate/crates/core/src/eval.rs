//! Map quality against ground truth: segmentation scores, calibration and
//! how well the reported uncertainty ranks the cells that are wrong.

use std::path::Path;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_writer, GroundTruthGrid, MapMethod, MapTable, RunConfig};
use crate::voxmap::CellIndex;

/// Rows are ground truth, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub matrix: Vec<Vec<u64>>,
    /// Ground-truth cells the map never observed.
    pub uncovered: u64,
}

impl Confusion {
    pub fn num_classes(&self) -> usize {
        self.matrix.len()
    }

    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }
}

pub fn confusion_matrix(
    predict: impl Fn(CellIndex) -> Option<usize>,
    gt: &GroundTruthGrid,
    num_classes: usize,
) -> Result<Confusion> {
    if gt.is_empty() {
        return Err(Error::invalid("ground truth is empty"));
    }
    let mut matrix = vec![vec![0u64; num_classes]; num_classes];
    let mut uncovered = 0;
    for (idx, truth) in gt.iter() {
        if truth >= num_classes {
            return Err(Error::ClassIndex {
                index: truth,
                len: num_classes,
            });
        }
        match predict(idx) {
            None => uncovered += 1,
            Some(p) if p >= num_classes => {
                return Err(Error::ClassIndex {
                    index: p,
                    len: num_classes,
                })
            }
            Some(p) => matrix[truth][p] += 1,
        }
    }
    Ok(Confusion { matrix, uncovered })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScores {
    pub accuracy: f64,
    /// `None` for classes absent from both ground truth and predictions.
    pub iou: Vec<Option<f64>>,
    pub miou: f64,
}

/// Scores are accumulated as exact fractions and rounded once, so e.g. a
/// mean IoU of 17/24 comes back as the `f64` nearest to 17/24.
pub fn accuracy_and_miou(cm: &Confusion) -> Result<SegmentationScores> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("confusion matrix is empty"));
    }
    let k = cm.num_classes();
    let trace: u64 = (0..k).map(|i| cm.matrix[i][i]).sum();
    let iou: Vec<Option<BigRational>> = (0..k)
        .map(|c| {
            let tp = cm.matrix[c][c];
            let fn_: u64 = cm.matrix[c].iter().sum::<u64>() - tp;
            let fp: u64 = (0..k).map(|r| cm.matrix[r][c]).sum::<u64>() - tp;
            let union = tp + fp + fn_;
            (union > 0).then(|| BigRational::new(tp.into(), union.into()))
        })
        .collect();
    let present: Vec<&BigRational> = iou.iter().flatten().collect();
    let sum = present.iter().fold(BigRational::zero(), |acc, r| acc + *r);
    let miou = sum / BigRational::from_integer(present.len().into());
    let to_f64 = |r: &BigRational| r.to_f64().expect("ratio in [0, 1]");
    Ok(SegmentationScores {
        accuracy: to_f64(&BigRational::new(trace.into(), total.into())),
        miou: to_f64(&miou),
        iou: iou.iter().map(|r| r.as_ref().map(to_f64)).collect(),
    })
}

/// Equal-width bins over `[0, 1]`, each `[lo, hi)` except the top bin which
/// includes 1.
pub fn expected_calibration_error(cells: &[(f64, bool)], bins: usize) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::invalid("no cells to calibrate"));
    }
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let mut count = vec![0usize; bins];
    let mut conf = vec![0.0; bins];
    let mut hits = vec![0.0; bins];
    for &(c, ok) in cells {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::invalid(format!("confidence {c} outside [0, 1]")));
        }
        let b = ((c * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        conf[b] += c;
        hits[b] += f64::from(u8::from(ok));
    }
    let n = cells.len() as f64;
    Ok((0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let nb = count[b] as f64;
            nb / n * (hits[b] / nb - conf[b] / nb).abs()
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sparsification {
    /// Fraction of cells removed at each step.
    pub fractions: Vec<f64>,
    /// Error rate of the remaining cells, most uncertain removed first.
    pub curve: Vec<f64>,
    /// Same, removing actual errors first.
    pub oracle: Vec<f64>,
    /// Mean gap between `curve` and `oracle`.
    pub ause: f64,
}

fn removal_curve(order: &[usize], errors: &[bool], steps: usize) -> Vec<f64> {
    let n = order.len();
    // suffix error counts over the removal order
    let mut remaining = vec![0usize; n + 1];
    for i in (0..n).rev() {
        remaining[i] = remaining[i + 1] + usize::from(errors[order[i]]);
    }
    (0..steps)
        .map(|s| {
            let removed = s * n / steps;
            remaining[removed] as f64 / (n - removed) as f64
        })
        .collect()
}

/// Sparsification curve and AUSE. Input order is the tie-break: among equal
/// uncertainties, earlier cells are removed first.
pub fn sparsification_ause(cells: &[(f64, bool)], steps: usize) -> Result<Sparsification> {
    if steps == 0 {
        return Err(Error::invalid("need at least one sparsification step"));
    }
    if cells.len() < steps {
        return Err(Error::invalid(format!(
            "{} cells is fewer than {steps} sparsification steps",
            cells.len()
        )));
    }
    if cells.iter().any(|(u, _)| u.is_nan()) {
        return Err(Error::invalid("uncertainty is NaN"));
    }
    let errors: Vec<bool> = cells.iter().map(|(_, e)| *e).collect();
    let mut by_uncertainty: Vec<usize> = (0..cells.len()).collect();
    by_uncertainty.sort_by(|&a, &b| cells[b].0.total_cmp(&cells[a].0));
    let mut by_error: Vec<usize> = (0..cells.len()).collect();
    by_error.sort_by_key(|&i| !errors[i]);

    let curve = removal_curve(&by_uncertainty, &errors, steps);
    let oracle = removal_curve(&by_error, &errors, steps);
    let ause = curve.iter().zip(&oracle).map(|(c, o)| c - o).sum::<f64>() / steps as f64;
    Ok(Sparsification {
        fractions: (0..steps).map(|s| s as f64 / steps as f64).collect(),
        curve,
        oracle,
        ause,
    })
}

/// Average ranks, ties sharing the mean of their positions (1-based).
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// One ground-truth cell the map covers.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub index: CellIndex,
    pub truth: usize,
    pub predicted: usize,
    pub confidence: f64,
    pub uncertainty: f64,
}

impl CellOutcome {
    pub fn correct(&self) -> bool {
        self.truth == self.predicted
    }
}

/// Joins a map with ground truth. Returns covered cells in index order and
/// the number of uncovered ones.
pub fn score_cells(table: &MapTable, gt: &GroundTruthGrid) -> Result<(Vec<CellOutcome>, u64)> {
    let mut out = Vec::new();
    let mut uncovered = 0;
    for (index, truth) in gt.iter() {
        if truth >= table.num_classes {
            return Err(Error::ClassIndex {
                index: truth,
                len: table.num_classes,
            });
        }
        let Some(row) = table.find(index) else {
            uncovered += 1;
            continue;
        };
        out.push(CellOutcome {
            index,
            truth,
            predicted: row.label,
            confidence: table.row_confidence(row)?,
            uncertainty: row.uncertainty,
        });
    }
    Ok((out, uncovered))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: MapMethod,
    pub map_cells: usize,
    pub covered_cells: u64,
    pub uncovered_cells: u64,
    pub coverage: f64,
    pub accuracy: f64,
    pub miou: f64,
    pub per_class_iou: Vec<Option<f64>>,
    pub confusion: Vec<Vec<u64>>,
    pub ece: f64,
    pub ause: f64,
    pub sparsification: Sparsification,
    /// Rank correlation of the uncertainty column with per-cell error.
    pub uncertainty_error_spearman: Option<f64>,
    pub runtime_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub num_classes: usize,
    pub ground_truth_cells: usize,
    pub ece_bins: usize,
    pub ause_steps: usize,
    pub evidential: Option<MethodMetrics>,
    pub baseline: Option<MethodMetrics>,
}

impl CompareReport {
    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

pub fn evaluate_map(
    table: &MapTable,
    gt: &GroundTruthGrid,
    config: &RunConfig,
    runtime_seconds: Option<f64>,
) -> Result<MethodMetrics> {
    if table.num_classes != config.num_classes {
        return Err(Error::ClassMismatch {
            expected: config.num_classes,
            actual: table.num_classes,
        });
    }
    let (cells, uncovered) = score_cells(table, gt)?;
    if cells.is_empty() {
        return Err(Error::invalid("map covers none of the ground-truth cells"));
    }
    let cm = confusion_matrix(|i| table.find(i).map(|r| r.label), gt, config.num_classes)?;
    let seg = accuracy_and_miou(&cm)?;
    let calib: Vec<(f64, bool)> = cells.iter().map(|c| (c.confidence, c.correct())).collect();
    let ranked: Vec<(f64, bool)> = cells
        .iter()
        .map(|c| (c.uncertainty, !c.correct()))
        .collect();
    let sparse = sparsification_ause(&ranked, config.ause_steps)?;
    let unc: Vec<f64> = cells.iter().map(|c| c.uncertainty).collect();
    let err: Vec<f64> = cells
        .iter()
        .map(|c| f64::from(u8::from(!c.correct())))
        .collect();
    let covered = cells.len() as u64;
    Ok(MethodMetrics {
        method: table.method,
        map_cells: table.len(),
        covered_cells: covered,
        uncovered_cells: uncovered,
        coverage: covered as f64 / gt.len() as f64,
        accuracy: seg.accuracy,
        miou: seg.miou,
        per_class_iou: seg.iou,
        confusion: cm.matrix,
        ece: expected_calibration_error(&calib, config.ece_bins)?,
        ause: sparse.ause,
        sparsification: sparse,
        uncertainty_error_spearman: spearman(&unc, &err),
        runtime_seconds,
    })
}

/// Evaluates one or two maps built from the same scans. Maps are slotted by
/// their method; two maps of the same method fill both slots in order.
pub fn compare_report(
    primary: (&MapTable, Option<f64>),
    baseline: Option<(&MapTable, Option<f64>)>,
    gt: &GroundTruthGrid,
    config: &RunConfig,
) -> Result<CompareReport> {
    if let Some((b, _)) = baseline {
        if b.num_classes != primary.0.num_classes {
            return Err(Error::ClassMismatch {
                expected: primary.0.num_classes,
                actual: b.num_classes,
            });
        }
    }
    if let Some(max) = gt.max_label() {
        if max >= config.num_classes {
            return Err(Error::ClassIndex {
                index: max,
                len: config.num_classes,
            });
        }
    }
    let first = evaluate_map(primary.0, gt, config, primary.1)?;
    let second = baseline
        .map(|(t, r)| evaluate_map(t, gt, config, r))
        .transpose()?;
    let (evidential, baseline) = match (first.method, second) {
        (MapMethod::Sbki, None) => (None, Some(first)),
        (MapMethod::Sbki, Some(s)) if s.method == MapMethod::Evidential => (Some(s), Some(first)),
        (_, s) => (Some(first), s),
    };
    Ok(CompareReport {
        num_classes: config.num_classes,
        ground_truth_cells: gt.len(),
        ece_bins: config.ece_bins,
        ause_steps: config.ause_steps,
        evidential,
        baseline,
    })
}

/// Map rows for every covered ground-truth cell, plus a `correct` column.
pub fn write_cell_dump(table: &MapTable, gt: &GroundTruthGrid, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = table.header();
    header.push("correct".into());
    w.write_record(&header)?;
    for (idx, truth) in gt.iter() {
        if let Some(row) = table.find(idx) {
            let mut rec = row.record();
            rec.push(u8::from(row.label == truth).to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
