use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use evmap::eval::{compare_report, write_cell_dump};
use evmap::io::{
    export_map, import_map, load_ground_truth, load_sequence, ExportFormat, MapMethod, RunConfig,
};
use evmap::pipeline::{build_map, BuildSummary};
use evmap::synthetic::{generate_synthetic_sequence, write_sequence, SynthParams};
use evmap::UncertaintyMeasure;

#[derive(Parser)]
#[command(name = "evmap", version, about = "Evidential semantic voxel mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled scan sequence.
    Synth(SynthArgs),
    /// Integrate a scan sequence into a voxel map.
    Build(BuildArgs),
    /// Score one or two maps against ground truth.
    Eval(EvalArgs),
    /// Re-export a map as CSV or PLY with a chosen uncertainty measure.
    Export(ExportArgs),
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    num_scans: usize,
    /// Points per scan.
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, default_value_t = 3, value_parser = parse_classes)]
    classes: usize,
    /// Boundary corruption scale in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    /// Total evidence of a clean point.
    #[arg(long, default_value_t = 10.0)]
    strength: f64,
    /// Side of the square scene in meters.
    #[arg(long, default_value_t = 20.0)]
    extent: f64,
    /// Voxel size of the ground-truth grid.
    #[arg(long, default_value_t = 0.5)]
    voxel_size: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Evidential,
    Sbki,
}

impl From<MethodArg> for MapMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Evidential => MapMethod::Evidential,
            MethodArg::Sbki => MapMethod::Sbki,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Vacuity,
    Variance,
    Entropy,
}

impl From<MeasureArg> for UncertaintyMeasure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Vacuity => UncertaintyMeasure::Vacuity,
            MeasureArg::Variance => UncertaintyMeasure::Variance,
            MeasureArg::Entropy => UncertaintyMeasure::Entropy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Ply,
}

#[derive(clap::Args)]
struct BuildArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory holding manifest.json and the scans it lists.
    #[arg(long)]
    scans: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to all cores. The map does not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    map: PathBuf,
    /// Second map to compare against, typically the kernel-count baseline.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    config: PathBuf,
    /// Report JSON; per-cell CSVs are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ExportArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum)]
    format: FormatArg,
    /// Uncertainty column / PLY alpha source; defaults to the map's own.
    #[arg(long, value_enum)]
    measure: Option<MeasureArg>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_classes(s: &str) -> Result<usize, String> {
    let k: usize = s.parse().map_err(|e| format!("{e}"))?;
    if k < 2 {
        return Err(format!("need at least 2 classes, got {k}"));
    }
    Ok(k)
}

/// `map.csv` -> `map.csv.stats.json`
fn stats_path(map: &Path) -> PathBuf {
    let mut s = map.as_os_str().to_owned();
    s.push(".stats.json");
    PathBuf::from(s)
}

fn synth(a: SynthArgs) -> Result<()> {
    let params = SynthParams {
        extent: a.extent,
        num_classes: a.classes,
        num_scans: a.num_scans,
        points_per_scan: a.points,
        boundary_noise: a.noise,
        evidence_strength: a.strength,
        voxel_size: a.voxel_size,
        ..SynthParams::default()
    };
    let seq = generate_synthetic_sequence(a.seed, &params)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_sequence(&seq, &a.out)?;
    println!(
        "wrote {} scans, {} ground-truth cells to {}",
        seq.scans.len(),
        seq.ground_truth.len(),
        a.out.display()
    );
    Ok(())
}

fn build(a: BuildArgs) -> Result<()> {
    let config = RunConfig::load(&a.config)?;
    let (manifest, scans) = load_sequence(&a.scans)?;
    if manifest.num_classes != config.num_classes {
        anyhow::bail!(
            "{} declares {} classes but {} expects {}",
            a.scans.display(),
            manifest.num_classes,
            a.config.display(),
            config.num_classes
        );
    }
    let threads = a.threads.map(|n| n as usize);
    let (table, summary) = build_map(&config, &scans, a.method.into(), threads)?;
    export_map(&table, ExportFormat::Csv, &a.out)?;
    let stats = serde_json::to_string_pretty(&summary)?;
    let sidecar = stats_path(&a.out);
    fs::write(&sidecar, format!("{stats}\n"))
        .with_context(|| format!("writing {}", sidecar.display()))?;
    let s = summary.stats;
    println!(
        "{}: {} scans, {} cells | points kept {} dropped {} invalid {} | cells created {} updated {} | contributions {} | {:.3} s",
        summary.method,
        summary.scans,
        summary.cells,
        s.points_kept,
        s.points_dropped,
        s.points_invalid,
        s.cells_created,
        s.cells_updated,
        s.contributions,
        summary.seconds
    );
    Ok(())
}

/// Build runtime recorded next to the map, if present.
fn recorded_runtime(map: &Path) -> Result<Option<f64>> {
    let path = stats_path(map);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let summary: BuildSummary =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Some(summary.seconds))
}

fn eval(a: EvalArgs) -> Result<()> {
    let config = RunConfig::load(&a.config)?;
    let gt = load_ground_truth(&a.gt, config.num_classes)?;
    let primary = import_map(&a.map)?;
    let primary_rt = recorded_runtime(&a.map)?;
    let baseline = match &a.baseline {
        Some(p) => Some((import_map(p)?, recorded_runtime(p)?)),
        None => None,
    };
    let report = compare_report(
        (&primary, primary_rt),
        baseline.as_ref().map(|(t, r)| (t, *r)),
        &gt,
        &config,
    )?;
    report.save(&a.out)?;

    let stem = a.out.with_extension("");
    let mut tables = vec![&primary];
    tables.extend(baseline.as_ref().map(|(t, _)| t));
    for (i, table) in tables.into_iter().enumerate() {
        let dump = PathBuf::from(format!(
            "{}.{}.{}.cells.csv",
            stem.display(),
            i,
            table.method
        ));
        write_cell_dump(table, &gt, &dump)?;
    }

    for m in [&report.evidential, &report.baseline].into_iter().flatten() {
        println!(
            "{}: accuracy {:.4} mIoU {:.4} ECE {:.4} AUSE {:.4} coverage {:.3}",
            m.method, m.accuracy, m.miou, m.ece, m.ause, m.coverage
        );
    }
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let mut table = import_map(&a.map)?;
    if let Some(m) = a.measure {
        table = table.with_measure(m.into())?;
    }
    let format = match a.format {
        FormatArg::Csv => ExportFormat::Csv,
        FormatArg::Ply => ExportFormat::Ply,
    };
    export_map(&table, format, &a.out)?;
    println!("wrote {} cells to {}", table.len(), a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Build(a) => build(a),
        Command::Eval(a) => eval(a),
        Command::Export(a) => export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
