use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use casfit::consensus::{fit_with_observer, FitObserver, NoObserver, RNG_ALGORITHM};
use casfit::distance::{evaluate_metric, MetricKind};
use casfit::experiment::{run_grid, summary_path, ExperimentGrid};
use casfit::synth::{make_instance, save_points, DatasetKind, DatasetSpec, Instance, InstanceDocument};
use casfit::{load_points, FitConfig, ModelDocument, PointLabel};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "casfit", version, about = "Robust ellipsoid fitting with CAS-scored sample consensus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an ellipsoid to a point file.
    Fit(FitArgs),
    /// Write synthetic instances with truth sidecars.
    Synth(SynthArgs),
    /// Run an experiment grid and write the CSV report.
    Bench(BenchArgs),
    /// Per-point distances to a model.
    Distances(DistancesArgs),
}

#[derive(clap::Args)]
struct FitArgs {
    /// Point file: three comma- or whitespace-separated columns.
    points: PathBuf,
    /// Distance threshold in scene units.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Control ratio of combined metrics.
    #[arg(long)]
    lambda: Option<f64>,
    /// Score and weight metric, e.g. `cas`, `cas:0.3`, `sampson`, `axial+orthogonal`.
    #[arg(long, default_value = "cas")]
    metric: MetricKind,
    /// Disable local optimization.
    #[arg(long)]
    no_lo: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iterations: u64,
    /// Print a progress line to stderr.
    #[arg(long)]
    progress: bool,
    /// Write the model JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Gaussian,
    Outlier,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Noise std as a fraction of the mean semiaxis.
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    /// Outlier fraction (outlier kind only).
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 500)]
    points: usize,
    #[arg(long, default_value_t = 10)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Grid JSON file.
    grid: PathBuf,
    /// Report CSV; aggregates go to `<stem>.summary.csv` beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DistancesArgs {
    points: PathBuf,
    /// Model JSON as written by `fit`.
    model: PathBuf,
    /// Control ratio of the CAS column.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    #[serde(flatten)]
    model: ModelDocument,
    score: f64,
    inlier_ratio: f64,
    iterations: u64,
    lo_invocations: u64,
    epsilon: f64,
    score_metric: MetricKind,
    weight_metric: MetricKind,
    seed: u64,
    rng: &'a str,
    labels: Vec<PointLabel>,
}

struct ProgressLine;

impl FitObserver for ProgressLine {
    fn progress(&mut self, iteration: u64, best_score: f64, required: u64) {
        if iteration.is_multiple_of(100) {
            eprint!("\riteration {iteration}/{required}  best score {best_score:.3}");
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Distances(a) => cmd_distances(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), AnyError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<(), AnyError> {
    let points = load_points(&a.points)?;
    let metric = match a.lambda {
        Some(l) => a.metric.with_lambda(l),
        None => a.metric,
    };
    let cfg = FitConfig {
        epsilon: a.epsilon,
        confidence: a.confidence,
        score_metric: metric,
        weight_metric: metric,
        local_optimization: !a.no_lo,
        max_iterations: a.max_iterations,
        min_iterations: FitConfig::default().min_iterations.min(a.max_iterations),
        seed: a.seed,
        ..FitConfig::default()
    };
    let report = if a.progress {
        let r = fit_with_observer(&points, &cfg, &mut ProgressLine);
        eprintln!();
        r
    } else {
        fit_with_observer(&points, &cfg, &mut NoObserver)
    }?;
    eprintln!(
        "fit: {} points, {} iterations, {} local optimizations, {:.1} ms",
        points.len(),
        report.iterations_used,
        report.lo_invocations,
        report.wall_time.as_secs_f64() * 1e3
    );
    let out = FitOutput {
        model: report.best_model.to_document(),
        score: report.best_score,
        inlier_ratio: report.inlier_ratio,
        iterations: report.iterations_used,
        lo_invocations: report.lo_invocations,
        epsilon: cfg.epsilon,
        score_metric: cfg.score_metric,
        weight_metric: cfg.weight_metric,
        seed: cfg.seed,
        rng: RNG_ALGORITHM,
        labels: report.labels,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    write_output(a.out.as_deref(), &text)
}

fn cmd_synth(a: SynthArgs) -> Result<(), AnyError> {
    let spec = DatasetSpec {
        kind: match a.kind {
            KindArg::Gaussian => DatasetKind::Gaussian,
            KindArg::Outlier => DatasetKind::Outlier,
        },
        point_count: a.points,
        sigma_rel: a.sigma,
        outlier_fraction: match a.kind {
            KindArg::Gaussian => 0.0,
            KindArg::Outlier => a.fraction,
        },
        instance_count: a.instances,
        seed: a.seed,
    };
    spec.validate()?;
    fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    for i in 0..spec.instance_count {
        let inst = make_instance(&spec, &mut spec.instance_rng(i as u64))?;
        let stem = format!("instance_{i:03}");
        save_points(&inst.points, a.out.join(format!("{stem}.csv")))?;
        let doc = InstanceDocument {
            spec: spec.clone(),
            index: i as u64,
            noise_sigma: Instance::noise_sigma(&inst.truth, spec.sigma_rel),
            truth: inst.truth.to_document(),
            labels: inst.ground_labels,
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write_output(Some(&a.out.join(format!("{stem}.json"))), &text)?;
    }
    eprintln!("synth: wrote {} instances to {}", spec.instance_count, a.out.display());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), AnyError> {
    let grid = ExperimentGrid::load(&a.grid)?;
    let out = a
        .out
        .or_else(|| grid.output.clone())
        .ok_or("no output path: pass --out or set `output` in the grid")?;
    let report = run_grid(&grid)?;
    report.save(&out)?;
    let mut stdout = io::stdout().lock();
    for s in &report.summary {
        writeln!(
            stdout,
            "{} {} sigma={} outliers={}: param {} | semiaxis {} | center {} | iterations {}",
            s.variant,
            s.dataset_kind,
            s.noise_level,
            s.outlier_fraction,
            s.stat("param_err"),
            s.stat("semiaxis_err"),
            s.stat("center_err"),
            s.stat("iterations"),
        )?;
    }
    eprintln!(
        "bench: {} rows to {}, aggregates to {}",
        report.rows.len(),
        out.display(),
        summary_path(&out).display()
    );
    Ok(())
}

fn cmd_distances(a: DistancesArgs) -> Result<(), AnyError> {
    let points = load_points(&a.points)?;
    let model = ModelDocument::load(&a.model)?
        .to_model()
        .map_err(|e| format!("{}: {e}", a.model.display()))?;
    let kinds = [
        MetricKind::Algebraic,
        MetricKind::Sampson,
        MetricKind::Orthogonal,
        MetricKind::Axial,
        MetricKind::Cas(a.lambda),
    ];
    for k in &kinds {
        k.validate()?;
    }
    let mut buf = Vec::new();
    {
        let mut w = BufWriter::new(&mut buf);
        writeln!(w, "point_index,metric,value")?;
        for (i, p) in points.iter().enumerate() {
            for k in kinds {
                match evaluate_metric(k, p, &model) {
                    Ok(d) => writeln!(w, "{i},{k},{d:?}")?,
                    Err(_) => writeln!(w, "{i},{k},inf")?,
                }
            }
        }
        w.flush()?;
    }
    write_output(a.out.as_deref(), std::str::from_utf8(&buf)?)
}
