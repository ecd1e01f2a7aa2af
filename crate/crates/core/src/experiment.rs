//! Error and residual metrics, and the experiment grid runner.
//!
//! A grid crosses method variants with dataset specs. Every
//! `(variant, spec, instance, run)` cell synthesizes (or reuses) the instance,
//! fits it and records one CSV row. Rows are written in that canonical order
//! regardless of which thread finished first; only `wall_ms` depends on the
//! machine.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{fit, FitConfig};
use crate::distance::{axial_distance, orthogonal_distance, sampson_distance};
use crate::error::{FitError, IoError};
use crate::quadric::{validate_ellipsoid, EllipsoidModel};
use crate::synth::{make_instance, DatasetKind, DatasetSpec, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriple {
    pub parameter_error: f64,
    pub semiaxis_error: f64,
    pub center_error: f64,
}

/// Mean distances of a point set to a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualTriple {
    pub sampson_residual: f64,
    pub orthogonal_residual: f64,
    pub axial_residual: f64,
}

/// L1 errors between an estimate and the truth: coefficient vectors (both
/// unit-norm and sign-normalized), descending semiaxes, and centers.
pub fn fitting_errors(estimated: &EllipsoidModel, truth: &EllipsoidModel) -> ErrorTriple {
    let parameter_error = (estimated.coeffs().as_vector() - truth.coeffs().as_vector()).lp_norm(1);
    let (re, rt) = (
        estimated.geometry().sorted_semiaxes(),
        truth.geometry().sorted_semiaxes(),
    );
    let semiaxis_error = re.iter().zip(&rt).map(|(a, b)| (a - b).abs()).sum();
    let center_error = (estimated.center() - truth.center()).lp_norm(1);
    ErrorTriple {
        parameter_error,
        semiaxis_error,
        center_error,
    }
}

/// Mean Sampson, orthogonal and axial distance over `points`. A point where
/// Sampson or orthogonal distance is undefined contributes `+∞`.
pub fn residuals(m: &EllipsoidModel, points: &[Point3<f64>]) -> ResidualTriple {
    let count = points.len() as f64;
    let (mut s, mut o, mut a) = (0.0, 0.0, 0.0);
    for p in points {
        s += sampson_distance(p, m).unwrap_or(f64::INFINITY);
        o += orthogonal_distance(p, m).unwrap_or(f64::INFINITY);
        a += axial_distance(p, m);
    }
    ResidualTriple {
        sampson_residual: s / count,
        orthogonal_residual: o / count,
        axial_residual: a / count,
    }
}

/// How a variant picks its threshold for an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    /// Fixed threshold in scene units.
    Absolute(f64),
    /// Multiple of the planted noise standard deviation of the instance.
    NoiseMultiple(f64),
}

impl EpsilonRule {
    pub fn resolve(&self, spec: &DatasetSpec, truth: &EllipsoidModel) -> f64 {
        match *self {
            EpsilonRule::Absolute(e) => e,
            EpsilonRule::NoiseMultiple(k) => k * Instance::noise_sigma(truth, spec.sigma_rel),
        }
    }

    fn validate(&self, specs: &[DatasetSpec]) -> Result<(), FitError> {
        match *self {
            EpsilonRule::Absolute(e) if !(e > 0.0 && e.is_finite()) => {
                Err(FitError::InvalidConfig(format!("epsilon {e} must be positive")))
            }
            EpsilonRule::NoiseMultiple(k) if !(k > 0.0 && k.is_finite()) => {
                Err(FitError::InvalidConfig(format!("noise multiple {k} must be positive")))
            }
            EpsilonRule::NoiseMultiple(_) if specs.iter().any(|s| s.sigma_rel <= 0.0) => Err(
                FitError::InvalidConfig("noise_multiple needs sigma_rel > 0 in every dataset".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// A named method. `config.epsilon` and `config.seed` are replaced per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    pub epsilon: EpsilonRule,
    #[serde(default)]
    pub config: FitConfig,
}

impl Variant {
    pub fn new(name: impl Into<String>, epsilon: EpsilonRule, config: FitConfig) -> Self {
        Self {
            name: name.into(),
            epsilon,
            config,
        }
    }
}

fn default_runs() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub variants: Vec<Variant>,
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_runs")]
    pub runs_per_instance: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.variants.is_empty() || self.datasets.is_empty() {
            return Err(FitError::InvalidConfig(
                "grid needs at least one variant and one dataset".into(),
            ));
        }
        if self.runs_per_instance == 0 {
            return Err(FitError::InvalidConfig("runs_per_instance must be positive".into()));
        }
        for v in &self.variants {
            v.epsilon.validate(&self.datasets)?;
            FitConfig { epsilon: 1.0, ..v.config.clone() }.validate()?;
        }
        for d in &self.datasets {
            d.validate()?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Generator of instance `instance` of dataset `spec_index`.
    pub fn instance_rng(&self, spec_index: usize, instance: usize) -> ChaCha8Rng {
        let spec = &self.datasets[spec_index];
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[self.seed, spec_index as u64, spec.seed]));
        rng.set_stream(instance as u64);
        rng
    }

    /// Fit seed of a run. Shared by all variants so they see the same draws.
    pub fn run_seed(&self, spec_index: usize, instance: usize, run: usize) -> u64 {
        mix(&[self.seed, spec_index as u64, instance as u64, run as u64])
    }
}

/// SplitMix64 finalizer folded over the inputs.
fn mix(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &x in parts {
        h = h.wrapping_add(x).wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// One grid cell. Error and residual fields are NaN when the fit failed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub variant: String,
    pub dataset_kind: DatasetKind,
    pub noise_level: f64,
    pub outlier_fraction: f64,
    pub instance: usize,
    pub run: usize,
    pub errors: ErrorTriple,
    pub residuals: ResidualTriple,
    pub iterations: u64,
    pub lo_count: u64,
    pub is_ellipsoid: bool,
    pub wall_ms: f64,
}

pub const CSV_HEADER: &str = "variant,dataset_kind,noise_level,outlier_fraction,instance,run,\
param_err,semiaxis_err,center_err,sampson_res,orth_res,axial_res,iterations,lo_count,is_ellipsoid,wall_ms";

/// Metric columns summarized per (variant, dataset).
pub const SUMMARY_METRICS: [&str; 10] = [
    "param_err",
    "semiaxis_err",
    "center_err",
    "sampson_res",
    "orth_res",
    "axial_res",
    "iterations",
    "lo_count",
    "is_ellipsoid",
    "wall_ms",
];

impl RunRecord {
    pub fn metric_values(&self) -> [f64; 10] {
        [
            self.errors.parameter_error,
            self.errors.semiaxis_error,
            self.errors.center_error,
            self.residuals.sampson_residual,
            self.residuals.orthogonal_residual,
            self.residuals.axial_residual,
            self.iterations as f64,
            self.lo_count as f64,
            if self.is_ellipsoid { 1.0 } else { 0.0 },
            self.wall_ms,
        ]
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.variant,
            self.dataset_kind,
            self.noise_level,
            self.outlier_fraction,
            self.instance,
            self.run,
            self.errors.parameter_error,
            self.errors.semiaxis_error,
            self.errors.center_error,
            self.residuals.sampson_residual,
            self.residuals.orthogonal_residual,
            self.residuals.axial_residual,
            self.iterations,
            self.lo_count,
            self.is_ellipsoid as u8,
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation of the finite values.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: String,
    pub dataset_kind: DatasetKind,
    pub noise_level: f64,
    pub outlier_fraction: f64,
    pub runs: usize,
    /// Runs that returned a model.
    pub fits: usize,
    /// In [`SUMMARY_METRICS`] order.
    pub stats: [MeanStd; 10],
}

impl SummaryRow {
    pub fn stat(&self, metric: &str) -> MeanStd {
        let i = SUMMARY_METRICS
            .iter()
            .position(|m| *m == metric)
            .unwrap_or_else(|| panic!("unknown metric {metric}"));
        self.stats[i]
    }

    pub fn csv_header() -> String {
        let mut h = String::from("variant,dataset_kind,noise_level,outlier_fraction,runs,fits");
        for m in SUMMARY_METRICS {
            h.push_str(&format!(",{m}_mean,{m}_std"));
        }
        h
    }

    pub fn csv_line(&self) -> String {
        let mut line = format!(
            "{},{},{},{},{},{}",
            self.variant, self.dataset_kind, self.noise_level, self.outlier_fraction, self.runs, self.fits
        );
        for s in &self.stats {
            line.push_str(&format!(",{},{}", s.mean, s.std));
        }
        line
    }
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub rows: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl GridReport {
    pub fn summary_for(&self, variant: &str, spec: &DatasetSpec) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| {
            s.variant == variant
                && s.dataset_kind == spec.kind
                && s.noise_level == spec.sigma_rel
                && s.outlier_fraction == outlier_column(spec)
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{}", r.csv_line())?;
        }
        w.flush()
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", SummaryRow::csv_header())?;
        for s in &self.summary {
            writeln!(w, "{}", s.csv_line())?;
        }
        w.flush()
    }

    /// Writes the data rows to `path` and the aggregates to
    /// [`summary_path`]`(path)`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| IoError::io(path, e))?;
        self.write_csv(BufWriter::new(file)).map_err(|e| IoError::io(path, e))?;
        let spath = summary_path(path);
        let file = File::create(&spath).map_err(|e| IoError::io(&spath, e))?;
        self.write_summary_csv(BufWriter::new(file))
            .map_err(|e| IoError::io(&spath, e))
    }
}

/// `report.csv` → `report.summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.summary.csv"))
}

fn outlier_column(spec: &DatasetSpec) -> f64 {
    match spec.kind {
        DatasetKind::Gaussian => 0.0,
        DatasetKind::Outlier => spec.outlier_fraction,
    }
}

/// Synthesizes every instance of the grid, in `[spec][instance]` order.
pub fn grid_instances(grid: &ExperimentGrid) -> Result<Vec<Vec<Instance>>, FitError> {
    grid.datasets
        .par_iter()
        .enumerate()
        .map(|(si, spec)| {
            (0..spec.instance_count)
                .into_par_iter()
                .map(|i| make_instance(spec, &mut grid.instance_rng(si, i)))
                .collect()
        })
        .collect()
}

pub fn run_grid(grid: &ExperimentGrid) -> Result<GridReport, FitError> {
    grid.validate()?;
    let instances = grid_instances(grid)?;

    let mut cells = Vec::new();
    for vi in 0..grid.variants.len() {
        for (si, spec) in grid.datasets.iter().enumerate() {
            for inst in 0..spec.instance_count {
                for run in 0..grid.runs_per_instance {
                    cells.push((vi, si, inst, run));
                }
            }
        }
    }

    let rows: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(vi, si, inst, run)| {
            let variant = &grid.variants[vi];
            let spec = &grid.datasets[si];
            let instance = &instances[si][inst];
            let cfg = FitConfig {
                epsilon: variant.epsilon.resolve(spec, &instance.truth),
                seed: grid.run_seed(si, inst, run),
                ..variant.config.clone()
            };
            let nan_errors = ErrorTriple {
                parameter_error: f64::NAN,
                semiaxis_error: f64::NAN,
                center_error: f64::NAN,
            };
            let nan_res = ResidualTriple {
                sampson_residual: f64::NAN,
                orthogonal_residual: f64::NAN,
                axial_residual: f64::NAN,
            };
            let (errors, res, iterations, lo_count, is_ellipsoid, wall_ms) =
                match fit(&instance.points, &cfg) {
                    Ok(rep) => (
                        fitting_errors(&rep.best_model, &instance.truth),
                        residuals(&rep.best_model, &instance.points),
                        rep.iterations_used,
                        rep.lo_invocations,
                        validate_ellipsoid(rep.best_model.coeffs()),
                        rep.wall_time.as_secs_f64() * 1e3,
                    ),
                    Err(FitError::NoModelFound { iterations }) => {
                        (nan_errors, nan_res, iterations, 0, false, 0.0)
                    }
                    Err(_) => (nan_errors, nan_res, 0, 0, false, 0.0),
                };
            RunRecord {
                variant: variant.name.clone(),
                dataset_kind: spec.kind,
                noise_level: spec.sigma_rel,
                outlier_fraction: outlier_column(spec),
                instance: inst,
                run,
                errors,
                residuals: res,
                iterations,
                lo_count,
                is_ellipsoid,
                wall_ms,
            }
        })
        .collect();

    let group = grid.datasets.iter().map(|s| s.instance_count).sum::<usize>() * grid.runs_per_instance;
    let mut summary = Vec::new();
    let mut offset = 0;
    for variant in &grid.variants {
        for spec in &grid.datasets {
            let n = spec.instance_count * grid.runs_per_instance;
            let chunk = &rows[offset..offset + n];
            offset += n;
            let stats = std::array::from_fn(|k| MeanStd::of(chunk.iter().map(|r| r.metric_values()[k])));
            summary.push(SummaryRow {
                variant: variant.name.clone(),
                dataset_kind: spec.kind,
                noise_level: spec.sigma_rel,
                outlier_fraction: outlier_column(spec),
                runs: n,
                fits: chunk.iter().filter(|r| r.errors.parameter_error.is_finite()).count(),
                stats,
            });
        }
    }
    debug_assert_eq!(offset, group * grid.variants.len());
    Ok(GridReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadric::{EllipsoidGeometry, ModelDocument};
    use crate::synth::random_ellipsoid;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn sphere(c: [f64; 3], r: f64) -> EllipsoidModel {
        let g = EllipsoidGeometry::axis_aligned(Point3::from(c), Vector3::repeat(r)).unwrap();
        EllipsoidModel::from_geometry(&g).unwrap()
    }

    #[test]
    fn identical_models_have_zero_error() {
        let m = random_ellipsoid(&mut ChaCha8Rng::seed_from_u64(1));
        let e = fitting_errors(&m, &m);
        assert_eq!((e.parameter_error, e.semiaxis_error, e.center_error), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sphere_radius_error() {
        let e = fitting_errors(&sphere([0.0; 3], 2.1), &sphere([0.0; 3], 2.0));
        assert_relative_eq!(e.semiaxis_error, 0.3, epsilon = 1e-9);
        assert!(e.center_error < 1e-12);
    }

    #[test]
    fn errors_recompute_from_documents() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (a, b) = (random_ellipsoid(&mut rng), random_ellipsoid(&mut rng));
            let e = fitting_errors(&a, &b);
            let da: ModelDocument = serde_json::from_str(&serde_json::to_string(&a.to_document()).unwrap()).unwrap();
            let db: ModelDocument = serde_json::from_str(&serde_json::to_string(&b.to_document()).unwrap()).unwrap();
            let l1 = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>();
            assert_relative_eq!(e.parameter_error, l1(&da.q, &db.q), max_relative = 1e-9);
            assert_relative_eq!(e.semiaxis_error, l1(&da.semiaxes, &db.semiaxes), max_relative = 1e-9);
            assert_relative_eq!(e.center_error, l1(&da.center, &db.center), max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn residual_closed_forms() {
        let r = residuals(&sphere([0.0; 3], 1.0), &[Point3::new(2.0, 0.0, 0.0)]);
        assert_relative_eq!(r.sampson_residual, 0.75, epsilon = 1e-12);
        assert_relative_eq!(r.orthogonal_residual, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.axial_residual, 3f64.sqrt() / 3.0, epsilon = 1e-12);

        let spec = DatasetSpec::gaussian(0.0);
        let inst = make_instance(&spec, &mut spec.instance_rng(0)).unwrap();
        let r = residuals(&inst.truth, &inst.points);
        assert!(r.sampson_residual < 1e-9 && r.orthogonal_residual < 1e-9 && r.axial_residual < 1e-9);
    }

    #[test]
    fn residuals_match_two_pass_recomputation() {
        let spec = DatasetSpec::outlier(0.2);
        let inst = make_instance(&spec, &mut spec.instance_rng(2)).unwrap();
        let r = residuals(&inst.truth, &inst.points);
        let n = inst.points.len() as f64;
        let ds: Vec<f64> = inst.points.iter().map(|p| sampson_distance(p, &inst.truth).unwrap()).collect();
        let dor: Vec<f64> = inst.points.iter().map(|p| orthogonal_distance(p, &inst.truth).unwrap()).collect();
        let da: Vec<f64> = inst.points.iter().map(|p| axial_distance(p, &inst.truth)).collect();
        assert_relative_eq!(r.sampson_residual, ds.iter().sum::<f64>() / n, max_relative = 1e-9);
        assert_relative_eq!(r.orthogonal_residual, dor.iter().sum::<f64>() / n, max_relative = 1e-9);
        assert_relative_eq!(r.axial_residual, da.iter().sum::<f64>() / n, max_relative = 1e-9);
    }

    fn tiny_grid() -> ExperimentGrid {
        ExperimentGrid {
            variants: vec![Variant::new("proposed", EpsilonRule::NoiseMultiple(1.5), FitConfig::default())],
            datasets: vec![DatasetSpec { instance_count: 1, point_count: 200, ..DatasetSpec::outlier(0.2) }],
            runs_per_instance: 1,
            seed: 3,
            output: None,
        }
    }

    #[test]
    fn single_cell_grid() {
        let rep = run_grid(&tiny_grid()).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.summary.len(), 1);
        assert_eq!(rep.summary[0].stat("param_err").mean, rep.rows[0].errors.parameter_error);
        assert_eq!(rep.summary[0].stat("param_err").std, 0.0);
    }

    fn strip_timing(csv: &str) -> Vec<String> {
        csv.lines()
            .map(|l| l.rsplit_once(',').map(|(a, _)| a.to_string()).unwrap_or_default())
            .collect()
    }

    #[test]
    fn grid_is_deterministic_and_recomputable() {
        let mut grid = tiny_grid();
        grid.variants.push(Variant::new("ransac", EpsilonRule::Absolute(0.5), FitConfig::ransac(0.5)));
        grid.datasets[0].instance_count = 2;
        grid.runs_per_instance = 2;
        let a = run_grid(&grid).unwrap();
        let b = run_grid(&grid).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        let (ca, cb) = (String::from_utf8(ca).unwrap(), String::from_utf8(cb).unwrap());
        assert_eq!(strip_timing(&ca), strip_timing(&cb));
        assert_eq!(ca.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(ca.lines().count(), 1 + 8);

        for s in &a.summary {
            let vals: Vec<f64> = a
                .rows
                .iter()
                .filter(|r| r.variant == s.variant)
                .map(|r| r.errors.semiaxis_error)
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            assert_relative_eq!(s.stat("semiaxis_err").mean, m, max_relative = 1e-9);
        }
    }

    #[test]
    fn grid_json_schema() {
        let text = r#"{
            "variants": [
                {"name": "proposed", "epsilon": {"noise_multiple": 1.5}},
                {"name": "ransac", "epsilon": {"absolute": 0.3},
                 "config": {"score_metric": "sampson", "local_optimization": false}}
            ],
            "datasets": [{"kind": "outlier", "outlier_fraction": 0.1, "instance_count": 2}],
            "runs_per_instance": 20,
            "seed": 1
        }"#;
        let g: ExperimentGrid = serde_json::from_str(text).unwrap();
        g.validate().unwrap();
        assert_eq!(g.variants[1].config.score_metric, crate::distance::MetricKind::Sampson);
        assert_eq!(g.datasets[0].point_count, 500);
        let back: ExperimentGrid = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        let bad = ExperimentGrid { variants: vec![], ..g };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn summary_path_sits_beside_report() {
        assert_eq!(summary_path(Path::new("out/r.csv")), Path::new("out/r.summary.csv"));
    }
}
