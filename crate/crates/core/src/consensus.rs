//! Sample consensus with Gaussian-kernel scoring and weighted local
//! optimization.
//!
//! Each iteration draws a minimal sample, fits it by linear least squares,
//! rejects non-ellipsoids, and scores the model as `Σ exp(-d²/2ε²)` over all
//! points. Whenever the best sampled model improves, a local optimization
//! refits all points by weighted least squares with weights from the
//! configured metric under a threshold annealed from 1.5ε down to 0.5ε. The
//! adaptive stopping rule uses the inlier ratio of the global best model.

use std::time::{Duration, Instant};

use nalgebra::Point3;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::{evaluate_metric, MetricKind};
use crate::error::FitError;
use crate::lsq::{lls_fit, metric_weights, wls_fit, MIN_POINTS};
use crate::quadric::EllipsoidModel;

/// Name of the generator behind every random draw of the engine.
pub const RNG_ALGORITHM: &str = "ChaCha8, stream = iteration index";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Distance threshold in scene units.
    pub epsilon: f64,
    /// Confidence `μ` of the stopping rule.
    pub confidence: f64,
    /// Minimal sample size `n`.
    pub sample_size: usize,
    pub score_metric: MetricKind,
    pub weight_metric: MetricKind,
    pub local_optimization: bool,
    pub lo_steps: usize,
    pub max_iterations: u64,
    pub min_iterations: u64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            confidence: 0.95,
            sample_size: MIN_POINTS,
            score_metric: MetricKind::cas(),
            weight_metric: MetricKind::cas(),
            local_optimization: true,
            lo_steps: 5,
            max_iterations: 100_000,
            min_iterations: 50,
            seed: 0,
        }
    }
}

impl FitConfig {
    /// CAS scoring with CAS-weighted local optimization.
    pub fn proposed(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    /// Plain RANSAC with Sampson scoring.
    pub fn ransac(epsilon: f64) -> Self {
        Self {
            epsilon,
            score_metric: MetricKind::Sampson,
            weight_metric: MetricKind::Sampson,
            local_optimization: false,
            ..Self::default()
        }
    }

    /// CAS scoring without local optimization.
    pub fn cas_ransac(epsilon: f64) -> Self {
        Self {
            epsilon,
            local_optimization: false,
            ..Self::default()
        }
    }

    /// Sampson scoring with algebraic-weight local optimization.
    pub fn flo(epsilon: f64) -> Self {
        Self {
            epsilon,
            score_metric: MetricKind::Sampson,
            weight_metric: MetricKind::Algebraic,
            local_optimization: true,
            ..Self::default()
        }
    }

    /// Sets the control ratio of both metrics (single metrics are unaffected).
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.score_metric = self.score_metric.with_lambda(lambda);
        self.weight_metric = self.weight_metric.with_lambda(lambda);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |msg: String| Err(FitError::InvalidConfig(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence must lie in (0, 1), got {}", self.confidence));
        }
        if self.sample_size < MIN_POINTS {
            return bad(format!("sample size must be at least {MIN_POINTS}"));
        }
        if self.lo_steps == 0 {
            return bad("lo_steps must be at least 1".into());
        }
        if self.min_iterations == 0 || self.min_iterations > self.max_iterations {
            return bad("need 1 <= min_iterations <= max_iterations".into());
        }
        self.score_metric.validate()?;
        self.weight_metric.validate()
    }

    /// Stopping-rule iteration count at inlier ratio `v`, clamped to
    /// `[min_iterations, max_iterations]`.
    pub fn required_iterations(&self, v: f64) -> u64 {
        required_iterations(v, self.confidence, self.sample_size)
            .clamp(self.min_iterations, self.max_iterations)
    }

    /// Local-optimization threshold for step `k` (0-based).
    pub fn lo_threshold(&self, k: usize) -> f64 {
        if self.lo_steps == 1 {
            self.epsilon
        } else {
            1.5 * self.epsilon - k as f64 * self.epsilon / (self.lo_steps - 1) as f64
        }
    }
}

/// `⌈log(1-μ) / log(1-vⁿ)⌉`, unclamped. Returns `u64::MAX` when `vⁿ`
/// vanishes and 1 when `v = 1`.
pub fn required_iterations(v: f64, confidence: f64, sample_size: usize) -> u64 {
    if !(v > 0.0) {
        return u64::MAX;
    }
    if v >= 1.0 {
        return 1;
    }
    let vn = v.powi(sample_size as i32);
    let denom = (-vn).ln_1p();
    if vn == 0.0 || denom == 0.0 {
        return u64::MAX;
    }
    let j = ((1.0 - confidence).ln() / denom).ceil();
    if j >= u64::MAX as f64 {
        u64::MAX
    } else {
        (j as u64).max(1)
    }
}

/// `exp(-d² / 2ε²)`.
#[inline]
pub fn point_energy(d: f64, epsilon: f64) -> f64 {
    if !d.is_finite() {
        return 0.0;
    }
    (-d * d / (2.0 * epsilon * epsilon)).exp()
}

/// Sum of point energies; points where the metric is undefined contribute 0.
pub fn model_score(
    m: &EllipsoidModel,
    points: &[Point3<f64>],
    epsilon: f64,
    metric: MetricKind,
) -> f64 {
    points
        .iter()
        .map(|p| match evaluate_metric(metric, p, m) {
            Ok(d) => point_energy(d, epsilon),
            Err(_) => 0.0,
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointLabel {
    Inlier,
    Outlier,
}

impl PointLabel {
    pub fn is_inlier(self) -> bool {
        self == PointLabel::Inlier
    }
}

/// Inlier iff the distance is strictly below `ε`.
pub fn classify(
    points: &[Point3<f64>],
    m: &EllipsoidModel,
    epsilon: f64,
    metric: MetricKind,
) -> Vec<PointLabel> {
    points
        .iter()
        .map(|p| match evaluate_metric(metric, p, m) {
            Ok(d) if d < epsilon => PointLabel::Inlier,
            _ => PointLabel::Outlier,
        })
        .collect()
}

pub fn inlier_ratio(labels: &[PointLabel]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|l| l.is_inlier()).count() as f64 / labels.len() as f64
}

/// `n` distinct indices drawn uniformly from `0..count`, sorted.
pub fn sample_minimal<R: Rng + ?Sized>(
    count: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>, FitError> {
    if count < n {
        return Err(FitError::TooFewPoints { needed: n, got: count });
    }
    let mut idx = index::sample(rng, count, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Generator for iteration `iteration` of a run seeded with `seed`.
pub fn iteration_rng(seed: u64, iteration: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    rng
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum LoOutcome {
    Improved { model: EllipsoidModel, score: f64 },
    NoImprovement,
}

/// Iteratively reweighted refit of `m` on all points.
///
/// Step `k` weights every point against the current model with threshold
/// `lo_threshold(k)`, refits, and carries the new model forward if it is a
/// valid ellipsoid. Returns the best-scoring step output if it beats `m`.
pub fn local_optimize(
    m: &EllipsoidModel,
    points: &[Point3<f64>],
    cfg: &FitConfig,
) -> LoOutcome {
    let mut best_score = model_score(m, points, cfg.epsilon, cfg.score_metric);
    let mut best = None;
    let mut current = *m;
    for k in 0..cfg.lo_steps {
        let weights = metric_weights(points, &current, cfg.lo_threshold(k), cfg.weight_metric);
        let Ok(q) = wls_fit(points, &weights) else {
            continue;
        };
        let Ok(model) = EllipsoidModel::new(q) else {
            continue;
        };
        current = model;
        let score = model_score(&model, points, cfg.epsilon, cfg.score_metric);
        if score > best_score {
            best_score = score;
            best = Some(model);
        }
    }
    match best {
        Some(model) => LoOutcome::Improved {
            model,
            score: best_score,
        },
        None => LoOutcome::NoImprovement,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    Sample,
    LocalOptimization,
}

/// Hooks into a running fit.
pub trait FitObserver {
    /// Every validated candidate, with the score it was ranked by.
    fn candidate(&mut self, _iteration: u64, _score: f64, _source: CandidateSource) {}
    /// After every iteration.
    fn progress(&mut self, _iteration: u64, _best_score: f64, _required: u64) {}
}

pub struct NoObserver;

impl FitObserver for NoObserver {}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub best_model: EllipsoidModel,
    pub best_score: f64,
    pub labels: Vec<PointLabel>,
    pub inlier_ratio: f64,
    pub iterations_used: u64,
    pub lo_invocations: u64,
    pub wall_time: Duration,
    pub rng_algorithm: &'static str,
}

pub fn fit(points: &[Point3<f64>], cfg: &FitConfig) -> Result<FitReport, FitError> {
    fit_with_observer(points, cfg, &mut NoObserver)
}

pub fn fit_with_observer(
    points: &[Point3<f64>],
    cfg: &FitConfig,
    observer: &mut dyn FitObserver,
) -> Result<FitReport, FitError> {
    let start = Instant::now();
    cfg.validate()?;
    if points.len() < cfg.sample_size {
        return Err(FitError::TooFewPoints {
            needed: cfg.sample_size,
            got: points.len(),
        });
    }

    let mut best: Option<(EllipsoidModel, f64)> = None;
    let mut sample_best = f64::NEG_INFINITY;
    let mut required = cfg.required_iterations(0.0);
    let mut iterations = 0u64;
    let mut lo_invocations = 0u64;
    let mut sample = Vec::with_capacity(cfg.sample_size);

    while iterations < required {
        let mut rng = iteration_rng(cfg.seed, iterations);
        iterations += 1;
        let idx = sample_minimal(points.len(), cfg.sample_size, &mut rng)?;
        sample.clear();
        sample.extend(idx.iter().map(|&i| points[i]));

        let Ok(q) = lls_fit(&sample) else {
            observer.progress(iterations, best_score(&best), required);
            continue;
        };
        let Ok(model) = EllipsoidModel::new(q) else {
            observer.progress(iterations, best_score(&best), required);
            continue;
        };
        let score = model_score(&model, points, cfg.epsilon, cfg.score_metric);
        observer.candidate(iterations, score, CandidateSource::Sample);

        if score > sample_best {
            sample_best = score;
            if score > best_score(&best) {
                best = Some((model, score));
            }
            if cfg.local_optimization {
                lo_invocations += 1;
                if let LoOutcome::Improved { model, score } = local_optimize(&model, points, cfg) {
                    observer.candidate(iterations, score, CandidateSource::LocalOptimization);
                    if score > best_score(&best) {
                        best = Some((model, score));
                    }
                }
            }
            let (m, _) = best.as_ref().expect("best set above");
            let v = inlier_ratio(&classify(points, m, cfg.epsilon, cfg.score_metric));
            required = cfg.required_iterations(v);
        }
        observer.progress(iterations, best_score(&best), required);
    }

    let (best_model, best_score) = best.ok_or(FitError::NoModelFound { iterations })?;
    let labels = classify(points, &best_model, cfg.epsilon, cfg.score_metric);
    Ok(FitReport {
        best_model,
        best_score,
        inlier_ratio: inlier_ratio(&labels),
        labels,
        iterations_used: iterations,
        lo_invocations,
        wall_time: start.elapsed(),
        rng_algorithm: RNG_ALGORITHM,
    })
}

fn best_score(best: &Option<(EllipsoidModel, f64)>) -> f64 {
    best.as_ref().map_or(f64::NEG_INFINITY, |(_, s)| *s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadric::{EllipsoidGeometry, QuadricCoefficients};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn unit_sphere() -> EllipsoidModel {
        EllipsoidModel::new(
            QuadricCoefficients::from_slice(&[1., 1., 1., 0., 0., 0., 0., 0., 0., 1.]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn energy_closed_forms() {
        assert_eq!(point_energy(0.0, 0.3), 1.0);
        assert_relative_eq!(point_energy(0.3, 0.3), 0.60653, epsilon = 1e-5);
        assert_relative_eq!(point_energy(0.6, 0.3), 0.13534, epsilon = 1e-5);
        assert_eq!(point_energy(f64::INFINITY, 0.3), 0.0);
    }

    #[test]
    fn iteration_formula() {
        assert_eq!(required_iterations(0.5, 0.95, 9), 1533);
        // log(0.05) / log(1 - 0.9^9) = 6.1128 (computed independently)
        assert_eq!(required_iterations(0.9, 0.95, 9), 7);
        assert_eq!(required_iterations(1.0, 0.95, 9), 1);
        assert_eq!(required_iterations(0.0, 0.95, 9), u64::MAX);
        assert_eq!(required_iterations(1e-40, 0.95, 9), u64::MAX);

        let cfg = FitConfig::default();
        assert_eq!(cfg.required_iterations(1.0), cfg.min_iterations);
        assert_eq!(cfg.required_iterations(0.0), cfg.max_iterations);
        assert_eq!(cfg.required_iterations(0.5), 1533);
    }

    #[test]
    fn lo_schedule_is_linear() {
        let cfg = FitConfig::proposed(2.0);
        let t: Vec<f64> = (0..5).map(|k| cfg.lo_threshold(k)).collect();
        for (a, b) in t.iter().zip([3.0, 2.5, 2.0, 1.5, 1.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        let single = FitConfig {
            lo_steps: 1,
            ..cfg
        };
        assert_eq!(single.lo_threshold(0), 2.0);
    }

    #[test]
    fn score_and_classification_basics() {
        let m = unit_sphere();
        let on: Vec<_> = (0..10)
            .map(|i| {
                let t = i as f64;
                Point3::from(Vector3::new(t.cos(), t.sin(), 0.0))
            })
            .collect();
        assert_relative_eq!(model_score(&m, &on, 0.1, MetricKind::cas()), 10.0, epsilon = 1e-9);

        // Sampson distance 0.75 at (2,0,0)
        let p = [Point3::new(2.0, 0.0, 0.0)];
        assert_relative_eq!(model_score(&m, &p, 0.75, MetricKind::Sampson), 0.60653, epsilon = 1e-5);
        assert_eq!(classify(&p, &m, 0.75, MetricKind::Sampson), vec![PointLabel::Outlier]);
        assert_eq!(classify(&p, &m, 0.7500001, MetricKind::Sampson), vec![PointLabel::Inlier]);
        assert!(classify(&on, &m, 0.01, MetricKind::cas()).iter().all(|l| l.is_inlier()));
    }

    #[test]
    fn minimal_sampling() {
        let mut rng = iteration_rng(1, 0);
        assert_eq!(sample_minimal(9, 9, &mut rng).unwrap(), (0..9).collect::<Vec<_>>());
        assert!(matches!(sample_minimal(5, 9, &mut rng), Err(FitError::TooFewPoints { .. })));
        let a = sample_minimal(500, 9, &mut iteration_rng(7, 3)).unwrap();
        let b = sample_minimal(500, 9, &mut iteration_rng(7, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_minimal(500, 9, &mut iteration_rng(7, 4)).unwrap());
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 9);
    }

    #[test]
    fn sampling_is_uniform() {
        let n = 500;
        let draws = 100_000u64;
        let mut counts = vec![0u64; n];
        for i in 0..draws {
            for j in sample_minimal(n, 9, &mut iteration_rng(99, i)).unwrap() {
                counts[j] += 1;
            }
        }
        let p = 9.0 / n as f64;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in &counts {
            assert!((*c as f64 - mean).abs() < 5.0 * sd, "count {c} vs {mean}");
        }
        let chi2: f64 = counts.iter().map(|c| (*c as f64 - mean).powi(2) / mean).sum();
        // 499 degrees of freedom; 5 sd above the mean is ~657
        assert!(chi2 < 657.0, "chi2 {chi2}");
    }

    #[test]
    fn lo_without_support_reports_no_improvement() {
        let far = EllipsoidModel::from_geometry(
            &EllipsoidGeometry::axis_aligned(Point3::new(100., 100., 100.), Vector3::new(1., 1., 1.))
                .unwrap(),
        )
        .unwrap();
        let pts: Vec<_> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.37;
                Point3::new(t.cos(), t.sin() * (i as f64 * 0.11).cos(), (i as f64 * 0.11).sin())
            })
            .collect();
        assert_eq!(local_optimize(&far, &pts, &FitConfig::proposed(0.05)), LoOutcome::NoImprovement);
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::proposed(0.1).validate().is_ok());
        assert!(FitConfig::proposed(0.0).validate().is_err());
        assert!(FitConfig { confidence: 1.0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { sample_size: 8, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { lo_steps: 0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { min_iterations: 10, max_iterations: 5, ..FitConfig::default() }
            .validate()
            .is_err());
        assert!(FitConfig::proposed(0.1).with_lambda(2.0).validate().is_err());
        assert_eq!(FitConfig::proposed(0.1).with_lambda(0.25).score_metric, MetricKind::Cas(0.25));
        assert_eq!(FitConfig::ransac(0.1).with_lambda(0.25).score_metric, MetricKind::Sampson);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![Point3::origin(); 5];
        assert!(matches!(fit(&pts, &FitConfig::proposed(0.1)), Err(FitError::TooFewPoints { .. })));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: FitConfig = serde_json::from_str(r#"{"epsilon": 0.2, "score_metric": "sampson"}"#).unwrap();
        assert_eq!(cfg.epsilon, 0.2);
        assert_eq!(cfg.score_metric, MetricKind::Sampson);
        assert_eq!(cfg.weight_metric, MetricKind::Cas(0.5));
        assert_eq!(cfg.lo_steps, 5);
    }
}
