//! Linear and weighted least-squares ellipsoid fits.
//!
//! Both fits minimize `Σ (wᵢ dᵢᵀq)²` subject to `‖q‖ = 1`; the minimizer is
//! the eigenvector of `DDᵀ = Σ wᵢ² dᵢdᵢᵀ` for its smallest eigenvalue. Points
//! are centered and scaled to RMS radius √3 before the normal matrix is built
//! and the solution is mapped back to scene coordinates.

use nalgebra::{Matrix4, Point3, SMatrix, SymmetricEigen, Vector3};

use crate::distance::{evaluate_metric, MetricKind};
use crate::error::FitError;
use crate::quadric::{design_row, EllipsoidModel, QuadricCoefficients, Vector10};

/// Points needed to pin down a quadric up to scale.
pub const MIN_POINTS: usize = 9;
/// Weights at or below this do not count as support.
pub const SUPPORT_WEIGHT: f64 = 1e-6;
/// Relative gap between the two smallest eigenvalues below which the
/// solution is not unique.
pub const RANK_GAP: f64 = 1e-10;

type Matrix10 = SMatrix<f64, 10, 10>;

/// Per-point weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, FitError> {
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(FitError::InvalidConfig(format!("weight {w} outside [0, 1]")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> usize {
        self.0.iter().filter(|w| **w > SUPPORT_WEIGHT).count()
    }
}

pub fn lls_fit(points: &[Point3<f64>]) -> Result<QuadricCoefficients, FitError> {
    if points.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints {
            needed: MIN_POINTS,
            got: points.len(),
        });
    }
    fit_weighted(points, None)
}

/// Weights multiply the residuals, so they enter the normal matrix squared.
pub fn wls_fit(
    points: &[Point3<f64>],
    weights: &WeightVector,
) -> Result<QuadricCoefficients, FitError> {
    if weights.len() != points.len() {
        return Err(FitError::LengthMismatch {
            what: "weights",
            expected: points.len(),
            got: weights.len(),
        });
    }
    let support = weights.support();
    if support < MIN_POINTS {
        return Err(FitError::InsufficientSupport {
            support,
            needed: MIN_POINTS,
        });
    }
    fit_weighted(points, Some(weights.as_slice()))
}

fn fit_weighted(
    points: &[Point3<f64>],
    weights: Option<&[f64]>,
) -> Result<QuadricCoefficients, FitError> {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);

    // conditioning: weighted centroid and RMS radius
    let mut total = 0.0;
    let mut centroid = Vector3::zeros();
    for (i, p) in points.iter().enumerate() {
        total += w(i);
        centroid += p.coords * w(i);
    }
    centroid /= total;
    let mut spread = 0.0;
    for (i, p) in points.iter().enumerate() {
        spread += w(i) * (p.coords - centroid).norm_squared();
    }
    let rms = (spread / total).sqrt();
    let scale = if rms > 0.0 && rms.is_finite() {
        rms / 3f64.sqrt()
    } else {
        1.0
    };

    let mut normal = Matrix10::zeros();
    for (i, p) in points.iter().enumerate() {
        let wi = w(i);
        if wi == 0.0 {
            continue;
        }
        let d = design_row(&Point3::from((p.coords - centroid) / scale));
        normal.syger(wi * wi, &d, &d, 1.0);
    }

    let q = smallest_eigenvector(normal)?;

    // back to scene coordinates: Q = Hᵀ Q' H with H: p ↦ (p - c) / k
    let qc = QuadricCoefficients::new(q)?;
    let mut h = Matrix4::identity() / scale;
    h[(3, 3)] = 1.0;
    h.fixed_view_mut::<3, 1>(0, 3)
        .copy_from(&(-centroid / scale));
    let scene = h.transpose() * qc.matrix().0 * h;
    QuadricCoefficients::from_matrix(&scene)
}

fn smallest_eigenvector(normal: Matrix10) -> Result<Vector10, FitError> {
    let eig = SymmetricEigen::new(normal);
    let mut order: Vec<usize> = (0..10).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[9]].abs();
    let gap = eig.eigenvalues[order[1]] - eig.eigenvalues[order[0]];
    if !(gap > RANK_GAP * largest) {
        return Err(FitError::RankDeficient {
            gap: if largest > 0.0 { gap / largest } else { 0.0 },
        });
    }
    Ok(eig.eigenvectors.column(order[0]).into_owned())
}

/// Gaussian-kernel weights `exp(-d² / 2ε²)` under an arbitrary metric. Points
/// where the metric is undefined get weight 0.
pub fn metric_weights(
    points: &[Point3<f64>],
    m: &EllipsoidModel,
    epsilon: f64,
    kind: MetricKind,
) -> WeightVector {
    let denom = 2.0 * epsilon * epsilon;
    WeightVector(
        points
            .iter()
            .map(|p| match evaluate_metric(kind, p, m) {
                Ok(d) => (-d * d / denom).exp(),
                Err(_) => 0.0,
            })
            .collect(),
    )
}

pub fn cas_weights(
    points: &[Point3<f64>],
    m: &EllipsoidModel,
    epsilon_lo: f64,
    lambda: f64,
) -> WeightVector {
    metric_weights(points, m, epsilon_lo, MetricKind::Cas(lambda))
}
