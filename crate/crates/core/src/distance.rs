//! Point-to-ellipsoid distances: algebraic, Sampson, orthogonal, axial and
//! their convex combinations.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::FitError;
use crate::quadric::EllipsoidModel;

/// Gradient norms below this (relative to the unit-norm `q`) count as zero.
pub const GRADIENT_FLOOR: f64 = 1e-12;
/// Iteration cap for the foot-point root finder.
pub const FOOT_POINT_MAX_ITER: usize = 200;
/// Residual the foot-point root finder must reach.
pub const FOOT_POINT_TOL: f64 = 1e-12;

/// Default control ratio of the axial/Sampson combination.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Scale of the family member through a point: 1 on the model, 0 at its center.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ScalingFactor(pub f64);

impl ScalingFactor {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Which distance to evaluate. Combinations hold their control ratio `λ` and
/// evaluate `λ·first + (1-λ)·second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MetricKind {
    Algebraic,
    Sampson,
    Orthogonal,
    Axial,
    /// `λ·axial + (1-λ)·sampson`
    Cas(f64),
    /// `λ·sampson + (1-λ)·orthogonal`
    SampsonPlusOrthogonal(f64),
    /// `λ·axial + (1-λ)·orthogonal`
    AxialPlusOrthogonal(f64),
}

impl MetricKind {
    pub fn cas() -> Self {
        MetricKind::Cas(DEFAULT_LAMBDA)
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            MetricKind::Cas(l)
            | MetricKind::SampsonPlusOrthogonal(l)
            | MetricKind::AxialPlusOrthogonal(l) => Some(l),
            _ => None,
        }
    }

    /// Same kind with a different control ratio; single metrics are unchanged.
    pub fn with_lambda(self, lambda: f64) -> Self {
        match self {
            MetricKind::Cas(_) => MetricKind::Cas(lambda),
            MetricKind::SampsonPlusOrthogonal(_) => MetricKind::SampsonPlusOrthogonal(lambda),
            MetricKind::AxialPlusOrthogonal(_) => MetricKind::AxialPlusOrthogonal(lambda),
            other => other,
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        match self.lambda() {
            Some(l) if !(0.0..=1.0).contains(&l) => Err(FitError::InvalidConfig(format!(
                "control ratio {l} outside [0, 1]"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Algebraic => f.write_str("algebraic"),
            MetricKind::Sampson => f.write_str("sampson"),
            MetricKind::Orthogonal => f.write_str("orthogonal"),
            MetricKind::Axial => f.write_str("axial"),
            MetricKind::Cas(l) => write!(f, "cas:{l}"),
            MetricKind::SampsonPlusOrthogonal(l) => write!(f, "sampson+orthogonal:{l}"),
            MetricKind::AxialPlusOrthogonal(l) => write!(f, "axial+orthogonal:{l}"),
        }
    }
}

impl FromStr for MetricKind {
    type Err = String;

    /// Accepts `algebraic`, `sampson`, `orthogonal`, `axial`, and the
    /// combinations `cas`, `sampson+orthogonal`, `axial+orthogonal` with an
    /// optional `:λ` suffix (default 0.5).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let (name, lambda) = match s.split_once(':') {
            Some((name, l)) => {
                let l: f64 = l
                    .parse()
                    .map_err(|_| format!("invalid control ratio `{l}`"))?;
                (name.to_string(), Some(l))
            }
            None => (s.clone(), None),
        };
        let l = lambda.unwrap_or(DEFAULT_LAMBDA);
        let kind = match name.as_str() {
            "algebraic" | "sampson" | "orthogonal" | "axial" if lambda.is_some() => {
                return Err(format!("metric `{name}` takes no control ratio"))
            }
            "algebraic" => MetricKind::Algebraic,
            "sampson" => MetricKind::Sampson,
            "orthogonal" => MetricKind::Orthogonal,
            "axial" => MetricKind::Axial,
            "cas" => MetricKind::Cas(l),
            "sampson+orthogonal" => MetricKind::SampsonPlusOrthogonal(l),
            "axial+orthogonal" => MetricKind::AxialPlusOrthogonal(l),
            other => return Err(format!("unknown metric `{other}`")),
        };
        kind.validate().map_err(|e| e.to_string())?;
        Ok(kind)
    }
}

impl TryFrom<String> for MetricKind {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MetricKind> for String {
    fn from(k: MetricKind) -> String {
        k.to_string()
    }
}

/// `|d(p)ᵀq|` for the unit-norm coefficients.
pub fn algebraic_distance(p: &Point3<f64>, m: &EllipsoidModel) -> f64 {
    m.coeffs().evaluate(p).abs()
}

pub fn scaling_factor(p: &Point3<f64>, m: &EllipsoidModel) -> ScalingFactor {
    let g = m.geometry();
    let u = g.to_local(p);
    ScalingFactor(u.component_div(&g.semiaxes).norm())
}

/// `|s - 1| · ‖r₁‖₂ / 3`.
pub fn axial_distance(p: &Point3<f64>, m: &EllipsoidModel) -> f64 {
    let s = scaling_factor(p, m).value();
    (s - 1.0).abs() * m.semiaxes().norm() / 3.0
}

/// `|F| / ‖∇F‖` with the spatial gradient.
pub fn sampson_distance(p: &Point3<f64>, m: &EllipsoidModel) -> Result<f64, FitError> {
    let q = m.coeffs();
    let grad = q.gradient(p).norm();
    if !(grad >= GRADIENT_FLOOR * q.as_vector().norm()) {
        return Err(FitError::GradientVanishes);
    }
    Ok(q.evaluate(p).abs() / grad)
}

pub fn cas_distance(p: &Point3<f64>, m: &EllipsoidModel, lambda: f64) -> Result<f64, FitError> {
    let axial = axial_distance(p, m);
    let sampson = sampson_distance(p, m)?;
    Ok(lambda * axial + (1.0 - lambda) * sampson)
}

/// Euclidean distance to the nearest surface point.
pub fn orthogonal_distance(p: &Point3<f64>, m: &EllipsoidModel) -> Result<f64, FitError> {
    foot_point(p, m).map(|(_, d)| d)
}

/// Nearest surface point and its distance.
pub fn foot_point(p: &Point3<f64>, m: &EllipsoidModel) -> Result<(Point3<f64>, f64), FitError> {
    let g = m.geometry();
    let u = g.to_local(p);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| g.semiaxes[b].total_cmp(&g.semiaxes[a]));
    let e: Vec<f64> = order.iter().map(|&i| g.semiaxes[i]).collect();
    let y: Vec<f64> = order.iter().map(|&i| u[i].abs()).collect();
    let mut x = vec![0.0; 3];
    let d = closest_on_hyperellipsoid(&e, &y, &mut x)?;
    let mut foot = Vector3::zeros();
    for (k, &i) in order.iter().enumerate() {
        foot[i] = x[k].copysign(u[i]);
    }
    Ok((g.to_scene(&foot), d))
}

/// Closest point to `y` (all components ≥ 0) on the axis-aligned
/// hyperellipsoid with semiaxes `e` sorted descending. Writes the foot point
/// into `x` and returns the distance.
fn closest_on_hyperellipsoid(e: &[f64], y: &[f64], x: &mut [f64]) -> Result<f64, FitError> {
    let n = e.len();
    if n == 1 {
        x[0] = e[0];
        return Ok((y[0] - e[0]).abs());
    }
    let last = n - 1;
    if y[last] > 0.0 {
        // components with y_i = 0 keep x_i = 0
        let active: Vec<usize> = (0..n).filter(|&i| y[i] > 0.0).collect();
        let ea: Vec<f64> = active.iter().map(|&i| e[i]).collect();
        let ya: Vec<f64> = active.iter().map(|&i| y[i]).collect();
        let mut xa = vec![0.0; active.len()];
        solve_positive(&ea, &ya, &mut xa)?;
        x.iter_mut().for_each(|v| *v = 0.0);
        for (k, &i) in active.iter().enumerate() {
            x[i] = xa[k];
        }
        let d2: f64 = (0..n).map(|i| (x[i] - y[i]).powi(2)).sum();
        return Ok(d2.sqrt());
    }

    // y on the plane of the smallest axis: the foot may leave the plane when
    // the point is deep inside
    let emin2 = e[last] * e[last];
    let mut discr = 1.0;
    let mut inside_evolute = true;
    for i in 0..last {
        let denom = e[i] * e[i] - emin2;
        let numer = e[i] * y[i];
        if !(numer < denom) {
            inside_evolute = false;
            break;
        }
        let ratio = numer / denom;
        x[i] = e[i] * ratio;
        discr -= ratio * ratio;
    }
    if inside_evolute && discr > 0.0 {
        x[last] = e[last] * discr.sqrt();
        let d2: f64 = (0..last).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>() + x[last].powi(2);
        return Ok(d2.sqrt());
    }
    x[last] = 0.0;
    closest_on_hyperellipsoid(&e[..last], &y[..last], &mut x[..last])
}

/// Foot point when every component of `y` is positive. Solves
/// `Σ (rᵢ zᵢ / (s + rᵢ))² = 1` for its unique root with `rᵢ = (eᵢ/e_min)²`,
/// `zᵢ = yᵢ/eᵢ` by Newton steps safeguarded with bisection.
fn solve_positive(e: &[f64], y: &[f64], x: &mut [f64]) -> Result<(), FitError> {
    let n = e.len();
    let emin = e[n - 1];
    let z: Vec<f64> = (0..n).map(|i| y[i] / e[i]).collect();
    let g: f64 = z.iter().map(|v| v * v).sum::<f64>() - 1.0;
    if g == 0.0 {
        x.copy_from_slice(y);
        return Ok(());
    }
    let r: Vec<f64> = (0..n).map(|i| (e[i] / emin).powi(2)).collect();
    let residual = |s: f64| -> (f64, f64) {
        let mut f = -1.0;
        let mut df = 0.0;
        for i in 0..n {
            let t = r[i] * z[i] / (s + r[i]);
            f += t * t;
            df -= 2.0 * t * t / (s + r[i]);
        }
        (f, df)
    };

    let mut lo = z[n - 1] - 1.0;
    let mut hi = if g < 0.0 {
        0.0
    } else {
        (0..n).map(|i| (r[i] * z[i]).powi(2)).sum::<f64>().sqrt() - 1.0
    };
    let mut s = 0.5 * (lo + hi);
    let mut converged = false;
    let mut last_residual = f64::INFINITY;
    for _ in 0..FOOT_POINT_MAX_ITER {
        let (f, df) = residual(s);
        last_residual = f.abs();
        if f.abs() < FOOT_POINT_TOL * 1e-2 || f == 0.0 {
            converged = true;
            break;
        }
        // residual is decreasing in s
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            converged = true;
            break;
        }
        let newton = s - f / df;
        s = if df < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            mid
        };
    }
    if !converged && last_residual >= FOOT_POINT_TOL {
        return Err(FitError::ConvergenceFailure {
            residual: last_residual,
        });
    }
    for i in 0..n {
        x[i] = r[i] * y[i] / (s + r[i]);
    }
    Ok(())
}

pub fn evaluate_metric(kind: MetricKind, p: &Point3<f64>, m: &EllipsoidModel) -> Result<f64, FitError> {
    match kind {
        MetricKind::Algebraic => Ok(algebraic_distance(p, m)),
        MetricKind::Sampson => sampson_distance(p, m),
        MetricKind::Orthogonal => orthogonal_distance(p, m),
        MetricKind::Axial => Ok(axial_distance(p, m)),
        MetricKind::Cas(l) => cas_distance(p, m, l),
        MetricKind::SampsonPlusOrthogonal(l) => {
            Ok(l * sampson_distance(p, m)? + (1.0 - l) * orthogonal_distance(p, m)?)
        }
        MetricKind::AxialPlusOrthogonal(l) => {
            Ok(l * axial_distance(p, m) + (1.0 - l) * orthogonal_distance(p, m)?)
        }
    }
}
