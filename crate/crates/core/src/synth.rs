//! Synthetic ellipsoid datasets and point-cloud files.
//!
//! True ellipsoids have semiaxes uniform in `[1, 5]`, a uniformly random
//! rotation and a center uniform in `[-10, 10]³`. Surface points come from
//! uniform sphere directions mapped through the semiaxes. Noise is isotropic
//! Gaussian with standard deviation `sigma_rel × mean semiaxis`; outliers are
//! uniform in the truth's bounding box inflated by a factor of two.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{Point3, UnitQuaternion, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::consensus::PointLabel;
use crate::error::{FitError, IoError};
use crate::quadric::{EllipsoidGeometry, EllipsoidModel, ModelDocument};

pub const SEMIAXIS_RANGE: (f64, f64) = (1.0, 5.0);
pub const CENTER_RANGE: (f64, f64) = (-10.0, 10.0);
/// Half-extent multiplier of the outlier box.
pub const OUTLIER_BOX_INFLATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    #[serde(alias = "gaussian-noise", alias = "gaussian_noise")]
    Gaussian,
    Outlier,
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DatasetKind::Gaussian => "gaussian",
            DatasetKind::Outlier => "outlier",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub point_count: usize,
    /// Noise standard deviation as a fraction of the mean semiaxis.
    pub sigma_rel: f64,
    /// Ignored for [`DatasetKind::Gaussian`].
    pub outlier_fraction: f64,
    pub instance_count: usize,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Gaussian,
            point_count: 500,
            sigma_rel: 0.25,
            outlier_fraction: 0.0,
            instance_count: 10,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn gaussian(sigma_rel: f64) -> Self {
        Self {
            sigma_rel,
            ..Self::default()
        }
    }

    pub fn outlier(fraction: f64) -> Self {
        Self {
            kind: DatasetKind::Outlier,
            sigma_rel: 0.25,
            outlier_fraction: fraction,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if self.point_count < 9 {
            return Err(FitError::InvalidConfig("point_count must be at least 9".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(FitError::InvalidConfig(format!(
                "outlier_fraction {} outside [0, 1]",
                self.outlier_fraction
            )));
        }
        if !(self.sigma_rel >= 0.0 && self.sigma_rel.is_finite()) {
            return Err(FitError::InvalidConfig("sigma_rel must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn outlier_count(&self) -> usize {
        match self.kind {
            DatasetKind::Gaussian => 0,
            DatasetKind::Outlier => (self.outlier_fraction * self.point_count as f64).round() as usize,
        }
    }

    /// Generator for instance `index` of this spec.
    pub fn instance_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub truth: EllipsoidModel,
    pub points: Vec<Point3<f64>>,
    pub ground_labels: Vec<PointLabel>,
}

impl Instance {
    /// Standard deviation of the noise added to the surface points.
    pub fn noise_sigma(truth: &EllipsoidModel, sigma_rel: f64) -> f64 {
        sigma_rel * truth.semiaxes().mean()
    }
}

/// Uniform rotation from three uniform variates (Shoemake).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ))
}

pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

pub fn random_ellipsoid<R: Rng + ?Sized>(rng: &mut R) -> EllipsoidModel {
    let semiaxes = Vector3::from_fn(|_, _| rng.random_range(SEMIAXIS_RANGE.0..SEMIAXIS_RANGE.1));
    let rotation = random_rotation(rng).to_rotation_matrix().into_inner();
    let center = Point3::from(Vector3::from_fn(|_, _| {
        rng.random_range(CENTER_RANGE.0..CENTER_RANGE.1)
    }));
    let g = EllipsoidGeometry::from_center(rotation, center, semiaxes)
        .expect("generated geometry is valid");
    EllipsoidModel::from_geometry(&g).expect("generated geometry is an ellipsoid")
}

pub fn sample_surface<R: Rng + ?Sized>(
    m: &EllipsoidModel,
    count: usize,
    rng: &mut R,
) -> Vec<Point3<f64>> {
    let g = m.geometry();
    (0..count)
        .map(|_| g.to_scene(&random_direction(rng).component_mul(&g.semiaxes)))
        .collect()
}

/// Axis-aligned bounding box of the ellipsoid as (center, half extents).
pub fn bounding_box(m: &EllipsoidModel) -> (Point3<f64>, Vector3<f64>) {
    let g = m.geometry();
    let rt = g.rotation.transpose();
    let half = Vector3::from_fn(|j, _| {
        (0..3)
            .map(|i| (rt[(j, i)] * g.semiaxes[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    });
    (m.center(), half)
}

pub fn make_instance<R: Rng + ?Sized>(spec: &DatasetSpec, rng: &mut R) -> Result<Instance, FitError> {
    spec.validate()?;
    let truth = random_ellipsoid(rng);
    let outliers = spec.outlier_count();
    let inliers = spec.point_count - outliers;
    let sigma = Instance::noise_sigma(&truth, spec.sigma_rel);
    let noise = Normal::new(0.0, sigma).map_err(|e| FitError::InvalidConfig(e.to_string()))?;

    let g = truth.geometry();
    let mut points = Vec::with_capacity(spec.point_count);
    for _ in 0..inliers {
        let on = g.to_scene(&random_direction(rng).component_mul(&g.semiaxes));
        let offset = Vector3::from_fn(|_, _| noise.sample(rng));
        points.push(on + offset);
    }
    let (center, half) = bounding_box(&truth);
    let half = half * OUTLIER_BOX_INFLATION;
    for _ in 0..outliers {
        let offset = Vector3::from_fn(|j, _| rng.random_range(-half[j]..=half[j]));
        points.push(center + offset);
    }
    let mut ground_labels = vec![PointLabel::Inlier; inliers];
    ground_labels.resize(spec.point_count, PointLabel::Outlier);
    Ok(Instance {
        truth,
        points,
        ground_labels,
    })
}

/// Uniform random subset without replacement, in input order.
pub fn downsample<R: Rng + ?Sized>(
    points: &[Point3<f64>],
    target_count: usize,
    rng: &mut R,
) -> Vec<Point3<f64>> {
    if points.len() <= target_count {
        return points.to_vec();
    }
    let mut idx = index::sample(rng, points.len(), target_count).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| points[i]).collect()
}

/// Reads one point per line: three comma- and/or whitespace-separated
/// numbers. Blank lines and `#` comments are skipped, as is a leading
/// `x,y,z` header.
pub fn read_points<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Point3<f64>>, IoError> {
    let mut points = Vec::new();
    let mut seen_data = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IoError::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if !seen_data && is_header(&fields) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        let parse_err = |message: String| IoError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 coordinates, found {}", fields.len())));
        }
        let mut xyz = [0.0; 3];
        for (slot, field) in xyz.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .map_err(|_| parse_err(format!("invalid number `{field}`")))?;
            if !slot.is_finite() {
                return Err(parse_err(format!("non-finite coordinate `{field}`")));
            }
        }
        points.push(Point3::from(xyz));
    }
    Ok(points)
}

fn is_header(fields: &[&str]) -> bool {
    fields.len() == 3
        && fields
            .iter()
            .zip(["x", "y", "z"])
            .all(|(f, h)| f.eq_ignore_ascii_case(h))
}

pub fn load_points(path: impl AsRef<Path>) -> Result<Vec<Point3<f64>>, IoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    read_points(BufReader::new(file), path)
}

pub fn write_points<W: Write>(mut w: W, points: &[Point3<f64>]) -> std::io::Result<()> {
    writeln!(w, "x,y,z")?;
    for p in points {
        // shortest round-trip representation
        writeln!(w, "{:?},{:?},{:?}", p.x, p.y, p.z)?;
    }
    w.flush()
}

pub fn save_points(points: &[Point3<f64>], path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    write_points(BufWriter::new(file), points).map_err(|e| IoError::io(path, e))
}

/// Sidecar written next to a synthesized point file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub spec: DatasetSpec,
    pub index: u64,
    pub noise_sigma: f64,
    pub truth: ModelDocument,
    pub labels: Vec<PointLabel>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{axial_distance, scaling_factor};
    use crate::quadric::validate_ellipsoid;

    #[test]
    fn random_ellipsoids_are_valid_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut max_ratio: f64 = 1.0;
        for _ in 0..10_000 {
            let m = random_ellipsoid(&mut rng);
            assert!(validate_ellipsoid(m.coeffs()));
            let r = m.semiaxes();
            max_ratio = max_ratio.max(r.max() / r.min());
        }
        assert!(max_ratio >= 4.0, "max ratio {max_ratio}");
        let a = random_ellipsoid(&mut ChaCha8Rng::seed_from_u64(5));
        let b = random_ellipsoid(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn surface_samples_lie_on_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_ellipsoid(&mut rng);
        assert!(sample_surface(&m, 0, &mut rng).is_empty());
        for p in sample_surface(&m, 1000, &mut rng) {
            assert!(m.coeffs().evaluate(&p).abs() < 1e-10);
            assert!((scaling_factor(&p, &m).value() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_samples_are_centered() {
        let g = EllipsoidGeometry::axis_aligned(Point3::origin(), Vector3::new(1., 1., 1.)).unwrap();
        let m = EllipsoidModel::from_geometry(&g).unwrap();
        let n = 20_000;
        let pts = sample_surface(&m, n, &mut ChaCha8Rng::seed_from_u64(3));
        let mean = pts.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n as f64;
        // each coordinate of a uniform unit-sphere point has variance 1/3
        let se = (1.0 / 3.0 / n as f64).sqrt();
        assert!(mean.abs().max() < 5.0 * se, "{mean}");
    }

    #[test]
    fn noise_free_instance_sits_on_surface() {
        let spec = DatasetSpec::gaussian(0.0);
        let inst = make_instance(&spec, &mut spec.instance_rng(0)).unwrap();
        assert_eq!(inst.points.len(), 500);
        for p in &inst.points {
            assert!(axial_distance(p, &inst.truth) < 1e-9);
        }
    }

    #[test]
    fn outlier_counts_are_exact() {
        let spec = DatasetSpec::outlier(0.4);
        let inst = make_instance(&spec, &mut spec.instance_rng(0)).unwrap();
        let planted = inst.ground_labels.iter().filter(|l| !l.is_inlier()).count();
        assert_eq!(planted, 200);
        for f in [0.1, 0.25, 0.33] {
            let spec = DatasetSpec { point_count: 123, ..DatasetSpec::outlier(f) };
            let inst = make_instance(&spec, &mut spec.instance_rng(1)).unwrap();
            let planted = inst.ground_labels.iter().filter(|l| !l.is_inlier()).count();
            assert_eq!(planted, (f * 123.0_f64).round() as usize);
        }
    }

    #[test]
    fn zero_fraction_matches_gaussian() {
        let a = DatasetSpec { outlier_fraction: 0.0, ..DatasetSpec::outlier(0.0) };
        let b = DatasetSpec::gaussian(0.25);
        let ia = make_instance(&a, &mut a.instance_rng(4)).unwrap();
        let ib = make_instance(&b, &mut b.instance_rng(4)).unwrap();
        assert_eq!(ia.points, ib.points);
        assert_eq!(ia.ground_labels, ib.ground_labels);
    }

    #[test]
    fn planted_noise_statistics() {
        let g = EllipsoidGeometry::axis_aligned(Point3::origin(), Vector3::new(2., 3., 4.)).unwrap();
        let truth = EllipsoidModel::from_geometry(&g).unwrap();
        let sigma = Instance::noise_sigma(&truth, 0.2);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut sum = Vector3::zeros();
        let mut sq = Vector3::zeros();
        for _ in 0..n {
            let d = Vector3::from_fn(|_, _| noise.sample(&mut rng));
            sum += d;
            sq += d.component_mul(&d);
        }
        let mean = sum / n as f64;
        let std = (sq / n as f64 - mean.component_mul(&mean)).map(f64::sqrt);
        for s in std.iter() {
            assert!((s - sigma).abs() < 0.02 * sigma);
        }
        // and through make_instance
        let spec = DatasetSpec { point_count: 20_000, ..DatasetSpec::gaussian(0.1) };
        let inst = make_instance(&spec, &mut spec.instance_rng(0)).unwrap();
        let sigma = Instance::noise_sigma(&inst.truth, 0.1);
        let mut rng = spec.instance_rng(0);
        let _ = random_ellipsoid(&mut rng);
        let g = inst.truth.geometry();
        let mut sq = 0.0;
        for p in &inst.points {
            let on = g.to_scene(&random_direction(&mut rng).component_mul(&g.semiaxes));
            let _ = (0..3).map(|_| Normal::new(0.0, sigma).unwrap().sample(&mut rng)).count();
            sq += (p - on).norm_squared();
        }
        let emp = (sq / (3.0 * inst.points.len() as f64)).sqrt();
        assert!((emp - sigma).abs() < 0.02 * sigma, "{emp} vs {sigma}");
    }

    #[test]
    fn instances_are_deterministic() {
        let spec = DatasetSpec { seed: 17, ..DatasetSpec::outlier(0.2) };
        let a = make_instance(&spec, &mut spec.instance_rng(3)).unwrap();
        let b = make_instance(&spec, &mut spec.instance_rng(3)).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn downsampling() {
        let pts: Vec<_> = (0..1000).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let sub = downsample(&pts, 500, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(sub.len(), 500);
        assert!(sub.iter().all(|p| pts.contains(p)));
        assert_eq!(sub, downsample(&pts, 500, &mut ChaCha8Rng::seed_from_u64(1)));
        assert_eq!(downsample(&pts[..10], 500, &mut ChaCha8Rng::seed_from_u64(1)), pts[..10].to_vec());
    }

    #[test]
    fn point_file_formats() {
        let text = "# scan\nx,y,z\n1,2,3\n4 5 6\n\n 7.5 ,\t8,9 # trailing\n";
        let pts = read_points(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(
            pts,
            vec![Point3::new(1., 2., 3.), Point3::new(4., 5., 6.), Point3::new(7.5, 8., 9.)]
        );
        let err = read_points("1,2,3\n4,five,6\n".as_bytes(), Path::new("mem")).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
        let err = read_points("1,2\n".as_bytes(), Path::new("mem")).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 1, .. }));
        assert!(matches!(load_points("/nonexistent/points.csv"), Err(IoError::Io { .. })));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        let spec = DatasetSpec::outlier(0.3);
        let inst = make_instance(&spec, &mut spec.instance_rng(0)).unwrap();
        save_points(&inst.points, &path).unwrap();
        assert_eq!(load_points(&path).unwrap(), inst.points);
    }
}
