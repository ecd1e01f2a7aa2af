//! Ellipsoids as algebraic coefficient vectors and as center/rotation/semiaxes.
//!
//! The coefficient vector `q` pairs with the design row
//! `d(x) = [x1², x2², x3², 2x1x2, 2x1x3, 2x2x3, 2x1, 2x2, 2x3, -1]`, so the
//! surface is the zero set of `F(x) = d(x)ᵀq`. The induced symmetric 4×4 matrix
//! carries `-q10` in its corner so that `x_hᵀ Q x_h = d(x)ᵀ q` holds identically.

use nalgebra::{Isometry3, Matrix3, Matrix4, Point3, SVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::FitError;

pub type Vector10 = SVector<f64, 10>;

/// Eigenvalues smaller than this fraction of the largest are treated as zero.
pub const DEGENERATE_EIGEN_RATIO: f64 = 1e-12;

/// The quadric design row for a point.
#[inline]
pub fn design_row(p: &Point3<f64>) -> Vector10 {
    let (x, y, z) = (p.x, p.y, p.z);
    Vector10::from_column_slice(&[
        x * x,
        y * y,
        z * z,
        2.0 * x * y,
        2.0 * x * z,
        2.0 * y * z,
        2.0 * x,
        2.0 * y,
        2.0 * z,
        -1.0,
    ])
}

/// Unit-norm, sign-normalized quadric coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricCoefficients(Vector10);

impl QuadricCoefficients {
    /// Normalizes an arbitrary coefficient vector to unit norm with a positive
    /// quadratic-block trace.
    pub fn new(raw: Vector10) -> Result<Self, FitError> {
        if !raw.iter().all(|v| v.is_finite()) {
            return Err(FitError::InvalidCoefficients);
        }
        let norm = raw.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(FitError::InvalidCoefficients);
        }
        let mut q = raw / norm;
        let trace = q[0] + q[1] + q[2];
        let flip = if trace != 0.0 {
            trace < 0.0
        } else {
            // zero trace: fall back to the first nonzero entry
            q.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0)
        };
        if flip {
            q = -q;
        }
        Ok(Self(q))
    }

    pub fn from_slice(raw: &[f64; 10]) -> Result<Self, FitError> {
        Self::new(Vector10::from_column_slice(raw))
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self, FitError> {
        let sym = (m + m.transpose()) * 0.5;
        Self::new(Vector10::from_column_slice(&[
            sym[(0, 0)],
            sym[(1, 1)],
            sym[(2, 2)],
            sym[(0, 1)],
            sym[(0, 2)],
            sym[(1, 2)],
            sym[(0, 3)],
            sym[(1, 3)],
            sym[(2, 3)],
            -sym[(3, 3)],
        ]))
    }

    pub fn as_vector(&self) -> &Vector10 {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        out.copy_from_slice(self.0.as_slice());
        out
    }

    /// `F(p) = d(p)ᵀ q`.
    #[inline]
    pub fn evaluate(&self, p: &Point3<f64>) -> f64 {
        let q = &self.0;
        let (x, y, z) = (p.x, p.y, p.z);
        q[0] * x * x + q[1] * y * y + q[2] * z * z
            + 2.0 * (q[3] * x * y + q[4] * x * z + q[5] * y * z)
            + 2.0 * (q[6] * x + q[7] * y + q[8] * z)
            - q[9]
    }

    /// Spatial gradient of `F` at `p`: `2 (A p + b)`.
    #[inline]
    pub fn gradient(&self, p: &Point3<f64>) -> Vector3<f64> {
        let q = &self.0;
        let (x, y, z) = (p.x, p.y, p.z);
        2.0 * Vector3::new(
            q[0] * x + q[3] * y + q[4] * z + q[6],
            q[3] * x + q[1] * y + q[5] * z + q[7],
            q[4] * x + q[5] * y + q[2] * z + q[8],
        )
    }

    pub fn matrix(&self) -> QuadricMatrix {
        coeffs_to_matrix(self)
    }
}

/// Symmetric 4×4 matrix with `x_hᵀ Q x_h = F(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricMatrix(pub Matrix4<f64>);

impl QuadricMatrix {
    /// Upper-left 3×3 quadratic block.
    pub fn block(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// Linear part `Q[0..3][3]`.
    pub fn linear(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn constant(&self) -> f64 {
        self.0[(3, 3)]
    }

    pub fn eval_homogeneous(&self, p: &Point3<f64>) -> f64 {
        let xh = p.to_homogeneous();
        (xh.transpose() * self.0 * xh)[(0, 0)]
    }
}

pub fn coeffs_to_matrix(q: &QuadricCoefficients) -> QuadricMatrix {
    let q = q.as_vector();
    QuadricMatrix(Matrix4::new(
        q[0], q[3], q[4], q[6], //
        q[3], q[1], q[5], q[7], //
        q[4], q[5], q[2], q[8], //
        q[6], q[7], q[8], -q[9],
    ))
}

/// Euclidean pose and semiaxes of an ellipsoid.
///
/// A scene point `p` maps to the ellipsoid-aligned frame as `u = R p + T`;
/// the surface is `Σ (uᵢ / rᵢ)² = 1`. The center is `-Rᵀ T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidGeometry {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub semiaxes: Vector3<f64>,
}

impl EllipsoidGeometry {
    pub fn from_center(
        rotation: Matrix3<f64>,
        center: Point3<f64>,
        semiaxes: Vector3<f64>,
    ) -> Result<Self, FitError> {
        let g = Self {
            rotation,
            translation: -(rotation * center.coords),
            semiaxes,
        };
        g.check()?;
        Ok(g)
    }

    pub fn axis_aligned(center: Point3<f64>, semiaxes: Vector3<f64>) -> Result<Self, FitError> {
        Self::from_center(Matrix3::identity(), center, semiaxes)
    }

    fn check(&self) -> Result<(), FitError> {
        let r = &self.rotation;
        let ortho = (r * r.transpose() - Matrix3::identity()).abs().max();
        if !(ortho < 1e-9) || !((r.determinant() - 1.0).abs() < 1e-9) {
            return Err(FitError::InvalidConfig(
                "rotation must be orthogonal with determinant +1".into(),
            ));
        }
        if !self.translation.iter().all(|v| v.is_finite())
            || !self.semiaxes.iter().all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(FitError::InvalidConfig(
                "semiaxes must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    /// Coordinates of `p` in the ellipsoid-aligned frame.
    #[inline]
    pub fn to_local(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.rotation * p.coords + self.translation
    }

    #[inline]
    pub fn to_scene(&self, u: &Vector3<f64>) -> Point3<f64> {
        Point3::from(self.rotation.transpose() * (u - self.translation))
    }

    /// Semiaxes sorted in descending order.
    pub fn sorted_semiaxes(&self) -> [f64; 3] {
        let mut r = [self.semiaxes[0], self.semiaxes[1], self.semiaxes[2]];
        r.sort_by(|a, b| b.total_cmp(a));
        r
    }

    /// Geometry after applying the rigid motion `iso` to the scene.
    pub fn transformed(&self, iso: &Isometry3<f64>) -> Self {
        let m = iso.rotation.to_rotation_matrix().into_inner();
        let t = iso.translation.vector;
        let rotation = self.rotation * m.transpose();
        Self {
            rotation,
            translation: self.translation - rotation * t,
            semiaxes: self.semiaxes,
        }
    }

    /// Same center and axes with every semiaxis multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            semiaxes: self.semiaxes * s,
            ..*self
        }
    }
}

/// Recovers center, rotation and semiaxes from coefficients.
///
/// Eigenvalues of the quadratic block are taken in ascending order, so the
/// semiaxes come out in descending order. The eigenvector basis is flipped if
/// needed to make the rotation proper.
pub fn decompose(q: &QuadricCoefficients) -> Result<EllipsoidGeometry, FitError> {
    let qm = coeffs_to_matrix(q);
    let block = qm.block();
    let linear = qm.linear();

    let eig = SymmetricEigen::new(block);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda = Vector3::from_fn(|i, _| eig.eigenvalues[order[i]]);
    let mut u = Matrix3::from_fn(|r, c| eig.eigenvectors[(r, order[c])]);

    let largest = lambda.abs().max();
    if !(largest > 0.0) || !largest.is_finite() {
        return Err(FitError::Degenerate { ratio: 0.0 });
    }
    let smallest = lambda.abs().min();
    if smallest < DEGENERATE_EIGEN_RATIO * largest {
        return Err(FitError::Degenerate {
            ratio: smallest / largest,
        });
    }
    if lambda.iter().any(|l| *l <= 0.0) {
        return Err(FitError::NotAnEllipsoid);
    }
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
    }

    let rotation = u.transpose();
    let projected = rotation * linear;
    let translation = projected.component_div(&lambda);
    // scale l with lΨ = Λ; positive iff the surface is real
    let scale = projected.dot(&translation) - qm.constant();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(FitError::NotAnEllipsoid);
    }
    let semiaxes = lambda.map(|l| (scale / l).sqrt());
    if !semiaxes.iter().all(|r| r.is_finite() && *r > 0.0) {
        return Err(FitError::NotAnEllipsoid);
    }
    Ok(EllipsoidGeometry {
        rotation,
        translation,
        semiaxes,
    })
}

/// Builds `Q₁ = [[RᵀΨR, RᵀΨT], [TᵀΨR, TᵀΨT - 1]]` and normalizes it.
pub fn geometry_to_coeffs(g: &EllipsoidGeometry) -> QuadricCoefficients {
    let psi = Matrix3::from_diagonal(&g.semiaxes.map(|r| 1.0 / (r * r)));
    let r = &g.rotation;
    let t = &g.translation;
    let block = r.transpose() * psi * r;
    let linear = r.transpose() * psi * t;
    let constant = (t.transpose() * psi * t)[(0, 0)] - 1.0;

    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&block);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&linear);
    m.fixed_view_mut::<1, 3>(3, 0).copy_from(&linear.transpose());
    m[(3, 3)] = constant;
    QuadricCoefficients::from_matrix(&m).expect("valid geometry yields finite nonzero coefficients")
}

pub fn validate_ellipsoid(q: &QuadricCoefficients) -> bool {
    decompose(q).is_ok()
}

/// Coefficients together with their cached decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidModel {
    coeffs: QuadricCoefficients,
    geometry: EllipsoidGeometry,
}

impl EllipsoidModel {
    pub fn new(coeffs: QuadricCoefficients) -> Result<Self, FitError> {
        let geometry = decompose(&coeffs)?;
        Ok(Self { coeffs, geometry })
    }

    pub fn from_geometry(g: &EllipsoidGeometry) -> Result<Self, FitError> {
        Self::new(geometry_to_coeffs(g))
    }

    pub fn coeffs(&self) -> &QuadricCoefficients {
        &self.coeffs
    }

    pub fn geometry(&self) -> &EllipsoidGeometry {
        &self.geometry
    }

    pub fn center(&self) -> Point3<f64> {
        self.geometry.center()
    }

    pub fn semiaxes(&self) -> &Vector3<f64> {
        &self.geometry.semiaxes
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Result<Self, FitError> {
        Self::from_geometry(&self.geometry.transformed(iso))
    }

    pub fn to_document(&self) -> ModelDocument {
        let c = self.center();
        let mut rotation = [0.0; 9];
        for r in 0..3 {
            for col in 0..3 {
                rotation[3 * r + col] = self.geometry.rotation[(r, col)];
            }
        }
        ModelDocument {
            q: self.coeffs.to_array(),
            center: [c.x, c.y, c.z],
            semiaxes: self.geometry.sorted_semiaxes(),
            rotation,
        }
    }
}

/// JSON form of a model. `q` is authoritative when reading; the geometric
/// fields are derived and informational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub q: [f64; 10],
    pub center: [f64; 3],
    /// Descending.
    pub semiaxes: [f64; 3],
    /// Row-major.
    pub rotation: [f64; 9],
}

impl ModelDocument {
    pub fn to_model(&self) -> Result<EllipsoidModel, FitError> {
        EllipsoidModel::new(QuadricCoefficients::from_slice(&self.q)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, crate::error::IoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| crate::error::IoError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| crate::error::IoError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}
