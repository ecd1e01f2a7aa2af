//! Robust ellipsoid fitting.
//!
//! Ellipsoids are fitted inside a locally optimized sample-consensus loop
//! whose scoring and reweighting use the CAS distance, a convex combination
//! of the axial distance (derived from the scaling factor of the ellipsoid
//! family through a point) and the Sampson distance.
//!
//! ```
//! use casfit::{fit, synth, FitConfig};
//!
//! let spec = synth::DatasetSpec { point_count: 200, ..synth::DatasetSpec::outlier(0.2) };
//! let inst = synth::make_instance(&spec, &mut spec.instance_rng(0)).unwrap();
//! let sigma = synth::Instance::noise_sigma(&inst.truth, spec.sigma_rel);
//! let report = fit(&inst.points, &FitConfig::proposed(1.5 * sigma)).unwrap();
//! assert!(casfit::validate_ellipsoid(report.best_model.coeffs()));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consensus;
pub mod distance;
pub mod error;
pub mod experiment;
pub mod lsq;
pub mod quadric;
pub mod synth;

pub use nalgebra::Point3;

pub use consensus::{
    fit, fit_with_observer, required_iterations, FitConfig, FitObserver, FitReport, PointLabel,
};
pub use distance::{
    algebraic_distance, axial_distance, cas_distance, evaluate_metric, orthogonal_distance,
    sampson_distance, scaling_factor, MetricKind, ScalingFactor,
};
pub use error::{FitError, IoError};
pub use experiment::{
    fitting_errors, residuals, run_grid, EpsilonRule, ErrorTriple, ExperimentGrid,
    ResidualTriple, Variant,
};
pub use lsq::{lls_fit, wls_fit, WeightVector};
pub use quadric::{
    coeffs_to_matrix, decompose, geometry_to_coeffs, validate_ellipsoid, EllipsoidGeometry,
    EllipsoidModel, ModelDocument, QuadricCoefficients, QuadricMatrix,
};
pub use synth::{load_points, save_points, DatasetKind, DatasetSpec, Instance};
