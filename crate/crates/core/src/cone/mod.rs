//! Signature cones, stability radii, convex paths, polymetric tuples and
//! John-ellipsoid approximation of norms.

mod inertia;
mod john;
mod metric;
mod serial;

pub use inertia::{inertia_by_minors, inertia_of, Inertia};
pub use john::{john_metric, EllipsoidCertificate, JOHN_TOLERANCE};
pub use metric::{
    convex_path, first_inertia_failure, node_inertia, polymetric_failures, stability_radius, validate_polymetric,
    MetricField, NodeFailure, Polymetric, DEFAULT_EIG_TOLERANCE,
};
pub use serial::{decode_polymetric, encode_metrics, encode_polymetric, PolymetricBlob, POLYMETRIC_MAGIC};
