//! Chart-based numerical differential geometry for tuples of metrics.
//!
//! Fields live on uniform rectangular charts ([`grid`]). On top of that sit
//! signature cones and polymetrics ([`cone`]), Levi–Civita data
//! ([`connection`]), the gauge calculus of Lie derivatives and the Bianchi
//! operator ([`gauge`]), geodesics ([`geodesic`]), characteristic forms
//! ([`chern_weil`]), discretized elliptic spectra and indices
//! ([`spectral`]) and large-scale comparisons ([`scales`]).

pub mod chern_weil;
pub mod cone;
pub mod connection;
pub mod error;
pub mod gauge;
pub mod geodesic;
pub mod grid;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod scales;
pub mod spectral;

pub use error::{Error, Result};
