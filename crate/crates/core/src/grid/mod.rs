//! Charts, sampled fields, differentiation and quadrature.

mod chart;
mod diff;
mod field;
pub mod io;
mod quad;

pub use chart::{Chart, MIN_RESOLUTION};
pub use diff::{diff_raw, spectral_matrix, Scheme};
pub use field::{ScalarField, TensorField};
pub use quad::integrate;

pub(crate) use field::same_chart;
pub(crate) use quad::integrate_raw;
