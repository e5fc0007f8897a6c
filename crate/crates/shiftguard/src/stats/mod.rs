//! Self-contained numerical statistics kernel.
//!
//! Everything the rest of the crate needs from "a stats library" lives here:
//! scalar distribution functions and quantiles ([`dist`]), a small dense
//! Cholesky factorization ([`linalg`]), rejection sampling from a
//! box-truncated multivariate normal ([`mvn`]), and reproducible splittable
//! random sources ([`rng`]). The quantile and incomplete-gamma routines are
//! implemented directly (rational approximations plus Newton/Halley
//! refinement) so that accuracy and determinism are under local control.

pub mod dist;
pub mod linalg;
pub mod mvn;
pub mod rng;

pub use dist::{
    chi_square_cdf, chi_square_quantile, erfc, ln_gamma, normal_quantile, std_normal_cdf,
    std_normal_pdf,
};
pub use linalg::{cholesky, CovarianceFactor};
pub use mvn::sample_mvn_truncated_box;
pub use rng::RandomSource;
