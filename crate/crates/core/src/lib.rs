//! Higher-order product-kernel density estimation on ℝ^{d1}×ℝ^{d2} for
//! densities with dominating mixed smoothness.
//!
//! The crate is organised bottom-up:
//!
//! - [`quadrature`]: tensor Gauss–Legendre integration, grid L^p norms and
//!   nested finite differences.
//! - [`kernel1d`]: order-s kernels on [−1,1] built by Legendre projection.
//! - [`product_kernel`]: tensor kernels and class-membership verification.
//! - [`sobolev`]: mixed, classical and anisotropic Sobolev norms.
//! - [`densities`]: smooth test densities, the plateau/bump lower-bound
//!   family, Varshamov–Gilbert codes and samplers.
//! - [`estimator`]: the product-space kernel density estimator and its bias.
//! - [`risk_harness`]: Monte Carlo risk, rate exponents and log-log fits.
//! - [`cli`]: the `mixkde` command-line front end.

pub mod cli;
pub mod densities;
pub mod error;
pub mod estimator;
pub mod kernel1d;
pub mod product_kernel;
pub mod quadrature;
pub mod risk_harness;
mod serde_sig17;
pub mod sobolev;

pub use error::{Error, Result};
