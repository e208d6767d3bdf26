//! Spectral Galerkin discretization and the nonlinearity-tamed accelerated
//! exponential Euler scheme for the stochastic Allen-Cahn equation
//!
//! ```text
//! du = (u_xx + f(u)) dt + dW,   x in (0, 1),   u(t, 0) = u(t, 1) = 0,
//! f(v) = a3 v^3 + a2 v^2 + a1 v + a0,  a3 < 0,
//! ```
//!
//! driven by space-time white noise, together with the Monte Carlo machinery
//! used to measure strong convergence rates against a fine coupled reference.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, the command-line front end and the
//! multi-threaded sample driver live in the `acsolve` crate.
//!
//! Module map:
//!
//! - [`spectral`]: Dirichlet eigenbasis, sine transforms, norms, diagonal
//!   semigroup factors.
//! - [`model`]: the cubic drift, its Galerkin projection and the taming factor.
//! - [`noise`]: counter-keyed sampling of exact stochastic convolution
//!   increments and their fine-to-coarse aggregation.
//! - [`stepper`]: one step and whole paths of the tamed exponential scheme.
//! - [`experiments`]: coupled strong-error studies, slope fits and moment
//!   diagnostics.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod experiments;
mod fft;
pub mod model;
pub mod noise;
mod philox;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use experiments::{
    fit_slope, moment_diagnostics, strong_error_study, DiagnosticsConfig, ErrorReport, ErrorRow,
    MomentSummary, RunConfig, SlopeFit, StudyMode,
};
pub use model::{nonlinearity_galerkin, tamed_drift, ModelParams};
pub use noise::{NoiseGrid, NoiseKey};
pub use spectral::{GridField, SpectralField};
pub use stepper::{simulate_path, step, NoiseSource, SchemeState, Taming};
