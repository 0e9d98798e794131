//! Adaptive estimation of the hidden component in a uniform-plus-component
//! mixture `g(x) = theta + (1 - theta) f(x)` on `[0, 1]`.
//!
//! The component density is estimated by a kernel smoother whose
//! observations carry the weights `(1 - theta / g(X_i)) / (1 - theta)`,
//! with `theta` and `g` themselves estimated from an independent
//! half-sample. All three estimators choose their bandwidth from the
//! data by comparing estimates across a grid.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, the Monte Carlo harness works in `f64`.

pub mod bandwidth;
pub mod component_f;
pub mod config;
pub mod density_g;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod mixture;
pub mod poly;
pub mod quad;
mod scalar;
pub mod smoother;
pub mod sums;
pub mod theta;

pub use component_f::{estimate_f, weight, weight_general, FitState, Fitted, Flags, PointEstimate};
pub use config::EstimatorConfig;
pub use density_g::{GHat, GammaHat, Neighbourhood};
pub use error::{Error, Result};
pub use kernels::{KernelNorms, KernelShape};
pub use mixture::ModelId;
pub use scalar::Scalar;
pub use theta::{SymSample, ThetaEstimate};

pub type Kernel = kernels::Kernel<f64>;
pub type MixtureModel = mixture::MixtureModel<f64>;
pub type BandwidthGrid = bandwidth::BandwidthGrid<f64>;
pub type KernelBank = bandwidth::KernelBank<f64>;

pub type Kernel32 = kernels::Kernel<f32>;
pub type MixtureModel32 = mixture::MixtureModel<f32>;
pub type BandwidthGrid32 = bandwidth::BandwidthGrid<f32>;
pub type KernelBank32 = bandwidth::KernelBank<f32>;
