//! Random-feature ReLU networks (RVFL) that approximate Lipschitz functions,
//! built through the chain extension -> smoothing -> spectral truncation ->
//! finite random network, with the matching error and width bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod lipschitz;
pub mod pipeline;
pub mod quad;
pub mod rng;
pub mod rvfl;
pub mod scalar;
pub mod specfun;
pub mod spectral;
pub mod targets;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision instantiations.
pub type Compactum = geometry::Compactum<f64>;
pub type SampledFunction = lipschitz::SampledFunction<f64>;
pub type ExtendedFunction = lipschitz::ExtendedFunction<f64>;
pub type SmoothingKernel = kernel::SmoothingKernel<f64>;
pub type SpectralSurrogate = spectral::SpectralSurrogate<f64>;
pub type HiddenLayer = rvfl::HiddenLayer<f64>;
pub type WeightDensity = rvfl::WeightDensity<f64>;
pub type RvflNetwork = rvfl::RvflNetwork<f64>;
pub type Pipeline = pipeline::Pipeline<f64>;
