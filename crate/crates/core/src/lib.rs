//! Numerical laboratory for oversampled coarse quantization of bandlimited
//! signals.
//!
//! The pipeline runs bandlimited test signals through K-bit encoders (PCM and
//! Sigma-Delta), reconstructs them with a convolution kernel, and measures the
//! sup-norm error as the oversampling rate grows. Alongside it sit numerical
//! checks for every quantitative ingredient of the entropy-based lower bound
//! on the achievable exponential error-decay rate:
//!
//! * [`entropy`]: binary and relative entropy, the rate bound
//!   `alpha <= 1 - (1 - h((1 + mu) / 2)) / K` and its curves.
//! * [`deviations`]: exact binomial tails against Chernoff bounds, plus
//!   Monte-Carlo tails for general `[0, 1]` laws.
//! * [`kernels`]: reconstruction kernels, tail envelopes, the padding margin
//!   `T0(lambda)` and Poisson row sums.
//! * [`epsnet`]: exhaustive enumeration of the sequences that survive the
//!   counting argument, compared against the bound chain.

pub mod cli;
pub mod deviations;
pub mod entropy;
pub mod epsnet;
mod error;
pub mod kernels;
pub mod numerics;
pub mod quantizers;
pub mod reconstruction;
pub mod signals;

pub use error::{Error, Result};
