//! Scalar abstraction for the numeric kernels.
//!
//! Every statistic in this crate (correlations, distances, likelihoods) is
//! written against [`Scalar`] rather than a concrete float, so the same code
//! runs in `f32` or `f64`. The pipeline-facing type aliases at the crate root
//! pin `f64`.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + std::iter::Sum + Send + Sync + 'static
{
    /// Lossy conversion from `f64` constants.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Lossy conversion from a count.
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to any Scalar")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + std::iter::Sum
        + Send
        + Sync
        + 'static
{
}
