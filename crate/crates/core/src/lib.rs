//! Kernel smoothers for derivative estimation near the ends of the data.
//!
//! The crate estimates the `q`-th derivative of a noisy function from samples
//! `y_i = f(x_i) + e_i` with linear smoothers `sum_i K(t, x_i) y_i`. It covers
//!
//! * [`legendre`]: Legendre polynomials and their exact moment integrals,
//! * [`discrete`]: the MSE-optimal kernel for an arbitrary placement of points,
//!   built on discrete orthogonal polynomials,
//! * [`continuum`]: closed-form boundary kernels of type `(q, q+2)` in the
//!   continuum limit together with their normalized risk,
//! * [`lpr`]: local polynomial regression, equivalent kernels, and the
//!   kernel-to-weighting construction,
//! * [`pipeline`]: full-interval estimation with a fixed halfwidth in the
//!   boundary regions and an `O(N_T + N_E)` boundary sweep.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod continuum;
pub mod discrete;
mod error;
pub mod legendre;
pub mod lpr;
mod math;
pub mod pipeline;
pub mod quadrature;

pub use error::{Error, ErrorKind, Result};

/// Commonly used types.
pub mod prelude {
    pub use crate::continuum::{ContinuumKernel, ContinuumKind};
    pub use crate::discrete::{DataSet, DiscreteKernel, KernelOrder, OrthoBasis, SupportWindow};
    pub use crate::lpr::{EquivalentKernel, LprFit, WeightFunction};
    pub use crate::pipeline::{
        BoundaryMode, Curvature, CurveEstimator, CurvePoint, EstimationPlan, HalfwidthRule, InteriorMethod, PlanConfig,
        Region,
    };
    pub use crate::{Error, ErrorKind, Result};
}
