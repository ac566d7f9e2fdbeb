//! Capacity bounds for the dirty paper channel with slow fading dirt.
//!
//! The channel is `Y_j = X + a_j S + Z_j`: the encoder knows the Gaussian
//! state `S` but not which fading amplitude `a_j` the receiver experiences.
//! The crate provides
//!
//! - [`channel`]: parameterization, normalization and the strong fading regime,
//! - [`gaussian`]: an exact entropy oracle for jointly Gaussian vectors,
//! - [`bounds_two`] and [`bounds_m`]: inner and outer bounds with their gaps,
//! - [`sim`]: a Monte Carlo rate estimator for the transmission schemes,
//! - [`verify`]: invariant suites shared by the tests and the command line.
//!
//! All rates are in bits per channel use.

pub mod bounds_m;
pub mod bounds_two;
pub mod channel;
pub mod error;
pub mod gaussian;
pub mod optimize;
mod par;
pub mod sim;
pub mod verify;

pub use channel::{
    is_strong_fading, largest_strong_fading_subset, normalize, BoundKind, ChannelParams, FadingSet,
    GeneralizedParams, OptimizerState, RateBound, StrongFadingVariant, StrongSubset,
};
pub use error::{Error, Result};
pub use gaussian::{EntropyValue, GaussianVector, LinearGaussianModel};
pub use par::is_parallel;
