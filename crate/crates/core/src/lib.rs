//! Single-image enhancement for hazy, underwater and dust-storm photographs.
//!
//! The core of the library is a PDE evolution ([`pde`]) driven by a log-less
//! logarithmic image processing operator ([`lip`]), stopped at the iterate
//! with maximal average gradient. Around it sit two fast approximation
//! pipelines derived from the atmospheric scattering model ([`fastdehaze`]),
//! a set of pre/post enhancement operators ([`enhance`]), a no-reference
//! quality metric suite ([`metrics`]) and a deterministic synthetic-haze
//! generator used as the test oracle ([`synth`]).
//!
//! All pipelines work on [`imgcore::ImageF`], a unit-interval raster with
//! one or three channels.

pub mod enhance;
mod error;
pub mod fastdehaze;
mod freq;
pub mod imgcore;
pub mod lip;
pub mod metrics;
pub mod pde;
pub mod synth;

pub use error::{Error, Result};
