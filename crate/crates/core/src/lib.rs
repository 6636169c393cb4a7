//! Stochastic coherent-amplitude simulation of thermal and laser beams.
//!
//! The numerical core is generic over a [`num::Scalar`] (`f32` or `f64`);
//! the aliases at the crate root fix the scalar to `f64`, which is what the
//! statistical estimators and the command-line tool use.

pub mod cli;
pub mod error;
mod fft;
pub mod fieldgen;
pub mod io;
pub mod num;
pub mod photonics;
pub mod radiometry;
pub mod rng;
pub mod spectral;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
pub use num::{Complex, Scalar};
pub use rng::{Lane, DEFAULT_SEED};

pub type PhysicalConstants = radiometry::PhysicalConstants<f64>;
pub type BlackbodyScenario = radiometry::BlackbodyScenario<f64>;
pub type SingleModeState = states::SingleModeState<f64>;
pub type BeamModelSpec = fieldgen::BeamModelSpec<f64>;
pub type FieldTrace = fieldgen::FieldTrace<f64>;
pub type Ensemble = fieldgen::Ensemble<f64>;
pub type FilterSpec = photonics::FilterSpec<f64>;

pub type PhysicalConstantsF32 = radiometry::PhysicalConstants<f32>;
pub type SingleModeStateF32 = states::SingleModeState<f32>;
pub type BeamModelSpecF32 = fieldgen::BeamModelSpec<f32>;
pub type FieldTraceF32 = fieldgen::FieldTrace<f32>;
pub type EnsembleF32 = fieldgen::Ensemble<f32>;
pub type FilterSpecF32 = photonics::FilterSpec<f32>;

pub use fieldgen::{BeamFamily, OuStep};
pub use states::StateKind;
