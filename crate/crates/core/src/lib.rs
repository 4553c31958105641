//! Simulation of classical ghost diffraction with pseudo-thermal speckle.
//!
//! A speckle ensemble is synthesized at the source plane, split into a test
//! arm (which carries the object) and a reference arm, propagated to the
//! focal plane of an f-f lens and detected. Intensity correlations between
//! the arms reconstruct the object's diffraction pattern.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`.
//!
//! Units: transverse coordinates in micrometres, wavelength in micrometres,
//! focal length and focal-plane peak predictions in millimetres.

pub mod analysis;
pub mod correlator;
mod error;
mod field;
mod grid;
pub mod optics;
mod pattern;
mod scalar;
mod seed;
pub mod specklefield;
pub mod stats;

pub use error::{Error, Result};
pub use field::{ComplexField, IntensityFrame};
pub use grid::GridAxis;
pub use pattern::{Pattern, PeakEntry};
pub use scalar::Scalar;
pub use seed::{child_seed, rng_from_seed};

pub use num_complex::Complex;

pub type GridAxis64 = GridAxis<f64>;
pub type ComplexField64 = ComplexField<f64>;
pub type IntensityFrame64 = IntensityFrame<f64>;
pub type Pattern64 = Pattern<f64>;
pub type SpeckleSpec64 = specklefield::SpeckleSpec<f64>;
pub type SpeckleGenerator64 = specklefield::SpeckleGenerator<f64>;
pub type GammaMatrix64 = specklefield::GammaMatrix<f64>;
pub type OpticalConfig64 = optics::OpticalConfig<f64>;
pub type TransmissionObject64 = optics::TransmissionObject<f64>;
pub type BeamSplitterSpec64 = optics::BeamSplitterSpec<f64>;
pub type DetectorSpec64 = optics::DetectorSpec<f64>;
pub type MomentAccumulator64 = correlator::MomentAccumulator<f64>;
pub type GratingSpec64 = analysis::GratingSpec<f64>;
pub type DiffractionPrediction64 = analysis::DiffractionPrediction<f64>;
