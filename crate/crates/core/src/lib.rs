//! Monte Carlo simulator and analysis toolkit for a telecom-band multimode
//! atomic-frequency-comb memory driven by a heralded photon-pair source.
//!
//! The pipeline is `source` → `detection` (memory, losses, detectors) →
//! `analysis`. The spectral code in `comb`, `spectroscopy` and `fit` is
//! generic over [`Scalar`] (`f32` or `f64`); the aliases at the crate root fix
//! it to `f64`.

pub mod analysis;
pub mod comb;
pub mod config;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod rng;
pub mod fit;
pub mod io;
pub mod pipeline;
pub mod scalar;
pub mod source;
pub mod spectral;
pub mod spectroscopy;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type CombParams = comb::CombParams<f64>;
pub type CombProfile = comb::CombProfile<f64>;
pub type TransferFunction = comb::TransferFunction<f64>;
pub type EfficiencyBreakdown = comb::EfficiencyBreakdown<f64>;
pub type HoleDecayParams = spectroscopy::HoleDecayParams<f64>;
pub type SideHoleModel = spectroscopy::SideHoleModel<f64>;
pub type EchoDecayParams = spectroscopy::EchoDecayParams<f64>;
pub type Dataset = spectroscopy::Dataset<f64>;
pub type FitResult = fit::FitResult<f64>;
