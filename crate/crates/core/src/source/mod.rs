//! Photon-pair source: per-pulse pair numbers from `K` thermal Schmidt modes,
//! uncorrelated Raman noise in each arm, and Gaussian emission times.

pub mod distribution;
pub mod sample;
pub mod theory;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use distribution::CountTable;
pub use sample::{sample_block, sample_emissions, SlotSampler};
pub use theory::{predict_rates, theoretical_g2, ClickModel, PumpModel, Rates};

/// Declarative source description. Noise means are photons per pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub mean_pairs: f64,
    /// Effective number of Schmidt modes; `inf` gives Poissonian pairs.
    pub schmidt_modes: f64,
    pub noise_signal: f64,
    pub noise_idler: f64,
    pub n_modes: u32,
    pub mode_fwhm_ps: f64,
    pub mode_separation_ps: f64,
    pub clock_period_us: f64,
    /// Center of mode 0 after the clock tick.
    pub first_mode_offset_ps: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            mean_pairs: 0.0371,
            schmidt_modes: 1.56,
            noise_signal: 0.0,
            noise_idler: 0.0,
            n_modes: 1,
            mode_fwhm_ps: 300.0,
            mode_separation_ps: 600.0,
            clock_period_us: 1.0,
            first_mode_offset_ps: 10_000.0,
        }
    }
}

/// Above this the multi-pair regime is outside what the estimators were checked against.
pub const MAX_MEAN_PAIRS: f64 = 1.0;

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_pairs > 0.0) {
            return Err(invalid("mean_pairs", "must be positive"));
        }
        if self.mean_pairs >= MAX_MEAN_PAIRS {
            return Err(invalid(
                "mean_pairs",
                format!("{} is in the unvalidated multi-pair regime (>= {MAX_MEAN_PAIRS})", self.mean_pairs),
            ));
        }
        if !(self.schmidt_modes >= 1.0) {
            return Err(invalid("schmidt_modes", "must be >= 1"));
        }
        if !(self.noise_signal >= 0.0 && self.noise_idler >= 0.0) {
            return Err(invalid("noise_signal", "noise means must be non-negative"));
        }
        if self.n_modes == 0 || self.n_modes > u16::MAX as u32 {
            return Err(invalid("n_modes", "must be in 1..=65535"));
        }
        if !(self.mode_fwhm_ps > 0.0 && self.mode_separation_ps > 0.0 && self.clock_period_us > 0.0) {
            return Err(invalid("mode_fwhm_ps", "timing parameters must be positive"));
        }
        let last_edge = self.first_mode_offset_ps
            + (self.n_modes - 1) as f64 * self.mode_separation_ps
            + 3.0 * self.sigma_ps();
        if self.first_mode_offset_ps < 3.0 * self.sigma_ps() || last_edge > self.period_ps() as f64 {
            return Err(invalid(
                "n_modes",
                format!(
                    "{} modes at {} ps do not fit the {} µs clock period",
                    self.n_modes, self.mode_separation_ps, self.clock_period_us
                ),
            ));
        }
        Ok(())
    }

    pub fn sigma_ps(&self) -> f64 {
        self.mode_fwhm_ps / (8.0 * std::f64::consts::LN_2).sqrt()
    }

    pub fn period_ps(&self) -> u64 {
        (self.clock_period_us * 1e6).round() as u64
    }

    pub fn mode_center_ps(&self, mode: u32) -> f64 {
        self.first_mode_offset_ps + mode as f64 * self.mode_separation_ps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmissionChannel {
    Signal = 0,
    Idler = 1,
    NoiseSignal = 2,
    NoiseIdler = 3,
}

impl EmissionChannel {
    pub fn is_signal_arm(self) -> bool {
        matches!(self, EmissionChannel::Signal | EmissionChannel::NoiseSignal)
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => EmissionChannel::Signal,
            1 => EmissionChannel::Idler,
            2 => EmissionChannel::NoiseSignal,
            3 => EmissionChannel::NoiseIdler,
            _ => return None,
        })
    }
}

/// One emitted photon. Signal and idler of a pair share `pair_id`, clock,
/// mode and emission time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct EmissionEvent {
    pub clock_index: u32,
    /// Picoseconds after the clock tick.
    pub time_ps: u32,
    pub channel: EmissionChannel,
    pub mode_index: u16,
    pub pair_id: Option<u64>,
    /// Set by the memory when the photon left as an echo.
    pub recalled: bool,
}
