use serde::{Deserialize, Serialize};

use super::calibrate::{comb_for_storage_time, reported_side_holes, DEFAULT_PENALTY_STRENGTH, PROBE_FWHM_PS};
use super::echo::probe_echo;
use super::efficiency::{efficiency_breakdown, EfficiencyBreakdown, PhotonSpectrum};
use super::profile::{CombParams, CombProfile};
use super::sidehole::{SideHole, SideHolePenalty};
use super::transfer::transfer_function;
use crate::error::Result;

/// Everything needed to turn a comb into per-photon transmit / recall probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryModel {
    pub comb: CombParams<f64>,
    pub side_holes: Vec<SideHole<f64>>,
    pub penalty: SideHolePenalty<f64>,
    /// Fiber-to-fiber transmission of the device, off resonance.
    pub transmission: f64,
    pub photon_bw_ghz: f64,
    pub spectrum: PhotonSpectrum,
}

impl Default for MemoryModel {
    fn default() -> Self {
        MemoryModel {
            comb: CombParams::paper_default(),
            side_holes: reported_side_holes().to_vec(),
            penalty: SideHolePenalty {
                strength: DEFAULT_PENALTY_STRENGTH,
            },
            transmission: 0.26,
            photon_bw_ghz: 5.2,
            spectrum: PhotonSpectrum::FlatTop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryPrediction {
    pub breakdown: EfficiencyBreakdown<f64>,
    /// Energy fraction of the in-band photon leaving at t≈0.
    pub comb_transmission: f64,
    /// Unpenalized first-echo energy fraction.
    pub raw_echo: f64,
    pub side_hole_factor: f64,
    /// Echo delay relative to the transmitted pulse.
    pub echo_time_ns: f64,
}

impl MemoryPrediction {
    /// Probability that a photon entering the device leaves undelayed.
    pub fn transmit_prob(&self) -> f64 {
        let b = &self.breakdown;
        b.transmission * b.filter_overlap * self.comb_transmission
    }

    pub fn recall_prob(&self) -> f64 {
        self.breakdown.system
    }
}

impl MemoryModel {
    /// Same model with the comb respaced for storage time `t_ns` at fixed finesse.
    pub fn with_storage_time(&self, t_ns: f64) -> Result<Self> {
        Ok(MemoryModel {
            comb: comb_for_storage_time(&self.comb, t_ns)?,
            ..self.clone()
        })
    }

    pub fn evaluate(&self) -> Result<MemoryPrediction> {
        let profile = CombProfile::build(self.comb)?;
        let tf = transfer_function(&profile);
        let acc = probe_echo(&tf, PROBE_FWHM_PS)?;
        let factor = self.penalty.factor(&self.comb, &self.side_holes);
        let mut breakdown = efficiency_breakdown(
            acc.first_echo() * factor,
            self.transmission,
            self.photon_bw_ghz,
            self.comb.bandwidth_ghz,
            self.spectrum,
        )?;
        let echo_time_ns = acc.storage_delay_ns();
        breakdown.storage_time_ns = echo_time_ns;
        Ok(MemoryPrediction {
            breakdown,
            comb_transmission: acc.transmitted,
            raw_echo: acc.first_echo(),
            side_hole_factor: factor,
            echo_time_ns,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_reproduces_200ns_point() {
        let p = MemoryModel::default().evaluate().unwrap();
        assert!((p.breakdown.internal - 0.0283).abs() < 2e-4, "{}", p.breakdown.internal);
        assert!((p.echo_time_ns - 200.0).abs() < 0.01);
        assert!(p.transmit_prob() + p.recall_prob() <= 1.0);
    }

    #[test]
    fn contrast_160_vs_200() {
        let m = MemoryModel::default();
        let a = m.with_storage_time(160.0).unwrap().evaluate().unwrap();
        let b = m.evaluate().unwrap();
        let r = a.breakdown.internal / b.breakdown.internal;
        assert!((r - 4.74 / 2.83).abs() < 0.02, "{r}");
    }
}
