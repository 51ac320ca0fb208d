//! Coincidence counting and correlation estimators over timestamp streams.

mod counting;
mod efficiency;
mod histogram;
mod matrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use counting::{
    count_heralded, count_unheralded, matrix_counts, mode_hits, HeraldedCounts, MatrixCounts, ModeGrid, ModeHit,
    UnheraldedCounts,
};
pub use efficiency::{extract_efficiencies, ExtractedEfficiency, TrialCounts};
pub use histogram::{coincidence_histogram, echo_peak, histogram_oracle, CoincidenceHistogram, HistogramSpec, PeakEstimate};
pub use matrix::{mode_matrix, BootstrapSpec, MatrixSummary, ModeMatrix};

pub const DEFAULT_WINDOW_PS: u64 = 600;
pub const DEFAULT_BIN_PS: u64 = 10;

/// Raw counts behind a g² value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum G2Counts {
    Cross { c_si: u64, c_s: u64, c_i: u64, trials: u64 },
    Heralded { c_is1s2: u64, c_i: u64, c_is1: u64, c_is2: u64 },
    Unheralded { c_s1s2: u64, accidental: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Result {
    pub value: f64,
    /// Poissonian error. A zero numerator count is treated as one count.
    pub std_error: f64,
    pub counts: G2Counts,
}

fn poisson_error(value: f64, numerator: u64, others: &[u64], unit_value: f64) -> f64 {
    if numerator == 0 {
        return unit_value;
    }
    let rel: f64 = std::iter::once(numerator).chain(others.iter().copied()).map(|c| 1.0 / c as f64).sum();
    value * rel.sqrt()
}

/// `c_si · N / (c_s · c_i)`
pub fn g2_cross(c_si: u64, c_s: u64, c_i: u64, trials: u64) -> Result<G2Result> {
    if c_s == 0 || c_i == 0 {
        return Err(Error::Undefined(format!("g2_cross needs nonzero singles (c_s = {c_s}, c_i = {c_i})")));
    }
    if trials == 0 {
        return Err(Error::Undefined("g2_cross over zero trials".into()));
    }
    let unit = trials as f64 / (c_s as f64 * c_i as f64);
    let value = c_si as f64 * unit;
    Ok(G2Result {
        value,
        std_error: poisson_error(value, c_si, &[c_s, c_i], unit),
        counts: G2Counts::Cross { c_si, c_s, c_i, trials },
    })
}

/// `c_is1s2 · c_i / (c_is1 · c_is2)`
pub fn g2_heralded(c_is1s2: u64, c_i: u64, c_is1: u64, c_is2: u64) -> Result<G2Result> {
    if c_is1 == 0 || c_is2 == 0 || c_i == 0 {
        return Err(Error::Undefined(format!(
            "g2_heralded needs nonzero two-fold counts (c_is1 = {c_is1}, c_is2 = {c_is2}, c_i = {c_i})"
        )));
    }
    let unit = c_i as f64 / (c_is1 as f64 * c_is2 as f64);
    let value = c_is1s2 as f64 * unit;
    Ok(G2Result {
        value,
        std_error: poisson_error(value, c_is1s2, &[c_i, c_is1, c_is2], unit),
        counts: G2Counts::Heralded {
            c_is1s2,
            c_i,
            c_is1,
            c_is2,
        },
    })
}

/// Coincidences over accidentals from neighbouring clock trials.
pub fn g2_unheralded(c_s1s2: u64, accidental: u64) -> Result<G2Result> {
    if accidental == 0 {
        return Err(Error::Undefined("g2_unheralded needs a nonzero accidental estimate".into()));
    }
    let unit = 1.0 / accidental as f64;
    let value = c_s1s2 as f64 * unit;
    Ok(G2Result {
        value,
        std_error: poisson_error(value, c_s1s2, &[accidental], unit),
        counts: G2Counts::Unheralded { c_s1s2, accidental },
    })
}

impl G2Result {
    /// `|value - target|` in units of the standard error.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_arithmetic() {
        let g = g2_cross(100, 10_000, 10_000, 1_000_000).unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
        assert!((g.std_error - 0.0102f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_denominators_are_undefined() {
        assert!(matches!(g2_cross(1, 0, 5, 10), Err(Error::Undefined(_))));
        assert!(matches!(g2_heralded(0, 5, 0, 3), Err(Error::Undefined(_))));
        assert!(matches!(g2_unheralded(3, 0), Err(Error::Undefined(_))));
    }

    #[test]
    fn perfect_single_photons_antibunch() {
        let g = g2_heralded(0, 10_000, 500, 480).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.std_error > 0.0);
    }

    #[test]
    fn subsampling_scales_error_by_sqrt2() {
        let full = g2_cross(4000, 200_000, 300_000, 10_000_000).unwrap();
        let half = g2_cross(2000, 100_000, 150_000, 5_000_000).unwrap();
        assert!((full.value - half.value).abs() < 1e-12);
        let r = half.std_error / full.std_error;
        assert!((r / 2f64.sqrt() - 1.0).abs() < 0.05);
    }
}
