use serde::{Deserialize, Serialize};

use crate::comb::{EfficiencyBreakdown, InternalConvention, PUBLISHED_FILTER_FACTOR};
use crate::error::{invalid, Error, Result};

/// Counts accumulated over a number of clock trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub counts: u64,
    pub trials: u64,
}

impl TrialCounts {
    pub fn rate(&self) -> f64 {
        self.counts as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractedEfficiency {
    /// Internal efficiency from `η_s / (η_t · overlap)`.
    pub breakdown: EfficiencyBreakdown<f64>,
    pub system_std_error: f64,
    /// Internal efficiency from the fixed-factor convention.
    pub internal_fixed_factor: f64,
}

/// System efficiency from per-trial coincidence rates after and before
/// storage, split into device transmission, filter overlap and internal efficiency.
pub fn extract_efficiencies(
    before: TrialCounts,
    after: TrialCounts,
    transmission: f64,
    filter_overlap: f64,
    storage_time_ns: f64,
) -> Result<ExtractedEfficiency> {
    if before.counts == 0 || before.trials == 0 || after.trials == 0 {
        return Err(Error::Undefined("efficiency needs before-storage counts and nonzero trials".into()));
    }
    if !(transmission > 0.0 && transmission <= 1.0) {
        return Err(invalid("transmission", "must be in (0, 1]"));
    }
    if !(filter_overlap > 0.0 && filter_overlap <= 1.0) {
        return Err(invalid("filter_overlap", "must be in (0, 1]"));
    }
    let system = after.rate() / before.rate();
    let rel = (1.0 / after.counts as f64 + 1.0 / before.counts as f64).sqrt();
    let internal = InternalConvention::FilterCorrected.internal(system, transmission, filter_overlap);
    let breakdown = EfficiencyBreakdown::new(internal, transmission, filter_overlap, storage_time_ns)?;
    Ok(ExtractedEfficiency {
        breakdown,
        system_std_error: if after.counts == 0 {
            1.0 / after.trials as f64 / before.rate()
        } else {
            system * rel
        },
        internal_fixed_factor: InternalConvention::FixedFactor(PUBLISHED_FILTER_FACTOR).internal(
            system,
            transmission,
            filter_overlap,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn note_arithmetic() {
        let e = extract_efficiencies(
            TrialCounts {
                counts: 340_000,
                trials: 1_000,
            },
            TrialCounts {
                counts: 2_000,
                trials: 1_000,
            },
            0.26,
            0.77,
            200.0,
        )
        .unwrap();
        assert!((e.breakdown.system - 0.005882).abs() < 1e-6);
        assert!((e.breakdown.internal - 0.02938).abs() < 1e-4);
        assert!((e.internal_fixed_factor - 0.02941).abs() < 1e-4);
    }

    #[test]
    fn identity_when_lossless() {
        let e = extract_efficiencies(
            TrialCounts { counts: 1000, trials: 10 },
            TrialCounts { counts: 37, trials: 20 },
            1.0,
            1.0,
            200.0,
        )
        .unwrap();
        assert_eq!(e.breakdown.internal, e.breakdown.system);
        assert!((e.breakdown.system - 0.0185).abs() < 1e-12);
    }
}
