use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::source::sample::BLOCK_CYCLES;

/// Repeating prepare / wait / store sequence. Photons reach the detectors
/// only during `store`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSequence {
    pub cycle_ms: f64,
    pub pump_ms: f64,
    pub wait_ms: f64,
    pub store_ms: f64,
}

impl Default for TimingSequence {
    fn default() -> Self {
        TimingSequence {
            cycle_ms: 500.0,
            pump_ms: 200.0,
            wait_ms: 20.0,
            store_ms: 280.0,
        }
    }
}

const PS_PER_MS: f64 = 1e9;

impl TimingSequence {
    /// Detectors always open.
    pub fn always_open() -> Self {
        TimingSequence {
            cycle_ms: 1.0,
            pump_ms: 0.0,
            wait_ms: 0.0,
            store_ms: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.cycle_ms, self.pump_ms, self.wait_ms, self.store_ms]
            .iter()
            .any(|v| !(*v >= 0.0))
            || !(self.store_ms > 0.0)
        {
            return Err(invalid("store_ms", "durations must be non-negative and store positive"));
        }
        if (self.pump_ms + self.wait_ms + self.store_ms - self.cycle_ms).abs() > 1e-9 * self.cycle_ms {
            return Err(invalid(
                "cycle_ms",
                format!(
                    "pump + wait + store = {} ms but cycle is {} ms",
                    self.pump_ms + self.wait_ms + self.store_ms,
                    self.cycle_ms
                ),
            ));
        }
        Ok(())
    }

    pub fn duty(&self) -> f64 {
        self.store_ms / self.cycle_ms
    }

    fn cycle_ps(&self) -> u64 {
        (self.cycle_ms * PS_PER_MS).round() as u64
    }

    fn store_start_ps(&self) -> u64 {
        ((self.pump_ms + self.wait_ms) * PS_PER_MS).round() as u64
    }

    pub fn is_gated(&self, time_ps: u64) -> bool {
        time_ps % self.cycle_ps() >= self.store_start_ps()
    }

    /// Clock cycles lying entirely inside store windows during `[0, run_s)`.
    pub fn store_clocks(&self, run_s: f64, period_ps: u64) -> Vec<Range<u64>> {
        let run_ps = (run_s * 1e12).round() as u64;
        let cycle = self.cycle_ps();
        let start = self.store_start_ps();
        let mut out = Vec::new();
        let mut c0 = 0u64;
        while c0 < run_ps {
            let lo = c0 + start;
            let hi = (c0 + cycle).min(run_ps);
            if hi > lo {
                let first = lo.div_ceil(period_ps);
                let last = hi / period_ps;
                if last > first {
                    out.push(first..last);
                }
            }
            c0 += cycle;
        }
        out
    }

    /// Gated time in seconds during `[0, run_s)`.
    pub fn gated_seconds(&self, run_s: f64) -> f64 {
        let full = (run_s / (self.cycle_ms / 1e3)).floor();
        let rem = run_s - full * self.cycle_ms / 1e3;
        full * self.store_ms / 1e3 + (rem - (self.pump_ms + self.wait_ms) / 1e3).max(0.0)
    }
}

/// Splits clock ranges at `BLOCK_CYCLES` boundaries. Each entry is a block
/// index with the pieces of `ranges` that fall inside it, in order.
pub fn split_into_blocks(ranges: &[Range<u64>]) -> Vec<(u64, Vec<Range<u64>>)> {
    let mut out: Vec<(u64, Vec<Range<u64>>)> = Vec::new();
    for r in ranges {
        let mut lo = r.start;
        while lo < r.end {
            let b = lo / BLOCK_CYCLES;
            let hi = r.end.min((b + 1) * BLOCK_CYCLES);
            match out.last_mut() {
                Some((last, v)) if *last == b => v.push(lo..hi),
                _ => out.push((b, vec![lo..hi])),
            }
            lo = hi;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_sequence() {
        let t = TimingSequence::default();
        t.validate().unwrap();
        assert!((t.duty() - 0.56).abs() < 1e-12);
        let r = t.store_clocks(1.0, 1_000_000);
        assert_eq!(r, vec![220_000..500_000, 720_000..1_000_000]);
        assert!(!t.is_gated(100_000_000_000));
        assert!(t.is_gated(300_000_000_000));
        assert!((t.gated_seconds(1000.0) - 560.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_inconsistent_sequence() {
        let t = TimingSequence {
            store_ms: 100.0,
            ..TimingSequence::default()
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn blocks_cover_ranges() {
        let r = vec![10..20_000, 30_000..40_000];
        let b = split_into_blocks(&r);
        let total: u64 = b.iter().flat_map(|(_, v)| v.iter().map(|x| x.end - x.start)).sum();
        assert_eq!(total, 19_990 + 10_000);
        assert_eq!(b[0], (0, vec![10..16_384]));
        assert_eq!(b[1].0, 1);
        assert_eq!(b[1].1, vec![16_384..20_000, 30_000..32_768]);
    }
}
