use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::timing::split_into_blocks;
use super::{DetectorChannel, TimestampRecord, TimingSequence, FLAG_DARK, FLAG_PAIRED, FLAG_RECALLED, NO_MODE};
use crate::error::{invalid, Result};
use crate::rng::stream;
use crate::source::sample::BLOCK_CYCLES;
use crate::source::EmissionEvent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModel {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub dead_time_ns: f64,
    pub jitter_sigma_ps: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            efficiency: 1.0,
            dark_rate_hz: 70.0,
            dead_time_ns: 50.0,
            jitter_sigma_ps: 21.0,
        }
    }
}

impl ChannelModel {
    pub fn signal_default() -> Self {
        ChannelModel {
            efficiency: 0.13,
            ..Self::default()
        }
    }

    pub fn idler_default() -> Self {
        ChannelModel {
            efficiency: 0.17,
            ..Self::default()
        }
    }

    /// Perfect detector: no loss, noise, jitter or dead time.
    pub fn ideal() -> Self {
        ChannelModel {
            efficiency: 1.0,
            dark_rate_hz: 0.0,
            dead_time_ns: 0.0,
            jitter_sigma_ps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(invalid("efficiency", format!("{} outside (0, 1]", self.efficiency)));
        }
        if !(self.dark_rate_hz >= 0.0) {
            return Err(invalid("dark_rate_hz", "must be >= 0"));
        }
        if !(self.dead_time_ns >= 0.0) {
            return Err(invalid("dead_time_ns", "must be >= 0"));
        }
        if !(self.jitter_sigma_ps >= 0.0) {
            return Err(invalid("jitter_sigma_ps", "must be >= 0"));
        }
        Ok(())
    }

    pub fn dead_time_ps(&self) -> u64 {
        (self.dead_time_ns * 1e3).round() as u64
    }
}

/// Detection candidates for one block before dead time: thinned, jittered
/// photons plus dark counts over the block's clocks, time-sorted and gated.
pub fn detect_block(
    events: &[EmissionEvent],
    clocks: &[std::ops::Range<u64>],
    channel: DetectorChannel,
    ch: &ChannelModel,
    seq: &TimingSequence,
    period_ps: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<TimestampRecord> {
    let jitter = (ch.jitter_sigma_ps > 0.0).then(|| Normal::new(0.0, ch.jitter_sigma_ps).expect("finite sigma"));
    let mut out = Vec::new();
    for e in events {
        if rng.random::<f64>() >= ch.efficiency {
            continue;
        }
        let base = e.clock_index as i64 * period_ps as i64 + e.time_ps as i64;
        let dt = jitter.as_ref().map_or(0.0, |j| j.sample(rng));
        let t = (base as f64 + dt).round().max(0.0) as u64;
        let flags = if e.pair_id.is_some() { FLAG_PAIRED } else { 0 } | if e.recalled { FLAG_RECALLED } else { 0 };
        out.push(TimestampRecord {
            time_ps: t,
            clock_index: e.clock_index,
            channel,
            mode_index: e.mode_index,
            flags,
        });
    }
    if ch.dark_rate_hz > 0.0 {
        for r in clocks {
            let span_ps = (r.end - r.start) * period_ps;
            let mean = ch.dark_rate_hz * span_ps as f64 * 1e-12;
            if mean <= 0.0 {
                continue;
            }
            let n = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
            for _ in 0..n {
                let t = r.start * period_ps + rng.random_range(0..span_ps);
                out.push(TimestampRecord {
                    time_ps: t,
                    clock_index: (t / period_ps) as u32,
                    channel,
                    mode_index: NO_MODE,
                    flags: FLAG_DARK,
                });
            }
        }
    }
    out.retain(|r| seq.is_gated(r.time_ps));
    out.sort_unstable();
    out
}

/// Non-paralyzable dead time, folded in time order. `last` carries the
/// previous accepted click across calls. Also enforces strictly increasing times.
pub fn apply_dead_time(candidates: &[TimestampRecord], dead_time_ps: u64, last: &mut Option<u64>, out: &mut Vec<TimestampRecord>) {
    let gap = dead_time_ps.max(1);
    for r in candidates {
        match *last {
            Some(t) if r.time_ps < t + gap => continue,
            _ => {
                *last = Some(r.time_ps);
                out.push(*r);
            }
        }
    }
}

/// Detector applied to a clock-sorted stream of photons addressed to `channel`.
/// Dark counts are drawn over the store windows of `[0, run_s)`.
pub fn detect(
    events: &[EmissionEvent],
    channel: DetectorChannel,
    ch: &ChannelModel,
    seq: &TimingSequence,
    period_ps: u64,
    run_s: f64,
    seed: u64,
) -> Result<Vec<TimestampRecord>> {
    ch.validate()?;
    seq.validate()?;
    if !(run_s > 0.0) {
        return Err(invalid("run_length", "must be positive"));
    }
    let ranges = seq.store_clocks(run_s, period_ps);
    let work = split_into_blocks(&ranges);
    let mut out = Vec::new();
    let mut last = None;
    let mut idx = 0;
    for (block, clocks) in work {
        let end_clock = (block + 1) * BLOCK_CYCLES;
        let start = idx;
        while idx < events.len() && (events[idx].clock_index as u64) < end_clock {
            idx += 1;
        }
        let evs: Vec<EmissionEvent> = events[start..idx]
            .iter()
            .filter(|e| e.clock_index as u64 >= block * BLOCK_CYCLES)
            .copied()
            .collect();
        let cand = detect_block(&evs, &clocks, channel, ch, seq, period_ps, &mut stream(seed, channel.stage(), block));
        apply_dead_time(&cand, ch.dead_time_ps(), &mut last, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::EmissionChannel;

    fn photon(clock: u32, time_ps: u32) -> EmissionEvent {
        EmissionEvent {
            clock_index: clock,
            time_ps,
            channel: EmissionChannel::Signal,
            mode_index: 0,
            pair_id: None,
            recalled: false,
        }
    }

    #[test]
    fn dark_counts_scale_with_gated_time() {
        let ch = ChannelModel {
            efficiency: 1.0,
            ..ChannelModel::default()
        };
        let out = detect(&[], DetectorChannel::Signal, &ch, &TimingSequence::default(), 1_000_000, 1000.0, 3).unwrap();
        let expect = 70.0 * 1000.0 * 0.56;
        assert!(((out.len() as f64 - expect) / expect.sqrt()).abs() < 4.0, "{}", out.len());
        assert!(out.iter().all(|r| r.flags == FLAG_DARK));
    }

    #[test]
    fn dead_time_suppresses_close_clicks() {
        let seq = TimingSequence::always_open();
        let ch = ChannelModel {
            dark_rate_hz: 0.0,
            jitter_sigma_ps: 0.0,
            ..ChannelModel::default()
        };
        let ev = [photon(0, 10_000), photon(0, 40_000), photon(0, 70_000)];
        let out = detect(&ev, DetectorChannel::Signal, &ch, &seq, 1_000_000, 1e-3, 1).unwrap();
        let t: Vec<u64> = out.iter().map(|r| r.time_ps).collect();
        assert_eq!(t, vec![10_000, 70_000]);
    }

    #[test]
    fn ideal_detector_is_identity_on_gated_events() {
        let seq = TimingSequence::always_open();
        let ev: Vec<EmissionEvent> = (0..1000u32).map(|i| photon(i * 37, 10_000 + i)).collect();
        let out = detect(&ev, DetectorChannel::Signal, &ChannelModel::ideal(), &seq, 1_000_000, 1.0, 1).unwrap();
        assert_eq!(out.len(), ev.len());
        for (r, e) in out.iter().zip(&ev) {
            assert_eq!(r.time_ps, e.clock_index as u64 * 1_000_000 + e.time_ps as u64);
        }
    }

    #[test]
    fn gating_drops_pump_window() {
        let seq = TimingSequence::default();
        let ev = [photon(100, 10_000), photon(300_000, 10_000)];
        let out = detect(&ev, DetectorChannel::Signal, &ChannelModel::ideal(), &seq, 1_000_000, 1.0, 1).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].clock_index, 300_000);
    }
}
