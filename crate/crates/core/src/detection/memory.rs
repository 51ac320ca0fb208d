use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DetectorChannel;
use crate::comb::MemoryPrediction;
use crate::error::{invalid, Result};
use crate::rng::{stream, Stage};
use crate::source::sample::BLOCK_CYCLES;
use crate::source::EmissionEvent;

/// Per-photon fate in the memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryAction {
    pub transmit_prob: f64,
    pub recall_prob: f64,
    pub loss_prob: f64,
    pub storage_time_ps: u32,
}

impl MemoryAction {
    pub fn new(transmit_prob: f64, recall_prob: f64, storage_time_ns: f64) -> Result<Self> {
        if !(transmit_prob >= 0.0 && recall_prob >= 0.0 && transmit_prob + recall_prob <= 1.0 + 1e-12) {
            return Err(invalid("recall_prob", "transmit and recall probabilities must be >= 0 and sum to <= 1"));
        }
        if !(storage_time_ns > 0.0) {
            return Err(invalid("storage_time", "must be positive"));
        }
        Ok(MemoryAction {
            transmit_prob,
            recall_prob,
            loss_prob: (1.0 - transmit_prob - recall_prob).max(0.0),
            storage_time_ps: (storage_time_ns * 1e3).round() as u32,
        })
    }

    /// Memory taken out of the signal path.
    pub fn bypass() -> Self {
        MemoryAction {
            transmit_prob: 1.0,
            recall_prob: 0.0,
            loss_prob: 0.0,
            storage_time_ps: 1,
        }
    }

    pub fn from_prediction(p: &MemoryPrediction) -> Result<Self> {
        Self::new(p.transmit_prob(), p.recall_prob(), p.echo_time_ns)
    }
}

/// Memory acting on one block's events (sorted output). Idler-arm events pass unchanged.
pub fn apply_memory_block(events: &[EmissionEvent], action: &MemoryAction, rng: &mut ChaCha8Rng) -> Vec<EmissionEvent> {
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        if !e.channel.is_signal_arm() {
            out.push(*e);
            continue;
        }
        let u: f64 = rng.random();
        if u < action.transmit_prob {
            out.push(*e);
        } else if u < action.transmit_prob + action.recall_prob {
            out.push(EmissionEvent {
                time_ps: e.time_ps + action.storage_time_ps,
                recalled: true,
                ..*e
            });
        }
    }
    out.sort_unstable();
    out
}

fn by_block<T>(
    events: &[EmissionEvent],
    mut f: impl FnMut(u64, &[EmissionEvent]) -> Vec<T>,
) -> Vec<T> {
    events
        .chunk_by(|a, b| a.clock_index as u64 / BLOCK_CYCLES == b.clock_index as u64 / BLOCK_CYCLES)
        .flat_map(|chunk| f(chunk[0].clock_index as u64 / BLOCK_CYCLES, chunk))
        .collect()
}

/// Memory over a whole clock-sorted stream, using the same per-block RNG
/// streams as the pipeline.
pub fn apply_memory(events: &[EmissionEvent], action: &MemoryAction, seed: u64) -> Result<Vec<EmissionEvent>> {
    if action.storage_time_ps == 0 {
        return Err(invalid("storage_time", "must be positive"));
    }
    Ok(by_block(events, |b, chunk| {
        apply_memory_block(chunk, action, &mut stream(seed, Stage::Memory, b))
    }))
}

/// Routes signal-arm photons to `SignalA` or `SignalB` with equal probability.
/// Returns `(a, b)`; idler-arm photons are dropped.
pub fn split_signal_block(events: &[EmissionEvent], rng: &mut ChaCha8Rng) -> (Vec<EmissionEvent>, Vec<EmissionEvent>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for e in events.iter().filter(|e| e.channel.is_signal_arm()) {
        if rng.random::<bool>() {
            a.push(*e);
        } else {
            b.push(*e);
        }
    }
    (a, b)
}

pub fn split_signal(events: &[EmissionEvent], seed: u64) -> (Vec<EmissionEvent>, Vec<EmissionEvent>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for chunk in events.chunk_by(|x, y| x.clock_index as u64 / BLOCK_CYCLES == y.clock_index as u64 / BLOCK_CYCLES) {
        let blk = chunk[0].clock_index as u64 / BLOCK_CYCLES;
        let (x, y) = split_signal_block(chunk, &mut stream(seed, Stage::Splitter, blk));
        a.extend(x);
        b.extend(y);
    }
    (a, b)
}

/// Channel a photon of `e` is routed to when no splitter is present.
pub fn unsplit_channel(e: &EmissionEvent) -> DetectorChannel {
    if e.channel.is_signal_arm() {
        DetectorChannel::Signal
    } else {
        DetectorChannel::Idler
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{sample_emissions, EmissionChannel, SourceConfig};

    fn events() -> Vec<EmissionEvent> {
        sample_emissions(
            &SourceConfig {
                mean_pairs: 0.3,
                ..SourceConfig::default()
            },
            20_000,
            5,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_recall_delays_everything() {
        let ev = events();
        let act = MemoryAction::new(0.0, 1.0, 200.0).unwrap();
        let out = apply_memory(&ev, &act, 1).unwrap();
        assert_eq!(out.len(), ev.len());
        let sig_in: Vec<_> = ev.iter().filter(|e| e.channel == EmissionChannel::Signal).collect();
        let sig_out: Vec<_> = out.iter().filter(|e| e.channel == EmissionChannel::Signal).collect();
        for (a, b) in sig_in.iter().zip(&sig_out) {
            assert_eq!(b.time_ps - a.time_ps, 200_000);
            assert!(b.recalled);
        }
    }

    #[test]
    fn full_loss_empties_signal_arm() {
        let act = MemoryAction::new(0.0, 0.0, 200.0).unwrap();
        assert_eq!(act.loss_prob, 1.0);
        let out = apply_memory(&events(), &act, 1).unwrap();
        assert!(out.iter().all(|e| !e.channel.is_signal_arm()));
    }

    #[test]
    fn probabilities_validated() {
        assert!(MemoryAction::new(0.8, 0.3, 200.0).is_err());
        assert!(MemoryAction::new(0.1, 0.1, 0.0).is_err());
    }

    #[test]
    fn splitter_is_balanced() {
        let ev = events();
        let (a, b) = split_signal(&ev, 3);
        let n = (a.len() + b.len()) as f64;
        assert!(((a.len() as f64 - n / 2.0) / (n / 4.0).sqrt()).abs() < 4.0);
    }
}
