//! Block-parallel source → memory → detector runs.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{
    apply_dead_time, apply_memory_block, detect_block, split_into_blocks, split_signal_block, ChannelModel,
    DetectorChannel, MemoryAction, TimestampRecord, TimingSequence,
};
use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Stage};
use crate::source::sample::BLOCK_CYCLES;
use crate::source::{sample_block, EmissionChannel, EmissionEvent, SlotSampler, SourceConfig};

/// Whether the signal photons pass through the memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Before,
    After,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Before => "before",
            RunKind::After => "after",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInputs {
    pub source: SourceConfig,
    pub memory: MemoryAction,
    pub signal: ChannelModel,
    pub idler: ChannelModel,
    pub timing: TimingSequence,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub kind: RunKind,
    pub duration_s: f64,
    /// 50:50 splitter on the signal arm (two signal detectors).
    pub splitter: bool,
    pub keep_events: bool,
}

/// Photon counts at each stage of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub trials: u64,
    pub emitted_signal: u64,
    pub emitted_idler: u64,
    pub emitted_noise_signal: u64,
    pub emitted_noise_idler: u64,
    pub transmitted: u64,
    pub recalled: u64,
    pub candidates: Vec<(DetectorChannel, u64)>,
    pub clicks: Vec<(DetectorChannel, u64)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub kind: RunKind,
    pub duration_s: f64,
    pub gated: Vec<Range<u64>>,
    pub counts: StageCounts,
    /// Time-sorted clicks per detector.
    pub streams: Vec<(DetectorChannel, Vec<TimestampRecord>)>,
    /// Emissions before the memory, when requested.
    pub events: Option<Vec<EmissionEvent>>,
}

impl RunOutput {
    pub fn stream(&self, ch: DetectorChannel) -> &[TimestampRecord] {
        self.streams
            .iter()
            .find(|(c, _)| *c == ch)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn trials(&self) -> u64 {
        self.counts.trials
    }
}

struct BlockResult {
    events: Option<Vec<EmissionEvent>>,
    emitted: [u64; 4],
    transmitted: u64,
    recalled: u64,
    candidates: Vec<Vec<TimestampRecord>>,
}

fn channels(splitter: bool) -> Vec<DetectorChannel> {
    if splitter {
        vec![DetectorChannel::Idler, DetectorChannel::SignalA, DetectorChannel::SignalB]
    } else {
        vec![DetectorChannel::Idler, DetectorChannel::Signal]
    }
}

fn run_block(
    inp: &PipelineInputs,
    spec: &RunSpec,
    sampler: &SlotSampler,
    memory: &MemoryAction,
    block: u64,
    clocks: &[Range<u64>],
) -> BlockResult {
    let period = inp.source.period_ps();
    let full = block * BLOCK_CYCLES..(block + 1) * BLOCK_CYCLES;
    let mut ev = sample_block(sampler, inp.seed, block, full);
    ev.retain(|e| {
        let c = e.clock_index as u64;
        clocks.iter().any(|r| r.contains(&c))
    });
    let mut emitted = [0u64; 4];
    for e in &ev {
        emitted[e.channel as usize] += 1;
    }
    let after = apply_memory_block(&ev, memory, &mut stream(inp.seed, Stage::Memory, block));
    let recalled = after.iter().filter(|e| e.recalled).count() as u64;
    let transmitted = after.iter().filter(|e| e.channel.is_signal_arm() && !e.recalled).count() as u64;
    let (idler, signal): (Vec<EmissionEvent>, Vec<EmissionEvent>) =
        after.into_iter().partition(|e| !e.channel.is_signal_arm());
    let detect = |evs: &[EmissionEvent], ch: DetectorChannel, model: &ChannelModel| {
        detect_block(evs, clocks, ch, model, &inp.timing, period, &mut stream(inp.seed, ch.stage(), block))
    };
    let mut candidates = vec![detect(&idler, DetectorChannel::Idler, &inp.idler)];
    if spec.splitter {
        let (a, b) = split_signal_block(&signal, &mut stream(inp.seed, Stage::Splitter, block));
        candidates.push(detect(&a, DetectorChannel::SignalA, &inp.signal));
        candidates.push(detect(&b, DetectorChannel::SignalB, &inp.signal));
    } else {
        candidates.push(detect(&signal, DetectorChannel::Signal, &inp.signal));
    }
    BlockResult {
        events: spec.keep_events.then_some(ev),
        emitted,
        transmitted,
        recalled,
        candidates,
    }
}

/// One run of the full chain over the gated clocks of `spec.duration_s`.
/// Output depends only on the inputs and seed, not on `workers`.
pub fn run(inp: &PipelineInputs, spec: &RunSpec, workers: usize) -> Result<RunOutput> {
    inp.source.validate()?;
    inp.signal.validate()?;
    inp.idler.validate()?;
    inp.timing.validate()?;
    if !(spec.duration_s > 0.0) {
        return Err(invalid("duration_s", "must be positive"));
    }
    let period = inp.source.period_ps();
    let gated = inp.timing.store_clocks(spec.duration_s, period);
    if gated.last().is_some_and(|r| r.end > u32::MAX as u64) {
        return Err(invalid("duration_s", "clock index must fit in 32 bits"));
    }
    let memory = match spec.kind {
        RunKind::Before => MemoryAction::bypass(),
        RunKind::After => inp.memory,
    };
    let last_mode = inp.source.mode_center_ps(inp.source.n_modes - 1) + 3.0 * inp.source.sigma_ps();
    if last_mode + memory.storage_time_ps as f64 >= period as f64 {
        return Err(invalid("storage_time", "recalled modes would spill into the next clock period"));
    }
    let sampler = SlotSampler::new(&inp.source)?;
    let work = split_into_blocks(&gated);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let blocks: Vec<BlockResult> = pool.install(|| {
        work.par_iter()
            .map(|(b, clocks)| run_block(inp, spec, &sampler, &memory, *b, clocks))
            .collect()
    });

    let chans = channels(spec.splitter);
    let models: Vec<&ChannelModel> = chans
        .iter()
        .map(|c| if *c == DetectorChannel::Idler { &inp.idler } else { &inp.signal })
        .collect();
    let mut streams: Vec<(DetectorChannel, Vec<TimestampRecord>)> = chans.iter().map(|c| (*c, Vec::new())).collect();
    let mut last = vec![None; chans.len()];
    let mut counts = StageCounts {
        trials: gated.iter().map(|r| r.end - r.start).sum(),
        ..StageCounts::default()
    };
    let mut n_cand = vec![0u64; chans.len()];
    let mut events = spec.keep_events.then(Vec::new);
    for b in blocks {
        counts.emitted_signal += b.emitted[EmissionChannel::Signal as usize];
        counts.emitted_idler += b.emitted[EmissionChannel::Idler as usize];
        counts.emitted_noise_signal += b.emitted[EmissionChannel::NoiseSignal as usize];
        counts.emitted_noise_idler += b.emitted[EmissionChannel::NoiseIdler as usize];
        counts.transmitted += b.transmitted;
        counts.recalled += b.recalled;
        for (k, cand) in b.candidates.iter().enumerate() {
            n_cand[k] += cand.len() as u64;
            apply_dead_time(cand, models[k].dead_time_ps(), &mut last[k], &mut streams[k].1);
        }
        if let (Some(all), Some(ev)) = (events.as_mut(), b.events) {
            all.extend(ev);
        }
    }
    counts.candidates = chans.iter().copied().zip(n_cand).collect();
    counts.clicks = streams.iter().map(|(c, v)| (*c, v.len() as u64)).collect();
    Ok(RunOutput {
        kind: spec.kind,
        duration_s: spec.duration_s,
        gated,
        counts,
        streams,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> PipelineInputs {
        PipelineInputs {
            source: SourceConfig {
                mean_pairs: 0.1,
                noise_signal: 0.01,
                ..SourceConfig::default()
            },
            memory: MemoryAction::new(0.1, 0.05, 200.0).unwrap(),
            signal: ChannelModel::signal_default(),
            idler: ChannelModel::idler_default(),
            timing: TimingSequence::default(),
            seed: 11,
        }
    }

    fn spec(kind: RunKind, splitter: bool) -> RunSpec {
        RunSpec {
            kind,
            duration_s: 0.6,
            splitter,
            keep_events: true,
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let a = run(&inputs(), &spec(RunKind::After, false), 1).unwrap();
        let b = run(&inputs(), &spec(RunKind::After, false), 3).unwrap();
        assert_eq!(a.streams, b.streams);
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.events, b.events);
    }

    #[test]
    fn streams_are_sorted_and_respect_dead_time() {
        let out = run(&inputs(), &spec(RunKind::Before, true), 1).unwrap();
        assert_eq!(out.streams.len(), 3);
        for (_, s) in &out.streams {
            assert!(s.windows(2).all(|w| w[1].time_ps >= w[0].time_ps + 50_000));
        }
        assert_eq!(out.trials(), 280_000);
    }

    #[test]
    fn bypass_keeps_every_signal_photon() {
        let out = run(&inputs(), &spec(RunKind::Before, false), 1).unwrap();
        assert_eq!(out.counts.recalled, 0);
        assert_eq!(out.counts.transmitted, out.counts.emitted_signal + out.counts.emitted_noise_signal);
    }
}
