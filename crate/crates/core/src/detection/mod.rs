//! From emitted photons to detector timestamps: memory, beam splitter,
//! detector efficiency, jitter, dark counts, dead time and the gating
//! sequence that only opens the detectors during the storage window.

mod detector;
mod memory;
mod timing;

use serde::{Deserialize, Serialize};

pub use detector::{apply_dead_time, detect, detect_block, ChannelModel};
pub use memory::{apply_memory, apply_memory_block, split_signal, split_signal_block, unsplit_channel, MemoryAction};
pub use timing::{split_into_blocks, TimingSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorChannel {
    Idler = 0,
    Signal = 1,
    /// Signal detectors behind a 50:50 splitter.
    SignalA = 2,
    SignalB = 3,
}

impl DetectorChannel {
    pub const ALL: [DetectorChannel; 4] = [
        DetectorChannel::Idler,
        DetectorChannel::Signal,
        DetectorChannel::SignalA,
        DetectorChannel::SignalB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorChannel::Idler => "idler",
            DetectorChannel::Signal => "signal",
            DetectorChannel::SignalA => "signal_a",
            DetectorChannel::SignalB => "signal_b",
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub(crate) fn stage(self) -> crate::rng::Stage {
        use crate::rng::Stage;
        match self {
            DetectorChannel::Idler => Stage::DetectIdler,
            DetectorChannel::Signal => Stage::DetectSignal,
            DetectorChannel::SignalA => Stage::DetectSignalA,
            DetectorChannel::SignalB => Stage::DetectSignalB,
        }
    }
}

pub const FLAG_PAIRED: u8 = 1;
pub const FLAG_RECALLED: u8 = 2;
pub const FLAG_DARK: u8 = 4;

/// Mode index recorded for dark counts.
pub const NO_MODE: u16 = u16::MAX;

/// One detector click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimestampRecord {
    /// Picoseconds since the start of the run.
    pub time_ps: u64,
    pub clock_index: u32,
    pub channel: DetectorChannel,
    /// Source mode of the photon (diagnostic only; analysis uses time).
    pub mode_index: u16,
    pub flags: u8,
}
