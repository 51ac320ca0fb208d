//! Binary event and timestamp files, hashes, manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detection::{DetectorChannel, TimestampRecord};
use crate::error::{Error, Result};
use crate::pipeline::{RunKind, StageCounts};
use crate::source::{EmissionChannel, EmissionEvent};

const TS_MAGIC: &[u8; 8] = b"AFCTS001";
const EV_MAGIC: &[u8; 8] = b"AFCEV001";
const TS_SIZE: usize = 16;
const EV_SIZE: usize = 20;
const NO_PAIR: u64 = u64::MAX;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_timestamps(records: &[TimestampRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + records.len() * TS_SIZE);
    out.extend_from_slice(TS_MAGIC);
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        out.extend_from_slice(&r.time_ps.to_le_bytes());
        out.extend_from_slice(&r.clock_index.to_le_bytes());
        out.extend_from_slice(&r.mode_index.to_le_bytes());
        out.push(r.channel as u8);
        out.push(r.flags);
    }
    out
}

fn body<'a>(bytes: &'a [u8], magic: &[u8; 8], size: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < 16 || &bytes[..8] != magic {
        return Err(Error::Format(format!("{what}: bad header")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() != n.checked_mul(size).ok_or_else(|| Error::Format(format!("{what}: bad count")))? {
        return Err(Error::Format(format!("{what}: header says {n} records, file holds {} bytes", body.len())));
    }
    Ok(body)
}

pub fn decode_timestamps(bytes: &[u8]) -> Result<Vec<TimestampRecord>> {
    body(bytes, TS_MAGIC, TS_SIZE, "timestamp file")?
        .chunks_exact(TS_SIZE)
        .map(|c| {
            Ok(TimestampRecord {
                time_ps: u64::from_le_bytes(c[0..8].try_into().expect("8")),
                clock_index: u32::from_le_bytes(c[8..12].try_into().expect("4")),
                mode_index: u16::from_le_bytes(c[12..14].try_into().expect("2")),
                channel: DetectorChannel::from_u8(c[14])
                    .ok_or_else(|| Error::Format(format!("unknown detector channel {}", c[14])))?,
                flags: c[15],
            })
        })
        .collect()
}

pub fn encode_events(events: &[EmissionEvent]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + events.len() * EV_SIZE);
    out.extend_from_slice(EV_MAGIC);
    out.extend_from_slice(&(events.len() as u64).to_le_bytes());
    for e in events {
        out.extend_from_slice(&e.clock_index.to_le_bytes());
        out.extend_from_slice(&e.time_ps.to_le_bytes());
        out.extend_from_slice(&e.pair_id.unwrap_or(NO_PAIR).to_le_bytes());
        out.extend_from_slice(&e.mode_index.to_le_bytes());
        out.push(e.channel as u8);
        out.push(e.recalled as u8);
    }
    out
}

pub fn decode_events(bytes: &[u8]) -> Result<Vec<EmissionEvent>> {
    body(bytes, EV_MAGIC, EV_SIZE, "event file")?
        .chunks_exact(EV_SIZE)
        .map(|c| {
            let pair = u64::from_le_bytes(c[8..16].try_into().expect("8"));
            Ok(EmissionEvent {
                clock_index: u32::from_le_bytes(c[0..4].try_into().expect("4")),
                time_ps: u32::from_le_bytes(c[4..8].try_into().expect("4")),
                pair_id: (pair != NO_PAIR).then_some(pair),
                mode_index: u16::from_le_bytes(c[16..18].try_into().expect("2")),
                channel: EmissionChannel::from_u8(c[18])
                    .ok_or_else(|| Error::Format(format!("unknown emission channel {}", c[18])))?,
                recalled: c[19] != 0,
            })
        })
        .collect()
}

/// Writes `bytes` and returns their SHA-256.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<String> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(sha256_hex(bytes))
}

pub fn timestamps_csv(records: &[TimestampRecord]) -> String {
    let mut s = String::from("time_ps,clock_index,channel,mode_index,flags\n");
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.time_ps,
            r.clock_index,
            r.channel.name(),
            r.mode_index,
            r.flags
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub records: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: RunKind,
    pub duration_s: f64,
    /// Delay between signal and idler applied by the memory, in ps.
    pub signal_delay_ps: i64,
    pub gated_clocks: Vec<[u64; 2]>,
    pub counts: StageCounts,
    pub timestamps: Vec<(DetectorChannel, FileEntry)>,
    pub events: Option<FileEntry>,
}

impl RunManifest {
    pub fn gated(&self) -> Vec<Range<u64>> {
        self.gated_clocks.iter().map(|[a, b]| *a..*b).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub runs: Vec<RunManifest>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

/// Reads a timestamp file and checks it against its manifest entry.
pub fn load_timestamps(dir: &Path, entry: &FileEntry) -> Result<Vec<TimestampRecord>> {
    let bytes = fs::read(dir.join(&entry.name))?;
    let hash = sha256_hex(&bytes);
    if hash != entry.sha256 {
        return Err(Error::Format(format!("{}: content hash {hash} does not match manifest", entry.name)));
    }
    decode_timestamps(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_round_trip() {
        let r = vec![
            TimestampRecord {
                time_ps: 123_456_789_012,
                clock_index: 123_456,
                channel: DetectorChannel::SignalB,
                mode_index: 329,
                flags: 3,
            },
            TimestampRecord {
                time_ps: 5,
                clock_index: 0,
                channel: DetectorChannel::Idler,
                mode_index: u16::MAX,
                flags: 4,
            },
        ];
        let b = encode_timestamps(&r);
        assert_eq!(b.len(), 16 + 2 * 16);
        assert_eq!(decode_timestamps(&b).unwrap(), r);
        assert!(decode_timestamps(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn event_round_trip() {
        let e = vec![EmissionEvent {
            clock_index: 7,
            time_ps: 210_000,
            channel: EmissionChannel::Signal,
            mode_index: 3,
            pair_id: Some(99),
            recalled: true,
        }];
        assert_eq!(decode_events(&encode_events(&e)).unwrap(), e);
        let mut bad = encode_events(&e);
        bad[0] = b'X';
        assert!(matches!(decode_events(&bad), Err(Error::Format(_))));
    }
}
