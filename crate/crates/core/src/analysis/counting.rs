use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::detection::TimestampRecord;
use crate::error::{invalid, Error, Result};
use crate::source::SourceConfig;

/// Time-bin mode layout inside one clock period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeGrid {
    pub period_ps: u64,
    pub first_offset_ps: u64,
    pub separation_ps: u64,
    pub n_modes: u32,
    /// Full coincidence window centred on each mode.
    pub window_ps: u64,
}

impl ModeGrid {
    pub fn from_source(cfg: &SourceConfig, window_ps: u64) -> Result<Self> {
        cfg.validate()?;
        let g = ModeGrid {
            period_ps: cfg.period_ps(),
            first_offset_ps: cfg.first_mode_offset_ps.round() as u64,
            separation_ps: cfg.mode_separation_ps.round() as u64,
            n_modes: cfg.n_modes,
            window_ps,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_ps == 0 {
            return Err(invalid("window_ps", "must be positive"));
        }
        if self.n_modes > 1 && self.window_ps > self.separation_ps {
            return Err(invalid("window_ps", "windows of neighbouring modes overlap"));
        }
        if self.n_modes == 0 || self.n_modes as usize > u16::MAX as usize {
            return Err(invalid("n_modes", "must be in 1..65535"));
        }
        if self.period_ps == 0 {
            return Err(invalid("clock_period", "must be positive"));
        }
        Ok(())
    }

    /// Clock trial and mode of a click arriving `delay_ps` after its mode
    /// centre, if it falls inside a window.
    pub fn locate(&self, time_ps: u64, delay_ps: i64) -> Option<ModeHit> {
        let clock = time_ps / self.period_ps;
        let rel = (time_ps % self.period_ps) as i64 - self.first_offset_ps as i64 - delay_ps;
        let sep = self.separation_ps.max(1) as i64;
        let mode = (rel + sep / 2).div_euclid(sep);
        if mode < 0 || mode >= self.n_modes as i64 {
            return None;
        }
        let off = rel - mode * sep;
        // Half-open window [-W/2, W/2) so adjacent windows never share a click.
        let half = self.window_ps as i64;
        (2 * off >= -half && 2 * off < half).then_some(ModeHit {
            clock,
            mode: mode as u16,
        })
    }
}

/// A click assigned to a clock trial and time-bin mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeHit {
    pub clock: u64,
    pub mode: u16,
}

fn check_sorted(records: &[TimestampRecord], what: &str) -> Result<()> {
    if records.windows(2).any(|w| w[1].time_ps < w[0].time_ps) {
        return Err(Error::Unsorted(format!("{what} timestamps")));
    }
    Ok(())
}

/// Windowed mode hits of a time-sorted stream, sorted and deduplicated.
pub fn mode_hits(records: &[TimestampRecord], grid: &ModeGrid, delay_ps: i64) -> Result<Vec<ModeHit>> {
    grid.validate()?;
    check_sorted(records, "mode_hits")?;
    let mut out: Vec<ModeHit> = records.iter().filter_map(|r| grid.locate(r.time_ps, delay_ps)).collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Mode-resolved singles and coincidences between two hit sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCounts {
    pub n_modes: usize,
    pub trials: u64,
    pub singles_s: Vec<u64>,
    pub singles_i: Vec<u64>,
    /// Row-major `[m * n_modes + n]`: signal mode m with idler mode n.
    pub coincidences: Vec<u64>,
}

impl MatrixCounts {
    pub fn coincidence(&self, m: usize, n: usize) -> u64 {
        self.coincidences[m * self.n_modes + n]
    }

    pub fn diagonal_total(&self) -> u64 {
        (0..self.n_modes).map(|m| self.coincidence(m, m)).sum()
    }

    pub fn total_singles_s(&self) -> u64 {
        self.singles_s.iter().sum()
    }

    pub fn total_singles_i(&self) -> u64 {
        self.singles_i.iter().sum()
    }
}

fn clock_groups(h: &[ModeHit]) -> impl Iterator<Item = &[ModeHit]> {
    h.chunk_by(|a, b| a.clock == b.clock)
}

pub fn matrix_counts(s: &[ModeHit], i: &[ModeHit], n_modes: usize, trials: u64) -> Result<MatrixCounts> {
    for (name, h) in [("signal", s), ("idler", i)] {
        if h.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Unsorted(format!("{name} mode hits")));
        }
        if h.iter().any(|x| x.mode as usize >= n_modes) {
            return Err(invalid("n_modes", format!("{name} hit outside the {n_modes}-mode grid")));
        }
    }
    let mut out = MatrixCounts {
        n_modes,
        trials,
        singles_s: vec![0; n_modes],
        singles_i: vec![0; n_modes],
        coincidences: vec![0; n_modes * n_modes],
    };
    for x in s {
        out.singles_s[x.mode as usize] += 1;
    }
    for x in i {
        out.singles_i[x.mode as usize] += 1;
    }
    let mut gi = clock_groups(i).peekable();
    for gs in clock_groups(s) {
        let c = gs[0].clock;
        while gi.peek().is_some_and(|g| g[0].clock < c) {
            gi.next();
        }
        if let Some(g) = gi.peek().filter(|g| g[0].clock == c) {
            for a in gs {
                for b in *g {
                    out.coincidences[a.mode as usize * n_modes + b.mode as usize] += 1;
                }
            }
        }
    }
    Ok(out)
}

fn contains(h: &[ModeHit], x: ModeHit) -> bool {
    h.binary_search(&x).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeraldedCounts {
    pub c_i: u64,
    pub c_is1: u64,
    pub c_is2: u64,
    pub c_is1s2: u64,
}

/// Idler-heralded two- and three-fold counts, same trial and mode.
pub fn count_heralded(i: &[ModeHit], s1: &[ModeHit], s2: &[ModeHit]) -> HeraldedCounts {
    let mut c = HeraldedCounts {
        c_i: i.len() as u64,
        c_is1: 0,
        c_is2: 0,
        c_is1s2: 0,
    };
    for &x in i {
        let a = contains(s1, x);
        let b = contains(s2, x);
        c.c_is1 += a as u64;
        c.c_is2 += b as u64;
        c.c_is1s2 += (a && b) as u64;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnheraldedCounts {
    pub c_s1s2: u64,
    pub accidental: u64,
    /// Trials with a gated successor, over which both counts run.
    pub trials: u64,
}

/// `s1 ∧ s2` in the same trial against `s1` in trial k with `s2` in trial
/// k+1. Only trials whose successor is also in `gated` contribute.
pub fn count_unheralded(s1: &[ModeHit], s2: &[ModeHit], gated: &[Range<u64>]) -> UnheraldedCounts {
    let has_successor = |clock: u64| {
        let k = gated.partition_point(|r| r.end <= clock);
        gated.get(k).is_some_and(|r| r.start <= clock && clock + 1 < r.end)
    };
    let mut c = UnheraldedCounts {
        c_s1s2: 0,
        accidental: 0,
        trials: gated.iter().map(|r| (r.end - r.start).saturating_sub(1)).sum(),
    };
    for &x in s1 {
        if !has_successor(x.clock) {
            continue;
        }
        c.c_s1s2 += contains(s2, x) as u64;
        c.accidental += contains(
            s2,
            ModeHit {
                clock: x.clock + 1,
                mode: x.mode,
            },
        ) as u64;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::DetectorChannel;

    fn rec(t: u64) -> TimestampRecord {
        TimestampRecord {
            time_ps: t,
            clock_index: (t / 1_000_000) as u32,
            channel: DetectorChannel::Signal,
            mode_index: 0,
            flags: 0,
        }
    }

    fn grid(n: u32) -> ModeGrid {
        ModeGrid {
            period_ps: 1_000_000,
            first_offset_ps: 10_000,
            separation_ps: 600,
            n_modes: n,
            window_ps: 600,
        }
    }

    #[test]
    fn locate_respects_window_and_delay() {
        let g = grid(3);
        assert_eq!(g.locate(10_000, 0), Some(ModeHit { clock: 0, mode: 0 }));
        assert_eq!(g.locate(3_010_899, 0), Some(ModeHit { clock: 3, mode: 1 }));
        assert_eq!(g.locate(10_300, 0), Some(ModeHit { clock: 0, mode: 1 }));
        assert_eq!(g.locate(9_699, 0), None);
        assert_eq!(g.locate(210_000, 200_000), Some(ModeHit { clock: 0, mode: 0 }));
        assert_eq!(grid(1).locate(10_300, 0), None);
    }

    #[test]
    fn unsorted_stream_rejected() {
        assert!(matches!(mode_hits(&[rec(20), rec(10)], &grid(1), 0), Err(Error::Unsorted(_))));
    }

    #[test]
    fn toy_matrix_by_hand() {
        let h = |clock, mode| ModeHit { clock, mode };
        let s = [h(0, 0), h(1, 1), h(2, 0), h(2, 1)];
        let i = [h(0, 0), h(1, 0), h(2, 1), h(5, 1)];
        let m = matrix_counts(&s, &i, 2, 10).unwrap();
        assert_eq!(m.singles_s, vec![2, 2]);
        assert_eq!(m.singles_i, vec![2, 2]);
        // clock 0: (0,0); clock 1: (1,0); clock 2: (0,1), (1,1)
        assert_eq!(m.coincidences, vec![1, 1, 1, 1]);
        assert_eq!(m.diagonal_total(), 2);
    }

    #[test]
    fn heralded_and_unheralded_counts() {
        let h = |clock| ModeHit { clock, mode: 0 };
        let i = [h(1), h(2), h(3)];
        let s1 = [h(1), h(2), h(7)];
        let s2 = [h(2), h(3), h(8)];
        let c = count_heralded(&i, &s1, &s2);
        assert_eq!((c.c_i, c.c_is1, c.c_is2, c.c_is1s2), (3, 2, 2, 1));
        let u = count_unheralded(&s1, &s2, &[0..10]);
        assert_eq!(u.c_s1s2, 1);
        assert_eq!(u.accidental, 3);
        assert_eq!(u.trials, 9);
        // trial 7's successor 8 lies outside the gate
        let u = count_unheralded(&s1, &s2, &[0..8]);
        assert_eq!(u.accidental, 2);
    }
}
