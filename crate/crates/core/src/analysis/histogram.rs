use serde::{Deserialize, Serialize};

use crate::detection::TimestampRecord;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bin_ps: u64,
    /// Delays `d - expected` in `[-half_range_ps, half_range_ps)` are binned.
    pub half_range_ps: u64,
    pub expected_delay_ps: i64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            bin_ps: super::DEFAULT_BIN_PS,
            half_range_ps: 5_000,
            expected_delay_ps: 0,
        }
    }
}

impl HistogramSpec {
    fn validate(&self) -> Result<()> {
        if self.bin_ps == 0 {
            return Err(invalid("bin_ps", "must be positive"));
        }
        if self.half_range_ps == 0 || self.half_range_ps % self.bin_ps != 0 {
            return Err(invalid("half_range_ps", "must be a positive multiple of the bin width"));
        }
        Ok(())
    }

    fn n_bins(&self) -> usize {
        (2 * self.half_range_ps / self.bin_ps) as usize
    }

    fn bin_of(&self, delay: i64) -> Option<usize> {
        let d = delay - self.expected_delay_ps + self.half_range_ps as i64;
        (d >= 0 && d < 2 * self.half_range_ps as i64).then(|| (d as u64 / self.bin_ps) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width_ps: u64,
    /// Left edge of bin 0, as `time_b - time_a`.
    pub min_delay_ps: i64,
    pub counts: Vec<u64>,
    pub n_trials: u64,
}

impl CoincidenceHistogram {
    pub fn bin_center_ps(&self, k: usize) -> f64 {
        self.min_delay_ps as f64 + (k as f64 + 0.5) * self.bin_width_ps as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the bin holding delay `d`.
    pub fn bin_at(&self, d: i64) -> Option<usize> {
        let k = (d - self.min_delay_ps).div_euclid(self.bin_width_ps as i64);
        (k >= 0 && (k as usize) < self.counts.len()).then_some(k as usize)
    }

    pub fn argmax(&self) -> Option<usize> {
        let (k, &c) = self.counts.iter().enumerate().max_by_key(|(k, c)| (**c, std::cmp::Reverse(*k)))?;
        (c > 0).then_some(k)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("delay_ps,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let left = self.min_delay_ps + (k as u64 * self.bin_width_ps) as i64;
            s.push_str(&format!("{left},{c}\n"));
        }
        s
    }
}

fn check_sorted(r: &[TimestampRecord], what: &str) -> Result<()> {
    if r.windows(2).any(|w| w[1].time_ps < w[0].time_ps) {
        return Err(Error::Unsorted(format!("{what} stream")));
    }
    Ok(())
}

/// Calls `f(delay)` for every same-trial pair, merging the two streams clock by clock.
fn for_each_pair(a: &[TimestampRecord], b: &[TimestampRecord], period_ps: u64, mut f: impl FnMut(i64)) {
    let clock = |r: &TimestampRecord| r.time_ps / period_ps;
    let mut gb = b.chunk_by(|x, y| clock(x) == clock(y)).peekable();
    for ga in a.chunk_by(|x, y| clock(x) == clock(y)) {
        let c = clock(&ga[0]);
        while gb.peek().is_some_and(|g| clock(&g[0]) < c) {
            gb.next();
        }
        if let Some(g) = gb.peek().filter(|g| clock(&g[0]) == c) {
            for x in ga {
                for y in *g {
                    f(y.time_ps as i64 - x.time_ps as i64);
                }
            }
        }
    }
}

/// Start-stop histogram of `time_b - time_a` for pairs in the same clock trial.
pub fn coincidence_histogram(
    a: &[TimestampRecord],
    b: &[TimestampRecord],
    spec: &HistogramSpec,
    period_ps: u64,
    n_trials: u64,
) -> Result<CoincidenceHistogram> {
    spec.validate()?;
    check_sorted(a, "start")?;
    check_sorted(b, "stop")?;
    if period_ps == 0 {
        return Err(invalid("clock_period", "must be positive"));
    }
    let mut counts = vec![0u64; spec.n_bins()];
    for_each_pair(a, b, period_ps, |d| {
        if let Some(k) = spec.bin_of(d) {
            counts[k] += 1;
        }
    });
    Ok(CoincidenceHistogram {
        bin_width_ps: spec.bin_ps,
        min_delay_ps: spec.expected_delay_ps - spec.half_range_ps as i64,
        counts,
        n_trials,
    })
}

/// All-pairs reference for [`coincidence_histogram`].
pub fn histogram_oracle(
    a: &[TimestampRecord],
    b: &[TimestampRecord],
    spec: &HistogramSpec,
    period_ps: u64,
    n_trials: u64,
) -> CoincidenceHistogram {
    let mut counts = vec![0u64; spec.n_bins()];
    for x in a {
        for y in b {
            if x.time_ps / period_ps == y.time_ps / period_ps {
                if let Some(k) = spec.bin_of(y.time_ps as i64 - x.time_ps as i64) {
                    counts[k] += 1;
                }
            }
        }
    }
    CoincidenceHistogram {
        bin_width_ps: spec.bin_ps,
        min_delay_ps: spec.expected_delay_ps - spec.half_range_ps as i64,
        counts,
        n_trials,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakEstimate {
    /// Background-corrected centroid of `time_b - time_a`.
    pub delay_ps: f64,
    pub std_error_ps: f64,
    /// Gaussian-equivalent width from the second moment.
    pub fwhm_ps: f64,
    pub counts: u64,
    pub background_counts: f64,
}

/// Locates the coincidence peak within `expected ± search_ps` and returns
/// the centroid of raw pair delays within `window_ps` of the tallest bin,
/// minus a flat background taken from the rest of the search range.
pub fn echo_peak(
    a: &[TimestampRecord],
    b: &[TimestampRecord],
    period_ps: u64,
    expected_delay_ps: i64,
    search_ps: u64,
    window_ps: u64,
) -> Result<PeakEstimate> {
    let spec = HistogramSpec {
        bin_ps: super::DEFAULT_BIN_PS,
        half_range_ps: search_ps.div_ceil(super::DEFAULT_BIN_PS) * super::DEFAULT_BIN_PS,
        expected_delay_ps,
    };
    if 2 * window_ps >= 2 * spec.half_range_ps {
        return Err(invalid("window_ps", "peak window must be narrower than the search range"));
    }
    let hist = coincidence_histogram(a, b, &spec, period_ps, 0)?;
    let k = hist
        .argmax()
        .ok_or_else(|| Error::Undefined("no coincidences in the search range".into()))?;
    let centre = hist.bin_center_ps(k);
    let half = window_ps as f64 / 2.0;
    let lo = spec.expected_delay_ps as f64 - spec.half_range_ps as f64;
    let hi = spec.expected_delay_ps as f64 + spec.half_range_ps as f64;
    let (mut n, mut s1, mut s2, mut side) = (0u64, 0.0, 0.0, 0u64);
    for_each_pair(a, b, period_ps, |d| {
        let x = d as f64;
        if x < lo || x >= hi {
            return;
        }
        let r = x - centre;
        if r.abs() <= half {
            n += 1;
            s1 += r;
            s2 += r * r;
        } else if r.abs() >= window_ps as f64 {
            side += 1;
        }
    });
    let excluded = (centre + window_ps as f64).min(hi) - (centre - window_ps as f64).max(lo);
    let side_width = (hi - lo) - excluded;
    let bg = if side_width > 0.0 {
        side as f64 / side_width * window_ps as f64
    } else {
        0.0
    };
    // Flat background has zero first moment and W²/12 second moment about the centre.
    let signal = n as f64 - bg;
    if signal <= 0.0 {
        return Err(Error::Undefined("peak does not rise above background".into()));
    }
    let mean = s1 / signal;
    let second = (s2 - bg * (window_ps as f64).powi(2) / 12.0) / signal;
    let var = (second - mean * mean).max(0.0);
    Ok(PeakEstimate {
        delay_ps: centre + mean,
        std_error_ps: (var / signal).sqrt().max(spec.bin_ps as f64 / (12f64.sqrt() * signal.sqrt())),
        fwhm_ps: 2.0 * (2.0 * 2f64.ln()).sqrt() * var.sqrt(),
        counts: n,
        background_counts: bg,
    })
}
