use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use rayon::prelude::*;

use super::distribution::CountTable;
use super::{EmissionChannel, EmissionEvent, SourceConfig};
use crate::error::{invalid, Result};
use crate::rng::{stream, Stage};

/// Clock cycles per RNG block.
pub const BLOCK_CYCLES: u64 = 1 << 14;

/// Emission times are truncated at this many standard deviations.
pub const TRUNCATION_SIGMAS: f64 = 3.0;

/// Precomputed per-slot probabilities. A slot is one (clock, mode) pulse.
#[derive(Debug, Clone)]
pub struct SlotSampler {
    cfg: SourceConfig,
    pairs: CountTable,
    noise_s: CountTable,
    noise_i: CountTable,
    /// P(anything emitted in a slot).
    p_any: f64,
    /// P(pairs ≥ 1 | anything).
    p_pairs_given_any: f64,
    /// P(signal noise ≥ 1 | no pairs, anything).
    p_noise_s_given_noise: f64,
    sigma: f64,
}

impl SlotSampler {
    pub fn new(cfg: &SourceConfig) -> Result<Self> {
        cfg.validate()?;
        let pairs = CountTable::thermal(cfg.mean_pairs, cfg.schmidt_modes)?;
        let noise_s = CountTable::poisson(cfg.noise_signal)?;
        let noise_i = CountTable::poisson(cfg.noise_idler)?;
        let ln_none = pairs.p_zero().ln() - cfg.noise_signal - cfg.noise_idler;
        let p_any = -ln_none.exp_m1();
        let p_noise = -(-cfg.noise_signal - cfg.noise_idler).exp_m1();
        Ok(SlotSampler {
            p_pairs_given_any: pairs.p_nonzero() / p_any,
            p_noise_s_given_noise: if p_noise > 0.0 { noise_s.p_nonzero() / p_noise } else { 0.0 },
            p_any,
            pairs,
            noise_s,
            noise_i,
            sigma: cfg.sigma_ps(),
            cfg: cfg.clone(),
        })
    }

    pub fn pair_table(&self) -> &CountTable {
        &self.pairs
    }

    fn emission_time(&self, rng: &mut ChaCha8Rng, mode: u32, paired: bool) -> u32 {
        let offset = if paired {
            loop {
                let z: f64 = StandardNormal.sample(rng);
                if z.abs() <= TRUNCATION_SIGMAS {
                    break z * self.sigma;
                }
            }
        } else {
            (rng.random::<f64>() * 2.0 - 1.0) * TRUNCATION_SIGMAS * self.sigma
        };
        (self.cfg.mode_center_ps(mode) + offset).round() as u32
    }

    /// Appends the photons of one non-empty slot.
    fn fill_slot(&self, rng: &mut ChaCha8Rng, clock: u32, mode: u32, slot: u64, out: &mut Vec<EmissionEvent>) {
        let (n_pairs, n_s, n_i) = if rng.random::<f64>() < self.p_pairs_given_any {
            (
                self.pairs.sample_nonzero(rng.random()),
                self.noise_s.sample(rng.random()),
                self.noise_i.sample(rng.random()),
            )
        } else if rng.random::<f64>() < self.p_noise_s_given_noise {
            (0, self.noise_s.sample_nonzero(rng.random()), self.noise_i.sample(rng.random()))
        } else {
            (0, 0, self.noise_i.sample_nonzero(rng.random()))
        };
        let ev = |channel, time_ps, pair_id| EmissionEvent {
            clock_index: clock,
            time_ps,
            channel,
            mode_index: mode as u16,
            pair_id,
            recalled: false,
        };
        for k in 0..n_pairs {
            let t = self.emission_time(rng, mode, true);
            let id = Some((slot << 9) | k as u64);
            out.push(ev(EmissionChannel::Signal, t, id));
            out.push(ev(EmissionChannel::Idler, t, id));
        }
        for _ in 0..n_s {
            let t = self.emission_time(rng, mode, false);
            out.push(ev(EmissionChannel::NoiseSignal, t, None));
        }
        for _ in 0..n_i {
            let t = self.emission_time(rng, mode, false);
            out.push(ev(EmissionChannel::NoiseIdler, t, None));
        }
    }
}

/// Emissions for the clocks in `clocks`, drawn from the stream of `block`.
///
/// Empty slots are skipped geometrically, so the cost scales with the number
/// of emitted photons rather than the number of pulses. Output is sorted.
pub fn sample_block(sampler: &SlotSampler, seed: u64, block: u64, clocks: Range<u64>) -> Vec<EmissionEvent> {
    let mut rng = stream(seed, Stage::Source, block);
    let m = sampler.cfg.n_modes as u64;
    let n_slots = (clocks.end - clocks.start) * m;
    let mut out = Vec::new();
    if n_slots == 0 || sampler.p_any <= 0.0 {
        return out;
    }
    let geo = (sampler.p_any < 1.0).then(|| Geometric::new(sampler.p_any).expect("p in (0,1)"));
    let mut s: u64 = 0;
    loop {
        let skip = geo.as_ref().map_or(0, |g| g.sample(&mut rng));
        s = match s.checked_add(skip) {
            Some(v) if v < n_slots => v,
            _ => break,
        };
        let clock = clocks.start + s / m;
        let mode = (s % m) as u32;
        sampler.fill_slot(&mut rng, clock as u32, mode, clock * m + mode as u64, &mut out);
        s += 1;
    }
    out.sort_unstable();
    out
}

/// Emissions for clocks `0..n_cycles`, generated block-parallel and merged
/// in `(clock, time)` order. Identical for any rayon pool size.
pub fn sample_emissions(cfg: &SourceConfig, n_cycles: u64, seed: u64) -> Result<Vec<EmissionEvent>> {
    if n_cycles == 0 {
        return Err(invalid("n_cycles", "must be >= 1"));
    }
    if n_cycles > u32::MAX as u64 {
        return Err(invalid("n_cycles", "clock index must fit in 32 bits"));
    }
    let sampler = SlotSampler::new(cfg)?;
    let n_blocks = n_cycles.div_ceil(BLOCK_CYCLES);
    let blocks: Vec<Vec<EmissionEvent>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK_CYCLES;
            sample_block(&sampler, seed, b, lo..(lo + BLOCK_CYCLES).min(n_cycles))
        })
        .collect();
    Ok(blocks.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mu: f64) -> SourceConfig {
        SourceConfig {
            mean_pairs: mu,
            ..SourceConfig::default()
        }
    }

    #[test]
    fn pairs_share_slot_and_time() {
        let ev = sample_emissions(&cfg(0.2), 5000, 1).unwrap();
        let mut by_id = std::collections::HashMap::new();
        for e in ev.iter().filter(|e| e.pair_id.is_some()) {
            by_id.entry(e.pair_id).or_insert_with(Vec::new).push(*e);
        }
        assert!(!by_id.is_empty());
        for v in by_id.values() {
            assert_eq!(v.len(), 2);
            assert_eq!((v[0].clock_index, v[0].mode_index, v[0].time_ps), (v[1].clock_index, v[1].mode_index, v[1].time_ps));
        }
    }

    #[test]
    fn times_within_three_sigma() {
        let c = SourceConfig {
            n_modes: 330,
            noise_signal: 0.05,
            noise_idler: 0.05,
            ..cfg(0.05)
        };
        let s = c.sigma_ps();
        for e in sample_emissions(&c, 200, 3).unwrap() {
            let d = e.time_ps as f64 - c.mode_center_ps(e.mode_index as u32);
            assert!(d.abs() <= 3.0 * s + 0.5);
        }
    }

    #[test]
    fn vanishing_source() {
        let ev = sample_emissions(&cfg(1e-9), 1_000_000, 9).unwrap();
        assert!(ev.len() <= 4, "{}", ev.len());
    }

    #[test]
    fn rejects_multi_pair_regime() {
        assert!(SlotSampler::new(&cfg(1.5)).is_err());
        assert!(sample_emissions(&cfg(0.1), 0, 1).is_err());
    }
}
