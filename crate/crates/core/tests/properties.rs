use afc_core::analysis::{
    coincidence_histogram, g2_cross, histogram_oracle, matrix_counts, mode_hits, mode_matrix, BootstrapSpec,
    HistogramSpec, ModeGrid, ModeHit,
};
use afc_core::comb::{echo_response, gaussian_pulse, transfer_function, CombParams, CombProfile, ToothShape};
use afc_core::detection::{ChannelModel, DetectorChannel, MemoryAction, TimestampRecord, TimingSequence};
use afc_core::fit::FitModel;
use afc_core::io::encode_timestamps;
use afc_core::pipeline::{run, PipelineInputs, RunKind, RunSpec};
use afc_core::source::SourceConfig;
use afc_core::spectral::to_centered_spectrum;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PERIOD: u64 = 1_000_000;

fn stream(times: Vec<u64>, channel: DetectorChannel) -> Vec<TimestampRecord> {
    let mut t = times;
    t.sort_unstable();
    t.dedup();
    t.into_iter()
        .map(|time_ps| TimestampRecord {
            time_ps,
            clock_index: (time_ps / PERIOD) as u32,
            channel,
            mode_index: 0,
            flags: 0,
        })
        .collect()
}

fn hits(raw: Vec<(u64, u16)>) -> Vec<ModeHit> {
    let mut h: Vec<ModeHit> = raw.into_iter().map(|(clock, mode)| ModeHit { clock, mode }).collect();
    h.sort_unstable();
    h.dedup();
    h
}

fn multimode_inputs(mu: f64, k: f64, n_modes: u32, dead_ns: f64, seed: u64) -> PipelineInputs {
    PipelineInputs {
        source: SourceConfig {
            mean_pairs: mu,
            schmidt_modes: k,
            noise_signal: 0.2 * mu,
            noise_idler: 0.2 * mu,
            n_modes,
            ..SourceConfig::default()
        },
        memory: MemoryAction::bypass(),
        signal: ChannelModel {
            efficiency: 0.3,
            dead_time_ns: dead_ns,
            ..ChannelModel::default()
        },
        idler: ChannelModel {
            efficiency: 0.4,
            dead_time_ns: dead_ns,
            ..ChannelModel::default()
        },
        timing: TimingSequence::default(),
        seed,
    }
}

fn before(duration_s: f64) -> RunSpec {
    RunSpec {
        kind: RunKind::Before,
        duration_s,
        splitter: false,
        keep_events: false,
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn histogram_matches_all_pairs_oracle(
        a in prop::collection::vec(0u64..20 * PERIOD, 0..400),
        b in prop::collection::vec(0u64..20 * PERIOD, 0..400),
        bin in 1u64..500,
        half_bins in 1u64..600,
        expected in -200_000i64..200_000,
    ) {
        let a = stream(a, DetectorChannel::Idler);
        let b = stream(b, DetectorChannel::Signal);
        let spec = HistogramSpec { bin_ps: bin, half_range_ps: bin * half_bins, expected_delay_ps: expected };
        let fast = coincidence_histogram(&a, &b, &spec, PERIOD, 20).unwrap();
        prop_assert_eq!(fast, histogram_oracle(&a, &b, &spec, PERIOD, 20));
    }

    #[test]
    fn matrix_cell_equals_filtered_estimator(
        s in prop::collection::vec((0u64..200, 0u16..4), 0..300),
        i in prop::collection::vec((0u64..200, 0u16..4), 0..300),
        m in 0usize..4,
        n in 0usize..4,
    ) {
        let (s, i) = (hits(s), hits(i));
        let mm = mode_matrix(&s, &i, 4, 200, &BootstrapSpec { resamples: 5, seed: 1 }).unwrap();
        let sm: Vec<u64> = s.iter().filter(|h| h.mode as usize == m).map(|h| h.clock).collect();
        let in_: Vec<u64> = i.iter().filter(|h| h.mode as usize == n).map(|h| h.clock).collect();
        let c_si = sm.iter().filter(|c| in_.binary_search(c).is_ok()).count() as u64;
        let counts = &mm.counts;
        prop_assert_eq!(counts.coincidence(m, n), c_si);
        prop_assert_eq!(counts.singles_s[m], sm.len() as u64);
        prop_assert_eq!(counts.singles_i[n], in_.len() as u64);
        match (mm.cell(m, n), g2_cross(c_si, sm.len() as u64, in_.len() as u64, 200)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn estimator_scale_invariance(
        c_si in 50u64..5_000,
        c_s in 5_000u64..50_000,
        c_i in 5_000u64..50_000,
        trials in 1_000_000u64..10_000_000,
    ) {
        let full = g2_cross(2 * c_si, 2 * c_s, 2 * c_i, 2 * trials).unwrap();
        let half = g2_cross(c_si, c_s, c_i, trials).unwrap();
        prop_assert!((full.value - half.value).abs() <= 1e-12 * full.value);
        let r = half.std_error / full.std_error;
        prop_assert!((r / std::f64::consts::SQRT_2 - 1.0).abs() < 0.05, "{}", r);
    }

    #[test]
    fn gradients_match_central_differences(
        which in 0usize..5,
        u in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let lerp = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * u[k];
        let (model, p, x) = match which {
            0 => (FitModel::DoubleExp, vec![lerp(0, 0.1, 1.0), lerp(1, 0.2, 2.0), lerp(2, 0.1, 1.0), lerp(3, 5.0, 50.0)], lerp(4, 0.0, 5.0)),
            1 => (FitModel::StretchedEcho, vec![lerp(0, 0.5, 2.0), lerp(1, 20.0, 200.0), lerp(2, 1.0, 3.0)], lerp(4, 1.0, 60.0)),
            2 => (FitModel::Quadratic, vec![lerp(0, -2.0, 2.0), lerp(1, -2.0, 2.0), lerp(2, -2.0, 2.0)], lerp(4, -3.0, 3.0)),
            3 => (FitModel::Inverse, vec![lerp(0, 1.0, 500.0), lerp(1, -2.0, 2.0)], lerp(4, 1.0, 100.0)),
            _ => (FitModel::Linear, vec![lerp(0, -2.0, 2.0), lerp(1, -2.0, 2.0)], lerp(4, -10.0, 10.0)),
        };
        let mut g = vec![0.0; p.len()];
        model.gradient(x, &p, &mut g);
        let f0 = model.eval(x, &p).abs();
        for k in 0..p.len() {
            let h = 1e-5 * p[k].abs().max(1e-3);
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[k] += h;
            lo[k] -= h;
            let fd = (model.eval(x, &hi) - model.eval(x, &lo)) / (2.0 * h);
            // second term: roundoff floor of the difference quotient itself
            let tol = 1e-6 * g[k].abs() + 1e-12 * f0.max(1.0) / h;
            prop_assert!((g[k] - fd).abs() <= tol, "{:?} p{} analytic {} fd {}", model, k, g[k], fd);
        }
    }

    #[test]
    fn echo_response_conserves_energy(
        peak_od in 0.0f64..6.0,
        background in 0.0f64..0.5,
        finesse in 2.0f64..6.0,
        fwhm_ps in 150.0f64..600.0,
        square in any::<bool>(),
    ) {
        let p = CombParams {
            peak_od,
            background_od: background,
            tooth_fwhm: 5.0 / finesse,
            shape: if square { ToothShape::Square } else { ToothShape::Gaussian },
            bandwidth_ghz: 1.0,
            grid_resolution: 0.05,
            ..CombParams::paper_default()
        };
        let tf = transfer_function(&CombProfile::build(p).unwrap());
        let x = gaussian_pulse(&tf, fwhm_ps);
        let y = echo_response(&tf, &x).unwrap();
        let e_in: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        let e_out: f64 = y.iter().map(|c| c.norm_sqr()).sum();
        let e_spec: f64 = to_centered_spectrum(&x)
            .iter()
            .zip(tf.amplitude())
            .map(|(s, h)| s.norm_sqr() * h.norm_sqr())
            .sum::<f64>()
            / x.len() as f64;
        prop_assert!(e_out <= e_in * (1.0 + 1e-12));
        prop_assert!(((e_out - e_spec) / e_in).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn dead_time_gap_is_enforced(dead_ns in 1.0f64..200.0, seed in any::<u64>()) {
        let out = run(&multimode_inputs(0.05, 1.56, 40, dead_ns, seed), &before(0.3), 1).unwrap();
        let dead = (dead_ns * 1e3).round() as u64;
        for (_, s) in &out.streams {
            for w in s.windows(2) {
                prop_assert!(w[1].time_ps - w[0].time_ps >= dead);
            }
        }
    }

    #[test]
    fn worker_count_is_invisible(seed in any::<u64>(), workers in 2usize..6) {
        let inp = multimode_inputs(0.02, 1.56, 20, 50.0, seed);
        let a = run(&inp, &before(0.6), 1).unwrap();
        let b = run(&inp, &before(0.6), workers).unwrap();
        prop_assert_eq!(a.streams.len(), b.streams.len());
        for ((ca, sa), (cb, sb)) in a.streams.iter().zip(&b.streams) {
            prop_assert_eq!(ca, cb);
            prop_assert_eq!(encode_timestamps(sa), encode_timestamps(sb));
        }
    }

    #[test]
    fn uncorrelated_modes_respect_classical_bound(mu in 0.005f64..0.2, k in 1.0f64..5.0, seed in any::<u64>()) {
        let inp = multimode_inputs(mu, k, 6, 50.0, seed);
        let out = run(&inp, &before(0.6), 1).unwrap();
        let grid = ModeGrid::from_source(&inp.source, 600).unwrap();
        let s = mode_hits(out.stream(DetectorChannel::Signal), &grid, 0).unwrap();
        let i = mode_hits(out.stream(DetectorChannel::Idler), &grid, 0).unwrap();
        let c = matrix_counts(&s, &i, 6, out.trials()).unwrap();
        for m in 0..6 {
            for n in (0..6).filter(|&n| n != m) {
                if let Ok(g) = g2_cross(c.coincidence(m, n), c.singles_s[m], c.singles_i[n], c.trials) {
                    prop_assert!(g.value <= 2.0 + 3.0 * g.std_error, "cell ({}, {}) = {:?}", m, n, g);
                }
            }
        }
    }
}

/// Independent homogeneous Poisson arrivals on two detectors, windowed into
/// one mode per clock. Only a segment around the window is generated.
fn poisson_g2(rate_hz: f64, window_ps: u64, seed: u64) -> (f64, f64) {
    const SEGMENT_PS: f64 = 4_000.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clocks = 400_000u64;
    let mean_gap = 1e12 / rate_hz;
    let start = PERIOD / 2 - SEGMENT_PS as u64 / 2;
    let mut draw = |ch| {
        let mut v = Vec::new();
        for c in 0..clocks {
            let mut t = 0.0f64;
            loop {
                t += -mean_gap * (1.0 - rng.random::<f64>()).ln();
                if t >= SEGMENT_PS {
                    break;
                }
                v.push(c * PERIOD + start + t as u64);
            }
        }
        stream(v, ch)
    };
    let (a, b) = (draw(DetectorChannel::Signal), draw(DetectorChannel::Idler));
    let grid = ModeGrid {
        period_ps: PERIOD,
        first_offset_ps: PERIOD / 2,
        separation_ps: 600,
        n_modes: 1,
        window_ps,
    };
    let s = mode_hits(&a, &grid, 0).unwrap();
    let i = mode_hits(&b, &grid, 0).unwrap();
    let c = matrix_counts(&s, &i, 1, clocks).unwrap();
    let g = g2_cross(c.coincidence(0, 0), c.singles_s[0], c.singles_i[0], clocks).unwrap();
    (g.value, g.std_error)
}

#[test]
fn independent_poisson_streams_are_uncorrelated() {
    for (k, rate) in [1e7, 1e8, 1e9].into_iter().enumerate() {
        for window in [300u64, 600] {
            let (g, e) = poisson_g2(rate, window, 10 + k as u64);
            assert!((g - 1.0).abs() <= 3.0 * e, "rate {rate} window {window}: {g} +/- {e}");
        }
    }
}
