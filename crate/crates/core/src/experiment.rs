//! End-to-end runs: simulate, persist, analyze. Shared by the CLI and tests.

use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    coincidence_histogram, count_heralded, count_unheralded, echo_peak, extract_efficiencies, g2_heralded,
    g2_unheralded, mode_hits, mode_matrix, BootstrapSpec, CoincidenceHistogram, ExtractedEfficiency, G2Result,
    HeraldedCounts, HistogramSpec, MatrixSummary, ModeMatrix, PeakEstimate, TrialCounts, UnheraldedCounts,
};
use crate::comb::MemoryPrediction;
use crate::config::ExperimentConfig;
use crate::detection::{DetectorChannel, MemoryAction, TimestampRecord};
use crate::error::{Error, Result};
use crate::io::{self, FileEntry, Manifest, RunManifest};
use crate::pipeline::{self, RunKind, RunOutput, RunSpec};

/// Search half-width around the expected delay when locating the echo peak.
pub const PEAK_SEARCH_PS: u64 = 2_000;

/// Config as persisted next to its outputs: the output directory is not part of the experiment.
pub fn canonical_config(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = ".".into();
    c.to_toml()
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    io::sha256_hex(canonical_config(cfg).as_bytes())
}

pub struct Simulation {
    pub prediction: MemoryPrediction,
    pub action: MemoryAction,
    pub runs: Vec<RunOutput>,
}

impl Simulation {
    pub fn run(&self, kind: RunKind) -> Option<&RunOutput> {
        self.runs.iter().find(|r| r.kind == kind)
    }
}

pub fn signal_delay_ps(kind: RunKind, action: &MemoryAction) -> i64 {
    match kind {
        RunKind::Before => 0,
        RunKind::After => action.storage_time_ps as i64,
    }
}

/// Runs the configured before/after passes.
pub fn simulate_runs(cfg: &ExperimentConfig, workers: usize) -> Result<Simulation> {
    cfg.validate()?;
    let (prediction, action) = cfg.memory_action()?;
    let inputs = cfg.pipeline_inputs(action);
    let mut runs = Vec::new();
    for (kind, duration_s) in [(RunKind::Before, cfg.run.before_s), (RunKind::After, cfg.run.after_s)] {
        if duration_s > 0.0 {
            let spec = RunSpec {
                kind,
                duration_s,
                splitter: cfg.run.splitter,
                keep_events: cfg.run.write_events,
            };
            runs.push(pipeline::run(&inputs, &spec, workers)?);
        }
    }
    Ok(Simulation {
        prediction,
        action,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub diagonal: MatrixSummary,
    pub off_diagonal: Option<MatrixSummary>,
    /// Diagonal coincidences per mode.
    pub mode_coincidences: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    /// Same-mode coincidences summed over modes.
    pub coincidences: u64,
    pub coincidences_per_trial: f64,
    pub singles_signal: u64,
    pub singles_idler: u64,
    /// Mode-0 cross-correlation (single-mode runs).
    pub g2: Option<G2Result>,
    pub matrix: Option<MatrixReport>,
    pub echo_peak: Option<PeakEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoReport {
    pub heralded_counts: HeraldedCounts,
    pub heralded: Option<G2Result>,
    pub unheralded_counts: UnheraldedCounts,
    pub unheralded: Option<G2Result>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: RunKind,
    pub trials: u64,
    pub signal_delay_ps: i64,
    pub clicks: Vec<(DetectorChannel, u64)>,
    pub cross: Option<CrossReport>,
    pub auto: Option<AutoReport>,
    /// Estimators that could not be evaluated, with the reason.
    pub undefined: Vec<String>,
}

pub struct RunAnalysis {
    pub report: RunReport,
    pub histogram: Option<CoincidenceHistogram>,
    pub matrix: Option<ModeMatrix>,
}

fn stream<'a>(streams: &'a [(DetectorChannel, Vec<TimestampRecord>)], ch: DetectorChannel) -> Option<&'a [TimestampRecord]> {
    streams.iter().find(|(c, _)| *c == ch).map(|(_, v)| v.as_slice())
}

fn note(undefined: &mut Vec<String>, what: &str, r: Result<G2Result>) -> Option<G2Result> {
    r.map_err(|e| undefined.push(format!("{what}: {e}"))).ok()
}

/// Correlation analysis of one run's detector streams.
pub fn analyze_run(
    cfg: &ExperimentConfig,
    kind: RunKind,
    streams: &[(DetectorChannel, Vec<TimestampRecord>)],
    gated: &[Range<u64>],
    signal_delay_ps: i64,
) -> Result<RunAnalysis> {
    let grid = cfg.mode_grid()?;
    let trials: u64 = gated.iter().map(|r| r.end - r.start).sum();
    let mut undefined = Vec::new();
    let idler = stream(streams, DetectorChannel::Idler).unwrap_or(&[]);
    let i_hits = mode_hits(idler, &grid, 0)?;

    let mut histogram = None;
    let mut matrix = None;
    let cross = match stream(streams, DetectorChannel::Signal) {
        Some(signal) => {
            let s_hits = mode_hits(signal, &grid, signal_delay_ps)?;
            let n = grid.n_modes as usize;
            let mm = mode_matrix(
                &s_hits,
                &i_hits,
                n,
                trials,
                &BootstrapSpec {
                    resamples: cfg.analysis.bootstrap_resamples,
                    seed: cfg.seed,
                },
            );
            let hist = coincidence_histogram(
                idler,
                signal,
                &HistogramSpec {
                    bin_ps: cfg.analysis.bin_ps,
                    half_range_ps: cfg.analysis.histogram_half_range_ps,
                    expected_delay_ps: signal_delay_ps,
                },
                grid.period_ps,
                trials,
            )?;
            let peak = match echo_peak(idler, signal, grid.period_ps, signal_delay_ps, PEAK_SEARCH_PS, grid.window_ps) {
                Ok(p) => Some(p),
                Err(e) => {
                    undefined.push(format!("echo_peak: {e}"));
                    None
                }
            };
            histogram = Some(hist);
            let report = match mm {
                Ok(mm) => {
                    let c = &mm.counts;
                    let g2 = if n == 1 { note(&mut undefined, "g2_cross", mm.cell(0, 0)) } else { None };
                    let r = CrossReport {
                        coincidences: c.diagonal_total(),
                        coincidences_per_trial: c.diagonal_total() as f64 / trials.max(1) as f64,
                        singles_signal: c.total_singles_s(),
                        singles_idler: c.total_singles_i(),
                        g2,
                        matrix: (n > 1).then(|| MatrixReport {
                            diagonal: mm.diagonal,
                            off_diagonal: mm.off_diagonal,
                            mode_coincidences: (0..n).map(|m| c.coincidence(m, m)).collect(),
                        }),
                        echo_peak: peak,
                    };
                    if n > 1 {
                        matrix = Some(mm);
                    }
                    r
                }
                Err(e) => {
                    undefined.push(format!("mode_matrix: {e}"));
                    let sum = |h: &[crate::analysis::ModeHit]| h.len() as u64;
                    CrossReport {
                        coincidences: 0,
                        coincidences_per_trial: 0.0,
                        singles_signal: sum(&s_hits),
                        singles_idler: sum(&i_hits),
                        g2: None,
                        matrix: None,
                        echo_peak: peak,
                    }
                }
            };
            Some(report)
        }
        None => None,
    };

    let auto = match (stream(streams, DetectorChannel::SignalA), stream(streams, DetectorChannel::SignalB)) {
        (Some(a), Some(b)) => {
            let s1 = mode_hits(a, &grid, signal_delay_ps)?;
            let s2 = mode_hits(b, &grid, signal_delay_ps)?;
            let h = count_heralded(&i_hits, &s1, &s2);
            let u = count_unheralded(&s1, &s2, gated);
            Some(AutoReport {
                heralded: note(&mut undefined, "g2_heralded", g2_heralded(h.c_is1s2, h.c_i, h.c_is1, h.c_is2)),
                heralded_counts: h,
                unheralded: note(&mut undefined, "g2_unheralded", g2_unheralded(u.c_s1s2, u.accidental)),
                unheralded_counts: u,
            })
        }
        _ => None,
    };

    Ok(RunAnalysis {
        report: RunReport {
            kind,
            trials,
            signal_delay_ps,
            clicks: streams.iter().map(|(c, v)| (*c, v.len() as u64)).collect(),
            cross,
            auto,
            undefined,
        },
        histogram,
        matrix,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub before: TrialCounts,
    pub after: TrialCounts,
    pub extracted: Option<ExtractedEfficiency>,
    pub model: MemoryPrediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_hash: String,
    /// Content hashes of the analysed streams.
    pub inputs: Vec<(String, String)>,
    pub memory_action: MemoryAction,
    pub runs: Vec<RunReport>,
    pub efficiency: Option<EfficiencyReport>,
    pub warnings: Vec<String>,
}

pub struct Analysis {
    pub report: Report,
    pub runs: Vec<RunAnalysis>,
}

/// Full analysis given each run's streams, gated clocks and signal delay.
pub fn analyze(
    cfg: &ExperimentConfig,
    runs: &[(RunKind, &[(DetectorChannel, Vec<TimestampRecord>)], Vec<Range<u64>>, i64)],
    inputs: Vec<(String, String)>,
) -> Result<Analysis> {
    let (prediction, action) = cfg.memory_action()?;
    let analyses = runs
        .iter()
        .map(|(kind, streams, gated, delay)| analyze_run(cfg, *kind, streams, gated, *delay))
        .collect::<Result<Vec<_>>>()?;
    let counts = |kind: RunKind| {
        analyses.iter().find(|a| a.report.kind == kind).and_then(|a| {
            a.report.cross.as_ref().map(|c| TrialCounts {
                counts: c.coincidences,
                trials: a.report.trials,
            })
        })
    };
    let mut warnings = cfg.warnings();
    let efficiency = match (counts(RunKind::Before), counts(RunKind::After)) {
        (Some(before), Some(after)) => {
            let extracted = match extract_efficiencies(
                before,
                after,
                cfg.memory.transmission,
                prediction.breakdown.filter_overlap,
                action.storage_time_ps as f64 / 1e3,
            ) {
                Ok(x) => Some(x),
                Err(e) => {
                    warnings.push(format!("efficiency extraction: {e}"));
                    None
                }
            };
            Some(EfficiencyReport {
                before,
                after,
                extracted,
                model: prediction,
            })
        }
        _ => None,
    };
    Ok(Analysis {
        report: Report {
            config_hash: config_hash(cfg),
            inputs,
            memory_action: action,
            runs: analyses.iter().map(|a| a.report.clone()).collect(),
            efficiency,
            warnings,
        },
        runs: analyses,
    })
}

fn ts_name(kind: RunKind, ch: DetectorChannel) -> String {
    format!("{}_{}.ts", kind.name(), ch.name())
}

/// Writes report.json, histogram and matrix CSVs into `dir`.
pub fn write_analysis(dir: &Path, analysis: &Analysis) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(&analysis.report).map_err(|e| Error::Format(e.to_string()))?;
    io::write_file(&dir.join("report.json"), (json + "\n").as_bytes())?;
    for a in &analysis.runs {
        let k = a.report.kind.name();
        if let Some(h) = &a.histogram {
            io::write_file(&dir.join(format!("histogram_{k}.csv")), h.to_csv().as_bytes())?;
        }
        if let Some(m) = &a.matrix {
            io::write_file(&dir.join(format!("mode_matrix_{k}.csv")), m.to_csv().as_bytes())?;
        }
    }
    Ok(())
}

/// Persists streams, events, config and manifest, then analyses and writes reports.
pub fn write_simulation(dir: &Path, cfg: &ExperimentConfig, sim: &Simulation) -> Result<(Manifest, Analysis)> {
    fs::create_dir_all(dir)?;
    io::write_file(&dir.join("config.toml"), canonical_config(cfg).as_bytes())?;
    let mut runs = Vec::new();
    let mut inputs = Vec::new();
    for r in &sim.runs {
        let mut timestamps = Vec::new();
        for (ch, recs) in &r.streams {
            let name = ts_name(r.kind, *ch);
            let sha256 = io::write_file(&dir.join(&name), &io::encode_timestamps(recs))?;
            inputs.push((name.clone(), sha256.clone()));
            timestamps.push((
                *ch,
                FileEntry {
                    name,
                    records: recs.len() as u64,
                    sha256,
                },
            ));
        }
        let events = match &r.events {
            Some(ev) => {
                let name = format!("{}_events.ev", r.kind.name());
                let sha256 = io::write_file(&dir.join(&name), &io::encode_events(ev))?;
                Some(FileEntry {
                    name,
                    records: ev.len() as u64,
                    sha256,
                })
            }
            None => None,
        };
        runs.push(RunManifest {
            kind: r.kind,
            duration_s: r.duration_s,
            signal_delay_ps: signal_delay_ps(r.kind, &sim.action),
            gated_clocks: r.gated.iter().map(|g| [g.start, g.end]).collect(),
            counts: r.counts.clone(),
            timestamps,
            events,
        });
    }
    let manifest = Manifest {
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        runs,
        warnings: cfg.warnings(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    io::write_file(&dir.join("manifest.json"), (json + "\n").as_bytes())?;
    let run_refs: Vec<_> = sim
        .runs
        .iter()
        .map(|r| (r.kind, r.streams.as_slice(), r.gated.clone(), signal_delay_ps(r.kind, &sim.action)))
        .collect();
    let analysis = analyze(cfg, &run_refs, inputs)?;
    write_analysis(dir, &analysis)?;
    Ok((manifest, analysis))
}

/// Re-analyses persisted streams described by `dir/manifest.json`.
pub fn analyze_directory(dir: &Path, cfg: &ExperimentConfig) -> Result<Analysis> {
    let manifest = Manifest::load(&dir.join("manifest.json"))?;
    let mut loaded = Vec::new();
    let mut inputs = Vec::new();
    for r in &manifest.runs {
        let mut streams = Vec::new();
        for (ch, entry) in &r.timestamps {
            streams.push((*ch, io::load_timestamps(dir, entry)?));
            inputs.push((entry.name.clone(), entry.sha256.clone()));
        }
        loaded.push((r.kind, streams, r.gated(), r.signal_delay_ps));
    }
    let refs: Vec<_> = loaded
        .iter()
        .map(|(k, s, g, d)| (*k, s.as_slice(), g.clone(), *d))
        .collect();
    analyze(cfg, &refs, inputs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub storage_time_ns: f64,
    pub spacing_mhz: f64,
    pub internal: f64,
    pub system: f64,
    /// Simulated before/after coincidence ratio and its error.
    pub simulated_system: Option<(f64, f64)>,
    pub simulated_internal: Option<f64>,
    pub simulated_internal_fixed_factor: Option<f64>,
}

/// Internal and system efficiency versus storage time. With `simulate`, each
/// point also runs the after-storage pipeline against one shared before run.
pub fn storage_sweep(cfg: &ExperimentConfig, times_ns: &[f64], simulate: bool, workers: usize) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let model = cfg.memory_model();
    let before = if simulate {
        let mut c = cfg.clone();
        c.run.after_s = 0.0;
        c.run.write_events = false;
        let sim = simulate_runs(&c, workers)?;
        let r = &sim.runs[0];
        Some(coincidence_counts(&c, r, 0)?)
    } else {
        None
    };
    times_ns
        .iter()
        .map(|&t| {
            let pred = model.with_storage_time(t)?.evaluate()?;
            let mut row = SweepRow {
                storage_time_ns: t,
                spacing_mhz: 1e3 / t,
                internal: pred.breakdown.internal,
                system: pred.breakdown.system,
                simulated_system: None,
                simulated_internal: None,
                simulated_internal_fixed_factor: None,
            };
            if let Some(before) = before {
                let mut c = cfg.clone();
                let comb = crate::comb::calibrate::comb_for_storage_time(&c.comb.params(), t)?;
                c.comb.spacing_mhz = comb.spacing;
                c.comb.tooth_fwhm_mhz = comb.tooth_fwhm;
                c.comb.grid_resolution_mhz = comb.grid_resolution;
                c.memory.storage_time_ns = None;
                c.run.before_s = 0.0;
                c.run.write_events = false;
                let sim = simulate_runs(&c, workers)?;
                let r = &sim.runs[0];
                let after = coincidence_counts(&c, r, signal_delay_ps(r.kind, &sim.action))?;
                let x = extract_efficiencies(before, after, c.memory.transmission, pred.breakdown.filter_overlap, t)?;
                row.simulated_system = Some((x.breakdown.system, x.system_std_error));
                row.simulated_internal = Some(x.breakdown.internal);
                row.simulated_internal_fixed_factor = Some(x.internal_fixed_factor);
            }
            Ok(row)
        })
        .collect()
}

fn coincidence_counts(cfg: &ExperimentConfig, r: &RunOutput, delay: i64) -> Result<TrialCounts> {
    let a = analyze_run(cfg, r.kind, &r.streams, &r.gated, delay)?;
    Ok(TrialCounts {
        counts: a.report.cross.map_or(0, |c| c.coincidences),
        trials: a.report.trials,
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6e}"));
    let mut out = String::from(
        "storage_time_ns,spacing_mhz,internal,system,sim_system,sim_system_err,sim_internal,sim_internal_fixed_factor\n",
    );
    for r in rows {
        out += &format!(
            "{},{:.6},{:.6e},{:.6e},{},{},{},{}\n",
            r.storage_time_ns,
            r.spacing_mhz,
            r.internal,
            r.system,
            opt(r.simulated_system.map(|s| s.0)),
            opt(r.simulated_system.map(|s| s.1)),
            opt(r.simulated_internal),
            opt(r.simulated_internal_fixed_factor),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.run.before_s = 1.0;
        c.run.after_s = 1.0;
        c.analysis.bootstrap_resamples = 10;
        c
    }

    #[test]
    fn reanalysis_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config();
        let sim = simulate_runs(&cfg, 1).unwrap();
        write_simulation(dir.path(), &cfg, &sim).unwrap();
        let again = analyze_directory(dir.path(), &cfg).unwrap();
        let out = dir.path().join("re");
        write_analysis(&out, &again).unwrap();
        for f in ["report.json", "histogram_before.csv", "histogram_after.csv"] {
            assert_eq!(
                fs::read(dir.path().join(f)).unwrap(),
                fs::read(out.join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn sweep_model_rows() {
        let rows = storage_sweep(&ExperimentConfig::default(), &[160.0, 200.0], false, 1).unwrap();
        assert!((rows[1].internal - 0.0283).abs() < 2e-4);
        assert!(rows[0].internal > rows[1].internal);
        assert_eq!(sweep_csv(&rows).lines().count(), 3);
    }

    #[test]
    fn empty_streams_give_zero_counts() {
        let cfg = small_config();
        let empty: Vec<(DetectorChannel, Vec<TimestampRecord>)> =
            vec![(DetectorChannel::Idler, vec![]), (DetectorChannel::Signal, vec![])];
        let a = analyze(&cfg, &[(RunKind::Before, &empty, vec![0..100], 0)], vec![]).unwrap();
        let r = &a.report.runs[0];
        assert_eq!(r.trials, 100);
        assert!(!r.undefined.is_empty());
        assert_eq!(r.cross.as_ref().map(|c| c.coincidences), Some(0));
    }
}
