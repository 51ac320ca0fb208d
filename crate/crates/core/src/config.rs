//! Declarative experiment description, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{ModeGrid, DEFAULT_BIN_PS, DEFAULT_WINDOW_PS};
use crate::comb::calibrate::{reported_side_holes, DEFAULT_BACKGROUND_OD, DEFAULT_PEAK_OD, DEFAULT_PENALTY_STRENGTH};
use crate::comb::{CombParams, MemoryModel, MemoryPrediction, PhotonSpectrum, SideHole, SideHolePenalty, ToothShape};
use crate::detection::{ChannelModel, MemoryAction, TimingSequence};
use crate::error::{Error, Result};
use crate::pipeline::PipelineInputs;
use crate::source::SourceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CombConfig {
    pub spacing_mhz: f64,
    pub tooth_fwhm_mhz: f64,
    pub peak_od: f64,
    pub background_od: f64,
    pub bandwidth_ghz: f64,
    pub shape: ToothShape,
    pub grid_resolution_mhz: f64,
}

impl Default for CombConfig {
    fn default() -> Self {
        let p = CombParams::paper_default();
        CombConfig {
            spacing_mhz: p.spacing,
            tooth_fwhm_mhz: p.tooth_fwhm,
            peak_od: DEFAULT_PEAK_OD,
            background_od: DEFAULT_BACKGROUND_OD,
            bandwidth_ghz: p.bandwidth_ghz,
            shape: p.shape,
            grid_resolution_mhz: p.grid_resolution,
        }
    }
}

impl CombConfig {
    pub fn params(&self) -> CombParams<f64> {
        CombParams {
            spacing: self.spacing_mhz,
            tooth_fwhm: self.tooth_fwhm_mhz,
            peak_od: self.peak_od,
            background_od: self.background_od,
            bandwidth_ghz: self.bandwidth_ghz,
            shape: self.shape,
            grid_resolution: self.grid_resolution_mhz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemoryConfig {
    pub transmission: f64,
    pub photon_bw_ghz: f64,
    pub spectrum: PhotonSpectrum,
    pub penalty_strength: f64,
    pub side_holes: Vec<SideHole<f64>>,
    /// Overrides for the comb-derived photon fates.
    pub transmit_prob: Option<f64>,
    pub recall_prob: Option<f64>,
    pub storage_time_ns: Option<f64>,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig {
            transmission: 0.26,
            photon_bw_ghz: 5.2,
            spectrum: PhotonSpectrum::FlatTop,
            penalty_strength: DEFAULT_PENALTY_STRENGTH,
            side_holes: reported_side_holes().to_vec(),
            transmit_prob: None,
            recall_prob: None,
            storage_time_ns: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorsConfig {
    pub signal: ChannelModel,
    pub idler: ChannelModel,
}

impl Default for DetectorsConfig {
    fn default() -> Self {
        DetectorsConfig {
            signal: ChannelModel::signal_default(),
            idler: ChannelModel::idler_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Integration time with the memory bypassed; 0 skips the run.
    pub before_s: f64,
    /// Integration time through the memory; 0 skips the run.
    pub after_s: f64,
    pub splitter: bool,
    pub write_events: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            before_s: 50.0,
            after_s: 0.0,
            splitter: false,
            write_events: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub window_ps: u64,
    pub bin_ps: u64,
    pub histogram_half_range_ps: u64,
    pub bootstrap_resamples: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window_ps: DEFAULT_WINDOW_PS,
            bin_ps: DEFAULT_BIN_PS,
            histogram_half_range_ps: 5_000,
            bootstrap_resamples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub source: SourceConfig,
    pub comb: CombConfig,
    pub memory: MemoryConfig,
    pub detectors: DetectorsConfig,
    pub timing: TimingSequence,
    pub run: RunConfig,
    pub analysis: AnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            output_dir: PathBuf::from("out"),
            source: SourceConfig::default(),
            comb: CombConfig::default(),
            memory: MemoryConfig::default(),
            detectors: DetectorsConfig::default(),
            timing: TimingSequence::default(),
            run: RunConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::Config {
            field: format!("{section}.{name}"),
            reason,
        },
        other => other,
    }
}

impl ExperimentConfig {
    /// Parses and validates. Errors name the offending field.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
            field: "<syntax>".into(),
            reason: e.to_string().trim().to_string(),
        })?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            field: e.path().to_string(),
            reason: e.inner().message().trim().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            field: "<file>".into(),
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate().map_err(|e| in_section("source", e))?;
        self.comb.params().validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::Config {
                field: match name {
                    "spacing" | "tooth_fwhm" | "grid_resolution" => format!("comb.{name}_mhz"),
                    _ => format!("comb.{name}"),
                },
                reason,
            },
            other => other,
        })?;
        self.detectors.signal.validate().map_err(|e| in_section("detectors.signal", e))?;
        self.detectors.idler.validate().map_err(|e| in_section("detectors.idler", e))?;
        self.timing.validate().map_err(|e| in_section("timing", e))?;
        ModeGrid::from_source(&self.source, self.analysis.window_ps).map_err(|e| in_section("analysis", e))?;
        let cfg_err = |field: &str, reason: &str| Error::Config {
            field: field.into(),
            reason: reason.into(),
        };
        if !(self.run.before_s >= 0.0 && self.run.after_s >= 0.0) {
            return Err(cfg_err("run.before_s", "integration times must be >= 0"));
        }
        if self.run.before_s == 0.0 && self.run.after_s == 0.0 {
            return Err(cfg_err("run.before_s", "at least one of before_s / after_s must be positive"));
        }
        if self.analysis.bin_ps == 0 || self.analysis.histogram_half_range_ps % self.analysis.bin_ps != 0 {
            return Err(cfg_err("analysis.bin_ps", "must be positive and divide histogram_half_range_ps"));
        }
        let m = &self.memory;
        if !(m.transmission > 0.0 && m.transmission <= 1.0) {
            return Err(cfg_err("memory.transmission", "must be in (0, 1]"));
        }
        if !(m.photon_bw_ghz > 0.0) {
            return Err(cfg_err("memory.photon_bw_ghz", "must be positive"));
        }
        for (name, v) in [("memory.transmit_prob", m.transmit_prob), ("memory.recall_prob", m.recall_prob)] {
            if v.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
                return Err(cfg_err(name, "must be in [0, 1]"));
            }
        }
        if m.storage_time_ns.is_some_and(|t| !(t > 0.0)) {
            return Err(cfg_err("memory.storage_time_ns", "must be positive"));
        }
        Ok(())
    }

    /// Non-fatal consistency notes.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.comb.bandwidth_ghz < self.memory.photon_bw_ghz {
            w.push(format!(
                "comb bandwidth {} GHz is narrower than the photon bandwidth {} GHz; the excess is filtered",
                self.comb.bandwidth_ghz, self.memory.photon_bw_ghz
            ));
        }
        w
    }

    pub fn memory_model(&self) -> MemoryModel {
        MemoryModel {
            comb: self.comb.params(),
            side_holes: self.memory.side_holes.clone(),
            penalty: SideHolePenalty {
                strength: self.memory.penalty_strength,
            },
            transmission: self.memory.transmission,
            photon_bw_ghz: self.memory.photon_bw_ghz,
            spectrum: self.memory.spectrum,
        }
    }

    /// Comb prediction and the photon fates actually used, after overrides.
    pub fn memory_action(&self) -> Result<(MemoryPrediction, MemoryAction)> {
        let pred = self.memory_model().evaluate()?;
        let m = &self.memory;
        let action = MemoryAction::new(
            m.transmit_prob.unwrap_or(pred.transmit_prob()),
            m.recall_prob.unwrap_or(pred.recall_prob()),
            m.storage_time_ns.unwrap_or(pred.echo_time_ns),
        )
        .map_err(|e| in_section("memory", e))?;
        Ok((pred, action))
    }

    pub fn pipeline_inputs(&self, action: MemoryAction) -> PipelineInputs {
        PipelineInputs {
            source: self.source.clone(),
            memory: action,
            signal: self.detectors.signal,
            idler: self.detectors.idler,
            timing: self.timing,
            seed: self.seed,
        }
    }

    pub fn mode_grid(&self) -> Result<ModeGrid> {
        ModeGrid::from_source(&self.source, self.analysis.window_ps)
    }
}
