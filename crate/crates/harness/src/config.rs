//! Pipeline configuration: one TOML document with per-stage sections.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fd_core::corpus::{Difficulty, NoiseMode};
use fd_core::events::NiDenominator;
use fd_core::stream::ClockMode;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_model_name")]
    pub model_name: String,
    #[serde(default = "default_dataset_name")]
    pub dataset_name: String,
    #[serde(default)]
    pub generate: Option<GenerateConfig>,
    pub corpus: CorpusConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub segment: SegmentConfig,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub judge: Option<JudgeConfigSection>,
    #[serde(default)]
    pub asr: Option<AsrConfigSection>,
    #[serde(default)]
    pub cppl: Option<CpplConfigSection>,
    pub out: OutConfig,
}

fn default_model_name() -> String {
    "model".into()
}

fn default_dataset_name() -> String {
    "dataset".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub count: usize,
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default)]
    pub topics_file: Option<PathBuf>,
    /// Replay file for offline generation; otherwise `endpoint` + `model`.
    #[serde(default)]
    pub replay_file: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_gen_temperature")]
    pub temperature: f64,
    #[serde(default = "default_retry_budget")]
    pub retry_budget: u32,
}

fn default_gen_temperature() -> f64 {
    0.7
}

fn default_retry_budget() -> u32 {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub scripts_dir: PathBuf,
    pub audio_dir: PathBuf,
    pub difficulty: Difficulty,
    #[serde(default = "default_noise_mode")]
    pub noise_mode: NoiseMode,
    #[serde(default)]
    pub snr_db: Option<i32>,
    #[serde(default)]
    pub noise_dir: Option<PathBuf>,
    pub seed: u64,
}

fn default_noise_mode() -> NoiseMode {
    NoiseMode::None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// `host:port` for a live server, or `mock:<behavior.json>` for the
    /// in-process mock.
    pub endpoint: String,
    #[serde(default = "default_chunk_ms")]
    pub chunk_ms: i64,
    #[serde(default = "default_clock")]
    pub clock: ClockMode,
}

fn default_chunk_ms() -> i64 {
    80
}

fn default_clock() -> ClockMode {
    ClockMode::RealTime
}

impl RunConfig {
    pub fn mock_behavior_path(&self) -> Option<&str> {
        self.endpoint.strip_prefix("mock:")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentConfig {
    /// `builtin`, `file:<dir>` of per-session span files, or `service:<url>`.
    #[serde(default = "default_vad")]
    pub vad: String,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_min_speech")]
    pub min_speech_ms: i64,
    #[serde(default = "default_min_silence")]
    pub min_silence_ms: i64,
}

fn default_vad() -> String {
    "builtin".into()
}

fn default_threshold() -> f64 {
    0.5
}

fn default_min_speech() -> i64 {
    250
}

fn default_min_silence() -> i64 {
    300
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            vad: default_vad(),
            threshold: default_threshold(),
            min_speech_ms: default_min_speech(),
            min_silence_ms: default_min_silence(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectorSection {
    #[serde(default = "default_t_early")]
    pub t_early_ms: i64,
    #[serde(default = "default_t_si_max")]
    pub t_si_max_ms: i64,
    #[serde(default = "default_ni_denominator")]
    pub ni_denominator: NiDenominator,
    #[serde(default = "default_slack")]
    pub alignment_slack_ms: i64,
}

fn default_t_early() -> i64 {
    1000
}

fn default_t_si_max() -> i64 {
    15_000
}

fn default_ni_denominator() -> NiDenominator {
    NiDenominator::AllGaps
}

fn default_slack() -> i64 {
    30_000
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            t_early_ms: default_t_early(),
            t_si_max_ms: default_t_si_max(),
            ni_denominator: default_ni_denominator(),
            alignment_slack_ms: default_slack(),
        }
    }
}

impl DetectorSection {
    pub fn to_detector_config(&self) -> fd_core::events::DetectorConfig {
        fd_core::events::DetectorConfig {
            t_early_ms: self.t_early_ms,
            t_si_max_ms: self.t_si_max_ms,
            ni_denominator: self.ni_denominator,
            alignment_slack_ms: self.alignment_slack_ms,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeConfigSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub replay_file: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "default_judge_temperature")]
    pub temperature: f64,
    #[serde(default = "default_retry_budget")]
    pub max_retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_judge_temperature() -> f64 {
    0.2
}

fn default_in_flight() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsrConfigSection {
    #[serde(default)]
    pub enabled: bool,
    /// `precomputed:<dir>` or `service:<url>`.
    pub adapter: String,
    #[serde(default = "default_beam_size")]
    pub beam_size: u32,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

fn default_beam_size() -> u32 {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpplConfigSection {
    #[serde(default)]
    pub enabled: bool,
    pub service_url: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutConfig {
    pub dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    4
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = toml::from_str(&text).context("parsing pipeline config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.chunk_ms <= 0 {
            bail!("run.chunk_ms must be positive");
        }
        if matches!(self.run.clock, ClockMode::Virtual) && self.run.mock_behavior_path().is_none()
        {
            bail!("virtual clock is only usable with a mock: endpoint sharing the clock");
        }
        match self.corpus.noise_mode {
            NoiseMode::None => {}
            _ => {
                if self.corpus.snr_db.is_none() || self.corpus.noise_dir.is_none() {
                    bail!("noise_mode bg/gap requires corpus.snr_db and corpus.noise_dir");
                }
            }
        }
        if let Some(judge) = &self.judge {
            if judge.enabled && judge.replay_file.is_none() && judge.endpoint.is_none() {
                bail!("judge.enabled requires judge.replay_file or judge.endpoint");
            }
        }
        Ok(())
    }
}
