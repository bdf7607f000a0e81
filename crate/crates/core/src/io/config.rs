//! TOML run configuration. Every section and key is optional; unknown keys
//! are rejected with the dotted path of the offending entry.
//!
//! ```toml
//! [stft]
//! frame_length = 400
//! fft_size = 512
//! hop = 1
//! window = "hann"
//!
//! [cwt]
//! scale = "mel"
//! count = 25
//! f_min = 40.0
//! omega = 6.0
//!
//! [weights]
//! preset = "stft+cwt"
//! vuv = "flags.txt"
//!
//! [fit]
//! iterations = 5000
//! learning_rate = 0.005
//! init = "gaussian"
//! sigma = 0.01
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fit::{upsample_vuv, AdamParams, FitConfig, InitMode};
use crate::grid::FrequencyScale;
use crate::io::export::MatrixFormat;
use crate::io::wav::SampleFormat;
use crate::loss::{LossWeights, Preset, Reduction};
use crate::operator::{CwtParams, StftParams, Window};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StftSection {
    pub frame_length: usize,
    pub fft_size: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for StftSection {
    fn default() -> Self {
        let p = StftParams::default();
        Self {
            frame_length: p.frame_length,
            fft_size: p.fft_size,
            hop: p.hop,
            window: p.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CwtSection {
    pub scale: FrequencyScale,
    pub count: usize,
    pub f_min: f64,
    pub f_max: Option<f64>,
    pub omega: f64,
}

impl Default for CwtSection {
    fn default() -> Self {
        let p = CwtParams::default();
        Self {
            scale: p.scale,
            count: p.count,
            f_min: p.f_min,
            f_max: p.f_max,
            omega: p.omega,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsSection {
    /// `stft`, `stft+cwt` or `cwt`; explicit weights below override it.
    pub preset: Option<String>,
    pub amp_stft: Option<f64>,
    pub phase_stft: Option<f64>,
    pub amp_cwt: Option<f64>,
    pub phase_cwt: Option<f64>,
    /// Text file of per-frame 0/1 voicing flags (80-sample frames).
    pub vuv: Option<PathBuf>,
    pub reduction: Reduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Zeros,
    #[default]
    Gaussian,
    CorruptedReference,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub init: InitKind,
    pub sigma: f64,
    pub seed: u64,
    pub log_every: usize,
    pub divergence_ratio: Option<f64>,
}

impl Default for FitSection {
    fn default() -> Self {
        let adam = AdamParams::default();
        Self {
            iterations: 5000,
            learning_rate: 0.005,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            init: InitKind::Gaussian,
            sigma: 0.01,
            seed: 0,
            log_every: 100,
            divergence_ratio: Some(1e6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

impl From<WavEncoding> for SampleFormat {
    fn from(e: WavEncoding) -> Self {
        match e {
            WavEncoding::Pcm16 => SampleFormat::Pcm16,
            WavEncoding::Float32 => SampleFormat::Float32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    /// Rate for generated signals (gradient checks).
    pub sample_rate: f64,
    pub db_floor: f64,
    pub matrix_format: MatrixFormat,
    pub wav_format: WavEncoding,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            sample_rate: 16000.0,
            db_floor: -80.0,
            matrix_format: MatrixFormat::Csv,
            wav_format: WavEncoding::Float32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub stft: StftSection,
    pub cwt: CwtSection,
    pub weights: WeightsSection,
    pub fit: FitSection,
    pub io: IoSection,
    /// Directory relative paths in the file resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::de::Deserializer::parse(text)
        .map_err(|e| config_err("<document>", e.to_string().trim()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(&path, e.into_inner().message().trim())
    })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

/// Whitespace-separated per-frame flags.
pub fn parse_vuv_frames(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| match tok {
            "0" => Ok(0.0),
            "1" => Ok(1.0),
            other => Err(Error::input(format!("V/UV flag `{other}` is not 0 or 1"))),
        })
        .collect()
}

impl RunConfig {
    pub fn stft_params(&self) -> StftParams {
        StftParams {
            frame_length: self.stft.frame_length,
            fft_size: self.stft.fft_size,
            hop: self.stft.hop,
            window: self.stft.window,
        }
    }

    pub fn cwt_params(&self) -> CwtParams {
        CwtParams {
            scale: self.cwt.scale,
            count: self.cwt.count,
            f_min: self.cwt.f_min,
            f_max: self.cwt.f_max,
            omega: self.cwt.omega,
        }
    }

    /// Replace the weights section by a preset.
    pub fn set_preset(&mut self, preset: Preset) {
        self.weights = WeightsSection {
            preset: Some(preset.name().to_string()),
            vuv: self.weights.vuv.take(),
            reduction: self.weights.reduction,
            ..WeightsSection::default()
        };
    }

    /// Weights for signals of `length` samples, loading the V/UV file if any.
    pub fn loss_weights(&self, length: usize) -> Result<LossWeights> {
        let w = &self.weights;
        let preset = match &w.preset {
            None => Preset::Stft,
            Some(name) => name
                .parse::<Preset>()
                .map_err(|e| config_err("weights.preset", e.to_string()))?,
        };
        let vuv = match &w.vuv {
            None => None,
            Some(rel) => {
                let path = self.base_dir.join(rel);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let frames = parse_vuv_frames(&text)?;
                Some(upsample_vuv(&frames, length)?)
            }
        };
        let mut weights = LossWeights::preset(preset, vuv).with_reduction(w.reduction);
        for (value, slot, name) in [
            (w.amp_stft, &mut weights.amp_stft, "weights.amp_stft"),
            (w.phase_stft, &mut weights.phase_stft, "weights.phase_stft"),
            (w.amp_cwt, &mut weights.amp_cwt, "weights.amp_cwt"),
            (w.phase_cwt, &mut weights.phase_cwt, "weights.phase_cwt"),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(config_err(name, format!("weight must be >= 0, got {v}")));
                }
                *slot = v.into();
            }
        }
        Ok(weights)
    }

    pub fn fit_config(&self, length: usize) -> Result<FitConfig> {
        let f = &self.fit;
        let init = match f.init {
            InitKind::Zeros => InitMode::Zeros,
            InitKind::Gaussian => InitMode::Gaussian { sigma: f.sigma },
            InitKind::CorruptedReference => InitMode::CorruptedReference { sigma: f.sigma },
        };
        let cfg = FitConfig {
            iterations: f.iterations,
            adam: AdamParams {
                learning_rate: f.learning_rate,
                beta1: f.beta1,
                beta2: f.beta2,
                epsilon: f.epsilon,
            },
            init,
            weights: self.loss_weights(length)?,
            stft: Some(self.stft_params()),
            cwt: Some(self.cwt_params()),
            seed: f.seed,
            log_every: f.log_every,
            divergence_ratio: f.divergence_ratio,
        };
        cfg.validate()
            .map_err(|e| config_err("fit", e.to_string()))?;
        Ok(cfg)
    }
}
