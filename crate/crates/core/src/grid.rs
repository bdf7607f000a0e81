//! Frequency/scale grids for the analysis operators.
//!
//! CWT grids place `L` center frequencies equally spaced on a linear, mel
//! (HTK) or logarithmic axis and map each to a Morlet scale with the
//! center-frequency convention `a = ω / (2π f)`. STFT grids simply list the
//! bin frequencies `k · fs / N`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// HTK mel warping.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Axis on which CWT center frequencies are equally spaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyScale {
    Linear,
    Mel,
    Log,
}

impl FrequencyScale {
    fn warp(self, hz: f64) -> f64 {
        match self {
            FrequencyScale::Linear => hz,
            FrequencyScale::Mel => hz_to_mel(hz),
            FrequencyScale::Log => hz.ln(),
        }
    }

    fn unwarp(self, x: f64) -> f64 {
        match self {
            FrequencyScale::Linear => x,
            FrequencyScale::Mel => mel_to_hz(x),
            FrequencyScale::Log => x.exp(),
        }
    }
}

impl fmt::Display for FrequencyScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrequencyScale::Linear => "linear",
            FrequencyScale::Mel => "mel",
            FrequencyScale::Log => "log",
        })
    }
}

impl FromStr for FrequencyScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(FrequencyScale::Linear),
            "mel" => Ok(FrequencyScale::Mel),
            "log" => Ok(FrequencyScale::Log),
            other => Err(Error::param(format!(
                "unknown frequency scale `{other}` (expected linear, mel or log)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    Cwt(FrequencyScale),
    /// Explicit CWT frequencies not produced by a warped spacing.
    Custom,
    StftBins,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    mode: GridMode,
    center_frequencies: Vec<f64>,
    /// Morlet scales in seconds; empty for STFT grids.
    scales: Vec<f64>,
    f_min: f64,
    f_max: f64,
    sample_interval: f64,
}

fn check_rate(sample_rate: f64) -> Result<()> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::param(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param(format!("omega must be positive, got {omega}")));
    }
    Ok(())
}

/// Build a CWT grid of `count` center frequencies between `f_min` and `f_max`
/// (both included) equally spaced on `scale`.
pub fn make_scale_grid(
    scale: FrequencyScale,
    count: usize,
    f_min: f64,
    f_max: f64,
    sample_rate: f64,
    omega: f64,
) -> Result<ScaleGrid> {
    check_rate(sample_rate)?;
    check_omega(omega)?;
    if count == 0 {
        return Err(Error::param("scale count must be at least 1"));
    }
    if !(f_min > 0.0 && f_min < f_max && f_max <= sample_rate / 2.0) {
        return Err(Error::param(format!(
            "need 0 < f_min < f_max <= fs/2, got f_min={f_min}, f_max={f_max}, fs={sample_rate}"
        )));
    }
    let lo = scale.warp(f_min);
    let hi = scale.warp(f_max);
    let freqs: Vec<f64> = if count == 1 {
        vec![f_min]
    } else {
        let step = (hi - lo) / (count - 1) as f64;
        (0..count)
            .map(|l| match l {
                0 => f_min,
                _ if l == count - 1 => f_max,
                _ => scale.unwarp(lo + step * l as f64),
            })
            .collect()
    };
    let mut grid = ScaleGrid::from_frequencies(freqs, sample_rate, omega)?;
    grid.mode = GridMode::Cwt(scale);
    grid.f_min = f_min;
    grid.f_max = f_max;
    Ok(grid)
}

impl ScaleGrid {
    /// CWT grid from explicit center frequencies, which must be strictly
    /// increasing inside `(0, fs/2]`.
    pub fn from_frequencies(freqs: Vec<f64>, sample_rate: f64, omega: f64) -> Result<Self> {
        check_rate(sample_rate)?;
        check_omega(omega)?;
        if freqs.is_empty() {
            return Err(Error::param("grid needs at least one frequency"));
        }
        let nyquist = sample_rate / 2.0;
        if freqs.iter().any(|&f| !(f > 0.0 && f <= nyquist)) {
            return Err(Error::param("center frequencies must lie in (0, fs/2]"));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param(
                "center frequencies must be strictly increasing",
            ));
        }
        let scales = freqs.iter().map(|&f| omega / (2.0 * PI * f)).collect();
        Ok(Self {
            mode: GridMode::Custom,
            f_min: freqs[0],
            f_max: freqs[freqs.len() - 1],
            center_frequencies: freqs,
            scales,
            sample_interval: 1.0 / sample_rate,
        })
    }

    /// Bin frequencies `k · fs / fft_size` for `k = 0..=fft_size/2`.
    pub fn stft_bins(fft_size: usize, sample_rate: f64) -> Result<Self> {
        check_rate(sample_rate)?;
        if fft_size == 0 {
            return Err(Error::param("fft_size must be at least 1"));
        }
        let freqs: Vec<f64> = (0..=fft_size / 2)
            .map(|k| k as f64 * sample_rate / fft_size as f64)
            .collect();
        Ok(Self {
            mode: GridMode::StftBins,
            f_min: freqs[0],
            f_max: freqs[freqs.len() - 1],
            center_frequencies: freqs,
            scales: Vec::new(),
            sample_interval: 1.0 / sample_rate,
        })
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.center_frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center_frequencies.is_empty()
    }

    pub fn center_frequencies(&self) -> &[f64] {
        &self.center_frequencies
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.sample_interval
    }

    /// Index of the grid frequency closest to `hz` on a linear axis.
    pub fn nearest(&self, hz: f64) -> usize {
        let mut best = 0;
        for (i, f) in self.center_frequencies.iter().enumerate() {
            if (f - hz).abs() < (self.center_frequencies[best] - hz).abs() {
                best = i;
            }
        }
        best
    }
}
