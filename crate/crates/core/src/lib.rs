//! Unified STFT / Morlet-CWT analysis operators and the spectral amplitude
//! and phase losses built on them, with analytic waveform gradients.
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`] builds linear, mel and log frequency grids and Morlet scales.
//! * [`operator`] turns a grid (or STFT settings) into a block-circulant
//!   analysis operator applied with FFTs, plus a dense reference realization.
//! * [`transform`] produces complex, amplitude and phase spectrograms.
//! * [`loss`] evaluates the weighted amplitude/phase objective and its gradient.
//! * [`gradcheck`] validates those gradients by central finite differences.
//! * [`fit`] runs Adam on raw samples to reconstruct a waveform from its spectra.
//! * [`io`] reads and writes WAV files, configuration, matrices and PGM images.
//!
//! ```
//! use spectro::{forward, AnalysisOperator, StftParams, Waveform};
//!
//! let y = Waveform::new((0..512).map(|n| (n as f64 * 0.3).sin()).collect(), 16000.0)?;
//! let op = AnalysisOperator::stft(StftParams::default(), y.len(), y.sample_rate())?;
//! let spec = forward(&op, &y)?;
//! assert_eq!(spec.shape(), (257, 512));
//! # Ok::<(), spectro::Error>(())
//! ```

pub mod error;
pub mod fit;
pub mod gradcheck;
pub mod grid;
pub mod io;
pub mod loss;
pub mod matrix;
pub mod operator;
pub mod parallel;
pub mod transform;

pub use error::{Error, ErrorClass, Result};
pub use fit::{
    adam_step, fit_waveform, upsample_vuv, AdamParams, AdamState, FitConfig, FitTrace, InitMode,
};
pub use grid::{make_scale_grid, FrequencyScale, ScaleGrid};
pub use loss::{
    amplitude_loss, amplitude_loss_grad, combined_loss_and_grad, phase_loss, phase_loss_grad,
    Analysis, LossBreakdown, LossTargets, LossWeights, Preset, Reduction, Weight,
};
pub use matrix::Matrix;
pub use operator::{morlet_kernel, AnalysisOperator, CwtParams, Kernel, StftParams, Window};
pub use transform::{amplitude, forward, forward_dense, phase_unit, ComplexSpectrogram, Waveform};

/// Book chapters and the README, compiled so their examples run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/gradcheck.md")]
    mod gradcheck {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
