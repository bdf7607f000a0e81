//! Analysis operators: the block-circulant matrix `W` in factored form.
//!
//! Scale `l` owns one complex kernel `ψ_l` laid out on a circle of length
//! `T`. Row `t` of block `l` is that kernel rotated by `t`:
//!
//! ```text
//! W_l[t, n] = ψ_l[(n - t) mod T]        Y[l, t] = Σ_n W_l[t, n] y[n]
//! ```
//!
//! so `W y` is a circular cross-correlation per scale and `W^H u` a circular
//! convolution. Both are evaluated with length-`T` FFTs. The dense helpers
//! materialize the same rows literally and exist to check the fast path.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{make_scale_grid, FrequencyScale, ScaleGrid};
use crate::matrix::Matrix;

/// Largest signal length the dense realization accepts.
pub const DENSE_LIMIT: usize = 4096;

/// `|u|` beyond which the Morlet envelope `exp(-u²/2)` is below `1e-8` of its peak.
pub fn morlet_cutoff() -> f64 {
    (2.0 * 1e8f64.ln()).sqrt()
}

/// A compactly supported kernel: `taps[j]` sits at lag `origin + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    taps: Vec<Complex64>,
    origin: isize,
}

impl Kernel {
    pub fn new(taps: Vec<Complex64>, origin: isize) -> Self {
        Self { taps, origin }
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Lag of the first tap.
    pub fn origin(&self) -> isize {
        self.origin
    }

    pub fn support(&self) -> usize {
        self.taps.len()
    }

    /// `(lag, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (isize, Complex64)> + '_ {
        self.taps
            .iter()
            .enumerate()
            .map(move |(j, &v)| (self.origin + j as isize, v))
    }

    /// Value at `lag`, zero outside the support.
    pub fn at(&self, lag: isize) -> Complex64 {
        let j = lag - self.origin;
        if j < 0 || j as usize >= self.taps.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.taps[j as usize]
        }
    }

    pub fn norm(&self) -> f64 {
        self.taps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.taps.iter_mut().for_each(|z| *z /= n);
        }
        self
    }

    /// The kernel wrapped onto a circle of `length` samples.
    pub fn circular(&self, length: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); length];
        for (lag, v) in self.iter() {
            out[lag.rem_euclid(length as isize) as usize] += v;
        }
        out
    }
}

/// Support radius in samples of a Morlet kernel at `scale` seconds.
pub fn morlet_radius(scale: f64, sample_interval: f64) -> usize {
    (morlet_cutoff() * scale / sample_interval).ceil() as usize
}

/// Samples of `π^{-1/4} exp(iωu) exp(-u²/2)` at `u = tδ/a` over the truncated
/// symmetric support, normalized to unit L2 norm.
pub fn morlet_kernel(
    scale: f64,
    omega: f64,
    sample_interval: f64,
    max_support: usize,
) -> Result<Kernel> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param(format!("scale must be positive, got {scale}")));
    }
    if !(sample_interval.is_finite() && sample_interval > 0.0) {
        return Err(Error::param(format!(
            "sample interval must be positive, got {sample_interval}"
        )));
    }
    if !(omega >= 5.0 && omega.is_finite()) {
        return Err(Error::param(format!(
            "Morlet carrier omega must be >= 5, got {omega}"
        )));
    }
    if max_support == 0 {
        return Err(Error::param("max_support must be at least 1"));
    }
    let radius = morlet_radius(scale, sample_interval);
    let support = 2 * radius + 1;
    if support > max_support {
        return Err(Error::SupportOverflow {
            scale: 0,
            support,
            max_support,
        });
    }
    let r = radius as isize;
    let taps = (-r..=r)
        .map(|t| morlet_sample(t as f64 * sample_interval / scale, omega))
        .collect();
    Ok(Kernel::new(taps, -r).normalized())
}

/// Unnormalized mother wavelet value at `u`.
pub fn morlet_sample(u: f64, omega: f64) -> Complex64 {
    let envelope = PI.powf(-0.25) * (-0.5 * u * u).exp();
    Complex64::from_polar(envelope, omega * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic window of `len` samples.
    pub fn samples(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Window::Hann),
            "rectangular" => Ok(Window::Rectangular),
            other => Err(Error::param(format!(
                "unknown window `{other}` (expected hann or rectangular)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub frame_length: usize,
    pub fft_size: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            frame_length: 400,
            fft_size: 512,
            hop: 1,
            window: Window::Hann,
        }
    }
}

/// Morlet CWT settings; `f_max` defaults to Nyquist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwtParams {
    pub scale: FrequencyScale,
    pub count: usize,
    pub f_min: f64,
    pub f_max: Option<f64>,
    pub omega: f64,
}

impl Default for CwtParams {
    fn default() -> Self {
        Self {
            scale: FrequencyScale::Mel,
            count: 25,
            f_min: 40.0,
            f_max: None,
            omega: 6.0,
        }
    }
}

impl CwtParams {
    pub fn grid(&self, sample_rate: f64) -> Result<ScaleGrid> {
        make_scale_grid(
            self.scale,
            self.count,
            self.f_min,
            self.f_max.unwrap_or(sample_rate / 2.0),
            sample_rate,
            self.omega,
        )
    }

    pub fn build(&self, signal_length: usize, sample_rate: f64) -> Result<AnalysisOperator> {
        AnalysisOperator::cwt(&self.grid(sample_rate)?, signal_length, self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    Cwt {
        omega: f64,
    },
    Stft(StftParams),
    /// Hand-built kernels, treated as a CWT-family term by the losses.
    Custom,
}

/// Which pair of weights in the combined objective applies to an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Stft,
    Cwt,
}

#[derive(Clone)]
pub struct AnalysisOperator {
    kind: OperatorKind,
    grid: Option<ScaleGrid>,
    kernels: Vec<Kernel>,
    signal_length: usize,
    hop: usize,
    /// `H_l[k] = Σ_m ψ_l[m] e^{+2πikm/T}`, the correlation transfer function.
    spectra: Vec<Vec<Complex64>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for AnalysisOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalysisOperator")
            .field("kind", &self.kind)
            .field("scales", &self.kernels.len())
            .field("signal_length", &self.signal_length)
            .field("hop", &self.hop)
            .finish()
    }
}

impl AnalysisOperator {
    /// Morlet CWT over `grid` for signals of `signal_length` samples.
    pub fn cwt(grid: &ScaleGrid, signal_length: usize, omega: f64) -> Result<Self> {
        if grid.scales().is_empty() {
            return Err(Error::param("CWT operator needs a grid with Morlet scales"));
        }
        let kernels = grid
            .scales()
            .iter()
            .enumerate()
            .map(|(l, &a)| {
                morlet_kernel(a, omega, grid.sample_interval(), signal_length).map_err(
                    |e| match e {
                        Error::SupportOverflow {
                            support,
                            max_support,
                            ..
                        } => Error::SupportOverflow {
                            scale: l,
                            support,
                            max_support,
                        },
                        other => other,
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut op = Self::assemble(OperatorKind::Cwt { omega }, kernels, signal_length, 1)?;
        op.grid = Some(grid.clone());
        Ok(op)
    }

    /// STFT as a special case: kernel `k` is `w(t) e^{-i2πkt/N}` on `t = 0..frame_length`.
    pub fn stft(params: StftParams, signal_length: usize, sample_rate: f64) -> Result<Self> {
        let StftParams {
            frame_length,
            fft_size,
            hop,
            window,
        } = params;
        if frame_length == 0 || hop == 0 {
            return Err(Error::param("frame_length and hop must be at least 1"));
        }
        if !(frame_length <= fft_size && fft_size <= signal_length) {
            return Err(Error::param(format!(
                "need frame_length <= fft_size <= signal length, got {frame_length}, {fft_size}, {signal_length}"
            )));
        }
        let grid = ScaleGrid::stft_bins(fft_size, sample_rate)?;
        let w = window.samples(frame_length);
        let kernels = (0..=fft_size / 2)
            .map(|k| {
                let taps = w
                    .iter()
                    .enumerate()
                    .map(|(t, &wt)| {
                        // Reduce the phase index first so bin 0 and Nyquist stay exactly real.
                        let idx = (k * t) % fft_size;
                        let phase = -2.0 * PI * idx as f64 / fft_size as f64;
                        if idx == 0 {
                            Complex64::new(wt, 0.0)
                        } else if 2 * idx == fft_size {
                            Complex64::new(-wt, 0.0)
                        } else {
                            Complex64::from_polar(wt, phase)
                        }
                    })
                    .collect();
                Kernel::new(taps, 0).normalized()
            })
            .collect();
        let mut op = Self::assemble(OperatorKind::Stft(params), kernels, signal_length, hop)?;
        op.grid = Some(grid);
        Ok(op)
    }

    /// Operator from explicit kernels. Each kernel's support must fit in `signal_length`.
    pub fn from_kernels(kernels: Vec<Kernel>, signal_length: usize, hop: usize) -> Result<Self> {
        Self::assemble(OperatorKind::Custom, kernels, signal_length, hop)
    }

    fn assemble(
        kind: OperatorKind,
        kernels: Vec<Kernel>,
        signal_length: usize,
        hop: usize,
    ) -> Result<Self> {
        if signal_length == 0 {
            return Err(Error::param("signal length must be at least 1"));
        }
        if hop == 0 {
            return Err(Error::param("hop must be at least 1"));
        }
        if kernels.is_empty() {
            return Err(Error::param("operator needs at least one kernel"));
        }
        for (l, k) in kernels.iter().enumerate() {
            if k.support() > signal_length {
                return Err(Error::SupportOverflow {
                    scale: l,
                    support: k.support(),
                    max_support: signal_length,
                });
            }
        }
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(signal_length);
        let ifft = planner.plan_fft_inverse(signal_length);
        let spectra = kernels
            .iter()
            .map(|k| {
                let mut buf: Vec<Complex64> =
                    k.circular(signal_length).iter().map(|z| z.conj()).collect();
                fft.process(&mut buf);
                buf.iter_mut().for_each(|z| *z = z.conj());
                buf
            })
            .collect();
        Ok(Self {
            kind,
            grid: None,
            kernels,
            signal_length,
            hop,
            spectra,
            fft,
            ifft,
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn family(&self) -> Family {
        match self.kind {
            OperatorKind::Stft(_) => Family::Stft,
            OperatorKind::Cwt { .. } | OperatorKind::Custom => Family::Cwt,
        }
    }

    pub fn grid(&self) -> Option<&ScaleGrid> {
        self.grid.as_ref()
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn scale_count(&self) -> usize {
        self.kernels.len()
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Output frames: times `0, hop, 2·hop, …` below the signal length.
    pub fn frame_count(&self) -> usize {
        self.signal_length.div_ceil(self.hop)
    }

    pub fn output_shape(&self) -> (usize, usize) {
        (self.scale_count(), self.frame_count())
    }

    fn check_length(&self, len: usize) -> Result<()> {
        if len != self.signal_length {
            return Err(Error::input(format!(
                "signal has {len} samples but the operator expects {}",
                self.signal_length
            )));
        }
        Ok(())
    }

    fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if shape != self.output_shape() {
            return Err(Error::input(format!(
                "coefficient shape {shape:?} does not match operator output {:?}",
                self.output_shape()
            )));
        }
        Ok(())
    }

    /// `Y = W y` through FFT correlation.
    pub fn apply(&self, y: &[f64]) -> Result<Matrix<Complex64>> {
        self.check_length(y.len())?;
        let n = self.signal_length;
        let mut spectrum: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut spectrum);
        let scale = 1.0 / n as f64;
        let rows: Vec<Vec<Complex64>> = self
            .spectra
            .par_iter()
            .map(|h| {
                let mut buf: Vec<Complex64> = h.iter().zip(&spectrum).map(|(a, b)| a * b).collect();
                self.ifft.process(&mut buf);
                buf.iter().step_by(self.hop).map(|z| z * scale).collect()
            })
            .collect();
        Ok(Matrix::from_vec(
            self.scale_count(),
            self.frame_count(),
            rows.into_iter().flatten().collect(),
        ))
    }

    /// `Re(W^H u)` through FFT convolution. Per-scale spectra are summed in
    /// scale order, so the result does not depend on the worker count.
    pub fn adjoint_real(&self, coeffs: &Matrix<Complex64>) -> Result<Vec<f64>> {
        self.check_shape(coeffs.shape())?;
        let n = self.signal_length;
        let contributions: Vec<Option<Vec<Complex64>>> = self
            .spectra
            .par_iter()
            .enumerate()
            .map(|(l, h)| {
                let row = coeffs.row(l);
                if row.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    return None;
                }
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for (j, &z) in row.iter().enumerate() {
                    buf[j * self.hop] = z;
                }
                self.fft.process(&mut buf);
                buf.iter_mut().zip(h).for_each(|(b, hk)| *b *= hk.conj());
                Some(buf)
            })
            .collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for c in contributions.into_iter().flatten() {
            acc.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        }
        self.ifft.process(&mut acc);
        let scale = 1.0 / n as f64;
        Ok(acc.iter().map(|z| z.re * scale).collect())
    }

    fn check_dense(&self) -> Result<()> {
        if self.signal_length > DENSE_LIMIT {
            return Err(Error::OracleTooLarge {
                length: self.signal_length,
                limit: DENSE_LIMIT,
            });
        }
        Ok(())
    }

    /// Row `(l, frame)` of `W`: the wrapped kernel rotated by the frame time.
    pub fn dense_row(&self, scale: usize, frame: usize) -> Vec<Complex64> {
        let circ = self.kernels[scale].circular(self.signal_length);
        self.row_from_circular(&circ, frame)
    }

    fn row_from_circular(&self, circ: &[Complex64], frame: usize) -> Vec<Complex64> {
        let n = self.signal_length;
        let t = (frame * self.hop) % n;
        (0..n).map(|col| circ[(col + n - t) % n]).collect()
    }

    /// Block `W_l` as a `frames × T` matrix.
    pub fn dense_block(&self, scale: usize) -> Result<Matrix<Complex64>> {
        self.check_dense()?;
        let circ = self.kernels[scale].circular(self.signal_length);
        let rows = (0..self.frame_count())
            .map(|j| self.row_from_circular(&circ, j))
            .collect();
        Ok(Matrix::from_rows(rows).expect("rows share the signal length"))
    }

    /// The full `(L·frames) × T` matrix.
    pub fn dense_matrix(&self) -> Result<Matrix<Complex64>> {
        self.check_dense()?;
        let mut rows = Vec::with_capacity(self.scale_count() * self.frame_count());
        for l in 0..self.scale_count() {
            rows.extend(self.dense_block(l)?.iter_rows().map(<[_]>::to_vec));
        }
        Ok(Matrix::from_rows(rows).expect("rows share the signal length"))
    }

    /// `W y` by explicit matrix-vector products, one block at a time.
    pub fn apply_dense(&self, y: &[f64]) -> Result<Matrix<Complex64>> {
        self.check_length(y.len())?;
        self.check_dense()?;
        let mut out = Matrix::filled(
            self.scale_count(),
            self.frame_count(),
            Complex64::new(0.0, 0.0),
        );
        for l in 0..self.scale_count() {
            let block = self.dense_block(l)?;
            for (j, row) in block.iter_rows().enumerate() {
                out[(l, j)] = row.iter().zip(y).map(|(w, &v)| w * v).sum();
            }
        }
        Ok(out)
    }

    /// `Re(W^H u)` by explicit products with the conjugated rows.
    pub fn adjoint_real_dense(&self, coeffs: &Matrix<Complex64>) -> Result<Vec<f64>> {
        self.check_shape(coeffs.shape())?;
        self.check_dense()?;
        let mut out = vec![0.0; self.signal_length];
        for l in 0..self.scale_count() {
            let block = self.dense_block(l)?;
            for (j, row) in block.iter_rows().enumerate() {
                let u = coeffs[(l, j)];
                if u.re == 0.0 && u.im == 0.0 {
                    continue;
                }
                for (o, w) in out.iter_mut().zip(row) {
                    *o += (w.conj() * u).re;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn morlet_center_value_and_symmetry() {
        assert!((morlet_sample(0.0, 6.0).re - 0.751_125_5).abs() < 1e-7);
        let k = morlet_kernel(0.002, 6.0, 1.0 / 16000.0, 4096).unwrap();
        assert_eq!(k.origin(), -(k.support() as isize / 2));
        for t in 0..=(k.support() as isize / 2) {
            let d = k.at(-t) - k.at(t).conj();
            assert!(d.norm() < 1e-15, "t={t}");
        }
        assert!((k.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn morlet_truncation_radius() {
        assert!((morlet_cutoff() - 6.0697).abs() < 1e-4);
        // a/δ = 10 samples -> radius ceil(60.697) = 61
        let k = morlet_kernel(10.0, 6.0, 1.0, 1000).unwrap();
        assert_eq!(k.support(), 123);
    }

    #[test]
    fn morlet_errors() {
        assert!(matches!(
            morlet_kernel(0.0, 6.0, 1.0, 10),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            morlet_kernel(1.0, 6.0, -1.0, 10),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            morlet_kernel(1.0, 4.0, 1.0, 10),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            morlet_kernel(10.0, 6.0, 1.0, 100),
            Err(Error::SupportOverflow { support: 123, .. })
        ));
    }

    #[test]
    fn cwt_reports_overflowing_scale() {
        let grid = make_scale_grid(FrequencyScale::Mel, 25, 40.0, 8000.0, 16000.0, 6.0).unwrap();
        match AnalysisOperator::cwt(&grid, 2000, 6.0) {
            Err(Error::SupportOverflow { scale, .. }) => assert_eq!(scale, 0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn single_scale_cwt_is_circulant() {
        let grid = ScaleGrid::from_frequencies(vec![1000.0], 16000.0, 6.0).unwrap();
        let op = AnalysisOperator::cwt(&grid, 512, 6.0).unwrap();
        let w = op.dense_matrix().unwrap();
        assert_eq!(w.shape(), (512, 512));
        let row0 = w.row(0);
        let row5 = w.row(5);
        for n in 0..512 {
            assert_eq!(row5[n], row0[(n + 512 - 5) % 512]);
        }
    }

    #[test]
    fn stft_paper_loss_configuration_has_257_bins() {
        let op = AnalysisOperator::stft(StftParams::default(), 2000, 16000.0).unwrap();
        assert_eq!(op.scale_count(), 257);
        assert_eq!(op.frame_count(), 2000);
    }

    #[test]
    fn stft_dc_kernel_is_real() {
        let op = AnalysisOperator::stft(StftParams::default(), 512, 16000.0).unwrap();
        assert!(op.kernels()[0].taps().iter().all(|z| z.im == 0.0));
        assert!(op.kernels()[256].taps().iter().all(|z| z.im == 0.0));
        for k in op.kernels() {
            assert!((k.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stft_rejects_bad_sizes() {
        let p = StftParams {
            frame_length: 600,
            ..StftParams::default()
        };
        assert!(AnalysisOperator::stft(p, 2000, 16000.0).is_err());
        let p = StftParams {
            hop: 0,
            ..StftParams::default()
        };
        assert!(AnalysisOperator::stft(p, 2000, 16000.0).is_err());
        assert!(AnalysisOperator::stft(StftParams::default(), 500, 16000.0).is_err());
    }

    #[test]
    fn rectangular_full_frame_is_normalized_dft() {
        let p = StftParams {
            frame_length: 8,
            fft_size: 8,
            hop: 8,
            window: Window::Rectangular,
        };
        let op = AnalysisOperator::stft(p, 8, 8.0).unwrap();
        let y = [0.3, -1.0, 2.0, 0.5, 0.0, 1.5, -0.25, 0.75];
        let out = op.apply(&y).unwrap();
        assert_eq!(out.shape(), (5, 1));
        for k in 0..5 {
            let dft: Complex64 = y
                .iter()
                .enumerate()
                .map(|(n, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / 8.0))
                .sum();
            assert!((out[(k, 0)] - dft / 8f64.sqrt()).norm() < 1e-12);
        }
    }

    #[test]
    fn hand_built_circulant() {
        let k = Kernel::new(vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)], 0);
        let op = AnalysisOperator::from_kernels(vec![k], 4, 1).unwrap();
        let expected = [
            [c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)],
            [c(3.0, 0.0), c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0)],
            [c(0.0, -1.0), c(3.0, 0.0), c(1.0, 0.0), c(2.0, 1.0)],
            [c(2.0, 1.0), c(0.0, -1.0), c(3.0, 0.0), c(1.0, 0.0)],
        ];
        let w = op.dense_matrix().unwrap();
        for (r, row) in expected.iter().enumerate() {
            assert_eq!(w.row(r), row);
        }
        let y = [1.0, -2.0, 0.5, 4.0];
        let dense = op.apply_dense(&y).unwrap();
        for r in 0..4 {
            let direct: Complex64 = expected[r].iter().zip(&y).map(|(a, &b)| a * b).sum();
            assert_eq!(dense[(0, r)], direct);
        }
    }

    #[test]
    fn dense_guard() {
        let k = Kernel::new(vec![c(1.0, 0.0)], 0);
        let op = AnalysisOperator::from_kernels(vec![k], DENSE_LIMIT + 1, 1).unwrap();
        assert!(matches!(
            op.apply_dense(&vec![0.0; DENSE_LIMIT + 1]),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn morlet_spectrum_peaks_at_center_frequency() {
        let fs = 16000.0;
        let t = 4096;
        let grid = make_scale_grid(FrequencyScale::Log, 12, 300.0, 6000.0, fs, 6.0).unwrap();
        let op = AnalysisOperator::cwt(&grid, t, 6.0).unwrap();
        let bin_width = fs / t as f64;
        for (l, kernel) in op.kernels().iter().enumerate() {
            let circ = kernel.circular(t);
            // Brute-force DFT magnitude over positive-frequency bins.
            let peak = (0..t / 2)
                .map(|k| {
                    let s: Complex64 = circ
                        .iter()
                        .enumerate()
                        .map(|(m, z)| {
                            z * Complex64::from_polar(
                                1.0,
                                -2.0 * PI * ((k * m) % t) as f64 / t as f64,
                            )
                        })
                        .sum();
                    (k, s.norm())
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            let f_peak = peak as f64 * bin_width;
            let f_center = grid.center_frequencies()[l];
            assert!(
                (f_peak - f_center).abs() <= bin_width,
                "scale {l}: peak {f_peak} vs center {f_center}"
            );
        }
    }
}
