//! Complex, amplitude and phase spectrograms of a waveform.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::operator::{AnalysisOperator, Family};

/// Amplitude at or below which a bin's phase is treated as undefined.
pub const PHASE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("waveform has no samples"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("sample {i} is not finite")));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::param(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Unit-modulus phase factors with a mask of bins whose phase is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectrogram {
    /// `Y / |Y|` on defined bins, zero elsewhere.
    pub unit: Matrix<Complex64>,
    pub defined: Matrix<bool>,
}

impl PhaseSpectrogram {
    pub fn undefined_count(&self) -> usize {
        self.defined.as_slice().iter().filter(|d| !**d).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    values: Matrix<Complex64>,
    family: Family,
    hop: usize,
}

impl ComplexSpectrogram {
    pub fn new(values: Matrix<Complex64>, family: Family, hop: usize) -> Self {
        Self {
            values,
            family,
            hop,
        }
    }

    pub fn values(&self) -> &Matrix<Complex64> {
        &self.values
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn amplitude(&self) -> Matrix<f64> {
        amplitude(self)
    }

    pub fn phase_unit(&self) -> PhaseSpectrogram {
        phase_unit(self)
    }
}

/// `Y = W y` via FFT correlation.
pub fn forward(op: &AnalysisOperator, y: &Waveform) -> Result<ComplexSpectrogram> {
    let values = op.apply(y.samples())?;
    Ok(ComplexSpectrogram::new(values, op.family(), op.hop()))
}

/// `Y = W y` by materializing `W`; only for `T <= 4096`.
pub fn forward_dense(op: &AnalysisOperator, y: &Waveform) -> Result<ComplexSpectrogram> {
    let values = op.apply_dense(y.samples())?;
    Ok(ComplexSpectrogram::new(values, op.family(), op.hop()))
}

pub fn amplitude(spec: &ComplexSpectrogram) -> Matrix<f64> {
    spec.values.map(|z| z.norm())
}

pub fn phase_unit(spec: &ComplexSpectrogram) -> PhaseSpectrogram {
    let unit = spec.values.map(|&z| unit_or_zero(z));
    let defined = spec.values.map(|z| z.norm() > PHASE_FLOOR);
    PhaseSpectrogram { unit, defined }
}

pub(crate) fn unit_or_zero(z: Complex64) -> Complex64 {
    let a = z.norm();
    if a > PHASE_FLOOR {
        z / a
    } else {
        Complex64::new(0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_of(values: Vec<Complex64>) -> ComplexSpectrogram {
        let n = values.len();
        ComplexSpectrogram::new(Matrix::from_vec(1, n, values), Family::Cwt, 1)
    }

    #[test]
    fn pythagorean_bin() {
        let s = spec_of(vec![Complex64::new(3.0, 4.0)]);
        assert_eq!(amplitude(&s)[(0, 0)], 5.0);
        let p = phase_unit(&s);
        assert!(p.defined[(0, 0)]);
        assert!((p.unit[(0, 0)] - Complex64::new(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn zero_bin_has_undefined_phase() {
        let s = spec_of(vec![Complex64::new(0.0, 0.0), Complex64::new(1e-9, 0.0)]);
        assert_eq!(amplitude(&s)[(0, 0)], 0.0);
        let p = phase_unit(&s);
        assert!(!p.defined[(0, 0)]);
        assert!(!p.defined[(0, 1)]);
        assert_eq!(p.undefined_count(), 2);
    }

    #[test]
    fn waveform_validation() {
        assert!(Waveform::new(vec![], 16000.0).is_err());
        assert!(Waveform::new(vec![f64::NAN], 16000.0).is_err());
        assert!(Waveform::new(vec![0.0], 0.0).is_err());
        let w = Waveform::new(vec![0.0; 2000], 16000.0).unwrap();
        assert!((w.duration() - 0.125).abs() < 1e-15);
    }
}
