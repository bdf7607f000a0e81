#![allow(dead_code)]

use num_complex::Complex64;
use spectro::gradcheck::{random_waveform, SuiteConfig};
use spectro::{AnalysisOperator, Matrix, Waveform};

pub const FS: f64 = 16_000.0;

/// STFT and mel CWT operators as configured by the gradient-check suite.
pub fn operators(length: usize) -> [(&'static str, AnalysisOperator); 2] {
    SuiteConfig::for_length(length, vec![0])
        .operators()
        .expect("suite operators")
}

pub fn noise(length: usize, seed: u64) -> Waveform {
    random_waveform(length, FS, seed)
}

/// `y + 0.1 * noise`, a nearby target signal.
pub fn perturbed(y: &Waveform, seed: u64) -> Waveform {
    let u = noise(y.len(), seed);
    let s = y
        .samples()
        .iter()
        .zip(u.samples())
        .map(|(a, b)| a + 0.1 * b)
        .collect();
    Waveform::new(s, y.sample_rate()).unwrap()
}

pub fn frobenius_rel(a: &Matrix<Complex64>, b: &Matrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let diff: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let norm: f64 = b.as_slice().iter().map(|x| x.norm_sqr()).sum();
    (diff / norm).sqrt()
}

pub fn vec_rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|x| x * x).sum();
    (diff / norm).sqrt()
}

pub fn scalar_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn tone(hz: f64, length: usize) -> Waveform {
    let s = (0..length)
        .map(|n| (2.0 * std::f64::consts::PI * hz * n as f64 / FS).sin())
        .collect();
    Waveform::new(s, FS).unwrap()
}

/// The two-harmonic fitting reference: 0.125 s of 200 Hz + 400 Hz.
pub fn two_harmonic() -> Waveform {
    let s = (0..2000)
        .map(|n| {
            let t = n as f64 / FS;
            0.5 * (2.0 * std::f64::consts::PI * 200.0 * t).sin()
                + 0.3 * (2.0 * std::f64::consts::PI * 400.0 * t).sin()
        })
        .collect();
    Waveform::new(s, FS).unwrap()
}
