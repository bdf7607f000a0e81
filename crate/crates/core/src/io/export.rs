//! Matrix export (CSV, little-endian f32) and PGM spectrogram images.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitTrace;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    /// One row per scale, comma-separated, shortest round-trip decimal.
    #[default]
    Csv,
    /// Row-major little-endian `f32`.
    F32le,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::F32le => "f32",
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MatrixFormat::Csv),
            "f32le" => Ok(MatrixFormat::F32le),
            other => Err(Error::param(format!(
                "unknown matrix format `{other}` (expected csv or f32le)"
            ))),
        }
    }
}

pub fn encode_matrix(m: &Matrix<f64>, format: MatrixFormat) -> Vec<u8> {
    match format {
        MatrixFormat::Csv => {
            let mut s = String::new();
            for row in m.iter_rows() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                s.push_str(&line.join(","));
                s.push('\n');
            }
            s.into_bytes()
        }
        MatrixFormat::F32le => m
            .as_slice()
            .iter()
            .flat_map(|&v| (v as f32).to_le_bytes())
            .collect(),
    }
}

pub fn export_matrix(path: impl AsRef<Path>, m: &Matrix<f64>, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_matrix(m, format)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv_matrix(text: &str) -> Result<Matrix<f64>> {
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            line.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::input(format!("line {}: `{v}` is not a number", i + 1)))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(rows).ok_or_else(|| Error::input("CSV rows have different lengths"))
}

pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<Matrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_matrix(&text)
}

/// Binary PGM of `20 log10(A / A_max)` clamped to `[db_floor, 0]` and mapped
/// to `0..=255`. Time runs left to right; scale 0 is the bottom row.
pub fn render_pgm(amplitude: &Matrix<f64>, db_floor: f64) -> Result<Vec<u8>> {
    if !(db_floor < 0.0 && db_floor.is_finite()) {
        return Err(Error::param(format!(
            "db_floor must be negative, got {db_floor}"
        )));
    }
    if amplitude
        .as_slice()
        .iter()
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(Error::input("amplitudes must be finite and non-negative"));
    }
    let (rows, cols) = amplitude.shape();
    let peak = amplitude.as_slice().iter().fold(0.0f64, |m, &v| m.max(v));
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for r in (0..rows).rev() {
        for &a in amplitude.row(r) {
            let pixel = if peak > 0.0 && a > 0.0 {
                let db = (20.0 * (a / peak).log10()).clamp(db_floor, 0.0);
                (255.0 * (db - db_floor) / -db_floor).round() as u8
            } else {
                0
            };
            out.push(pixel);
        }
    }
    Ok(out)
}

pub fn write_pgm(path: impl AsRef<Path>, amplitude: &Matrix<f64>, db_floor: f64) -> Result<()> {
    let path = path.as_ref();
    let bytes = render_pgm(amplitude, db_floor)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Samples as row-major little-endian `f32`.
pub fn write_f32le(path: impl AsRef<Path>, samples: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = samples
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub const TRACE_HEADER: &str =
    "step,total,amp_stft,phase_stft,amp_cwt,phase_cwt,grad_norm,wall_seconds";

pub fn encode_trace(trace: &FitTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let l = &r.loss;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6}\n",
            r.step,
            l.total,
            l.amp_stft,
            l.phase_stft,
            l.amp_cwt,
            l.phase_cwt,
            r.grad_norm,
            r.elapsed.as_secs_f64()
        ));
    }
    out
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &FitTrace) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_trace(trace)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pixels(bytes: &[u8]) -> &[u8] {
        // header is three newline-terminated lines
        let mut newlines = 0;
        let start = bytes
            .iter()
            .position(|&b| {
                if b == b'\n' {
                    newlines += 1;
                }
                newlines == 3
            })
            .unwrap();
        &bytes[start + 1..]
    }

    #[test]
    fn constant_matrix_is_white() {
        let img = render_pgm(&Matrix::filled(3, 4, 0.7), -80.0).unwrap();
        assert!(img.starts_with(b"P5\n4 3\n255\n"));
        assert!(pixels(&img).iter().all(|&p| p == 255));
    }

    #[test]
    fn floor_maps_to_black_and_low_scales_at_bottom() {
        let m = Matrix::from_rows(vec![vec![1e-4], vec![1.0]]).unwrap();
        let img = render_pgm(&m, -80.0).unwrap();
        // top row is scale 1 (peak), bottom row scale 0 at -80 dB
        assert_eq!(pixels(&img), &[255, 0]);
    }

    #[test]
    fn csv_roundtrip() {
        let m = Matrix::from_rows(vec![vec![0.1, -2.5e-300], vec![1.0 / 3.0, 42.0]]).unwrap();
        let back =
            parse_csv_matrix(std::str::from_utf8(&encode_matrix(&m, MatrixFormat::Csv)).unwrap())
                .unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn f32le_layout() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let bytes = encode_matrix(&m, MatrixFormat::F32le);
        assert_eq!(bytes.len(), 16);
        assert_eq!(&bytes[4..8], &2.0f32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3.0f32.to_le_bytes());
    }

    #[test]
    fn rejects_non_negative_floor() {
        assert!(render_pgm(&Matrix::filled(1, 1, 1.0), 0.0).is_err());
    }
}
