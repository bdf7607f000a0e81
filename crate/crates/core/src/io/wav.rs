//! Mono RIFF/WAVE reading and writing (PCM 16-bit and IEEE float 32-bit).
//!
//! PCM samples map to reals as `s / 32768`; writing clips to `[-1, 1]` and
//! rounds, so a write/read cycle is exact to one LSB. Float files round-trip
//! exactly for values representable in `f32`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::transform::Waveform;

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    #[default]
    Pcm16,
    Float32,
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

struct FmtChunk {
    format: SampleFormat,
    sample_rate: u32,
}

fn parse_fmt(body: &[u8], offset: usize) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(format_err(offset, "`fmt ` chunk shorter than 16 bytes"));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let bits = u16_at(body, 14);
    if tag == FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(format_err(offset, "extensible `fmt ` chunk is truncated"));
        }
        tag = u16_at(body, 24);
    }
    if channels != 1 {
        return Err(format_err(
            offset + 2,
            format!("only mono audio is supported, file has {channels} channels"),
        ));
    }
    let format = match (tag, bits) {
        (FORMAT_PCM, 16) => SampleFormat::Pcm16,
        (FORMAT_FLOAT, 32) => SampleFormat::Float32,
        _ => {
            return Err(format_err(
                offset,
                format!("unsupported codec: format tag {tag}, {bits} bits per sample"),
            ))
        }
    };
    if sample_rate == 0 {
        return Err(format_err(offset + 4, "sample rate is zero"));
    }
    Ok(FmtChunk {
        format,
        sample_rate,
    })
}

/// Decode a WAV byte buffer.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < 12 {
        return Err(format_err(
            bytes.len(),
            "truncated header: missing `RIFF` chunk",
        ));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(format_err(0, "missing `RIFF` chunk id"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(format_err(8, "RIFF form type is not `WAVE`"));
    }
    let mut pos = 12;
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<(usize, &[u8])> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let Some(body) = bytes.get(body_start..body_start + size) else {
            return Err(format_err(
                pos,
                format!(
                    "chunk `{}` claims {size} bytes but the file ends after {}",
                    String::from_utf8_lossy(id),
                    bytes.len() - body_start
                ),
            ));
        };
        match id {
            b"fmt " => fmt = Some(parse_fmt(body, body_start)?),
            b"data" => data = Some((body_start, body)),
            _ => {}
        }
        pos = body_start + size + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| format_err(bytes.len(), "missing `fmt ` chunk"))?;
    let (data_offset, data) =
        data.ok_or_else(|| format_err(bytes.len(), "missing `data` chunk"))?;
    let samples: Vec<f64> = match fmt.format {
        SampleFormat::Pcm16 => {
            if data.len() % 2 != 0 {
                return Err(format_err(
                    data_offset,
                    "PCM data length is not a multiple of 2",
                ));
            }
            data.chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                .collect()
        }
        SampleFormat::Float32 => {
            if data.len() % 4 != 0 {
                return Err(format_err(
                    data_offset,
                    "float data length is not a multiple of 4",
                ));
            }
            data.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect()
        }
    };
    if samples.is_empty() {
        return Err(Error::input("WAV file contains no samples"));
    }
    Waveform::new(samples, fmt.sample_rate as f64)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

/// Encode a waveform as a canonical 44-byte-header WAV file.
pub fn encode_wav(y: &Waveform, format: SampleFormat) -> Result<Vec<u8>> {
    let rate = y.sample_rate().round();
    if !(rate >= 1.0 && rate <= u32::MAX as f64) {
        return Err(Error::param(format!(
            "sample rate {rate} cannot be stored in WAV"
        )));
    }
    let rate = rate as u32;
    let (tag, bytes_per_sample) = match format {
        SampleFormat::Pcm16 => (FORMAT_PCM, 2u16),
        SampleFormat::Float32 => (FORMAT_FLOAT, 4u16),
    };
    let data_len = y.len() * bytes_per_sample as usize;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * bytes_per_sample as u32).to_le_bytes());
    out.extend_from_slice(&bytes_per_sample.to_le_bytes());
    out.extend_from_slice(&(bytes_per_sample * 8).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in y.samples() {
        match format {
            SampleFormat::Pcm16 => {
                let v = (s.clamp(-1.0, 1.0) * 32768.0)
                    .round()
                    .clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&v.to_le_bytes());
            }
            SampleFormat::Float32 => out.extend_from_slice(&(s as f32).to_le_bytes()),
        }
    }
    Ok(out)
}

pub fn write_wav(path: impl AsRef<Path>, y: &Waveform, format: SampleFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav(y, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
