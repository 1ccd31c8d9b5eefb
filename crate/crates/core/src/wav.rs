//! WAV input and output.
//!
//! Accepted input: 16- or 24-bit integer PCM or 32-bit float, one or two
//! channels, 44.1 kHz. There is no resampling; other rates are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::error::{invalid, Error, Result};

/// Sample encoding for written files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavFormat {
    /// Unclipped 32-bit float.
    #[default]
    F32,
    Pcm16,
    Pcm24,
}

impl fmt::Display for WavFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WavFormat::F32 => "f32",
            WavFormat::Pcm16 => "pcm16",
            WavFormat::Pcm24 => "pcm24",
        })
    }
}

impl FromStr for WavFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(WavFormat::F32),
            "pcm16" => Ok(WavFormat::Pcm16),
            "pcm24" => Ok(WavFormat::Pcm24),
            other => Err(invalid(format!("unknown WAV format {other:?}"))),
        }
    }
}

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> Error + '_ {
    move |source| match source {
        hound::Error::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        source => Error::Wav {
            path: path.to_path_buf(),
            source,
        },
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(wav_err(path))?;
    let spec = reader.spec();
    if spec.sample_rate != SAMPLE_RATE {
        return Err(Error::SampleRate {
            path: path.to_path_buf(),
            found: spec.sample_rate,
            expected: SAMPLE_RATE,
        });
    }
    let nch = spec.channels as usize;
    if !(1..=2).contains(&nch) {
        return Err(invalid(format!(
            "{}: expected 1 or 2 channels, got {nch}",
            path.display()
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err(path))?,
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / (1i64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err(path))?
        }
        (fmt, bits) => {
            return Err(invalid(format!(
                "{}: unsupported sample format {fmt:?} with {bits} bits",
                path.display()
            )))
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / nch); nch];
    for frame in interleaved.chunks_exact(nch) {
        for (ch, &s) in channels.iter_mut().zip(frame) {
            ch.push(s);
        }
    }
    AudioBuffer::new(channels, spec.sample_rate)
}

/// Writes `audio`. Integer formats saturate out-of-range samples and log a
/// warning with the count.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer, format: WavFormat) -> Result<()> {
    let path = path.as_ref();
    let (bits, sample_format) = match format {
        WavFormat::F32 => (32, SampleFormat::Float),
        WavFormat::Pcm16 => (16, SampleFormat::Int),
        WavFormat::Pcm24 => (24, SampleFormat::Int),
    };
    let spec = WavSpec {
        channels: audio.num_channels() as u16,
        sample_rate: audio.sample_rate(),
        bits_per_sample: bits,
        sample_format,
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err(path))?;
    let mut clipped = 0usize;
    let full = (1i64 << (bits - 1)) as f64;
    for i in 0..audio.len() {
        for c in 0..audio.num_channels() {
            let x = audio.channel(c)[i];
            let res = match format {
                WavFormat::F32 => writer.write_sample(x as f32),
                WavFormat::Pcm16 | WavFormat::Pcm24 => {
                    let scaled = (x * full).round();
                    let v = scaled.clamp(-full, full - 1.0);
                    if v != scaled {
                        clipped += 1;
                    }
                    writer.write_sample(v as i32)
                }
            };
            res.map_err(wav_err(path))?;
        }
    }
    writer.finalize().map_err(wav_err(path))?;
    if clipped > 0 {
        log::warn!("{}: saturated {clipped} sample(s) writing {format}", path.display());
    }
    Ok(())
}
