//! Framed forward/inverse STFT with weighted overlap-add reconstruction.
//!
//! The inverse divides the overlap-added synthesis output by the summed
//! squared window, which gives exact reconstruction for any hop that keeps
//! the envelope nonzero. A hop of 441 with a 2048-point Hann window is not
//! COLA, so plain overlap-add would not round-trip.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::audio::AudioBuffer;
use crate::error::{invalid, shape, Result};

/// Envelope values below this are treated as uncovered samples (output zero).
pub const ENVELOPE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    /// Periodic Hann.
    #[default]
    Hann,
}

impl WindowKind {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub win_size: usize,
    pub fft_size: usize,
    pub hop: usize,
    pub window: WindowKind,
    /// Pad `fft_size / 2` zeros on each side so frame `t` is centred on
    /// sample `t * hop`.
    pub center: bool,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            win_size: 2048,
            fft_size: 2048,
            hop: 441,
            window: WindowKind::Hann,
            center: true,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 {
            return Err(invalid("hop must be at least 1"));
        }
        if self.win_size == 0 || self.win_size > self.fft_size {
            return Err(invalid(format!(
                "window size {} must be in 1..={}",
                self.win_size, self.fft_size
            )));
        }
        if self.hop > self.win_size {
            return Err(invalid(format!(
                "hop {} exceeds window size {}",
                self.hop, self.win_size
            )));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if self.center {
            len / self.hop + 1
        } else if len >= self.fft_size {
            (len - self.fft_size) / self.hop + 1
        } else {
            0
        }
    }

    /// Analysis window zero-padded (centred) to `fft_size`.
    pub fn padded_window(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.fft_size];
        let offset = (self.fft_size - self.win_size) / 2;
        out[offset..offset + self.win_size].copy_from_slice(&self.window.coefficients(self.win_size));
        out
    }

    /// Signal index of the first sample in frame `t` (may be negative).
    fn frame_start(&self, t: usize) -> isize {
        let start = (t * self.hop) as isize;
        if self.center {
            start - (self.fft_size / 2) as isize
        } else {
            start
        }
    }
}

/// Complex onesided spectrogram, indexed `[channel][frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    channels: usize,
    frames: usize,
    bins: usize,
    data: Vec<Complex64>,
    params: StftParams,
    source_length: usize,
    sample_rate: u32,
}

impl Spectrogram {
    /// Wraps raw data; `data.len()` must equal `channels * frames * bins`
    /// and the shape must agree with `params` and `source_length`.
    pub fn from_parts(
        channels: usize,
        data: Vec<Complex64>,
        params: StftParams,
        source_length: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        params.validate()?;
        let frames = params.num_frames(source_length);
        let bins = params.num_bins();
        if channels == 0 || data.len() != channels * frames * bins {
            return Err(shape(format!(
                "expected {channels}x{frames}x{bins} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            frames,
            bins,
            data,
            params,
            source_length,
            sample_rate,
        })
    }

    pub fn zeros(channels: usize, params: StftParams, source_length: usize, sample_rate: u32) -> Result<Self> {
        let n = channels * params.num_frames(source_length) * params.num_bins();
        Self::from_parts(
            channels,
            vec![Complex64::new(0.0, 0.0); n],
            params,
            source_length,
            sample_rate,
        )
    }

    /// Zero spectrogram with the same shape and metadata as `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); self.data.len()],
            ..self.clone()
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.frames, self.bins)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, c: usize, t: usize, f: usize) -> usize {
        (c * self.frames + t) * self.bins + f
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize, f: usize) -> Complex64 {
        self.data[self.index(c, t, f)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, t: usize, f: usize, v: Complex64) {
        let i = self.index(c, t, f);
        self.data[i] = v;
    }

    pub fn frame(&self, c: usize, t: usize) -> &[Complex64] {
        let i = self.index(c, t, 0);
        &self.data[i..i + self.bins]
    }

    pub fn frame_mut(&mut self, c: usize, t: usize) -> &mut [Complex64] {
        let i = self.index(c, t, 0);
        &mut self.data[i..i + self.bins]
    }

    /// Total energy `Σ|X|²`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check_same_shape(&self, other: &Spectrogram) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(shape(format!(
                "spectrogram shapes differ: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

pub fn stft(audio: &AudioBuffer, params: &StftParams) -> Result<Spectrogram> {
    params.validate()?;
    if audio.is_empty() {
        return Err(invalid("cannot analyse an empty buffer"));
    }
    let len = audio.len();
    let frames = params.num_frames(len);
    if frames == 0 {
        return Err(invalid(format!(
            "signal of {len} samples is shorter than one uncentred frame"
        )));
    }
    let bins = params.num_bins();
    let n = params.fft_size;
    let window = params.padded_window();
    let plans = Plans::new(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); plans.forward.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut data = Vec::with_capacity(audio.num_channels() * frames * bins);

    for samples in audio.channels() {
        for t in 0..frames {
            let start = params.frame_start(t);
            for (i, slot) in buf.iter_mut().enumerate() {
                let idx = start + i as isize;
                let x = if idx >= 0 && (idx as usize) < len {
                    samples[idx as usize]
                } else {
                    0.0
                };
                *slot = Complex64::new(x * window[i], 0.0);
            }
            plans.forward.process_with_scratch(&mut buf, &mut scratch);
            data.extend_from_slice(&buf[..bins]);
        }
    }

    Spectrogram::from_parts(audio.num_channels(), data, *params, len, audio.sample_rate())
}

pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    let params = spec.params();
    params.validate()?;
    if spec.bins() != params.num_bins() || spec.frames() != params.num_frames(spec.source_length()) {
        return Err(shape("spectrogram shape does not match its STFT parameters"));
    }
    let n = params.fft_size;
    let len = spec.source_length();
    let window = params.padded_window();
    let plans = Plans::new(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); plans.inverse.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;

    // The envelope depends only on the framing, so it is shared by all channels.
    let mut envelope = vec![0.0; len];
    for t in 0..spec.frames() {
        let start = params.frame_start(t);
        for (i, w) in window.iter().enumerate() {
            let idx = start + i as isize;
            if idx >= 0 && (idx as usize) < len {
                envelope[idx as usize] += w * w;
            }
        }
    }

    let mut out = Vec::with_capacity(spec.channels());
    for c in 0..spec.channels() {
        let mut acc = vec![0.0; len];
        for t in 0..spec.frames() {
            let frame = spec.frame(c, t);
            buf[..frame.len()].copy_from_slice(frame);
            // Rebuild the Hermitian-symmetric upper half.
            for k in frame.len()..n {
                buf[k] = buf[n - k].conj();
            }
            plans.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = params.frame_start(t);
            for (i, w) in window.iter().enumerate() {
                let idx = start + i as isize;
                if idx >= 0 && (idx as usize) < len {
                    acc[idx as usize] += buf[i].re * scale * w;
                }
            }
        }
        for (y, &e) in acc.iter_mut().zip(&envelope) {
            *y = if e > ENVELOPE_FLOOR { *y / e } else { 0.0 };
        }
        out.push(acc);
    }
    AudioBuffer::new(out, spec.sample_rate())
}
