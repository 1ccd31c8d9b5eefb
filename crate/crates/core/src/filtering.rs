//! Complex ratio masking and deep filtering on spectrograms.
//!
//! A complex ratio mask multiplies each time-frequency bin by one complex
//! coefficient. A deep filter of order `N` instead takes, per bin, the plain
//! (unconjugated) dot product between the `N` temporally adjacent input bins
//! and `N` complex coefficients. With `N = 1` the two coincide.

use num_complex::Complex64;

use crate::error::{invalid, shape, Result};
use crate::stft::{Spectrogram, StftParams};

/// Kernel length `N` split into `lookback` past frames, the current frame and
/// `lookahead` future frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FilterOrder {
    order: usize,
    lookback: usize,
    lookahead: usize,
}

impl FilterOrder {
    pub fn new(order: usize, lookback: usize, lookahead: usize) -> Result<Self> {
        if order == 0 {
            return Err(invalid("filter order must be at least 1"));
        }
        if lookback + lookahead + 1 != order {
            return Err(invalid(format!(
                "lookback {lookback} + lookahead {lookahead} + 1 != order {order}"
            )));
        }
        Ok(Self {
            order,
            lookback,
            lookahead,
        })
    }

    /// Lookback-only kernel: the current frame and `order - 1` past frames.
    pub fn causal(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(invalid("filter order must be at least 1"));
        }
        Self::new(order, order - 1, 0)
    }

    /// Kernel of `order` taps reaching `lookahead` frames into the future.
    pub fn with_lookahead(order: usize, lookahead: usize) -> Result<Self> {
        if lookahead >= order.max(1) {
            return Err(invalid(format!(
                "lookahead {lookahead} must be smaller than order {order}"
            )));
        }
        Self::new(order, order - 1 - lookahead, lookahead)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    /// Input frame feeding tap `k` of output frame `t`, if inside `0..frames`.
    #[inline]
    pub fn source_frame(&self, t: usize, k: usize, frames: usize) -> Option<usize> {
        let src = (t + k).checked_sub(self.lookback)?;
        (src < frames).then_some(src)
    }
}

impl Default for FilterOrder {
    fn default() -> Self {
        Self {
            order: 5,
            lookback: 4,
            lookahead: 0,
        }
    }
}

/// Per-bin complex multipliers, indexed `[channel][frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMask {
    channels: usize,
    frames: usize,
    bins: usize,
    data: Vec<Complex64>,
}

impl ComplexMask {
    pub fn new(channels: usize, frames: usize, bins: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != channels * frames * bins {
            return Err(shape(format!(
                "mask data has {} values, expected {}",
                data.len(),
                channels * frames * bins
            )));
        }
        Ok(Self {
            channels,
            frames,
            bins,
            data,
        })
    }

    /// Mask of the given shape filled with `value`.
    pub fn constant(channels: usize, frames: usize, bins: usize, value: Complex64) -> Self {
        Self {
            channels,
            frames,
            bins,
            data: vec![value; channels * frames * bins],
        }
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
    pub fn get(&self, c: usize, t: usize, f: usize) -> Complex64 {
        self.data[(c * self.frames + t) * self.bins + f]
    }

    #[inline]
    pub fn set(&mut self, c: usize, t: usize, f: usize, v: Complex64) {
        self.data[(c * self.frames + t) * self.bins + f] = v;
    }
}

/// Time-unfolded spectrogram, indexed `[channel][frame][bin][tap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedSpectrogram {
    channels: usize,
    frames: usize,
    bins: usize,
    order: FilterOrder,
    params: StftParams,
    source_length: usize,
    sample_rate: u32,
    data: Vec<Complex64>,
}

impl UnfoldedSpectrogram {
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.frames, self.bins, self.order.order())
    }

    pub fn order(&self) -> FilterOrder {
        self.order
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    /// The `N` taps of bin `(c, t, f)`.
    pub fn taps(&self, c: usize, t: usize, f: usize) -> &[Complex64] {
        let n = self.order.order();
        let i = ((c * self.frames + t) * self.bins + f) * n;
        &self.data[i..i + n]
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize, f: usize, k: usize) -> Complex64 {
        self.taps(c, t, f)[k]
    }
}

/// Deep-filter coefficients, indexed `[channel][tap][frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepFilterTensor {
    channels: usize,
    frames: usize,
    bins: usize,
    order: FilterOrder,
    data: Vec<Complex64>,
}

impl DeepFilterTensor {
    pub fn new(channels: usize, frames: usize, bins: usize, order: FilterOrder, data: Vec<Complex64>) -> Result<Self> {
        let expected = channels * order.order() * frames * bins;
        if data.len() != expected {
            return Err(shape(format!(
                "filter data has {} values, expected {expected}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            frames,
            bins,
            order,
            data,
        })
    }

    pub fn zeros(channels: usize, frames: usize, bins: usize, order: FilterOrder) -> Self {
        Self {
            channels,
            frames,
            bins,
            order,
            data: vec![Complex64::new(0.0, 0.0); channels * order.order() * frames * bins],
        }
    }

    /// Delta kernel: 1 on tap `k`, 0 elsewhere, for every bin.
    pub fn delta(channels: usize, frames: usize, bins: usize, order: FilterOrder, k: usize) -> Self {
        let mut out = Self::zeros(channels, frames, bins, order);
        for c in 0..channels {
            for t in 0..frames {
                for f in 0..bins {
                    out.set(c, k, t, f, Complex64::new(1.0, 0.0));
                }
            }
        }
        out
    }

    /// Shape as `(channels, order, frames, bins)`.
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.order.order(), self.frames, self.bins)
    }

    pub fn order(&self) -> FilterOrder {
        self.order
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    fn index(&self, c: usize, k: usize, t: usize, f: usize) -> usize {
        ((c * self.order.order() + k) * self.frames + t) * self.bins + f
    }

    #[inline]
    pub fn get(&self, c: usize, k: usize, t: usize, f: usize) -> Complex64 {
        self.data[self.index(c, k, t, f)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, k: usize, t: usize, f: usize, v: Complex64) {
        let i = self.index(c, k, t, f);
        self.data[i] = v;
    }

    /// Coefficients of tap `k` as a mask.
    pub fn tap_mask(&self, k: usize) -> ComplexMask {
        let mut data = Vec::with_capacity(self.channels * self.frames * self.bins);
        for c in 0..self.channels {
            let start = self.index(c, k, 0, 0);
            data.extend_from_slice(&self.data[start..start + self.frames * self.bins]);
        }
        ComplexMask {
            channels: self.channels,
            frames: self.frames,
            bins: self.bins,
            data,
        }
    }
}

pub fn unfold_time(spec: &Spectrogram, order: FilterOrder) -> UnfoldedSpectrogram {
    let (channels, frames, bins) = spec.shape();
    let n = order.order();
    let mut data = vec![Complex64::new(0.0, 0.0); channels * frames * bins * n];
    for c in 0..channels {
        for t in 0..frames {
            for k in 0..n {
                let Some(src) = order.source_frame(t, k, frames) else {
                    continue;
                };
                let row = spec.frame(c, src);
                let base = (c * frames + t) * bins * n;
                for (f, &v) in row.iter().enumerate() {
                    data[base + f * n + k] = v;
                }
            }
        }
    }
    UnfoldedSpectrogram {
        channels,
        frames,
        bins,
        order,
        params: *spec.params(),
        source_length: spec.source_length(),
        sample_rate: spec.sample_rate(),
        data,
    }
}

pub fn apply_crm(spec: &Spectrogram, mask: &ComplexMask) -> Result<Spectrogram> {
    if spec.shape() != mask.shape() {
        return Err(shape(format!(
            "mask shape {:?} does not match spectrogram {:?}",
            mask.shape(),
            spec.shape()
        )));
    }
    let mut out = spec.clone();
    for (o, m) in out.data_mut().iter_mut().zip(mask.data()) {
        *o *= m;
    }
    Ok(out)
}

pub fn apply_deep_filter(unfolded: &UnfoldedSpectrogram, filt: &DeepFilterTensor) -> Result<Spectrogram> {
    if unfolded.order != filt.order {
        return Err(shape(format!(
            "filter order {:?} does not match unfolded order {:?}",
            filt.order, unfolded.order
        )));
    }
    let (channels, frames, bins, n) = unfolded.shape();
    if filt.shape() != (channels, n, frames, bins) {
        return Err(shape(format!(
            "filter shape {:?} does not match unfolded spectrogram {:?}",
            filt.shape(),
            unfolded.shape()
        )));
    }
    let mut out = Spectrogram::zeros(channels, unfolded.params, unfolded.source_length, unfolded.sample_rate)?;
    if out.shape() != (channels, frames, bins) {
        return Err(shape("unfolded spectrogram does not match its STFT parameters"));
    }
    for c in 0..channels {
        for t in 0..frames {
            let row = out.frame_mut(c, t);
            for (f, o) in row.iter_mut().enumerate() {
                let taps = unfolded.taps(c, t, f);
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &x) in taps.iter().enumerate() {
                    acc += x * filt.get(c, k, t, f);
                }
                *o = acc;
            }
        }
    }
    Ok(out)
}
