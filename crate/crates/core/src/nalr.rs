//! NAL-R linear amplification.
//!
//! The prescription maps an audiogram to insertion gains at the seven
//! audiometric frequencies:
//!
//! ```text
//! X     = 0.05 · (H500 + H1000 + H2000)
//! IG(f) = X + 0.31 · H(f) + k(f)
//! ```
//!
//! The gains are realised as a symmetric (type-I, linear-phase) FIR designed
//! by frequency sampling. Between the prescription frequencies the desired
//! curve is linear in dB over log frequency, and it is held flat outside
//! 250-6000 Hz. Because the frequency-sampling grid rarely lands on the
//! audiometric frequencies, the node gains are iteratively pre-corrected.
//! Steep audiograms can still leave leakage that no positive node gain can
//! cancel, so a final minimum-norm tap correction places the response at the
//! seven frequencies exactly on the prescription.

use nalgebra::{DMatrix, DVector};

use crate::audio::AudioBuffer;
use crate::conv::convolve;
use crate::error::{invalid, Result};

/// Audiometric frequencies in Hz.
pub const AUDIOGRAM_FREQUENCIES: [f64; 7] = [250.0, 500.0, 1000.0, 2000.0, 3000.0, 4000.0, 6000.0];

/// Frequency-dependent NAL-R correction `k(f)` in dB, aligned with
/// [`AUDIOGRAM_FREQUENCIES`].
pub const NALR_CORRECTION_DB: [f64; 7] = [-17.0, -8.0, 1.0, -1.0, -2.0, -2.0, -2.0];

pub const DEFAULT_TAPS: usize = 221;
pub const MIN_TAPS: usize = 31;

const MIN_LEVEL: f64 = -10.0;
const MAX_LEVEL: f64 = 120.0;

/// Design stops once every prescription frequency is within this of target.
const DESIGN_TOL_DB: f64 = 1e-3;
const DESIGN_MAX_ITERS: usize = 200;

/// Hearing levels (dB HL) at [`AUDIOGRAM_FREQUENCIES`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audiogram {
    levels: [f64; 7],
}

impl Audiogram {
    pub fn new(levels: [f64; 7]) -> Result<Self> {
        for (f, &l) in AUDIOGRAM_FREQUENCIES.iter().zip(&levels) {
            if !(MIN_LEVEL..=MAX_LEVEL).contains(&l) {
                return Err(invalid(format!(
                    "hearing level {l} dB HL at {f} Hz is outside [{MIN_LEVEL}, {MAX_LEVEL}]"
                )));
            }
        }
        Ok(Self { levels })
    }

    pub fn flat(level: f64) -> Result<Self> {
        Self::new([level; 7])
    }

    pub fn levels(&self) -> &[f64; 7] {
        &self.levels
    }

    pub fn level_at(&self, freq_hz: f64) -> Option<f64> {
        AUDIOGRAM_FREQUENCIES
            .iter()
            .position(|&f| f == freq_hz)
            .map(|i| self.levels[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListenerProfile {
    pub id: String,
    pub left: Audiogram,
    pub right: Audiogram,
}

impl ListenerProfile {
    /// Audiogram for output channel `idx`; mono signals use the left ear.
    pub fn ear(&self, idx: usize) -> &Audiogram {
        if idx == 0 {
            &self.left
        } else {
            &self.right
        }
    }
}

/// Insertion gains in dB at [`AUDIOGRAM_FREQUENCIES`]. Negative gains are kept.
pub fn nalr_gains(audiogram: &Audiogram) -> [f64; 7] {
    let h = audiogram.levels();
    let x = 0.05 * (h[1] + h[2] + h[3]);
    let mut out = [0.0; 7];
    for i in 0..7 {
        out[i] = x + 0.31 * h[i] + NALR_CORRECTION_DB[i];
    }
    out
}

/// Symmetric FIR with integer group delay.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    coefficients: Vec<f64>,
}

impl FirFilter {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len().is_multiple_of(2) {
            return Err(invalid(format!(
                "linear-phase FIR needs an odd tap count, got {}",
                coefficients.len()
            )));
        }
        Ok(Self { coefficients })
    }

    pub fn identity() -> Self {
        Self {
            coefficients: vec![1.0],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn taps(&self) -> usize {
        self.coefficients.len()
    }

    pub fn group_delay(&self) -> usize {
        (self.coefficients.len() - 1) / 2
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let h = &self.coefficients;
        (0..h.len() / 2).all(|i| (h[i] - h[h.len() - 1 - i]).abs() <= tol)
    }

    /// Zero-phase amplitude response at `freq_hz`.
    pub fn amplitude(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let d = self.group_delay();
        let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate;
        let h = &self.coefficients;
        h[d] + 2.0 * (1..=d).map(|m| h[d + m] * (w * m as f64).cos()).sum::<f64>()
    }

    /// Magnitude response in dB at `freq_hz`.
    pub fn response_db(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        20.0 * self.amplitude(freq_hz, sample_rate).abs().log10()
    }

    /// Self-convolution of two filters (their cascade).
    pub fn cascade(&self, other: &FirFilter) -> FirFilter {
        FirFilter {
            coefficients: convolve(&self.coefficients, &other.coefficients),
        }
    }
}

/// Desired gain in dB at `freq`: linear in dB over log frequency between the
/// nodes, flat outside them.
fn interpolate_db(nodes_db: &[f64; 7], freq: f64) -> f64 {
    let fs = &AUDIOGRAM_FREQUENCIES;
    if freq <= fs[0] {
        return nodes_db[0];
    }
    if freq >= fs[6] {
        return nodes_db[6];
    }
    let i = fs.iter().rposition(|&f| f <= freq).unwrap();
    let t = (freq / fs[i]).ln() / (fs[i + 1] / fs[i]).ln();
    nodes_db[i] + t * (nodes_db[i + 1] - nodes_db[i])
}

/// Type-I frequency-sampling design of a curve given by node gains in dB.
fn frequency_sampling(nodes_db: &[f64; 7], sample_rate: f64, taps: usize) -> Vec<f64> {
    let m = taps as f64;
    let half = (taps - 1) / 2;
    let amps: Vec<f64> = (0..=half)
        .map(|k| 10f64.powf(interpolate_db(nodes_db, k as f64 * sample_rate / m) / 20.0))
        .collect();
    let mut h = vec![0.0; taps];
    for offset in 0..=half {
        let phase = 2.0 * std::f64::consts::PI * offset as f64 / m;
        let v = (amps[0] + 2.0 * (1..=half).map(|k| amps[k] * (phase * k as f64).cos()).sum::<f64>()) / m;
        h[half + offset] = v;
        h[half - offset] = v;
    }
    h
}

/// Designs a linear-phase FIR whose response at each audiometric frequency
/// matches `gains_db`.
pub fn design_fir(gains_db: &[f64; 7], sample_rate: u32, taps: usize) -> Result<FirFilter> {
    if taps.is_multiple_of(2) {
        return Err(invalid(format!("tap count must be odd, got {taps}")));
    }
    if taps < MIN_TAPS {
        return Err(invalid(format!("tap count must be at least {MIN_TAPS}, got {taps}")));
    }
    if gains_db.iter().any(|g| !g.is_finite()) {
        return Err(invalid("prescribed gains must be finite"));
    }
    let sr = sample_rate as f64;
    if AUDIOGRAM_FREQUENCIES[6] >= sr / 2.0 {
        return Err(invalid(format!(
            "sample rate {sample_rate} Hz is too low for the audiogram range"
        )));
    }

    let mut nodes = *gains_db;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..DESIGN_MAX_ITERS {
        let h = frequency_sampling(&nodes, sr, taps);
        let filt = FirFilter { coefficients: h };
        let errors: Vec<f64> = AUDIOGRAM_FREQUENCIES
            .iter()
            .zip(gains_db)
            .map(|(&f, &g)| g - filt.response_db(f, sr))
            .collect();
        let worst = errors.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        if best.as_ref().is_none_or(|(b, _)| worst < *b) {
            best = Some((worst, filt.coefficients.clone()));
        }
        if worst < DESIGN_TOL_DB || !worst.is_finite() {
            break;
        }
        for (n, e) in nodes.iter_mut().zip(&errors) {
            *n += e;
        }
    }
    let (worst, coefficients) = best.expect("at least one design iteration");
    let mut filt = FirFilter { coefficients };
    if worst > DESIGN_TOL_DB {
        log::debug!("node correction settled {worst:.4} dB away; projecting onto the prescription");
        pin_amplitudes(&mut filt, gains_db, sr);
    }
    Ok(filt)
}

/// Smallest change to the taps that makes the amplitude at each audiometric
/// frequency equal the prescribed linear gain.
fn pin_amplitudes(filt: &mut FirFilter, gains_db: &[f64; 7], sr: f64) {
    let d = filt.group_delay();
    let basis = |f: f64, m: usize| {
        if m == 0 {
            1.0
        } else {
            2.0 * (2.0 * std::f64::consts::PI * f / sr * m as f64).cos()
        }
    };
    let c = DMatrix::from_fn(7, d + 1, |i, m| basis(AUDIOGRAM_FREQUENCIES[i], m));
    let r = DVector::from_fn(7, |i, _| {
        10f64.powf(gains_db[i] / 20.0) - filt.amplitude(AUDIOGRAM_FREQUENCIES[i], sr)
    });
    let Some(y) = (&c * c.transpose()).cholesky().map(|g| g.solve(&r)) else {
        return;
    };
    let delta = c.transpose() * y;
    let h = &mut filt.coefficients;
    for (m, dm) in delta.iter().enumerate() {
        h[d + m] += dm;
        if m > 0 {
            h[d - m] += dm;
        }
    }
}

/// Convolves every channel with `filt` and removes the group delay, so the
/// output has the input's length.
pub fn apply_fir(audio: &AudioBuffer, filt: &FirFilter) -> AudioBuffer {
    let delay = filt.group_delay();
    let len = audio.len();
    let channels = audio
        .channels()
        .iter()
        .map(|x| {
            if len == 0 {
                return Vec::new();
            }
            convolve(x, filt.coefficients())[delay..delay + len].to_vec()
        })
        .collect();
    AudioBuffer::new(channels, audio.sample_rate()).expect("shape preserved")
}

/// Designs one filter per ear.
pub fn listener_filters(listener: &ListenerProfile, sample_rate: u32, taps: usize) -> Result<[FirFilter; 2]> {
    Ok([
        design_fir(&nalr_gains(&listener.left), sample_rate, taps)?,
        design_fir(&nalr_gains(&listener.right), sample_rate, taps)?,
    ])
}

/// Applies the listener's prescription per ear: channel 0 is the left ear,
/// channel 1 the right.
pub fn apply_nalr(audio: &AudioBuffer, listener: &ListenerProfile, taps: usize) -> Result<AudioBuffer> {
    let filters = listener_filters(listener, audio.sample_rate(), taps)?;
    let mut channels = Vec::with_capacity(audio.num_channels());
    for c in 0..audio.num_channels() {
        let single = AudioBuffer::mono(audio.channel(c).to_vec(), audio.sample_rate())?;
        channels.push(apply_fir(&single, &filters[c.min(1)]).into_channels().remove(0));
    }
    AudioBuffer::new(channels, audio.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::SAMPLE_RATE;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SR: f64 = SAMPLE_RATE as f64;

    #[test]
    fn flat_zero_gives_correction_table() {
        let g = nalr_gains(&Audiogram::flat(0.0).unwrap());
        assert_eq!(g, NALR_CORRECTION_DB);
        assert_eq!(g[2], 1.0);
    }

    #[test]
    fn flat_forty_at_one_khz() {
        let g = nalr_gains(&Audiogram::flat(40.0).unwrap());
        assert!((g[2] - 19.4).abs() < 1e-12);
    }

    #[test]
    fn single_level_raise_slope() {
        let base = Audiogram::flat(30.0).unwrap();
        let g0 = nalr_gains(&base);
        for i in 0..7 {
            let mut levels = *base.levels();
            levels[i] += 10.0;
            let g1 = nalr_gains(&Audiogram::new(levels).unwrap());
            let expect = if (1..=3).contains(&i) { 3.6 } else { 3.1 };
            assert!((g1[i] - g0[i] - expect).abs() < 1e-12);
            assert!(g1[i] - g0[i] >= 3.1 - 1e-12);
        }
    }

    #[test]
    fn audiogram_range_checked() {
        assert!(Audiogram::flat(-11.0).is_err());
        assert!(Audiogram::flat(121.0).is_err());
        assert!(Audiogram::flat(120.0).is_ok());
    }

    #[test]
    fn unity_curve_is_centre_impulse() {
        let filt = design_fir(&[0.0; 7], SAMPLE_RATE, DEFAULT_TAPS).unwrap();
        let c = filt.group_delay();
        for (i, &h) in filt.coefficients().iter().enumerate() {
            let expect = if i == c { 1.0 } else { 0.0 };
            assert!((h - expect).abs() < 1e-12, "tap {i}: {h}");
        }
    }

    #[test]
    fn unity_filter_is_identity_after_compensation() {
        let filt = design_fir(&[0.0; 7], SAMPLE_RATE, DEFAULT_TAPS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..5000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let audio = AudioBuffer::mono(x, SAMPLE_RATE).unwrap();
        let y = apply_fir(&audio, &filt);
        for (a, b) in audio.channel(0).iter().zip(y.channel(0)) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn flat_six_db_doubles_amplitude() {
        let filt = design_fir(&[6.0206; 7], SAMPLE_RATE, DEFAULT_TAPS).unwrap();
        let x: Vec<f64> = (0..8000).map(|n| (0.05 * n as f64).sin()).collect();
        let audio = AudioBuffer::mono(x, SAMPLE_RATE).unwrap();
        let y = apply_fir(&audio, &filt);
        let ratio_db = 10.0 * (y.energy() / audio.energy()).log10();
        assert!((ratio_db - 6.0206).abs() < 0.5);
        for (a, b) in audio.channel(0).iter().zip(y.channel(0)) {
            assert!((2.0 * a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn designed_filters_are_symmetric_and_accurate() {
        for level in [0.0, 20.0, 40.0, 80.0] {
            let gains = nalr_gains(&Audiogram::flat(level).unwrap());
            let filt = design_fir(&gains, SAMPLE_RATE, DEFAULT_TAPS).unwrap();
            assert!(filt.is_symmetric(1e-12));
            for (&f, &g) in AUDIOGRAM_FREQUENCIES.iter().zip(&gains) {
                let err = (filt.response_db(f, SR) - g).abs();
                assert!(err <= 0.5, "level {level}, {f} Hz: {err} dB off");
            }
        }
    }

    #[test]
    fn cascade_equals_self_convolution() {
        let gains = nalr_gains(&Audiogram::flat(40.0).unwrap());
        let filt = design_fir(&gains, SAMPLE_RATE, 63).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..3000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let audio = AudioBuffer::mono(x, SAMPLE_RATE).unwrap();
        let twice = apply_fir(&apply_fir(&audio, &filt), &filt);
        let once = apply_fir(&audio, &filt.cascade(&filt));
        // Identical except for samples truncated away between the two passes.
        let d = filt.taps();
        for i in d..3000 - d {
            assert!((twice.channel(0)[i] - once.channel(0)[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_input_zero_output() {
        let filt = design_fir(&nalr_gains(&Audiogram::flat(50.0).unwrap()), SAMPLE_RATE, 101).unwrap();
        let audio = AudioBuffer::zeros(2, 1000, SAMPLE_RATE).unwrap();
        assert_eq!(apply_fir(&audio, &filt), audio);
    }

    #[test]
    fn rejects_even_or_short_taps() {
        assert!(design_fir(&[0.0; 7], SAMPLE_RATE, 220).is_err());
        assert!(design_fir(&[0.0; 7], SAMPLE_RATE, 29).is_err());
        assert!(FirFilter::new(vec![0.0; 4]).is_err());
    }

    #[test]
    fn isolated_notch_is_still_met_at_every_frequency() {
        let levels = [0.0, 0.0, 78.4, 0.0, 0.0, 0.0, 0.0];
        let gains = nalr_gains(&Audiogram::new(levels).unwrap());
        let fir = design_fir(&gains, SAMPLE_RATE, DEFAULT_TAPS).unwrap();
        assert!(fir.is_symmetric(0.0));
        for (f, g) in AUDIOGRAM_FREQUENCIES.iter().zip(gains) {
            assert!((fir.response_db(*f, SR) - g).abs() < 0.5, "{f} Hz");
        }
        let peak = (1..200)
            .map(|i| fir.response_db(i as f64 * 100.0, SR))
            .fold(f64::MIN, f64::max);
        let target_peak = gains.iter().copied().fold(f64::MIN, f64::max);
        assert!(peak < target_peak + 6.0, "overshoot {peak:.2} dB");
    }
}
