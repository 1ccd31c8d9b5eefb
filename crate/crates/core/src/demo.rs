//! Deterministic synthetic stems and a matching demo scene.
//!
//! The stems mix tonal parts (bass line, chord pad, a voiced melody with
//! vibrato) with noise-like parts (drum hits, breath) so that both the
//! predictable and the unpredictable regimes of frame-domain filtering are
//! exercised.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::degrade::DegradationSpec;
use crate::estimator::{EnhanceMode, EstimatorConfig};
use crate::filtering::FilterOrder;
use crate::nalr::{Audiogram, ListenerProfile};
use crate::remix::{RemixGains, StemSet};

pub const DEMO_SECONDS: f64 = 5.0;

const FADE_IN_SECS: f64 = 0.05;
const FADE_OUT_SECS: f64 = 0.3;

fn envelope(n: usize, len: usize) -> f64 {
    let sr = SAMPLE_RATE as f64;
    let t = n as f64 / sr;
    let left = (len - n) as f64 / sr;
    (t / FADE_IN_SECS).min(1.0) * (left / FADE_OUT_SECS).min(1.0)
}

fn stereo(left: Vec<f64>, right: Vec<f64>) -> AudioBuffer {
    let len = left.len();
    let fade = |v: Vec<f64>| v.into_iter().enumerate().map(|(n, x)| x * envelope(n, len)).collect();
    AudioBuffer::stereo(fade(left), fade(right), SAMPLE_RATE).expect("equal lengths")
}

fn drums(len: usize, rng: &mut ChaCha8Rng) -> AudioBuffer {
    let sr = SAMPLE_RATE as f64;
    let mut l = vec![0.0; len];
    let mut r = vec![0.0; len];
    let beat = (0.5 * sr) as usize;
    let hat = beat / 4;
    for start in (0..len).step_by(hat) {
        let idx = start / hat;
        let mut prev = 0.0;
        for n in start..len.min(start + beat) {
            let t = (n - start) as f64 / sr;
            let white: f64 = StandardNormal.sample(rng);
            let mut v = 0.0;
            if idx.is_multiple_of(4) {
                // Kick: downward sweep.
                let f = 50.0 + 70.0 * (-t / 0.03).exp();
                v += 0.5 * (2.0 * PI * f * t).sin() * (-t / 0.08).exp();
            }
            if idx % 4 == 2 {
                // Snare: noise burst with a body tone.
                v += (0.2 * white + 0.1 * (2.0 * PI * 190.0 * t).sin()) * (-t / 0.06).exp();
            }
            // Hi-hat: differenced noise.
            v += 0.06 * (white - prev) * (-t / 0.02).exp();
            prev = white;
            l[n] += v;
            r[n] += 0.9 * v;
        }
    }
    stereo(l, r)
}

fn harmonic_note(out: &mut [f64], start: usize, end: usize, f0: f64, amp: f64, harmonics: &[f64]) {
    let sr = SAMPLE_RATE as f64;
    for (n, o) in out.iter_mut().enumerate().take(end).skip(start) {
        let t = (n - start) as f64 / sr;
        let rel = (end - n) as f64 / sr;
        let env = (t / 0.01).min(1.0) * (rel / 0.02).min(1.0);
        let v: f64 = harmonics
            .iter()
            .enumerate()
            .map(|(h, &a)| a * (2.0 * PI * f0 * (h + 1) as f64 * t).sin())
            .sum();
        *o += amp * env * v;
    }
}

fn bass(len: usize) -> AudioBuffer {
    let notes = [55.0, 55.0, 73.42, 82.41, 65.41, 55.0, 49.0, 55.0];
    let step = len / notes.len();
    let harmonics = [1.0, 0.5, 0.33, 0.25, 0.2, 0.16];
    let mut mono = vec![0.0; len];
    for (i, &f) in notes.iter().enumerate() {
        harmonic_note(&mut mono, i * step, ((i + 1) * step).min(len), f, 0.2, &harmonics);
    }
    stereo(mono.clone(), mono)
}

fn other(len: usize, rng: &mut ChaCha8Rng) -> AudioBuffer {
    let sr = SAMPLE_RATE as f64;
    let chords = [[220.0, 277.18, 329.63], [196.0, 246.94, 293.66]];
    let half = len / 2;
    let mut l = vec![0.0; len];
    let mut r = vec![0.0; len];
    let mut lp = 0.0;
    for n in 0..len {
        let t = n as f64 / sr;
        let chord = &chords[(n / half).min(1)];
        for &f in chord {
            l[n] += 0.05 * (2.0 * PI * f * t).sin();
            r[n] += 0.05 * (2.0 * PI * f * 1.003 * t + 0.4).sin();
        }
        // Low-passed noise bed.
        let white: f64 = rng.gen_range(-1.0..1.0);
        lp = 0.95 * lp + 0.05 * white;
        l[n] += 0.03 * lp;
        r[n] += 0.03 * lp;
    }
    stereo(l, r)
}

fn vocal(len: usize, rng: &mut ChaCha8Rng) -> AudioBuffer {
    let sr = SAMPLE_RATE as f64;
    let melody = [392.0, 440.0, 493.88, 440.0, 392.0, 329.63, 349.23, 392.0, 440.0, 392.0];
    let step = len / melody.len();
    // Crude formant weighting.
    let weights: Vec<f64> = (1..=12)
        .map(|h| {
            let f = h as f64 * 400.0;
            1.0 / h as f64
                + 0.6 * (-((f - 800.0) / 300.0).powi(2)).exp()
                + 0.4 * (-((f - 2500.0) / 500.0).powi(2)).exp()
        })
        .collect();
    let mut mono = vec![0.0; len];
    let mut phase = 0.0;
    for (n, m) in mono.iter_mut().enumerate() {
        let i = (n / step).min(melody.len() - 1);
        let t = n as f64 / sr;
        let f0 = melody[i] * (1.0 + 0.015 * (2.0 * PI * 5.5 * t).sin());
        phase += 2.0 * PI * f0 / sr;
        let local = (n - i * step) as f64 / sr;
        let env = (local / 0.04).min(1.0) * 0.8 + 0.2;
        let voiced: f64 = weights
            .iter()
            .enumerate()
            .map(|(h, &w)| w * (phase * (h + 1) as f64).sin())
            .sum();
        let breath: f64 = StandardNormal.sample(rng);
        *m = 0.06 * env * voiced + 0.02 * breath;
    }
    stereo(mono.iter().map(|x| 0.8 * x).collect(), mono)
}

/// Four deterministic stereo stems of `seconds` length at 44.1 kHz.
pub fn demo_stems(seconds: f64, seed: u64) -> StemSet {
    let len = (seconds * SAMPLE_RATE as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = drums(len, &mut rng);
    let b = bass(len);
    let o = other(len, &mut rng);
    let v = vocal(len, &mut rng);
    StemSet::new(d, b, o, v).expect("demo stems share a shape")
}

pub fn demo_listener() -> ListenerProfile {
    ListenerProfile {
        id: "demo-sloping".into(),
        left: Audiogram::new([20.0, 25.0, 30.0, 40.0, 50.0, 55.0, 60.0]).expect("valid"),
        right: Audiogram::new([15.0, 20.0, 30.0, 45.0, 50.0, 60.0, 65.0]).expect("valid"),
    }
}

pub fn demo_gains() -> RemixGains {
    RemixGains {
        drums: -3.0,
        bass: 0.0,
        other: -6.0,
        vocal: 6.0,
    }
}

/// One-frame delay, a short random FIR, smooth per-frequency gain and phase
/// jitter, and light noise.
pub fn demo_degradation(seed: u64) -> DegradationSpec {
    DegradationSpec {
        fir_len: 8,
        delay_samples: 441,
        mag_jitter_db: 1.0,
        phase_jitter_rad: 0.5,
        jitter_node_spacing: 16,
        snr_db: Some(50.0),
        seed,
    }
}

/// Order 5 with two frames of lookahead, so a one-frame delay is invertible.
pub fn demo_estimator() -> EstimatorConfig {
    EstimatorConfig {
        order: FilterOrder::with_lookahead(5, 2).expect("valid order"),
        ..EstimatorConfig::default()
    }
}

pub const DEMO_MODE: EnhanceMode = EnhanceMode::Df;
