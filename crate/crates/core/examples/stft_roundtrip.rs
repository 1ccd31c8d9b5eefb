// Analyse a short stereo chord, inspect the spectrogram and resynthesise it.

use deepremix::stft::{istft, stft, StftParams};
use deepremix::{AudioBuffer, SAMPLE_RATE};

pub fn run_example() -> anyhow::Result<()> {
    let len = SAMPLE_RATE as usize;
    let chord = |phase: f64| -> Vec<f64> {
        (0..len)
            .map(|n| {
                let t = n as f64 / SAMPLE_RATE as f64;
                [220.0, 277.18, 329.63]
                    .iter()
                    .map(|f| 0.2 * (2.0 * std::f64::consts::PI * f * t + phase).sin())
                    .sum()
            })
            .collect()
    };
    let audio = AudioBuffer::stereo(chord(0.0), chord(0.7), SAMPLE_RATE)?;

    let params = StftParams::default();
    let spec = stft(&audio, &params)?;
    let (c, t, f) = spec.shape();
    println!("{c} channels, {t} frames, {f} bins (hop {} samples)", params.hop);

    let bin_hz = SAMPLE_RATE as f64 / params.fft_size as f64;
    let mid = spec.frame(0, t / 2);
    let (peak, _) = mid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    println!(
        "loudest bin in the middle frame: {peak} (~{:.0} Hz)",
        peak as f64 * bin_hz
    );

    let back = istft(&spec)?;
    let err = (0..2)
        .flat_map(|ch| {
            audio
                .channel(ch)
                .iter()
                .zip(back.channel(ch))
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max);
    println!("max round-trip error: {err:.3e}");
    anyhow::ensure!(err < 1e-9, "round trip drifted by {err}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
