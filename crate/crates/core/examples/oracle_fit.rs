// Filter a spectrogram with a known per-frequency kernel and recover the
// kernel from input and output alone.

use deepremix::estimator::{fit_per_frequency_df, EstimatorConfig};
use deepremix::filtering::{apply_deep_filter, unfold_time, DeepFilterTensor, FilterOrder};
use deepremix::stft::{stft, StftParams};
use deepremix::{AudioBuffer, SAMPLE_RATE};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise: Vec<f64> = (0..22_050).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let params = StftParams {
        win_size: 512,
        fft_size: 512,
        hop: 128,
        ..StftParams::default()
    };
    let input = stft(&AudioBuffer::mono(noise, SAMPLE_RATE)?, &params)?;
    let (c, t, f) = input.shape();

    let order = FilterOrder::causal(3)?;
    let mut kernel = DeepFilterTensor::zeros(c, t, f, order);
    let taps: Vec<Vec<Complex64>> = (0..f)
        .map(|_| {
            (0..3)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    for frame in 0..t {
        for (bin, h) in taps.iter().enumerate() {
            for (k, &v) in h.iter().enumerate() {
                kernel.set(0, k, frame, bin, v);
            }
        }
    }
    let target = apply_deep_filter(&unfold_time(&input, order), &kernel)?;

    let cfg = EstimatorConfig {
        order,
        ridge: 0.0,
        ..EstimatorConfig::default()
    };
    let (fitted, report) = fit_per_frequency_df(&input, &target, &cfg)?;
    let err = fitted
        .data()
        .iter()
        .zip(kernel.data())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("{f} bins x {t} frames, order {}", order.order());
    println!("relative residual {:.3e}", report.total_relative_residual);
    println!("max kernel error  {err:.3e}");
    anyhow::ensure!(err < 1e-8, "kernel not recovered ({err})");
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
