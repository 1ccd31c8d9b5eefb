// SDR and MAE for a few typical estimate errors.

use deepremix::metrics::{evaluate, SDR_CAP_DB};
use deepremix::{AudioBuffer, SAMPLE_RATE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> anyhow::Result<()> {
    let len = SAMPLE_RATE as usize;
    let tone: Vec<f64> = (0..len).map(|n| 0.5 * (n as f64 * 0.0627).sin()).collect();
    let reference = AudioBuffer::stereo(tone.clone(), tone.iter().map(|x| 0.5 * x).collect(), SAMPLE_RATE)?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let hiss = Normal::new(0.0, 0.01)?;
    let mut noisy = reference.clone();
    for c in 0..2 {
        for x in noisy.channel_mut(c) {
            *x += hiss.sample(&mut rng);
        }
    }
    let mut shifted = reference.clone();
    for c in 0..2 {
        shifted.channel_mut(c).rotate_right(1);
    }

    for (name, estimate) in [
        ("identical", reference.clone()),
        ("half amplitude", reference.scaled(0.5)),
        ("added hiss", noisy),
        ("one sample late", shifted),
    ] {
        let r = evaluate(&reference, &estimate)?;
        println!(
            "{name:>16}: SDR {:>7.2} dB (L {:.2}, R {:.2}), MAE {:.2e}",
            r.sdr_mean_db, r.sdr_db[0], r.sdr_db[1], r.mae_mean
        );
        if name == "identical" {
            anyhow::ensure!(r.sdr_mean_db == SDR_CAP_DB && r.mae_mean == 0.0);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
