// Prescribe NAL-R gains for a sloping loss, realise them as linear-phase FIR
// filters and check the response at the audiometric frequencies.

use deepremix::demo::demo_listener;
use deepremix::nalr::{design_fir, nalr_gains, AUDIOGRAM_FREQUENCIES, DEFAULT_TAPS};
use deepremix::SAMPLE_RATE;

pub fn run_example() -> anyhow::Result<()> {
    let listener = demo_listener();
    println!("listener {}", listener.id);
    for (name, idx) in [("left", 0), ("right", 1)] {
        let audiogram = listener.ear(idx);
        let gains = nalr_gains(audiogram);
        let fir = design_fir(&gains, SAMPLE_RATE, DEFAULT_TAPS)?;
        println!("{name} ear ({} taps, delay {} samples)", fir.taps(), fir.group_delay());
        println!("  freq Hz   HL dB   target dB   FIR dB");
        for ((f, hl), g) in AUDIOGRAM_FREQUENCIES.iter().zip(audiogram.levels()).zip(gains) {
            let got = fir.response_db(*f, SAMPLE_RATE as f64);
            println!("  {f:>7.0} {hl:>7.1} {g:>11.2} {got:>8.2}");
            anyhow::ensure!((got - g).abs() <= 0.5, "{f} Hz misses target by {:.2} dB", got - g);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
