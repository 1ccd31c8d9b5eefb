//! Linear convolution of real sequences.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Kernels up to this length are convolved directly.
const DIRECT_MAX_TAPS: usize = 32;

/// Full linear convolution, `x.len() + h.len() - 1` samples long.
pub fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    if h.len().min(x.len()) <= DIRECT_MAX_TAPS {
        let (long, short) = if h.len() <= x.len() { (x, h) } else { (h, x) };
        let mut out = vec![0.0; out_len];
        for (j, &s) in short.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for (o, &v) in out[j..j + long.len()].iter_mut().zip(long) {
                *o += s * v;
            }
        }
        return out;
    }

    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |s: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (b, &v) in buf.iter_mut().zip(s) {
            b.re = v;
        }
        buf
    };
    let mut xf = lift(x);
    let mut hf = lift(h);
    fwd.process(&mut xf);
    fwd.process(&mut hf);
    for (a, b) in xf.iter_mut().zip(&hf) {
        *a *= b;
    }
    inv.process(&mut xf);
    let scale = 1.0 / n as f64;
    xf[..out_len].iter().map(|z| z.re * scale).collect()
}
