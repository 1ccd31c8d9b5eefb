//! Signal-to-distortion ratio and mean absolute error.

use serde::Serialize;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Returned when the error energy is below `1e-30` of the reference energy.
pub const SDR_CAP_DB: f64 = 300.0;

/// Label recorded in reports so the SDR is not mistaken for BSSEval SDR.
pub const SDR_VARIANT: &str = "energy-ratio";

const CAP_RATIO: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub sdr_variant: &'static str,
    pub sdr_db: Vec<f64>,
    pub sdr_mean_db: f64,
    pub mae: Vec<f64>,
    pub mae_mean: f64,
}

/// Per-channel values plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMetric {
    pub per_channel: Vec<f64>,
    pub mean: f64,
}

impl ChannelMetric {
    fn from_channels(per_channel: Vec<f64>) -> Self {
        let mean = per_channel.iter().sum::<f64>() / per_channel.len() as f64;
        Self { per_channel, mean }
    }
}

/// `10·log10(Σ ref² / Σ (ref − est)²)` per channel.
pub fn sdr(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<ChannelMetric> {
    reference.check_compatible(estimate)?;
    let mut out = Vec::with_capacity(reference.num_channels());
    for c in 0..reference.num_channels() {
        let (mut sig, mut err) = (0.0, 0.0);
        for (r, e) in reference.channel(c).iter().zip(estimate.channel(c)) {
            sig += r * r;
            err += (r - e) * (r - e);
        }
        if sig == 0.0 {
            return Err(Error::UndefinedMetric(format!(
                "SDR is undefined for a silent reference (channel {c})"
            )));
        }
        out.push(if err < CAP_RATIO * sig {
            SDR_CAP_DB
        } else {
            10.0 * (sig / err).log10()
        });
    }
    Ok(ChannelMetric::from_channels(out))
}

/// Mean of `|ref − est|` per channel.
pub fn mae(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<ChannelMetric> {
    reference.check_compatible(estimate)?;
    let n = reference.len().max(1) as f64;
    let per_channel = (0..reference.num_channels())
        .map(|c| {
            reference
                .channel(c)
                .iter()
                .zip(estimate.channel(c))
                .map(|(r, e)| (r - e).abs())
                .sum::<f64>()
                / n
        })
        .collect();
    Ok(ChannelMetric::from_channels(per_channel))
}

pub fn evaluate(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<MetricReport> {
    let s = sdr(reference, estimate)?;
    let m = mae(reference, estimate)?;
    Ok(MetricReport {
        sdr_variant: SDR_VARIANT,
        sdr_db: s.per_channel,
        sdr_mean_db: s.mean,
        mae: m.per_channel,
        mae_mean: m.mean,
    })
}
