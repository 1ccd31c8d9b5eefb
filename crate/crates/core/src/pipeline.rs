//! End-to-end remix enhancement.
//!
//! stems → per-stem gains → stereo remix → NAL-R per ear → optional
//! degradation → oracle enhancement against the clean NAL-R remix.

use serde::Serialize;

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::degrade::{degrade, DegradationSpec};
use crate::error::{invalid, Result};
use crate::estimator::{enhance_spectrogram, EnhanceMode, EstimatorConfig, FitReport};
use crate::metrics::{evaluate, MetricReport};
use crate::nalr::{apply_nalr, ListenerProfile, DEFAULT_TAPS};
use crate::remix::{apply_gains, mix, RemixGains, StemSet};
use crate::stft::{istft, stft, StftParams};

/// Everything needed to run the pipeline once.
#[derive(Debug, Clone)]
pub struct RemixScene {
    pub stems: StemSet,
    pub gains: RemixGains,
    pub listener: ListenerProfile,
    pub degradation: Option<DegradationSpec>,
    pub mode: EnhanceMode,
    pub estimator: EstimatorConfig,
    pub stft: StftParams,
    pub nalr_taps: usize,
}

impl RemixScene {
    /// Scene with default STFT, estimator and filter settings.
    pub fn new(stems: StemSet, gains: RemixGains, listener: ListenerProfile) -> Self {
        Self {
            stems,
            gains,
            listener,
            degradation: None,
            mode: EnhanceMode::Df,
            estimator: EstimatorConfig::default(),
            stft: StftParams::default(),
            nalr_taps: DEFAULT_TAPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stems.sample_rate() != SAMPLE_RATE {
            return Err(invalid(format!(
                "stems are at {} Hz; the pipeline runs at {SAMPLE_RATE} Hz",
                self.stems.sample_rate()
            )));
        }
        if self.stems.is_empty() {
            return Err(invalid("stems are empty"));
        }
        self.gains.validate()?;
        if let Some(d) = &self.degradation {
            d.validate()?;
        }
        self.estimator.validate()?;
        self.stft.validate()
    }
}

/// The three time-domain signals the enhancement model sees.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalStack {
    /// Unity-gain mix of the stems.
    pub mixture_at_mic: AudioBuffer,
    /// Gain-adjusted remix before amplification.
    pub pre_nalr_remix: AudioBuffer,
    /// Gain-adjusted remix after per-ear NAL-R.
    pub nalred_remix: AudioBuffer,
}

impl SignalStack {
    pub fn new(mixture_at_mic: AudioBuffer, pre_nalr_remix: AudioBuffer, nalred_remix: AudioBuffer) -> Result<Self> {
        mixture_at_mic.check_compatible(&pre_nalr_remix)?;
        mixture_at_mic.check_compatible(&nalred_remix)?;
        Ok(Self {
            mixture_at_mic,
            pre_nalr_remix,
            nalred_remix,
        })
    }
}

pub fn build_signal_stack(
    stems: &StemSet,
    gains: &RemixGains,
    listener: &ListenerProfile,
    nalr_taps: usize,
) -> Result<SignalStack> {
    let mixture = mix(stems);
    let pre = mix(&apply_gains(stems, gains)?);
    let nalred = apply_nalr(&pre, listener, nalr_taps)?;
    SignalStack::new(mixture, pre, nalred)
}

/// Fits the oracle filter mapping `degraded` onto `reference` in the STFT
/// domain and returns the resynthesised estimate.
pub fn enhance_audio(
    degraded: &AudioBuffer,
    reference: &AudioBuffer,
    mode: EnhanceMode,
    cfg: &EstimatorConfig,
    params: &StftParams,
) -> Result<(AudioBuffer, FitReport)> {
    degraded.check_compatible(reference)?;
    let deg = stft(degraded, params)?;
    let tgt = stft(reference, params)?;
    let (out, report) = enhance_spectrogram(&deg, &tgt, mode, cfg)?;
    Ok((istft(&out)?, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    /// Degraded vs clean NAL-R remix.
    pub before: MetricReport,
    /// Enhanced vs clean NAL-R remix.
    pub after: MetricReport,
    pub fit: FitReport,
}

impl PipelineReport {
    pub fn sdr_before(&self) -> f64 {
        self.before.sdr_mean_db
    }

    pub fn sdr_after(&self) -> f64 {
        self.after.sdr_mean_db
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub stack: SignalStack,
    /// The enhancement input: the NAL-R remix after degradation.
    pub degraded: AudioBuffer,
    pub enhanced: AudioBuffer,
    pub report: PipelineReport,
}

pub fn run_pipeline(scene: &RemixScene) -> Result<PipelineOutput> {
    run_pipeline_with_input(scene, None)
}

/// Like [`run_pipeline`], but enhances `degraded` when given instead of
/// degrading the NAL-R remix according to the scene.
pub fn run_pipeline_with_input(scene: &RemixScene, degraded: Option<AudioBuffer>) -> Result<PipelineOutput> {
    scene.validate()?;
    let stack = build_signal_stack(&scene.stems, &scene.gains, &scene.listener, scene.nalr_taps)?;
    let degraded = match (degraded, &scene.degradation) {
        (Some(d), _) => {
            d.check_compatible(&stack.nalred_remix)
                .map_err(|e| invalid(format!("degraded input does not match the remix: {e}")))?;
            d
        }
        (None, Some(spec)) => degrade(&stack.nalred_remix, spec)?,
        (None, None) => stack.nalred_remix.clone(),
    };
    log::info!(
        "enhancing {:.2} s with mode {} (order {})",
        degraded.duration_secs(),
        scene.mode,
        scene.estimator.order.order()
    );
    let (enhanced, fit) = enhance_audio(
        &degraded,
        &stack.nalred_remix,
        scene.mode,
        &scene.estimator,
        &scene.stft,
    )?;
    let report = PipelineReport {
        before: evaluate(&stack.nalred_remix, &degraded)?,
        after: evaluate(&stack.nalred_remix, &enhanced)?,
        fit,
    };
    Ok(PipelineOutput {
        stack,
        degraded,
        enhanced,
        report,
    })
}
