//! STFT-domain complex ratio masking and deep filtering for hearing-aid
//! music remixing.
//!
//! The crate covers the whole remix chain: per-stem gains and summation,
//! NAL-R amplification per ear, seeded synthetic degradation, and an oracle
//! enhancement stage. That stage fits complex ratio masks or order-`N` deep
//! filters against a clean reference, then resynthesises the result.
//! Evaluation uses plain energy-ratio SDR and mean absolute error.
//!
//! ```text
//! stems ──gains──▶ remix ──NAL-R──▶ NALRed ──degrade──▶ I ──STFT──▶ fit/apply ──iSTFT──▶ enhanced
//! ```
//!
//! Each major capability has a runnable program under `examples/`.

pub mod audio;
pub mod commands;
pub mod conv;
pub mod degrade;
pub mod demo;
pub mod error;
pub mod estimator;
pub mod filtering;
pub mod linalg;
pub mod metrics;
pub mod nalr;
pub mod pipeline;
pub mod remix;
pub mod scene;
pub mod stft;
pub mod wav;

pub use audio::{AudioBuffer, SAMPLE_RATE};
pub use error::{Error, Result};
pub use estimator::{enhance_spectrogram, fit_per_frequency_df, oracle_crm, EnhanceMode, EstimatorConfig, FitReport};
pub use filtering::{
    apply_crm, apply_deep_filter, unfold_time, ComplexMask, DeepFilterTensor, FilterOrder, UnfoldedSpectrogram,
};
pub use stft::{istft, stft, Spectrogram, StftParams};
