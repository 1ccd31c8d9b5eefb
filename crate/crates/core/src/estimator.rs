//! Closed-form oracle estimators for masks and deep filters.
//!
//! Given the degraded spectrogram and the reference it should be mapped to,
//! these fit the coefficients a trained network would otherwise have to
//! produce. The per-bin mask is exact up to its stabiliser. Deep filters are
//! fitted per channel and frequency as one time-invariant kernel per time
//! block by ridge least squares, because a single bin gives one equation for
//! `N` unknowns.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::filtering::{apply_crm, apply_deep_filter, unfold_time, ComplexMask, DeepFilterTensor, FilterOrder};
use crate::linalg::{residual_energy, solve_ridge, Design, SolveMethod};
use crate::stft::Spectrogram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub order: FilterOrder,
    /// Ridge weight, scaled per system by `trace(AᴴA) / N`.
    pub ridge: f64,
    /// Frames per time block; `None` fits the whole signal as one block.
    pub block_len: Option<usize>,
    /// Stabiliser for the per-bin oracle mask.
    pub eps: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            order: FilterOrder::default(),
            ridge: 1e-8,
            block_len: None,
            eps: 1e-12,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ridge < 0.0 || !self.ridge.is_finite() {
            return Err(invalid(format!("ridge must be finite and >= 0, got {}", self.ridge)));
        }
        if self.eps < 0.0 || !self.eps.is_finite() {
            return Err(invalid(format!("eps must be finite and >= 0, got {}", self.eps)));
        }
        if let Some(b) = self.block_len {
            if b < self.order.order() {
                return Err(invalid(format!(
                    "block length {b} is shorter than filter order {}",
                    self.order.order()
                )));
            }
        }
        Ok(())
    }

    pub fn with_order(self, order: FilterOrder) -> Self {
        Self { order, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnhanceMode {
    /// Order-1 fit applied as a complex ratio mask.
    Crm,
    /// Order-`N` fit applied as a deep filter.
    #[default]
    Df,
}

impl fmt::Display for EnhanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnhanceMode::Crm => "crm",
            EnhanceMode::Df => "df",
        })
    }
}

impl FromStr for EnhanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crm" => Ok(EnhanceMode::Crm),
            "df" => Ok(EnhanceMode::Df),
            other => Err(invalid(format!("unknown mode {other:?} (expected crm or df)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDiagnostics {
    pub channel: usize,
    pub start_frame: usize,
    pub frames: usize,
    /// Largest squared-pivot ratio among bins solved by Cholesky.
    pub max_pivot_ratio: f64,
    /// Bins that needed the minimum-norm fallback.
    pub fallback_bins: usize,
    /// All-zero bins, whose filter is set to zero.
    pub degenerate_bins: usize,
}

/// Residual energies of a fit, stored per `[channel][bin]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub channels: usize,
    pub bins: usize,
    /// `Σ_t |target − degraded|²`, i.e. the residual of the identity filter.
    pub residual_before: Vec<f64>,
    pub residual_after: Vec<f64>,
    pub target_energy: Vec<f64>,
    pub blocks: Vec<BlockDiagnostics>,
    pub total_relative_residual: f64,
}

impl FitReport {
    pub fn after(&self, c: usize, f: usize) -> f64 {
        self.residual_after[c * self.bins + f]
    }

    pub fn before(&self, c: usize, f: usize) -> f64 {
        self.residual_before[c * self.bins + f]
    }

    pub fn degenerate_bins(&self) -> usize {
        self.blocks.iter().map(|b| b.degenerate_bins).sum()
    }

    pub fn fallback_bins(&self) -> usize {
        self.blocks.iter().map(|b| b.fallback_bins).sum()
    }
}

/// Splits `0..frames` into blocks; a trailing block shorter than `min_len`
/// is merged into its predecessor.
fn block_ranges(frames: usize, block_len: Option<usize>, min_len: usize) -> Vec<Range<usize>> {
    let Some(len) = block_len else {
        return std::iter::once(0..frames).collect();
    };
    let mut out: Vec<Range<usize>> = (0..frames).step_by(len).map(|s| s..(s + len).min(frames)).collect();
    if out.len() > 1 && out.last().is_some_and(|r| r.len() < min_len) {
        let tail = out.pop().unwrap();
        out.last_mut().unwrap().end = tail.end;
    }
    out
}

/// Per-bin mask `M = S·conj(I) / (|I|² + eps)`.
pub fn oracle_crm(degraded: &Spectrogram, target: &Spectrogram, eps: f64) -> Result<ComplexMask> {
    degraded.check_same_shape(target)?;
    let (c, t, f) = degraded.shape();
    let data = degraded
        .data()
        .iter()
        .zip(target.data())
        .map(|(i, s)| {
            let denom = i.norm_sqr() + eps;
            if denom > 0.0 {
                s * i.conj() / denom
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    ComplexMask::new(c, t, f, data)
}

/// Fits one deep-filter kernel per channel, frequency and time block so the
/// unfolded `degraded` spectrogram maps onto `target` in the least-squares
/// sense.
pub fn fit_per_frequency_df(
    degraded: &Spectrogram,
    target: &Spectrogram,
    cfg: &EstimatorConfig,
) -> Result<(DeepFilterTensor, FitReport)> {
    cfg.validate()?;
    degraded.check_same_shape(target)?;
    let (channels, frames, bins) = degraded.shape();
    let order = cfg.order;
    let n = order.order();
    if frames < n {
        return Err(shape(format!("{frames} frames cannot support a filter of order {n}")));
    }

    let mut filt = DeepFilterTensor::zeros(channels, frames, bins, order);
    let mut residual_before = vec![0.0; channels * bins];
    let mut residual_after = vec![0.0; channels * bins];
    let mut target_energy = vec![0.0; channels * bins];
    let mut blocks = Vec::new();

    let mut design = Vec::new();
    let mut rhs = Vec::new();
    for c in 0..channels {
        for range in block_ranges(frames, cfg.block_len, n) {
            let mut diag = BlockDiagnostics {
                channel: c,
                start_frame: range.start,
                frames: range.len(),
                max_pivot_ratio: 0.0,
                fallback_bins: 0,
                degenerate_bins: 0,
            };
            for f in 0..bins {
                design.clear();
                rhs.clear();
                for t in range.clone() {
                    for k in 0..n {
                        design.push(match order.source_frame(t, k, frames) {
                            Some(src) => degraded.get(c, src, f),
                            None => Complex64::new(0.0, 0.0),
                        });
                    }
                    rhs.push(target.get(c, t, f));
                }
                let a = Design {
                    rows: range.len(),
                    cols: n,
                    data: &design,
                };
                let sol = solve_ridge(&a, &rhs, cfg.ridge);
                match sol.method {
                    SolveMethod::Cholesky => diag.max_pivot_ratio = diag.max_pivot_ratio.max(sol.pivot_ratio),
                    SolveMethod::MinimumNorm => diag.fallback_bins += 1,
                    SolveMethod::Degenerate => diag.degenerate_bins += 1,
                }
                let idx = c * bins + f;
                residual_after[idx] += residual_energy(&a, &rhs, &sol.coefficients);
                for t in range.clone() {
                    let s = target.get(c, t, f);
                    residual_before[idx] += (s - degraded.get(c, t, f)).norm_sqr();
                    target_energy[idx] += s.norm_sqr();
                    for (k, &w) in sol.coefficients.iter().enumerate() {
                        filt.set(c, k, t, f, w);
                    }
                }
            }
            blocks.push(diag);
        }
    }

    let total_target: f64 = target_energy.iter().sum();
    let total_after: f64 = residual_after.iter().sum();
    let total_relative_residual = if total_target > 0.0 {
        total_after / total_target
    } else {
        0.0
    };
    let report = FitReport {
        channels,
        bins,
        residual_before,
        residual_after,
        target_energy,
        blocks,
        total_relative_residual,
    };
    Ok((filt, report))
}

/// Fits and applies the enhancement for `mode`. `Crm` always uses an order-1
/// fit; `Df` uses `cfg.order`.
pub fn enhance_spectrogram(
    degraded: &Spectrogram,
    target: &Spectrogram,
    mode: EnhanceMode,
    cfg: &EstimatorConfig,
) -> Result<(Spectrogram, FitReport)> {
    match mode {
        EnhanceMode::Crm => {
            let cfg = cfg.with_order(FilterOrder::causal(1)?);
            let (filt, report) = fit_per_frequency_df(degraded, target, &cfg)?;
            Ok((apply_crm(degraded, &filt.tap_mask(0))?, report))
        }
        EnhanceMode::Df => {
            let (filt, report) = fit_per_frequency_df(degraded, target, cfg)?;
            let unfolded = unfold_time(degraded, cfg.order);
            Ok((apply_deep_filter(&unfolded, &filt)?, report))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::SAMPLE_RATE;
    use crate::stft::StftParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> StftParams {
        StftParams {
            win_size: 16,
            fft_size: 16,
            hop: 4,
            ..StftParams::default()
        }
    }

    fn random_spec(channels: usize, frames: usize, seed: u64) -> Spectrogram {
        let p = params();
        let mut spec = Spectrogram::zeros(channels, p, (frames - 1) * p.hop, SAMPLE_RATE).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for z in spec.data_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        spec
    }

    #[test]
    fn block_ranges_merge_short_tail() {
        assert_eq!(block_ranges(10, None, 3), vec![0..10]);
        assert_eq!(block_ranges(10, Some(4), 3), vec![0..4, 4..10]);
        assert_eq!(block_ranges(12, Some(4), 3), vec![0..4, 4..8, 8..12]);
    }

    #[test]
    fn crm_self_mask_is_unity() {
        let spec = random_spec(1, 6, 1);
        let mask = oracle_crm(&spec, &spec, 1e-12).unwrap();
        for (m, i) in mask.data().iter().zip(spec.data()) {
            let tol = 1e-12 / i.norm_sqr() + 1e-15;
            assert!((m - Complex64::new(1.0, 0.0)).norm() <= tol);
        }
    }

    #[test]
    fn crm_zero_bin_gives_zero_mask() {
        let mut spec = random_spec(1, 4, 2);
        let target = random_spec(1, 4, 3);
        spec.set(0, 1, 2, Complex64::new(0.0, 0.0));
        let mask = oracle_crm(&spec, &target, 1e-12).unwrap();
        assert_eq!(mask.get(0, 1, 2), Complex64::new(0.0, 0.0));
        let mask = oracle_crm(&spec, &target, 0.0).unwrap();
        assert_eq!(mask.get(0, 1, 2), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn crm_forced_arithmetic() {
        let mut deg = random_spec(1, 1, 4);
        let mut tgt = deg.clone();
        deg.set(0, 0, 0, Complex64::new(2.0, 0.0));
        tgt.set(0, 0, 0, Complex64::new(0.0, 2.0));
        let mask = oracle_crm(&deg, &tgt, 0.0).unwrap();
        assert_eq!(mask.get(0, 0, 0), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn identity_system_recovers_delta_kernel() {
        let spec = random_spec(2, 20, 5);
        let cfg = EstimatorConfig {
            ridge: 0.0,
            ..EstimatorConfig::default()
        };
        let (filt, report) = fit_per_frequency_df(&spec, &spec, &cfg).unwrap();
        let l = cfg.order.lookback();
        for c in 0..2 {
            for f in 0..spec.bins() {
                for k in 0..5 {
                    let expect = if k == l { 1.0 } else { 0.0 };
                    assert!((filt.get(c, k, 7, f) - Complex64::new(expect, 0.0)).norm() < 1e-10);
                }
                assert!(report.after(c, f) < 1e-20);
            }
        }
    }

    #[test]
    fn order_one_matches_wiener_closed_form() {
        let deg = random_spec(1, 12, 6);
        let tgt = random_spec(1, 12, 7);
        let cfg = EstimatorConfig {
            order: FilterOrder::causal(1).unwrap(),
            ridge: 0.0,
            ..EstimatorConfig::default()
        };
        let (filt, _) = fit_per_frequency_df(&deg, &tgt, &cfg).unwrap();
        for f in 0..deg.bins() {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for t in 0..12 {
                num += deg.get(0, t, f).conj() * tgt.get(0, t, f);
                den += deg.get(0, t, f).norm_sqr();
            }
            assert!((filt.get(0, 0, 3, f) - num / den).norm() < 1e-12);
        }
    }

    #[test]
    fn silent_bins_are_flagged_not_errors() {
        let mut deg = random_spec(1, 10, 8);
        let tgt = random_spec(1, 10, 9);
        for t in 0..10 {
            deg.set(0, t, 3, Complex64::new(0.0, 0.0));
        }
        let (filt, report) = fit_per_frequency_df(&deg, &tgt, &EstimatorConfig::default()).unwrap();
        assert_eq!(report.degenerate_bins(), 1);
        for k in 0..5 {
            assert_eq!(filt.get(0, k, 4, 3), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn blocks_produce_piecewise_constant_filters() {
        let deg = random_spec(1, 30, 10);
        let tgt = random_spec(1, 30, 11);
        let cfg = EstimatorConfig {
            order: FilterOrder::causal(2).unwrap(),
            block_len: Some(10),
            ..EstimatorConfig::default()
        };
        let (filt, report) = fit_per_frequency_df(&deg, &tgt, &cfg).unwrap();
        assert_eq!(report.blocks.len(), 3);
        assert_eq!(filt.get(0, 1, 0, 2), filt.get(0, 1, 9, 2));
        assert_ne!(filt.get(0, 1, 9, 2), filt.get(0, 1, 10, 2));
    }

    #[test]
    fn rejects_bad_config() {
        let spec = random_spec(1, 10, 12);
        let cfg = EstimatorConfig {
            block_len: Some(2),
            ..EstimatorConfig::default()
        };
        assert!(fit_per_frequency_df(&spec, &spec, &cfg).is_err());
        let cfg = EstimatorConfig {
            ridge: -1.0,
            ..EstimatorConfig::default()
        };
        assert!(fit_per_frequency_df(&spec, &spec, &cfg).is_err());
        let short = random_spec(1, 3, 13);
        assert!(fit_per_frequency_df(&short, &short, &EstimatorConfig::default()).is_err());
        let other = random_spec(1, 11, 14);
        assert!(fit_per_frequency_df(&spec, &other, &EstimatorConfig::default()).is_err());
    }

    #[test]
    fn crm_mode_equals_order_one_deep_filter() {
        let deg = random_spec(2, 15, 15);
        let tgt = random_spec(2, 15, 16);
        let cfg = EstimatorConfig::default();
        let (crm, _) = enhance_spectrogram(&deg, &tgt, EnhanceMode::Crm, &cfg).unwrap();
        let one = cfg.with_order(FilterOrder::causal(1).unwrap());
        let (df, _) = enhance_spectrogram(&deg, &tgt, EnhanceMode::Df, &one).unwrap();
        for (a, b) in crm.data().iter().zip(df.data()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn crm_mode_on_clean_input_returns_target() {
        let spec = random_spec(1, 15, 17);
        let (out, _) = enhance_spectrogram(&spec, &spec, EnhanceMode::Crm, &EstimatorConfig::default()).unwrap();
        for (a, b) in out.data().iter().zip(spec.data()) {
            assert!((a - b).norm() < 1e-7 * b.norm().max(1e-3));
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("crm".parse::<EnhanceMode>().unwrap(), EnhanceMode::Crm);
        assert_eq!("df".parse::<EnhanceMode>().unwrap(), EnhanceMode::Df);
        assert!("wiener".parse::<EnhanceMode>().is_err());
        assert_eq!(EnhanceMode::Df.to_string(), "df");
    }
}
