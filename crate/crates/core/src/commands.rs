//! Implementations behind the `deepremix` command-line tool.
//!
//! Each function does the work of one subcommand and returns what it wrote
//! so callers (the binary, tests, examples) can inspect it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::audio::AudioBuffer;
use crate::degrade::degrade;
use crate::demo;
use crate::error::{Error, Result};
use crate::estimator::{EnhanceMode, FitReport};
use crate::metrics::{evaluate, MetricReport, SDR_VARIANT};
use crate::nalr::{apply_nalr, nalr_gains, AUDIOGRAM_FREQUENCIES, DEFAULT_TAPS};
use crate::pipeline::{build_signal_stack, run_pipeline_with_input};
use crate::remix::{RemixGains, Stem};
use crate::scene::{
    write_json, DegradationFile, EstimatorFile, ListenerFile, LoadedScene, OutputsFile, SceneFile, StemPaths,
};
use crate::stft::StftParams;
use crate::wav::{read_wav, write_wav, WavFormat};

pub const MIXTURE_WAV: &str = "mixture_at_mic.wav";
pub const PRE_NALR_WAV: &str = "pre_nalr.wav";
pub const NALRED_WAV: &str = "nalred.wav";
pub const DEGRADED_WAV: &str = "degraded.wav";
pub const ENHANCED_WAV: &str = "enhanced.wav";
pub const REPORT_JSON: &str = "report.json";
pub const SCENE_JSON: &str = "scene.json";
pub const LISTENER_JSON: &str = "listener.json";

/// Command-line overrides applied on top of a scene file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<EnhanceMode>,
    pub order: Option<usize>,
    pub lookahead: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, scene: &mut LoadedScene) -> Result<()> {
        let f = &mut scene.file;
        if let Some(seed) = self.seed {
            f.seed = seed;
        }
        if let Some(mode) = self.mode {
            f.estimator.mode = mode;
        }
        if let Some(order) = self.order {
            f.estimator.order = order;
            f.estimator.lookahead = match self.lookahead {
                Some(a) => a,
                None => f.estimator.lookahead.min(order.saturating_sub(1)),
            };
        } else if let Some(a) = self.lookahead {
            f.estimator.lookahead = a;
        }
        f.validate()
    }

    fn output_dir(&self, scene: &LoadedScene) -> PathBuf {
        self.out.clone().unwrap_or_else(|| scene.output_dir())
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn load(scene_path: &Path, overrides: &Overrides) -> Result<(LoadedScene, PathBuf)> {
    let mut scene = LoadedScene::load(scene_path)?;
    overrides.apply(&mut scene)?;
    let out = overrides.output_dir(&scene);
    create_dir(&out)?;
    Ok((scene, out))
}

/// Writes four synthetic stems, a listener file and a scene into `dir`.
/// Returns the scene path.
pub fn gen_demo(dir: &Path, seed: u64) -> Result<PathBuf> {
    let stems_dir = dir.join("stems");
    create_dir(&stems_dir)?;
    let stems = demo::demo_stems(demo::DEMO_SECONDS, seed);
    for (stem, buf) in stems.iter() {
        write_wav(stems_dir.join(format!("{stem}.wav")), buf, WavFormat::F32)?;
    }
    let listener = ListenerFile::from(&demo::demo_listener());
    write_json(&dir.join(LISTENER_JSON), &listener)?;

    let est = demo::demo_estimator();
    let path_of = |s: Stem| PathBuf::from("stems").join(format!("{s}.wav"));
    let scene = SceneFile {
        stems: StemPaths {
            drums: path_of(Stem::Drums),
            bass: path_of(Stem::Bass),
            other: path_of(Stem::Other),
            vocal: path_of(Stem::Vocal),
        },
        gains_db: demo::demo_gains(),
        listener,
        degradation: Some(DegradationFile::from(&demo::demo_degradation(seed))),
        estimator: EstimatorFile {
            mode: demo::DEMO_MODE,
            order: est.order.order(),
            lookahead: est.order.lookahead(),
            ridge: est.ridge,
            block_len: est.block_len,
            eps: est.eps,
        },
        nalr_taps: DEFAULT_TAPS,
        outputs: OutputsFile::default(),
        seed,
    };
    let path = dir.join(SCENE_JSON);
    write_json(&path, &scene)?;
    Ok(path)
}

/// Writes the unity mix, the pre-NAL-R remix and the NAL-R remix.
pub fn remix(scene_path: &Path, overrides: &Overrides) -> Result<Vec<PathBuf>> {
    let (loaded, out) = load(scene_path, overrides)?;
    let scene = loaded.to_scene()?;
    scene.validate()?;
    let stack = build_signal_stack(&scene.stems, &scene.gains, &scene.listener, scene.nalr_taps)?;
    let format = loaded.file.outputs.format;
    let mut written = Vec::new();
    for (name, buf) in [
        (MIXTURE_WAV, &stack.mixture_at_mic),
        (PRE_NALR_WAV, &stack.pre_nalr_remix),
        (NALRED_WAV, &stack.nalred_remix),
    ] {
        let p = out.join(name);
        write_wav(&p, buf, format)?;
        written.push(p);
    }
    Ok(written)
}

/// Degrades `input` (or, when absent, the scene's NAL-R remix) with the
/// scene's degradation settings and writes `degraded.wav`.
pub fn degrade_cmd(scene_path: &Path, input: Option<&Path>, overrides: &Overrides) -> Result<PathBuf> {
    let (loaded, out) = load(scene_path, overrides)?;
    let Some(spec) = loaded.file.degradation.as_ref().map(|d| d.to_spec(loaded.file.seed)) else {
        return Err(Error::Scene(format!(
            "{}: no degradation section",
            scene_path.display()
        )));
    };
    let source = match input {
        Some(p) => read_wav(p)?,
        None => {
            let scene = loaded.to_scene()?;
            scene.validate()?;
            build_signal_stack(&scene.stems, &scene.gains, &scene.listener, scene.nalr_taps)?.nalred_remix
        }
    };
    let degraded = degrade(&source, &spec)?;
    let p = out.join(DEGRADED_WAV);
    write_wav(&p, &degraded, loaded.file.outputs.format)?;
    Ok(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct StftEcho {
    pub win_size: usize,
    pub fft_size: usize,
    pub hop: usize,
    pub window: &'static str,
    pub center: bool,
}

impl From<&StftParams> for StftEcho {
    fn from(p: &StftParams) -> Self {
        Self {
            win_size: p.win_size,
            fft_size: p.fft_size,
            hop: p.hop,
            window: "hann",
            center: p.center,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub mode: EnhanceMode,
    pub order: usize,
    pub lookback: usize,
    pub lookahead: usize,
    pub ridge: f64,
    pub block_len: Option<usize>,
    pub eps: f64,
    pub stft: StftEcho,
    pub gains_db: RemixGains,
    pub listener_id: String,
    pub nalr_taps: usize,
    pub degradation: Option<DegradationFile>,
    pub seed: u64,
    /// `"scene"` when the scene's degradation produced the input, `"file"`
    /// when a degraded WAV was supplied.
    pub input: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnhanceReport {
    pub sdr_variant: &'static str,
    pub sdr_before: f64,
    pub sdr_after: f64,
    pub mae_before: f64,
    pub mae: f64,
    pub before: MetricReport,
    pub after: MetricReport,
    pub config: ConfigEcho,
    pub fit: FitReport,
}

/// Runs the full pipeline and writes `enhanced.wav` and `report.json`.
pub fn enhance(scene_path: &Path, input: Option<&Path>, overrides: &Overrides) -> Result<(EnhanceReport, PathBuf)> {
    let (loaded, out) = load(scene_path, overrides)?;
    let scene = loaded.to_scene()?;
    let degraded = input.map(read_wav).transpose()?;
    let from_file = degraded.is_some();
    let result = run_pipeline_with_input(&scene, degraded)?;
    write_wav(out.join(ENHANCED_WAV), &result.enhanced, loaded.file.outputs.format)?;

    let order = scene.estimator.order;
    let (order_n, lookback, lookahead) = match scene.mode {
        EnhanceMode::Crm => (1, 0, 0),
        EnhanceMode::Df => (order.order(), order.lookback(), order.lookahead()),
    };
    let r = result.report;
    let report = EnhanceReport {
        sdr_variant: SDR_VARIANT,
        sdr_before: r.before.sdr_mean_db,
        sdr_after: r.after.sdr_mean_db,
        mae_before: r.before.mae_mean,
        mae: r.after.mae_mean,
        before: r.before,
        after: r.after,
        config: ConfigEcho {
            mode: scene.mode,
            order: order_n,
            lookback,
            lookahead,
            ridge: scene.estimator.ridge,
            block_len: scene.estimator.block_len,
            eps: scene.estimator.eps,
            stft: (&scene.stft).into(),
            gains_db: scene.gains,
            listener_id: scene.listener.id.clone(),
            nalr_taps: scene.nalr_taps,
            degradation: if from_file {
                None
            } else {
                loaded.file.degradation.clone()
            },
            seed: loaded.file.seed,
            input: if from_file { "file" } else { "scene" },
        },
        fit: r.fit,
    };
    let report_path = out.join(REPORT_JSON);
    write_json(&report_path, &report)?;
    Ok((report, report_path))
}

/// Checks that a report has the keys and types downstream tools rely on.
pub fn check_report_schema(value: &Value) -> std::result::Result<(), String> {
    let obj = value.as_object().ok_or("report is not an object")?;
    for key in ["sdr_before", "sdr_after", "mae_before", "mae"] {
        if !obj.get(key).is_some_and(Value::is_f64) {
            return Err(format!("missing numeric field {key}"));
        }
    }
    if obj.get("sdr_variant").and_then(Value::as_str) != Some(SDR_VARIANT) {
        return Err("sdr_variant must be present".into());
    }
    for key in ["before", "after"] {
        let m = obj
            .get(key)
            .and_then(Value::as_object)
            .ok_or(format!("missing {key}"))?;
        for field in ["sdr_db", "mae"] {
            if !m.get(field).is_some_and(Value::is_array) {
                return Err(format!("{key}.{field} must be an array"));
            }
        }
    }
    let config = obj.get("config").and_then(Value::as_object).ok_or("missing config")?;
    for key in [
        "mode",
        "order",
        "lookback",
        "lookahead",
        "ridge",
        "seed",
        "stft",
        "gains_db",
    ] {
        if !config.contains_key(key) {
            return Err(format!("config.{key} missing"));
        }
    }
    let fit = obj.get("fit").and_then(Value::as_object).ok_or("missing fit")?;
    for key in ["residual_before", "residual_after", "total_relative_residual"] {
        if !fit.contains_key(key) {
            return Err(format!("fit.{key} missing"));
        }
    }
    Ok(())
}

/// Compares two WAV files; writes the report to `out` when given.
pub fn eval(reference: &Path, estimate: &Path, out: Option<&Path>) -> Result<MetricReport> {
    let r = read_wav(reference)?;
    let e = read_wav(estimate)?;
    let report = evaluate(&r, &e)?;
    if let Some(p) = out {
        write_json(p, &report)?;
    }
    Ok(report)
}

/// Prescribed gains for one ear.
#[derive(Debug, Clone, Serialize)]
pub struct GainTable {
    pub ear: &'static str,
    pub frequencies_hz: Vec<f64>,
    pub insertion_gain_db: Vec<f64>,
}

/// Applies the listener's prescription to `input` and writes `nalred.wav`
/// into `out_dir`.
pub fn nalr_cmd(listener_path: &Path, input: &Path, out_dir: &Path) -> Result<(Vec<GainTable>, PathBuf)> {
    let listener = ListenerFile::load(listener_path)?.to_profile()?;
    let audio: AudioBuffer = read_wav(input)?;
    let tables = [("left", &listener.left), ("right", &listener.right)]
        .into_iter()
        .map(|(ear, a)| GainTable {
            ear,
            frequencies_hz: AUDIOGRAM_FREQUENCIES.to_vec(),
            insertion_gain_db: nalr_gains(a).to_vec(),
        })
        .collect();
    let out = apply_nalr(&audio, &listener, DEFAULT_TAPS)?;
    create_dir(out_dir)?;
    let p = out_dir.join(NALRED_WAV);
    write_wav(&p, &out, WavFormat::F32)?;
    Ok((tables, p))
}
