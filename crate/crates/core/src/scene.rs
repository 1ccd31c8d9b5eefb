//! JSON scene and listener files.
//!
//! Unknown keys are rejected everywhere. Relative paths are resolved against
//! the directory containing the scene file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::degrade::DegradationSpec;
use crate::error::{Error, Result};
use crate::estimator::{EnhanceMode, EstimatorConfig};
use crate::filtering::FilterOrder;
use crate::nalr::{Audiogram, ListenerProfile, AUDIOGRAM_FREQUENCIES, DEFAULT_TAPS};
use crate::pipeline::RemixScene;
use crate::remix::{RemixGains, Stem, StemSet};
use crate::stft::StftParams;
use crate::wav::{read_wav, WavFormat};

fn scene_err(msg: impl Into<String>) -> Error {
    Error::Scene(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StemPaths {
    pub drums: PathBuf,
    pub bass: PathBuf,
    pub other: PathBuf,
    pub vocal: PathBuf,
}

impl StemPaths {
    pub fn get(&self, stem: Stem) -> &Path {
        match stem {
            Stem::Drums => &self.drums,
            Stem::Bass => &self.bass,
            Stem::Other => &self.other,
            Stem::Vocal => &self.vocal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudiogramFile {
    pub frequencies_hz: Vec<f64>,
    pub levels_db_hl: Vec<f64>,
}

impl AudiogramFile {
    pub fn to_audiogram(&self) -> Result<Audiogram> {
        if self.frequencies_hz.as_slice() != AUDIOGRAM_FREQUENCIES.as_slice() {
            return Err(scene_err(format!(
                "audiogram frequencies must be {AUDIOGRAM_FREQUENCIES:?}, got {:?}",
                self.frequencies_hz
            )));
        }
        let levels: [f64; 7] = self
            .levels_db_hl
            .as_slice()
            .try_into()
            .map_err(|_| scene_err(format!("expected 7 hearing levels, got {}", self.levels_db_hl.len())))?;
        Audiogram::new(levels)
    }
}

impl From<&Audiogram> for AudiogramFile {
    fn from(a: &Audiogram) -> Self {
        Self {
            frequencies_hz: AUDIOGRAM_FREQUENCIES.to_vec(),
            levels_db_hl: a.levels().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListenerFile {
    pub id: String,
    pub left: AudiogramFile,
    pub right: AudiogramFile,
}

impl ListenerFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    pub fn to_profile(&self) -> Result<ListenerProfile> {
        Ok(ListenerProfile {
            id: self.id.clone(),
            left: self.left.to_audiogram()?,
            right: self.right.to_audiogram()?,
        })
    }
}

impl From<&ListenerProfile> for ListenerFile {
    fn from(p: &ListenerProfile) -> Self {
        Self {
            id: p.id.clone(),
            left: (&p.left).into(),
            right: (&p.right).into(),
        }
    }
}

fn default_spacing() -> usize {
    DegradationSpec::default().jitter_node_spacing
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationFile {
    #[serde(default)]
    pub fir_len: usize,
    #[serde(default)]
    pub delay_samples: usize,
    #[serde(default)]
    pub mag_jitter_db: f64,
    #[serde(default)]
    pub phase_jitter_rad: f64,
    #[serde(default = "default_spacing")]
    pub jitter_node_spacing: usize,
    /// Omitted or null for no additive noise.
    #[serde(default)]
    pub snr_db: Option<f64>,
}

impl DegradationFile {
    pub fn to_spec(&self, seed: u64) -> DegradationSpec {
        DegradationSpec {
            fir_len: self.fir_len,
            delay_samples: self.delay_samples,
            mag_jitter_db: self.mag_jitter_db,
            phase_jitter_rad: self.phase_jitter_rad,
            jitter_node_spacing: self.jitter_node_spacing,
            snr_db: self.snr_db,
            seed,
        }
    }
}

impl From<&DegradationSpec> for DegradationFile {
    fn from(d: &DegradationSpec) -> Self {
        Self {
            fir_len: d.fir_len,
            delay_samples: d.delay_samples,
            mag_jitter_db: d.mag_jitter_db,
            phase_jitter_rad: d.phase_jitter_rad,
            jitter_node_spacing: d.jitter_node_spacing,
            snr_db: d.snr_db,
        }
    }
}

fn default_order() -> usize {
    FilterOrder::default().order()
}

fn default_ridge() -> f64 {
    EstimatorConfig::default().ridge
}

fn default_eps() -> f64 {
    EstimatorConfig::default().eps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorFile {
    #[serde(default)]
    pub mode: EnhanceMode,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub lookahead: usize,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default)]
    pub block_len: Option<usize>,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl Default for EstimatorFile {
    fn default() -> Self {
        Self {
            mode: EnhanceMode::default(),
            order: default_order(),
            lookahead: 0,
            ridge: default_ridge(),
            block_len: None,
            eps: default_eps(),
        }
    }
}

impl EstimatorFile {
    pub fn to_config(&self) -> Result<EstimatorConfig> {
        let cfg = EstimatorConfig {
            order: FilterOrder::with_lookahead(self.order, self.lookahead)?,
            ridge: self.ridge,
            block_len: self.block_len,
            eps: self.eps,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsFile {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: WavFormat,
}

impl Default for OutputsFile {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: WavFormat::default(),
        }
    }
}

fn default_taps() -> usize {
    DEFAULT_TAPS
}

/// On-disk scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub stems: StemPaths,
    pub gains_db: RemixGains,
    pub listener: ListenerFile,
    #[serde(default)]
    pub degradation: Option<DegradationFile>,
    #[serde(default)]
    pub estimator: EstimatorFile,
    #[serde(default = "default_taps")]
    pub nalr_taps: usize,
    #[serde(default)]
    pub outputs: OutputsFile,
    #[serde(default)]
    pub seed: u64,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self> {
        let scene: SceneFile = serde_json::from_str(text).map_err(|e| scene_err(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable")
    }

    /// Checks everything that does not need the stem files.
    pub fn validate(&self) -> Result<()> {
        self.gains_db.validate()?;
        self.listener.to_profile()?;
        self.estimator.to_config()?;
        if let Some(d) = &self.degradation {
            d.to_spec(self.seed).validate()?;
        }
        if self.nalr_taps.is_multiple_of(2) || self.nalr_taps < crate::nalr::MIN_TAPS {
            return Err(scene_err(format!(
                "nalr_taps must be odd and >= 31, got {}",
                self.nalr_taps
            )));
        }
        Ok(())
    }

    /// Builds the runtime scene, reading stems relative to `base`.
    pub fn to_scene(&self, base: &Path) -> Result<RemixScene> {
        let mut pairs = Vec::with_capacity(4);
        for stem in Stem::ALL {
            let path = base.join(self.stems.get(stem));
            pairs.push((stem, read_wav(&path)?));
        }
        let stems = StemSet::from_pairs(pairs)?;
        Ok(RemixScene {
            stems,
            gains: self.gains_db,
            listener: self.listener.to_profile()?,
            degradation: self.degradation.as_ref().map(|d| d.to_spec(self.seed)),
            mode: self.estimator.mode,
            estimator: self.estimator.to_config()?,
            stft: StftParams::default(),
            nalr_taps: self.nalr_taps,
        })
    }
}

/// A scene file together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub file: SceneFile,
    pub base: PathBuf,
}

impl LoadedScene {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file = SceneFile::parse(&text).map_err(|e| match e {
            Error::Scene(msg) => Error::Scene(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { file, base })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base.join(&self.file.outputs.dir)
    }

    pub fn to_scene(&self) -> Result<RemixScene> {
        self.file.to_scene(&self.base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "stems": {"drums": "d.wav", "bass": "b.wav", "other": "o.wav", "vocal": "v.wav"},
        "gains_db": {"drums": 0, "bass": -3, "other": 0, "vocal": 6},
        "listener": {
            "id": "L1",
            "left": {"frequencies_hz": [250, 500, 1000, 2000, 3000, 4000, 6000], "levels_db_hl": [10, 10, 20, 30, 40, 50, 50]},
            "right": {"frequencies_hz": [250, 500, 1000, 2000, 3000, 4000, 6000], "levels_db_hl": [10, 10, 20, 30, 40, 50, 50]}
        }
    }"#;

    #[test]
    fn minimal_scene_fills_defaults() {
        let s = SceneFile::parse(MINIMAL).unwrap();
        assert_eq!(s.nalr_taps, 221);
        assert_eq!(s.estimator.order, 5);
        assert_eq!(s.estimator.mode, EnhanceMode::Df);
        assert!(s.degradation.is_none());
        assert_eq!(s.outputs.dir, PathBuf::from("out"));
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let s = SceneFile::parse(MINIMAL).unwrap();
        let canon = s.canonical_json();
        let again = SceneFile::parse(&canon).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.canonical_json(), canon);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replacen("\"gains_db\"", "\"gain_db_typo\": 1, \"gains_db\"", 1);
        assert!(SceneFile::parse(&bad).is_err());
        let bad = MINIMAL.replacen("\"vocal\": 6", "\"vocal\": 6, \"piano\": 0", 1);
        assert!(SceneFile::parse(&bad).is_err());
    }

    #[test]
    fn semantic_validation() {
        let bad = MINIMAL.replacen("[250, 500", "[125, 500", 1);
        assert!(SceneFile::parse(&bad).is_err());
        let bad = MINIMAL.replacen("\"vocal\": 6", "\"vocal\": 90", 1);
        assert!(SceneFile::parse(&bad).is_err());
        let bad = MINIMAL.replacen(
            "}\n    }",
            "},\n \"estimator\": {\"order\": 2, \"lookahead\": 2}\n    }",
            1,
        );
        assert!(SceneFile::parse(&bad).is_err());
    }

    #[test]
    fn missing_stem_file_is_named() {
        let s = SceneFile::parse(MINIMAL).unwrap();
        let err = s.to_scene(Path::new("/definitely/missing")).unwrap_err();
        assert!(err.to_string().contains("/definitely/missing/d.wav"), "{err}");
    }
}
