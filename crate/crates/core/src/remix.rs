//! Per-stem gains and summation into a stereo remix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{invalid, Error, Result};

/// Sanity bound on any single stem gain.
pub const MAX_GAIN_DB: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stem {
    Drums,
    Bass,
    Other,
    Vocal,
}

impl Stem {
    pub const ALL: [Stem; 4] = [Stem::Drums, Stem::Bass, Stem::Other, Stem::Vocal];

    pub fn name(self) -> &'static str {
        match self {
            Stem::Drums => "drums",
            Stem::Bass => "bass",
            Stem::Other => "other",
            Stem::Vocal => "vocal",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Stem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stem::ALL
            .into_iter()
            .find(|stem| stem.name() == s)
            .ok_or_else(|| invalid(format!("unknown stem {s:?}")))
    }
}

/// The four stems of a track: stereo, equal length and sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StemSet {
    stems: [AudioBuffer; 4],
}

impl StemSet {
    pub fn new(drums: AudioBuffer, bass: AudioBuffer, other: AudioBuffer, vocal: AudioBuffer) -> Result<Self> {
        let stems = [drums, bass, other, vocal];
        for (stem, buf) in Stem::ALL.iter().zip(&stems) {
            if buf.num_channels() != 2 {
                return Err(invalid(format!(
                    "stem {stem} must be stereo, got {} channel(s)",
                    buf.num_channels()
                )));
            }
            stems[0]
                .check_compatible(buf)
                .map_err(|e| invalid(format!("stem {stem} does not match drums: {e}")))?;
        }
        Ok(Self { stems })
    }

    /// Builds a set from `(stem, buffer)` pairs; every stem must appear once.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Stem, AudioBuffer)>) -> Result<Self> {
        let mut slots: [Option<AudioBuffer>; 4] = Default::default();
        for (stem, buf) in pairs {
            if slots[stem.index()].replace(buf).is_some() {
                return Err(invalid(format!("stem {stem} given twice")));
            }
        }
        let [d, b, o, v] = slots;
        let take = |s: Option<AudioBuffer>, stem: Stem| s.ok_or_else(|| invalid(format!("missing stem {stem}")));
        Self::new(
            take(d, Stem::Drums)?,
            take(b, Stem::Bass)?,
            take(o, Stem::Other)?,
            take(v, Stem::Vocal)?,
        )
    }

    pub fn get(&self, stem: Stem) -> &AudioBuffer {
        &self.stems[stem.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Stem, &AudioBuffer)> {
        Stem::ALL.into_iter().zip(self.stems.iter())
    }

    pub fn len(&self) -> usize {
        self.stems[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.stems[0].sample_rate()
    }
}

/// Per-stem gains in dB.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemixGains {
    pub drums: f64,
    pub bass: f64,
    pub other: f64,
    pub vocal: f64,
}

impl RemixGains {
    pub fn get(&self, stem: Stem) -> f64 {
        match stem {
            Stem::Drums => self.drums,
            Stem::Bass => self.bass,
            Stem::Other => self.other,
            Stem::Vocal => self.vocal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for stem in Stem::ALL {
            let g = self.get(stem);
            if !g.is_finite() || g.abs() > MAX_GAIN_DB {
                return Err(invalid(format!(
                    "gain for {stem} must be finite and within ±{MAX_GAIN_DB} dB, got {g}"
                )));
            }
        }
        Ok(())
    }

    pub fn linear(&self, stem: Stem) -> f64 {
        db_to_linear(self.get(stem))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn apply_gains(stems: &StemSet, gains: &RemixGains) -> Result<StemSet> {
    gains.validate()?;
    let scaled = |s: Stem| stems.get(s).scaled(gains.linear(s));
    Ok(StemSet {
        stems: [
            scaled(Stem::Drums),
            scaled(Stem::Bass),
            scaled(Stem::Other),
            scaled(Stem::Vocal),
        ],
    })
}

/// Samplewise sum of the four stems, without normalisation.
pub fn mix(stems: &StemSet) -> AudioBuffer {
    let mut out = AudioBuffer::zeros(2, stems.len(), stems.sample_rate()).expect("stereo");
    for (_, buf) in stems.iter() {
        out.accumulate(buf).expect("stems share a shape");
    }
    out
}
