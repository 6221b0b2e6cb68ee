//! Acoustic scenes: geometry, sources, free-field propagation and mixing.

mod config;
mod mix;
mod synth;
mod wav;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

pub use config::random_layout;
pub use mix::{calibrate_snr, mix_scene, propagate, render_scene, snr_probe_point, RenderedScene};
pub use synth::{synth_source, SynthKind, SynthSpec};
pub use wav::{load_wav, write_wav};

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Self {
        SampledSignal {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean square amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> SampledSignal {
        SampledSignal {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Copy rescaled to unit RMS; fails on a zero-power signal.
    pub fn unit_rms(&self) -> Result<SampledSignal> {
        let mut samples = self.samples.clone();
        synth::normalize_rms(&mut samples)?;
        Ok(SampledSignal::new(samples, self.sample_rate))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorDef {
    pub id: String,
    pub position: Point,
    pub gain: f64,
}

impl SensorDef {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        SensorDef {
            id: id.into(),
            position: Point::new(x, y),
            gain: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Target,
    Noise,
}

/// Where a source's waveform comes from: a WAV file or a generator.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalSpec {
    File(PathBuf),
    Synth(SynthSpec),
}

impl FromStr for SignalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("synth:") {
            Some(rest) => Ok(SignalSpec::Synth(rest.parse()?)),
            None if s.is_empty() => Err(Error::Parameter("empty signal spec".into())),
            None => Ok(SignalSpec::File(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSpec::File(p) => write!(f, "{}", p.display()),
            SignalSpec::Synth(s) => write!(f, "synth:{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceDef {
    pub id: String,
    pub position: Point,
    pub role: Role,
    pub signal: SignalSpec,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub speed_of_sound: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub sensors: Vec<SensorDef>,
    pub sources: Vec<SourceDef>,
    pub snr_db: f64,
    pub seed: u64,
}

impl Scene {
    pub fn bounds(&self) -> Rect {
        Rect::from_size(self.width, self.height)
    }

    /// Largest scene dimension.
    pub fn largest_dimension(&self) -> f64 {
        self.width.max(self.height)
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    pub fn target_index(&self) -> Result<usize> {
        let mut targets = self
            .sources
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role == Role::Target);
        match (targets.next(), targets.next()) {
            (Some((i, _)), None) => Ok(i),
            (None, _) => Err(Error::Scene("no source has role=target".into())),
            (Some(_), Some(_)) => Err(Error::Scene("more than one source has role=target".into())),
        }
    }

    pub fn target(&self) -> Result<&SourceDef> {
        Ok(&self.sources[self.target_index()?])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::Scene(format!(
                "scene size must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        for (what, v) in [
            ("sample_rate", self.sample_rate),
            ("duration", self.duration),
            ("speed_of_sound", self.speed_of_sound),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Scene(format!("{what} must be positive, got {v}")));
            }
        }
        if self.snr_db.is_nan() {
            return Err(Error::Scene("snr_db is NaN".into()));
        }
        if self.sensors.is_empty() {
            return Err(Error::Scene("scene needs at least one sensor".into()));
        }
        let bounds = self.bounds();
        for s in &self.sensors {
            if !bounds.contains(&s.position) {
                return Err(Error::Scene(format!("sensor {} lies outside the scene", s.id)));
            }
            if !(s.gain > 0.0) {
                return Err(Error::Scene(format!("sensor {} has non-positive gain", s.id)));
            }
        }
        for s in &self.sources {
            if !bounds.contains(&s.position) {
                return Err(Error::Scene(format!("source {} lies outside the scene", s.id)));
            }
            if !(s.level >= 0.0) {
                return Err(Error::Scene(format!("source {} has negative level", s.id)));
            }
        }
        self.target_index()?;
        Ok(())
    }
}

/// Waveform observed at one sensor, optionally with its per-source parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    pub sensor_id: String,
    pub samples: Vec<f64>,
    pub components: Option<Vec<SourceComponent>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceComponent {
    pub source_id: String,
    pub role: Role,
    pub samples: Vec<f64>,
}

impl SensorTrace {
    /// A_i(n): the target contribution, when components were retained.
    pub fn target_component(&self) -> Option<&[f64]> {
        self.components
            .as_ref()?
            .iter()
            .find(|c| c.role == Role::Target)
            .map(|c| c.samples.as_slice())
    }

    /// W_i(n): the summed noise contribution, when components were retained.
    pub fn noise_component(&self) -> Option<Vec<f64>> {
        let comps = self.components.as_ref()?;
        let mut out = vec![0.0; self.samples.len()];
        for c in comps.iter().filter(|c| c.role == Role::Noise) {
            out.iter_mut().zip(&c.samples).for_each(|(o, v)| *o += v);
        }
        Some(out)
    }

    pub fn to_signal(&self, sample_rate: f64) -> SampledSignal {
        SampledSignal::new(self.samples.clone(), sample_rate)
    }
}
