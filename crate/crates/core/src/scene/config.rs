//! TOML scene files.
//!
//! ```toml
//! name = "park"
//! width_m = 20.0
//! height_m = 20.0
//! speed_of_sound = 343.0   # optional
//! sample_rate = 16000.0    # optional
//! duration_s = 3.0         # optional
//! snr_db = 0.0             # `inf` disables the noise sources
//! seed = 1
//!
//! [[sensors]]
//! id = "S0"
//! x = 3.0
//! y = 4.0
//! gain = 1.0
//!
//! [[sources]]
//! id = "speaker"
//! x = 10.0
//! y = 12.0
//! role = "target"          # or "noise"
//! signal = "synth:burst_train:period=0.25,duty=0.5"   # or a WAV path
//! level = 1.0
//! ```
//!
//! Relative WAV paths are resolved against the directory holding the file.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, D_MIN};
use crate::scene::{Role, Scene, SensorDef, SignalSpec, SourceDef, SynthSpec};

fn default_speed_of_sound() -> f64 {
    343.0
}

fn default_sample_rate() -> f64 {
    16000.0
}

fn default_duration() -> f64 {
    3.0
}

fn default_gain() -> f64 {
    1.0
}

fn default_level() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    name: String,
    width_m: f64,
    height_m: f64,
    #[serde(default = "default_speed_of_sound")]
    speed_of_sound: f64,
    #[serde(default = "default_sample_rate")]
    sample_rate: f64,
    #[serde(default = "default_duration")]
    duration_s: f64,
    snr_db: f64,
    seed: u64,
    sensors: Vec<SensorEntry>,
    sources: Vec<SourceEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorEntry {
    id: String,
    x: f64,
    y: f64,
    #[serde(default = "default_gain")]
    gain: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceEntry {
    id: String,
    x: f64,
    y: f64,
    role: Role,
    signal: String,
    #[serde(default = "default_level")]
    level: f64,
}

impl Scene {
    pub fn from_toml_str(text: &str) -> Result<Scene> {
        let file: SceneFile = toml::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
        let sensors = file
            .sensors
            .into_iter()
            .map(|s| SensorDef {
                id: s.id,
                position: Point::new(s.x, s.y),
                gain: s.gain,
            })
            .collect();
        let sources = file
            .sources
            .into_iter()
            .map(|s| {
                Ok(SourceDef {
                    signal: s.signal.parse().map_err(|e: Error| e.in_context(&s.id))?,
                    id: s.id,
                    position: Point::new(s.x, s.y),
                    role: s.role,
                    level: s.level,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scene = Scene {
            name: file.name,
            width: file.width_m,
            height: file.height_m,
            speed_of_sound: file.speed_of_sound,
            sample_rate: file.sample_rate,
            duration: file.duration_s,
            sensors,
            sources,
            snr_db: file.snr_db,
            seed: file.seed,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml_string(&self) -> String {
        let file = SceneFile {
            name: self.name.clone(),
            width_m: self.width,
            height_m: self.height,
            speed_of_sound: self.speed_of_sound,
            sample_rate: self.sample_rate,
            duration_s: self.duration,
            snr_db: self.snr_db,
            seed: self.seed,
            sensors: self
                .sensors
                .iter()
                .map(|s| SensorEntry {
                    id: s.id.clone(),
                    x: s.position.x,
                    y: s.position.y,
                    gain: s.gain,
                })
                .collect(),
            sources: self
                .sources
                .iter()
                .map(|s| SourceEntry {
                    id: s.id.clone(),
                    x: s.position.x,
                    y: s.position.y,
                    role: s.role,
                    signal: s.signal.to_string(),
                    level: s.level,
                })
                .collect(),
        };
        toml::to_string(&file).expect("scene fields are always representable in TOML")
    }

    /// Load a scene file, resolving relative WAV paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut scene = Scene::from_toml_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for src in &mut scene.sources {
            if let SignalSpec::File(p) = &mut src.signal {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(scene)
    }
}

/// Scene with sensors and sources drawn uniformly over a `width`×`height` area.
///
/// Sources keep at least 1 m from every sensor and from each other so the
/// near-field clamp and the 1 m SNR probe stay valid.
pub fn random_layout(
    name: &str,
    width: f64,
    height: f64,
    n_sensors: usize,
    target: SynthSpec,
    noises: &[SynthSpec],
    snr_db: f64,
    seed: u64,
) -> Result<Scene> {
    if n_sensors == 0 {
        return Err(Error::Parameter("at least one sensor required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5CE7_E1A7_0000_0000);
    let draw = |rng: &mut ChaCha8Rng| {
        Point::new(rng.random_range(0.0..width), rng.random_range(0.0..height))
    };
    let sensors: Vec<SensorDef> = (0..n_sensors)
        .map(|i| {
            let p = draw(&mut rng);
            SensorDef {
                id: format!("S{i}"),
                position: p,
                gain: 1.0,
            }
        })
        .collect();

    let clearance = 1.0f64.max(D_MIN);
    let mut placed: Vec<Point> = Vec::new();
    let mut place = |rng: &mut ChaCha8Rng| -> Result<Point> {
        for _ in 0..10_000 {
            let p = draw(rng);
            let ok = sensors.iter().all(|s| s.position.distance(&p) >= clearance)
                && placed.iter().all(|q| q.distance(&p) >= clearance);
            if ok {
                placed.push(p);
                return Ok(p);
            }
        }
        Err(Error::Scene("could not place sources with 1 m clearance".into()))
    };

    let mut sources = vec![SourceDef {
        id: "target".into(),
        position: place(&mut rng)?,
        role: Role::Target,
        signal: SignalSpec::Synth(target),
        level: 1.0,
    }];
    for (i, spec) in noises.iter().enumerate() {
        sources.push(SourceDef {
            id: format!("noise{i}"),
            position: place(&mut rng)?,
            role: Role::Noise,
            signal: SignalSpec::Synth(spec.clone()),
            level: 1.0,
        });
    }
    let scene = Scene {
        name: name.to_string(),
        width,
        height,
        speed_of_sound: default_speed_of_sound(),
        sample_rate: default_sample_rate(),
        duration: default_duration(),
        sensors,
        sources,
        snr_db,
        seed,
    };
    scene.validate()?;
    Ok(scene)
}
