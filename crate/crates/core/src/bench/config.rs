use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{NoiseMode, DEFAULT_BLOCK_SIZE};
use crate::error::{Error, Result};
use crate::scene::{random_layout, Scene, SynthSpec};
use crate::selection::{SelectionMethod, DEFAULT_KAPPA, DEFAULT_MARGIN_FRACTION, MIN_SELECTED};

/// Which noise statistics feed the normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Noise-only block energies; the target/noise cross term is ignored.
    Ml,
    /// Full residual u − energy(target), cross term included.
    Hml,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ml => "ml",
            Method::Hml => "hml",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(Method::Ml),
            "hml" => Ok(Method::Hml),
            other => Err(Error::Parameter(format!("unknown method '{other}' (ml, hml)"))),
        }
    }
}

/// A freshly drawn layout per trial seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomScene {
    #[serde(default = "default_random_name")]
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub sensors: usize,
    pub target: String,
    pub noises: Vec<String>,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
}

fn default_random_name() -> String {
    "random".into()
}

fn default_duration() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    /// Fixed layout; signals re-drawn per trial seed.
    Fixed(Box<Scene>),
    Random(RandomScene),
}

impl SceneSource {
    /// The scene for one (snr, seed) cell of the sweep.
    pub fn instantiate(&self, snr_db: f64, seed: u64) -> Result<Scene> {
        match self {
            SceneSource::Fixed(scene) => {
                let mut s = (**scene).clone();
                s.snr_db = snr_db;
                s.seed = seed;
                Ok(s)
            }
            SceneSource::Random(r) => {
                let target: SynthSpec = r.target.parse()?;
                let noises = r
                    .noises
                    .iter()
                    .map(|n| n.parse())
                    .collect::<Result<Vec<SynthSpec>>>()?;
                let mut s = random_layout(&r.name, r.width, r.height, r.sensors, target, &noises, snr_db, seed)?;
                s.duration = r.duration_s;
                s.validate()?;
                Ok(s)
            }
        }
    }

    pub fn largest_dimension(&self) -> f64 {
        match self {
            SceneSource::Fixed(s) => s.largest_dimension(),
            SceneSource::Random(r) => r.width.max(r.height),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scene: SceneSource,
    pub methods: Vec<Method>,
    pub selectors: Vec<SelectionMethod>,
    pub snr_list: Vec<f64>,
    pub trials: usize,
    /// Trial t uses seed `seed + t`.
    pub seed: u64,
    pub block_size: usize,
    /// Search resolution; `None` means v/200 (0.1 m at 20 m, 0.035 m at 7 m).
    pub resolution: Option<f64>,
    pub noise_mode: NoiseMode,
    pub ins_surrogates: usize,
    /// Fixed ESFE threshold; `None` computes it from v and L.
    pub alpha: Option<f64>,
    pub kappa: f64,
    pub xi: f64,
    pub margin_fraction: f64,
    pub min_selected: usize,
    /// Drop the leading blocks that still contain propagation-delay padding.
    pub skip_warmup: bool,
    /// Refine each grid estimate with a local least-squares step.
    pub polish: bool,
    /// Report selection and INS time in extra CSV columns.
    pub profile: bool,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(scene: SceneSource) -> Self {
        ExperimentConfig {
            scene,
            methods: vec![Method::Ml, Method::Hml],
            selectors: vec![SelectionMethod::All, SelectionMethod::Esfe],
            snr_list: vec![0.0, 5.0, 10.0, 15.0],
            trials: 1,
            seed: 0,
            block_size: DEFAULT_BLOCK_SIZE,
            resolution: None,
            noise_mode: NoiseMode::Oracle,
            ins_surrogates: 20,
            alpha: None,
            kappa: DEFAULT_KAPPA,
            xi: 0.0,
            margin_fraction: DEFAULT_MARGIN_FRACTION,
            min_selected: MIN_SELECTED,
            skip_warmup: false,
            polish: true,
            profile: false,
            threads: 0,
            output: None,
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution.unwrap_or(self.scene.largest_dimension() / 200.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if self.selectors.is_empty() {
            return bad("selectors must not be empty");
        }
        if self.snr_list.is_empty() || self.snr_list.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return bad("snr_list must hold at least one dB value (inf allowed)");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.block_size == 0 {
            return bad("block_size must be positive");
        }
        if let Some(r) = self.resolution {
            if !(r > 0.0) {
                return bad("resolution must be positive");
            }
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return bad("alpha must lie in [0, 1]");
            }
        }
        Ok(())
    }

    /// Parse a TOML experiment file; a relative `scene` path is resolved
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ExperimentFile = toml::from_str(text).map_err(|e| Error::Config {
            path: base_dir.to_path_buf(),
            message: e.to_string(),
        })?;
        let scene = match (file.scene, file.random_scene) {
            (Some(path), None) => {
                let p = if path.is_absolute() { path } else { base_dir.join(path) };
                SceneSource::Fixed(Box::new(Scene::load(&p)?))
            }
            (None, Some(r)) => SceneSource::Random(r),
            _ => {
                return Err(Error::Config {
                    path: base_dir.to_path_buf(),
                    message: "give exactly one of `scene` or `[random_scene]`".into(),
                })
            }
        };
        let d = ExperimentConfig::new(scene);
        let parse_all = |v: Option<Vec<String>>, default: Vec<String>| v.unwrap_or(default);
        let methods = parse_all(file.methods, d.methods.iter().map(|m| m.to_string()).collect())
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<Method>>>()?;
        let selectors = parse_all(file.selectors, d.selectors.iter().map(|m| m.to_string()).collect())
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<SelectionMethod>>>()?;
        let cfg = ExperimentConfig {
            methods,
            selectors,
            snr_list: file.snr_list.unwrap_or(d.snr_list.clone()),
            trials: file.trials.unwrap_or(d.trials),
            seed: file.seed.unwrap_or(d.seed),
            block_size: file.block_size.unwrap_or(d.block_size),
            resolution: file.resolution,
            noise_mode: file.noise_mode.unwrap_or(d.noise_mode),
            ins_surrogates: file.ins_surrogates.unwrap_or(d.ins_surrogates),
            alpha: file.alpha,
            kappa: file.kappa.unwrap_or(d.kappa),
            xi: file.xi.unwrap_or(d.xi),
            margin_fraction: file.margin_fraction.unwrap_or(d.margin_fraction),
            min_selected: file.min_selected.unwrap_or(d.min_selected),
            skip_warmup: file.skip_warmup.unwrap_or(d.skip_warmup),
            polish: file.polish.unwrap_or(d.polish),
            profile: file.profile.unwrap_or(d.profile),
            threads: file.threads.unwrap_or(d.threads),
            output: file.output.map(|p| if p.is_absolute() { p } else { base_dir.join(p) }),
            scene: d.scene,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, dir).map_err(|e| match e {
            Error::Config { message, .. } => Error::Config {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    scene: Option<PathBuf>,
    random_scene: Option<RandomScene>,
    methods: Option<Vec<String>>,
    selectors: Option<Vec<String>>,
    snr_list: Option<Vec<f64>>,
    trials: Option<usize>,
    seed: Option<u64>,
    block_size: Option<usize>,
    resolution: Option<f64>,
    noise_mode: Option<NoiseMode>,
    ins_surrogates: Option<usize>,
    alpha: Option<f64>,
    kappa: Option<f64>,
    xi: Option<f64>,
    margin_fraction: Option<f64>,
    min_selected: Option<usize>,
    skip_warmup: Option<bool>,
    polish: Option<bool>,
    profile: Option<bool>,
    threads: Option<usize>,
    output: Option<PathBuf>,
}
