use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::scene::SampledSignal;
use crate::stationarity::spectrogram::{check_window, StftEngine};
use crate::stationarity::surrogate::{surrogate_seed, SurrogateSource};
use crate::stationarity::{symmetric_kl, to_distribution, InsProfile};

pub const DEFAULT_SCALES: [f64; 8] = [0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4];
pub const DEFAULT_SURROGATES: usize = 50;
const MIN_SURROGATES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct InsConfig {
    pub scales: Vec<f64>,
    pub surrogates: usize,
    pub seed: u64,
    /// Confidence of the whole multi-scale test. Each scale is tested at
    /// `1 - (1 - confidence) / scales.len()`.
    pub confidence: f64,
}

impl Default for InsConfig {
    fn default() -> Self {
        InsConfig {
            scales: DEFAULT_SCALES.to_vec(),
            surrogates: DEFAULT_SURROGATES,
            seed: 0,
            confidence: 0.95,
        }
    }
}

impl InsConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_surrogates(mut self, count: usize) -> Self {
        self.surrogates = count;
        self
    }
}

/// Variance over frames of the distance between each short-time spectrum
/// and the time-averaged spectrum.
fn dispersion(engine: &StftEngine, samples: &[f64]) -> f64 {
    let (power, frames) = engine.power_frames(samples);
    let bins = engine.bins();
    let mut global = vec![0.0; bins];
    for row in power.chunks_exact(bins) {
        global.iter_mut().zip(row).for_each(|(g, p)| *g += p);
    }
    global.iter_mut().for_each(|g| *g /= frames as f64);

    let (mut q, mut log_q) = (vec![0.0; bins], vec![0.0; bins]);
    to_distribution(&global, &mut q, &mut log_q);
    let (mut p, mut log_p) = (vec![0.0; bins], vec![0.0; bins]);
    let distances: Vec<f64> = power
        .chunks_exact(bins)
        .map(|row| {
            to_distribution(row, &mut p, &mut log_p);
            symmetric_kl(&p, &log_p, &q, &log_q)
        })
        .collect();
    let mean = distances.iter().sum::<f64>() / frames as f64;
    distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / frames as f64
}

/// Quantile of a Gamma law fitted to `values` by the method of moments.
fn gamma_quantile(values: &[f64], level: f64) -> Result<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    if !(mean > 0.0 && var > 0.0) {
        return Err(Error::DegenerateSignal(
            "surrogate dispersions have no spread; cannot fit the null distribution".into(),
        ));
    }
    let shape = mean * mean / var;
    let rate = mean / var;
    let law = Gamma::new(shape, rate)
        .map_err(|e| Error::DegenerateSignal(format!("gamma fit failed: {e}")))?;
    Ok(law.inverse_cdf(level))
}

/// INS profile of `signal` over the configured scales.
///
/// For each scale the window is `round(scale × len)` samples. With Θ the
/// dispersion of the signal and Θ_j those of the surrogates,
/// INS = sqrt(Θ / mean Θ_j) and the threshold is sqrt(q / mean Θ_j), q being
/// a quantile of a Gamma fit to {Θ_j}. The quantile level is split across
/// scales so that a stationary signal passes every scale with the configured
/// confidence.
pub fn ins(signal: &SampledSignal, config: &InsConfig) -> Result<InsProfile> {
    let len = signal.len();
    if config.surrogates < MIN_SURROGATES {
        return Err(Error::Parameter(format!(
            "INS needs at least {MIN_SURROGATES} surrogates, got {}",
            config.surrogates
        )));
    }
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return Err(Error::Parameter(format!("confidence {} outside (0, 1)", config.confidence)));
    }
    if config.scales.is_empty()
        || config.scales.windows(2).any(|w| w[0] >= w[1])
        || config.scales.iter().any(|s| !(*s > 0.0 && *s < 1.0))
    {
        return Err(Error::Parameter("scales must be strictly increasing inside (0, 1)".into()));
    }
    let windows: Vec<usize> = config
        .scales
        .iter()
        .map(|s| (s * len as f64).round() as usize)
        .collect();
    for &w in &windows {
        check_window(len, w)?;
    }
    if signal.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("signal contains non-finite samples".into()));
    }
    let first = signal.samples[0];
    if signal.samples.iter().all(|v| *v == first) {
        return Err(Error::DegenerateSignal("constant signal".into()));
    }

    let engines: Vec<StftEngine> = windows.iter().map(|&w| StftEngine::new(w)).collect();
    let theta_signal: Vec<f64> = engines.iter().map(|e| dispersion(e, &signal.samples)).collect();

    let source = SurrogateSource::new(&signal.samples);
    // one row per surrogate, collected in index order
    let theta_surr: Vec<Vec<f64>> = (0..config.surrogates)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(surrogate_seed(config.seed, j));
            let s = source.draw(&mut rng);
            engines.iter().map(|e| dispersion(e, &s)).collect()
        })
        .collect();

    let level = 1.0 - (1.0 - config.confidence) / engines.len() as f64;
    let mut ins_values = Vec::with_capacity(engines.len());
    let mut thresholds = Vec::with_capacity(engines.len());
    for k in 0..engines.len() {
        let null: Vec<f64> = theta_surr.iter().map(|row| row[k]).collect();
        let mean = null.iter().sum::<f64>() / null.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::DegenerateSignal(format!(
                "surrogate dispersion vanishes at scale {}",
                config.scales[k]
            )));
        }
        ins_values.push((theta_signal[k] / mean).sqrt().max(f64::MIN_POSITIVE));
        thresholds.push((gamma_quantile(&null, level)? / mean).sqrt());
    }
    InsProfile::new(config.scales.clone(), ins_values, thresholds)
}
