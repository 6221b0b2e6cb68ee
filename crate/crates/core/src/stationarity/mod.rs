//! Index of non-stationarity (INS).
//!
//! The test compares how much a signal's short-time spectra wander around
//! their time average against the same dispersion measured on
//! phase-randomized surrogates, which are stationary by construction. One
//! INS value and one 95% threshold are produced per analysis scale.

mod ins;
mod spectrogram;
mod surrogate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ins::{ins, InsConfig, DEFAULT_SCALES, DEFAULT_SURROGATES};
pub use spectrogram::{hann, spectrogram, Spectrogram};
pub use surrogate::make_surrogates;

/// Floor applied to spectra before normalizing them to unit mass.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

/// INS_max above which a nonstationary signal is called highly nonstationary.
pub const HIGHLY_NONSTATIONARY_INS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationarity {
    Stationary,
    Nonstationary,
    HighlyNonstationary,
}

impl Stationarity {
    pub fn is_stationary(&self) -> bool {
        matches!(self, Stationarity::Stationary)
    }
}

impl fmt::Display for Stationarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stationarity::Stationary => "stationary",
            Stationarity::Nonstationary => "nonstationary",
            Stationarity::HighlyNonstationary => "highly_nonstationary",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsProfile {
    /// Window length as a fraction of the signal length.
    pub scales: Vec<f64>,
    pub ins_values: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub ins_max: f64,
    pub classification: Stationarity,
}

impl InsProfile {
    /// Build a profile, checking its invariants and deriving INS_max and the label.
    pub fn new(scales: Vec<f64>, ins_values: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if scales.is_empty() || scales.len() != ins_values.len() || scales.len() != thresholds.len() {
            return Err(Error::Parameter("scales, INS values and thresholds must align".into()));
        }
        if scales.windows(2).any(|w| w[0] >= w[1]) || scales.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            return Err(Error::Parameter("scales must be strictly increasing inside (0, 1)".into()));
        }
        if ins_values.iter().chain(&thresholds).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("INS values and thresholds must be positive".into()));
        }
        let ins_max = ins_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut profile = InsProfile {
            scales,
            ins_values,
            thresholds,
            ins_max,
            classification: Stationarity::Stationary,
        };
        profile.classification = classify(&profile);
        Ok(profile)
    }

    /// Scales at which INS exceeds its threshold.
    pub fn violations(&self) -> usize {
        self.ins_values
            .iter()
            .zip(&self.thresholds)
            .filter(|(i, g)| i > g)
            .count()
    }
}

/// Stationary iff INS ≤ γ at every scale; otherwise nonstationary, and
/// highly nonstationary when INS_max also exceeds 100.
pub fn classify(profile: &InsProfile) -> Stationarity {
    let any_violation = profile
        .ins_values
        .iter()
        .zip(&profile.thresholds)
        .any(|(i, g)| i > g);
    if !any_violation {
        Stationarity::Stationary
    } else if profile.ins_max > HIGHLY_NONSTATIONARY_INS {
        Stationarity::HighlyNonstationary
    } else {
        Stationarity::Nonstationary
    }
}

/// Floor at `SPECTRUM_FLOOR`, normalize to unit sum, and return the log too.
pub(crate) fn to_distribution(spectrum: &[f64], dist: &mut [f64], log: &mut [f64]) {
    let total: f64 = spectrum.iter().map(|v| v.max(SPECTRUM_FLOOR)).sum();
    for ((s, d), l) in spectrum.iter().zip(dist.iter_mut()).zip(log.iter_mut()) {
        *d = s.max(SPECTRUM_FLOOR) / total;
        *l = d.ln();
    }
}

/// KL(p‖q) + KL(q‖p) = Σ (p − q)(ln p − ln q) for distributions given with their logs.
pub(crate) fn symmetric_kl(p: &[f64], log_p: &[f64], q: &[f64], log_q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.len() {
        acc += (p[i] - q[i]) * (log_p[i] - log_q[i]);
    }
    acc.max(0.0)
}

/// Symmetrized Kullback-Leibler divergence between two spectra, each floored
/// and normalized to unit sum first.
pub fn spectral_distance(frame: &[f64], global_mean: &[f64]) -> Result<f64> {
    if frame.len() != global_mean.len() || frame.is_empty() {
        return Err(Error::Parameter(format!(
            "spectra must have equal non-zero length ({} vs {})",
            frame.len(),
            global_mean.len()
        )));
    }
    for (name, s) in [("frame", frame), ("global mean", global_mean)] {
        if !s.iter().any(|v| *v > 0.0) {
            return Err(Error::DegenerateSpectrum(format!("{name} has no positive entry")));
        }
        if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::DegenerateSpectrum(format!("{name} has negative or non-finite entries")));
        }
    }
    let n = frame.len();
    let (mut p, mut lp, mut q, mut lq) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    to_distribution(frame, &mut p, &mut lp);
    to_distribution(global_mean, &mut q, &mut lq);
    Ok(symmetric_kl(&p, &lp, &q, &lq))
}
