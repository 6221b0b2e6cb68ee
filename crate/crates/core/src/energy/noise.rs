use serde::{Deserialize, Serialize};

use crate::energy::{estimate_hurst, EnergySeries};
use crate::error::{Error, Result};

/// Smallest standard deviation handed to the normalizer.
pub const STD_FLOOR: f64 = 1e-12;

const MIN_BLOCKS: usize = 8;
const HURST_MIN_LEN: usize = 32;
const HURST_FALLBACK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Noise floor read off the observed series itself.
    Blind,
    /// Statistics of a ground-truth noise series supplied by the caller.
    Oracle,
}

/// Mean, spread and Hurst exponent of the energy measurement error h_i(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStats {
    pub mean: f64,
    pub std: f64,
    pub hurst: f64,
    pub mode: NoiseMode,
}

/// Noise statistics for one sensor.
///
/// Blind mode uses the lowest quartile of the observed block energies.
/// Oracle mode uses the whole of `oracle_noise`, which the caller fills with
/// either the residual u − g·B/d² (cross term included) or the energies of
/// the noise component alone.
///
/// H comes from [`estimate_hurst`] when at least 32 blocks are available and
/// falls back to 0.5 otherwise; it is informational only.
pub fn estimate_noise_stats(
    series: &EnergySeries,
    mode: NoiseMode,
    oracle_noise: Option<&EnergySeries>,
) -> Result<NoiseStats> {
    if series.len() < MIN_BLOCKS {
        return Err(Error::InsufficientData(format!(
            "{}: need at least {MIN_BLOCKS} blocks, got {}",
            series.sensor_id,
            series.len()
        )));
    }
    let set: Vec<f64> = match mode {
        NoiseMode::Blind => {
            let mut sorted = series.block_energies.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.truncate((sorted.len() / 4).max(2));
            sorted
        }
        NoiseMode::Oracle => {
            let oracle = oracle_noise.ok_or_else(|| {
                Error::Parameter(format!("{}: oracle mode needs the noise series", series.sensor_id))
            })?;
            oracle.block_energies.clone()
        }
    };
    if set.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{}: fewer than 2 blocks in the noise estimation set",
            series.sensor_id
        )));
    }
    let n = set.len() as f64;
    let mean = set.iter().sum::<f64>() / n;
    let var = set.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt().max(STD_FLOOR);
    let hurst = if set.len() >= HURST_MIN_LEN {
        estimate_hurst(&set).unwrap_or(HURST_FALLBACK)
    } else {
        HURST_FALLBACK
    };
    Ok(NoiseStats {
        mean,
        std,
        hurst,
        mode,
    })
}
