//! Block energies, noise statistics and normalized energy vectors.
//!
//! A sensor's energy in block q is the mean square of its samples over the
//! block, so for a single source u_i = g_i·B/d_i² + h_i with h_i collecting
//! the noise energy and the source/noise cross term. Normalizing each sensor
//! by the mean and spread of h_i gives the vector the localizer fits.

mod hurst;
mod noise;

use crate::error::{Error, Result};
use crate::scene::SensorTrace;

pub use hurst::{estimate_hurst, synth_fgn};
pub use noise::{estimate_noise_stats, NoiseMode, NoiseStats, STD_FLOOR};

/// Block length used throughout the evaluation protocol.
pub const DEFAULT_BLOCK_SIZE: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub sensor_id: String,
    pub block_energies: Vec<f64>,
    pub block_size: usize,
}

impl EnergySeries {
    pub fn len(&self) -> usize {
        self.block_energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_energies.is_empty()
    }
}

/// Per-block mean square of `samples`; a trailing partial block is dropped.
pub fn block_energies_of(sensor_id: &str, samples: &[f64], block_size: usize) -> Result<EnergySeries> {
    if block_size == 0 {
        return Err(Error::Parameter("block size must be positive".into()));
    }
    if samples.len() < block_size {
        return Err(Error::InsufficientData(format!(
            "{sensor_id}: {} samples is shorter than one block of {block_size}",
            samples.len()
        )));
    }
    let block_energies = samples
        .chunks_exact(block_size)
        .map(|b| b.iter().map(|v| v * v).sum::<f64>() / block_size as f64)
        .collect();
    Ok(EnergySeries {
        sensor_id: sensor_id.to_string(),
        block_energies,
        block_size,
    })
}

pub fn block_energies(trace: &SensorTrace, block_size: usize) -> Result<EnergySeries> {
    block_energies_of(&trace.sensor_id, &trace.samples, block_size)
}

/// Normalized energies of every sensor for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct ZVector {
    pub entries: Vec<f64>,
    pub sensor_ids: Vec<String>,
}

impl ZVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keep only the entries at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> ZVector {
        ZVector {
            entries: indices.iter().map(|&i| self.entries[i]).collect(),
            sensor_ids: indices.iter().map(|&i| self.sensor_ids[i].clone()).collect(),
        }
    }
}

/// z_i = (u_i(q) − μ_i) / σ_i for every sensor.
pub fn normalize(series: &[EnergySeries], stats: &[NoiseStats], block: usize) -> Result<ZVector> {
    if series.len() != stats.len() {
        return Err(Error::Parameter(format!(
            "{} energy series but {} noise statistics",
            series.len(),
            stats.len()
        )));
    }
    if let Some(first) = series.first() {
        if series
            .iter()
            .any(|s| s.len() != first.len() || s.block_size != first.block_size)
        {
            return Err(Error::Parameter("sensors disagree on block count or size".into()));
        }
        if block >= first.len() {
            return Err(Error::Parameter(format!(
                "block {block} out of range (Q = {})",
                first.len()
            )));
        }
    }
    let mut entries = Vec::with_capacity(series.len());
    for (s, st) in series.iter().zip(stats) {
        if !(st.std > 0.0) {
            return Err(Error::InvalidStats(format!(
                "{}: noise std must be positive, got {}",
                s.sensor_id, st.std
            )));
        }
        entries.push((s.block_energies[block] - st.mean) / st.std);
    }
    Ok(ZVector {
        entries,
        sensor_ids: series.iter().map(|s| s.sensor_id.clone()).collect(),
    })
}

/// Inverse of [`normalize`]: u_i = z_i σ_i + μ_i.
pub fn denormalize(z: &ZVector, stats: &[NoiseStats]) -> Vec<f64> {
    z.entries
        .iter()
        .zip(stats)
        .map(|(v, s)| v * s.std + s.mean)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stats(mean: f64, std: f64) -> NoiseStats {
        NoiseStats {
            mean,
            std,
            hurst: 0.5,
            mode: NoiseMode::Oracle,
        }
    }

    fn series(id: &str, v: Vec<f64>) -> EnergySeries {
        EnergySeries {
            sensor_id: id.into(),
            block_energies: v,
            block_size: 4,
        }
    }

    #[test]
    fn constant_and_zero_traces() {
        let e = block_energies_of("s", &vec![1.0; 4096], 1024).unwrap();
        assert_eq!(e.block_energies, vec![1.0; 4]);
        let z = block_energies_of("s", &vec![0.0; 3000], 1024).unwrap();
        assert_eq!(z.block_energies, vec![0.0, 0.0]);
    }

    #[test]
    fn protocol_block_count() {
        let e = block_energies_of("s", &vec![0.1; 48000], 1024).unwrap();
        assert_eq!(e.len(), 46);
    }

    #[test]
    fn short_trace_rejected() {
        assert!(matches!(
            block_energies_of("s", &[1.0; 10], 1024),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn normalize_arithmetic() {
        let z = normalize(&[series("a", vec![5.0])], &[stats(3.0, 2.0)], 0).unwrap();
        assert_eq!(z.entries, vec![1.0]);
        let z = normalize(&[series("a", vec![3.0])], &[stats(3.0, 2.0)], 0).unwrap();
        assert_eq!(z.entries, vec![0.0]);
        let z = normalize(
            &[series("a", vec![4.0]), series("b", vec![9.0])],
            &[stats(2.0, 1.0), stats(3.0, 2.0)],
            0,
        )
        .unwrap();
        assert_eq!(z.entries, vec![2.0, 3.0]);
        assert_eq!(z.sensor_ids, vec!["a", "b"]);
    }

    #[test]
    fn normalize_rejects_bad_stats() {
        let err = normalize(&[series("a", vec![1.0])], &[stats(0.0, 0.0)], 0).unwrap_err();
        assert!(matches!(err, Error::InvalidStats(_)));
        assert!(normalize(&[series("a", vec![1.0])], &[stats(0.0, 1.0)], 1).is_err());
    }

    proptest! {
        #[test]
        fn block_sum_matches_sample_energy(
            samples in prop::collection::vec(-10.0f64..10.0, 64..600),
            m in 1usize..64,
        ) {
            let e = block_energies_of("s", &samples, m).unwrap();
            let covered = e.len() * m;
            let direct: f64 = samples[..covered].iter().map(|v| v * v).sum();
            let via_blocks: f64 = e.block_energies.iter().sum::<f64>() * m as f64;
            prop_assert!((direct - via_blocks).abs() <= 1e-9 * direct.max(1e-300));
        }

        #[test]
        fn normalize_round_trip(
            u in prop::collection::vec(0.0f64..1e3, 1..12),
            mu in 0.0f64..10.0,
            sigma in 1e-3f64..50.0,
        ) {
            let series: Vec<EnergySeries> = u.iter().enumerate()
                .map(|(i, v)| EnergySeries { sensor_id: format!("s{i}"), block_energies: vec![*v], block_size: 1 })
                .collect();
            let st = vec![stats(mu, sigma); u.len()];
            let z = normalize(&series, &st, 0).unwrap();
            for (back, orig) in denormalize(&z, &st).iter().zip(&u) {
                prop_assert!((back - orig).abs() <= 1e-12 * orig.abs().max(mu).max(1.0));
            }
        }
    }
}
