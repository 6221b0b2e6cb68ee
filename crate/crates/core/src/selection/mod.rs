//! Sensor selection: the INS-driven ESFE rule with search-area reduction,
//! the SNR a-posteriori baseline, and a Bhattacharyya distance diagnostic.

mod bhattacharyya;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::localizer::SearchArea;

pub use bhattacharyya::{bhattacharyya, BHATTACHARYYA_FLOOR};

pub const DEFAULT_KAPPA: f64 = 0.087;
pub const MAX_XI: f64 = 0.05;
pub const ALPHA_MIN: f64 = 0.01;
pub const ALPHA_MAX: f64 = 0.99;
pub const MIN_SELECTED: usize = 4;
pub const ALPHA_RELAX_STEP: f64 = 0.05;
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Esfe,
    Snr,
    All,
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMethod::Esfe => "esfe",
            SelectionMethod::Snr => "snr",
            SelectionMethod::All => "all",
        })
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esfe" => Ok(SelectionMethod::Esfe),
            "snr" => Ok(SelectionMethod::Snr),
            "all" => Ok(SelectionMethod::All),
            other => Err(Error::Parameter(format!("unknown selector '{other}' (esfe, snr, all)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub selected_ids: Vec<String>,
    /// Threshold actually used (after any relaxation); NaN for non-ESFE methods.
    pub alpha: f64,
    pub area: SearchArea,
    pub method: SelectionMethod,
}

/// α = 1/(κ(v + L)) + ξ, clamped to [0.01, 0.99].
pub fn compute_alpha(v: f64, l: usize, kappa: f64, xi: f64) -> Result<f64> {
    if !(v > 0.0) || l == 0 || !(kappa > 0.0) {
        return Err(Error::Parameter(format!(
            "alpha needs v > 0, L ≥ 1, kappa > 0 (got v={v}, L={l}, kappa={kappa})"
        )));
    }
    if !(xi.abs() <= MAX_XI + 1e-12) {
        return Err(Error::Parameter(format!("xi = {xi} outside [-0.05, 0.05]")));
    }
    Ok((1.0 / (kappa * (v + l as f64)) + xi).clamp(ALPHA_MIN, ALPHA_MAX))
}

/// Outcome of the ESFE rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EsfeSelection {
    /// Selected sensors, in input order.
    pub selected_ids: Vec<String>,
    /// α after relaxation.
    pub alpha: f64,
    /// Requested α.
    pub requested_alpha: f64,
}

/// Keep sensors whose INS_max lies within a fraction α of the largest:
/// |INS_i − max| / max ≤ α. With fewer than four picks, α grows in steps of
/// 0.05 until four are in or every sensor is.
pub fn esfe_select(ins_max: &[(String, f64)], alpha: f64) -> Result<EsfeSelection> {
    esfe_select_min(ins_max, alpha, MIN_SELECTED)
}

/// [`esfe_select`] with an explicit minimum selection size (1 disables
/// relaxation).
pub fn esfe_select_min(ins_max: &[(String, f64)], alpha: f64, min_selected: usize) -> Result<EsfeSelection> {
    if ins_max.is_empty() {
        return Err(Error::Parameter("ESFE selection needs at least one sensor".into()));
    }
    if let Some((id, v)) = ins_max.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Parameter(format!("{id}: INS_max must be positive and finite, got {v}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    let max = ins_max.iter().map(|(_, v)| *v).fold(f64::MIN, f64::max);
    let pick = |a: f64| -> Vec<String> {
        ins_max
            .iter()
            .filter(|(_, v)| (v - max).abs() / max <= a)
            .map(|(id, _)| id.clone())
            .collect()
    };
    let want = min_selected.clamp(1, ins_max.len());
    let mut steps = 0u32;
    let mut used = alpha;
    let mut selected = pick(used);
    while selected.len() < want {
        steps += 1;
        used = alpha + steps as f64 * ALPHA_RELAX_STEP;
        selected = pick(used);
    }
    Ok(EsfeSelection {
        selected_ids: selected,
        alpha: used,
        requested_alpha: alpha,
    })
}

/// Bounding box of the selected positions widened by `margin_fraction·v` on
/// every side and clipped to the scene.
pub fn reduce_area(
    selected_positions: &[Point],
    v: f64,
    margin_fraction: f64,
    scene_bounds: &Rect,
    target_resolution: f64,
) -> Result<SearchArea> {
    if selected_positions.is_empty() {
        return Err(Error::Parameter("area reduction needs a selected sensor".into()));
    }
    if !(margin_fraction >= 0.0) || !(v > 0.0) {
        return Err(Error::Parameter("margin fraction and v must be non-negative".into()));
    }
    let margin = margin_fraction * v;
    let xs = selected_positions.iter().map(|p| p.x);
    let ys = selected_positions.iter().map(|p| p.y);
    let bbox = Rect::new(
        xs.clone().fold(f64::INFINITY, f64::min) - margin,
        xs.fold(f64::NEG_INFINITY, f64::max) + margin,
        ys.clone().fold(f64::INFINITY, f64::min) - margin,
        ys.fold(f64::NEG_INFINITY, f64::max) + margin,
    );
    let area = SearchArea::new(bbox.intersect(scene_bounds), target_resolution);
    area.validate()
        .map_err(|_| Error::Parameter("selected sensors and margin do not overlap the scene".into()))?;
    Ok(area)
}

/// SNR a posteriori: var(x) / σ_n².
pub fn snr_post(samples: &[f64], noise_variance: f64) -> Result<f64> {
    if !(noise_variance > 0.0) {
        return Err(Error::Parameter(format!("noise variance must be positive, got {noise_variance}")));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty signal".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var / noise_variance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrSelection {
    /// Selected sensors, highest SNR first.
    pub selected_ids: Vec<String>,
    /// SNR a posteriori per input sensor, in input order.
    pub snr_post: Vec<f64>,
}

/// Top ⌈L/2⌉ sensors by SNR a posteriori; equal values go to the smaller id.
pub fn snr_select(signals: &[(&str, &[f64])], noise_variance: &[f64]) -> Result<SnrSelection> {
    if signals.is_empty() || signals.len() != noise_variance.len() {
        return Err(Error::Parameter(format!(
            "{} signals but {} noise estimates",
            signals.len(),
            noise_variance.len()
        )));
    }
    let snr = signals
        .iter()
        .zip(noise_variance)
        .map(|((id, x), nv)| snr_post(x, *nv).map_err(|e| e.in_context(id)))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..signals.len()).collect();
    order.sort_by(|&a, &b| snr[b].total_cmp(&snr[a]).then(signals[a].0.cmp(signals[b].0)));
    let keep = signals.len().div_ceil(2);
    Ok(SnrSelection {
        selected_ids: order[..keep].iter().map(|&i| signals[i].0.to_string()).collect(),
        snr_post: snr,
    })
}

/// Blind noise power for the SNR baseline: mean of the lowest tenth of the
/// block energies (at least one block).
pub fn blind_noise_variance(samples: &[f64], block_size: usize) -> Result<f64> {
    let series = crate::energy::block_energies_of("", samples, block_size)?;
    let mut e = series.block_energies;
    e.sort_by(f64::total_cmp);
    let k = (e.len() / 10).max(1);
    Ok(e[..k].iter().sum::<f64>() / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(v: &[f64]) -> Vec<(String, f64)> {
        v.iter().enumerate().map(|(i, x)| (format!("S{i}"), *x)).collect()
    }

    #[test]
    fn alpha_arithmetic() {
        let a = compute_alpha(20.0, 12, DEFAULT_KAPPA, 0.0).unwrap();
        assert!((a - 1.0 / (0.087 * 32.0)).abs() < 1e-15);
        assert!((a - 0.3592).abs() < 5e-5);
        let k = compute_alpha(7.0, 12, DEFAULT_KAPPA, 0.0).unwrap();
        assert!((k - 0.60496).abs() < 5e-6, "{k}");
        let up = compute_alpha(20.0, 12, DEFAULT_KAPPA, 0.05).unwrap();
        assert_eq!(up, 1.0 / (0.087 * 32.0) + 0.05);
        assert_eq!(compute_alpha(0.1, 1, 0.5, 0.0).unwrap(), ALPHA_MAX);
        assert!(compute_alpha(20.0, 12, DEFAULT_KAPPA, 0.2).is_err());
        assert!(compute_alpha(0.0, 12, DEFAULT_KAPPA, 0.0).is_err());
    }

    #[test]
    fn equal_ins_selects_all() {
        let t = table(&[3.0; 6]);
        let s = esfe_select(&t, 0.01).unwrap();
        assert_eq!(s.selected_ids.len(), 6);
        assert_eq!(s.alpha, 0.01);
    }

    #[test]
    fn relaxation_reaches_four() {
        let t = table(&[100.0, 10.0, 20.0, 30.0, 40.0]);
        let s = esfe_select(&t, 0.1).unwrap();
        assert_eq!(s.selected_ids, vec!["S0", "S2", "S3", "S4"]);
        // 0.1 + k·0.05 reaches 0.8 at k = 14
        assert!((s.alpha - 0.8).abs() < 1e-12);
        assert_eq!(s.requested_alpha, 0.1);
        let few = table(&[1.0, 5.0]);
        assert_eq!(esfe_select(&few, 0.0).unwrap().selected_ids.len(), 2);
    }

    #[test]
    fn esfe_errors() {
        assert!(esfe_select(&[], 0.5).is_err());
        assert!(esfe_select(&table(&[1.0, 0.0]), 0.5).is_err());
        assert!(esfe_select(&table(&[1.0]), 1.5).is_err());
    }

    #[test]
    fn area_examples() {
        let b = Rect::from_size(20.0, 20.0);
        let a = reduce_area(&[Point::new(2.0, 2.0), Point::new(8.0, 6.0)], 20.0, 0.2, &b, 0.1).unwrap();
        assert_eq!((a.x_min, a.x_max, a.y_min, a.y_max), (0.0, 12.0, 0.0, 10.0));
        let a = reduce_area(&[Point::new(5.0, 5.0)], 20.0, 0.2, &b, 0.1).unwrap();
        assert_eq!((a.x_min, a.x_max, a.y_min, a.y_max), (1.0, 9.0, 1.0, 9.0));
        let a = reduce_area(&[Point::new(0.0, 0.0), Point::new(20.0, 20.0)], 20.0, 0.2, &b, 0.1).unwrap();
        assert_eq!(a.rect(), b);
        assert!(reduce_area(&[], 20.0, 0.2, &b, 0.1).is_err());
    }

    #[test]
    fn snr_examples() {
        // var 4 (±2 square wave) over noise 1
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 2.0 } else { -2.0 }).collect();
        assert_eq!(snr_post(&x, 1.0).unwrap(), 4.0);
        assert!(snr_post(&x, 0.0).is_err());

        let sigs: Vec<Vec<f64>> = (0..12)
            .map(|k| (0..64).map(|i| if i % 2 == 0 { k as f64 } else { -(k as f64) }).collect())
            .collect();
        let ids: Vec<String> = (0..12).map(|i| format!("S{i:02}")).collect();
        let input: Vec<(&str, &[f64])> = ids.iter().zip(&sigs).map(|(i, s)| (i.as_str(), s.as_slice())).collect();
        let sel = snr_select(&input, &[1.0; 12]).unwrap();
        assert_eq!(sel.selected_ids, vec!["S11", "S10", "S09", "S08", "S07", "S06"]);

        let flat: Vec<(&str, &[f64])> = ids.iter().map(|i| (i.as_str(), sigs[3].as_slice())).collect();
        let sel = snr_select(&flat[..5], &[1.0; 5]).unwrap();
        assert_eq!(sel.selected_ids, vec!["S00", "S01", "S02"]);
        assert!(snr_select(&flat[..2], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn blind_noise_is_quiet_blocks() {
        let mut x = vec![0.0; 20 * 100];
        for (i, v) in x.iter_mut().enumerate() {
            *v = if i < 1800 { 3.0 } else { 1.0 };
        }
        assert_eq!(blind_noise_variance(&x, 100).unwrap(), 1.0);
    }

    #[test]
    fn method_text() {
        for m in [SelectionMethod::Esfe, SelectionMethod::Snr, SelectionMethod::All] {
            assert_eq!(m.to_string().parse::<SelectionMethod>().unwrap(), m);
        }
        assert!("best".parse::<SelectionMethod>().is_err());
    }
}
