use std::time::{Duration, Instant};

use crate::bench::{energy_map, rmse, EnergyMap, Method};
use crate::energy::{block_energies, block_energies_of, estimate_noise_stats, normalize, EnergySeries, NoiseMode, NoiseStats};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::localizer::{crlb, multires_search_with, LocalizationResult, SearchArea, SearchSchedule};
use crate::scene::{render_scene, RenderedScene, Scene, SensorDef};
use crate::selection::{
    blind_noise_variance, compute_alpha, esfe_select_min, reduce_area, snr_select, SelectionMethod, SelectionResult,
    SnrSelection,
};
use crate::stationarity::{ins, InsConfig};

/// Knobs for the selection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    pub alpha: Option<f64>,
    pub kappa: f64,
    pub xi: f64,
    pub margin_fraction: f64,
    pub min_selected: usize,
    pub resolution: f64,
    pub ins_surrogates: usize,
}

/// One rendered scene with everything the estimators need.
pub struct Case {
    pub scene: Scene,
    pub rendered: RenderedScene,
    pub series: Vec<EnergySeries>,
    pub ml_stats: Vec<NoiseStats>,
    pub hml_stats: Vec<NoiseStats>,
    /// Emitted target energy per block (B at 1 m).
    pub source_energy: Vec<f64>,
    /// Blocks used for localization.
    pub blocks: std::ops::Range<usize>,
    pub noise_mode: NoiseMode,
    pub block_size: usize,
    ins_max: Option<Vec<f64>>,
    pub ins_time: Duration,
}

/// Per-block estimates for one (method, selection) pair.
#[derive(Debug)]
pub struct Localization {
    pub estimates: Vec<LocalizationResult>,
    pub rmse: f64,
    pub crlb: Result<f64>,
    pub evaluations: usize,
    /// Time spent inside the grid search only.
    pub search_time: Duration,
}

fn series_of(id: &str, samples: &[f64], block_size: usize) -> Result<EnergySeries> {
    block_energies_of(id, samples, block_size)
}

impl Case {
    pub fn prepare(scene: Scene, block_size: usize, noise_mode: NoiseMode, skip_warmup: bool) -> Result<Case> {
        let rendered = render_scene(&scene)?;
        let series = rendered
            .traces
            .iter()
            .map(|t| block_energies(t, block_size))
            .collect::<Result<Vec<_>>>()?;
        let q = series[0].len();

        let (ml_stats, hml_stats) = match noise_mode {
            NoiseMode::Blind => {
                let s = series
                    .iter()
                    .map(|u| estimate_noise_stats(u, NoiseMode::Blind, None))
                    .collect::<Result<Vec<_>>>()?;
                (s.clone(), s)
            }
            NoiseMode::Oracle => {
                let mut ml = Vec::with_capacity(series.len());
                let mut hml = Vec::with_capacity(series.len());
                for (trace, u) in rendered.traces.iter().zip(&series) {
                    let id = &trace.sensor_id;
                    let missing = || Error::Parameter(format!("{id}: trace has no source components"));
                    let noise = trace.noise_component().ok_or_else(missing)?;
                    let target = trace.target_component().ok_or_else(missing)?;
                    let noise_e = series_of(id, &noise, block_size)?;
                    let target_e = series_of(id, target, block_size)?;
                    let residual = EnergySeries {
                        sensor_id: id.clone(),
                        block_energies: u
                            .block_energies
                            .iter()
                            .zip(&target_e.block_energies)
                            .map(|(u, a)| u - a)
                            .collect(),
                        block_size,
                    };
                    ml.push(estimate_noise_stats(u, NoiseMode::Oracle, Some(&noise_e)).map_err(|e| e.in_context(id))?);
                    hml.push(estimate_noise_stats(u, NoiseMode::Oracle, Some(&residual)).map_err(|e| e.in_context(id))?);
                }
                (ml, hml)
            }
        };

        let source_energy = series_of("target", &rendered.target_signal().samples, block_size)?.block_energies;
        let first = if skip_warmup {
            let target = scene.target()?.position;
            let max_delay = scene
                .sensors
                .iter()
                .map(|s| (s.position.distance(&target) / scene.speed_of_sound * scene.sample_rate).round() as usize)
                .max()
                .unwrap_or(0);
            max_delay.div_ceil(block_size)
        } else {
            0
        };
        if first >= q {
            return Err(Error::InsufficientData(format!(
                "propagation delay covers all {q} blocks"
            )));
        }
        Ok(Case {
            scene,
            rendered,
            series,
            ml_stats,
            hml_stats,
            source_energy: source_energy[..q].to_vec(),
            blocks: first..q,
            noise_mode,
            block_size,
            ins_max: None,
            ins_time: Duration::ZERO,
        })
    }

    pub fn stats(&self, method: Method) -> &[NoiseStats] {
        match method {
            Method::Ml => &self.ml_stats,
            Method::Hml => &self.hml_stats,
        }
    }

    pub fn target_position(&self) -> Point {
        self.scene.sources[self.rendered.target_index].position
    }

    /// INS_max per sensor, computed once per case.
    pub fn ins_max(&mut self, surrogates: usize) -> Result<&[f64]> {
        if self.ins_max.is_none() {
            let start = Instant::now();
            let fs = self.scene.sample_rate;
            let values = self
                .rendered
                .traces
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let cfg = InsConfig::default()
                        .with_surrogates(surrogates)
                        .with_seed(sensor_seed(self.scene.seed, i));
                    ins(&t.to_signal(fs), &cfg)
                        .map(|p| p.ins_max)
                        .map_err(|e| e.in_context(&t.sensor_id))
                })
                .collect::<Result<Vec<f64>>>()?;
            self.ins_time = start.elapsed();
            self.ins_max = Some(values);
        }
        Ok(self.ins_max.as_deref().expect("just filled"))
    }

    pub fn select(&mut self, selector: SelectionMethod, opts: &SelectOptions) -> Result<SelectionResult> {
        let bounds = self.scene.bounds();
        let full = SearchArea::new(bounds, opts.resolution);
        let ids: Vec<String> = self.scene.sensors.iter().map(|s| s.id.clone()).collect();
        match selector {
            SelectionMethod::All => Ok(SelectionResult {
                selected_ids: ids,
                alpha: f64::NAN,
                area: full,
                method: selector,
            }),
            SelectionMethod::Esfe => {
                let v = self.scene.largest_dimension();
                let l = self.scene.sensors.len();
                let alpha = match opts.alpha {
                    Some(a) => a,
                    None => compute_alpha(v, l, opts.kappa, opts.xi)?,
                };
                let ins_max = self.ins_max(opts.ins_surrogates)?;
                let table: Vec<(String, f64)> = ids.iter().cloned().zip(ins_max.iter().cloned()).collect();
                let picked = esfe_select_min(&table, alpha, opts.min_selected)?;
                let positions: Vec<Point> = self
                    .scene
                    .sensors
                    .iter()
                    .filter(|s| picked.selected_ids.contains(&s.id))
                    .map(|s| s.position)
                    .collect();
                let area = reduce_area(&positions, v, opts.margin_fraction, &bounds, opts.resolution)?;
                Ok(SelectionResult {
                    selected_ids: picked.selected_ids,
                    alpha: picked.alpha,
                    area,
                    method: selector,
                })
            }
            SelectionMethod::Snr => {
                let picked = self.snr_scores()?;
                // keep scene order
                let selected_ids = ids.into_iter().filter(|id| picked.selected_ids.contains(id)).collect();
                Ok(SelectionResult {
                    selected_ids,
                    alpha: f64::NAN,
                    area: full,
                    method: selector,
                })
            }
        }
    }

    /// SNR a posteriori of every sensor and the top half.
    pub fn snr_scores(&self) -> Result<SnrSelection> {
        let noise_var = self
            .rendered
            .traces
            .iter()
            .map(|t| match self.noise_mode {
                NoiseMode::Oracle => {
                    let n = t.noise_component().ok_or_else(|| {
                        Error::Parameter(format!("{}: trace has no source components", t.sensor_id))
                    })?;
                    Ok(variance(&n))
                }
                NoiseMode::Blind => blind_noise_variance(&t.samples, self.block_size),
            })
            .collect::<Result<Vec<f64>>>()?;
        let signals: Vec<(&str, &[f64])> = self
            .rendered
            .traces
            .iter()
            .map(|t| (t.sensor_id.as_str(), t.samples.as_slice()))
            .collect();
        snr_select(&signals, &noise_var)
    }

    /// Run the grid search on every block with the selected sensors only.
    pub fn localize(&self, method: Method, selection: &SelectionResult, schedule: &SearchSchedule) -> Result<Localization> {
        let idx: Vec<usize> = self
            .scene
            .sensors
            .iter()
            .enumerate()
            .filter(|(_, s)| selection.selected_ids.contains(&s.id))
            .map(|(i, _)| i)
            .collect();
        if idx.len() < 3 {
            return Err(Error::Parameter(format!(
                "{} selected sensors cannot localize in 2-D",
                idx.len()
            )));
        }
        let sensors: Vec<SensorDef> = idx.iter().map(|&i| self.scene.sensors[i].clone()).collect();
        let series: Vec<EnergySeries> = idx.iter().map(|&i| self.series[i].clone()).collect();
        let all_stats = self.stats(method);
        let stats: Vec<NoiseStats> = idx.iter().map(|&i| all_stats[i]).collect();

        let zs = self
            .blocks
            .clone()
            .map(|q| normalize(&series, &stats, q))
            .collect::<Result<Vec<_>>>()?;
        let start = Instant::now();
        let estimates = zs
            .iter()
            .map(|z| multires_search_with(z, &selection.area, &sensors, &stats, schedule))
            .collect::<Result<Vec<_>>>()?;
        let search_time = start.elapsed();

        let truth = self.target_position();
        let positions: Vec<Point> = estimates.iter().map(|e| e.position).collect();
        let b: Vec<f64> = self.source_energy[self.blocks.clone()].to_vec();
        Ok(Localization {
            rmse: rmse(&positions, truth)?,
            crlb: crlb(truth, &b, &sensors, &stats),
            evaluations: estimates.iter().map(|e| e.evaluations).sum(),
            estimates,
            search_time,
        })
    }
}

impl Case {
    /// Block with the most target energy among the usable ones.
    pub fn loudest_block(&self) -> usize {
        self.blocks
            .clone()
            .max_by(|&a, &b| self.source_energy[a].total_cmp(&self.source_energy[b]).then(b.cmp(&a)))
            .expect("blocks are never empty")
    }

    /// Cost map of one block over the whole scene, all sensors.
    pub fn energy_map(&self, method: Method, block: usize, cell: f64) -> Result<EnergyMap> {
        let stats = self.stats(method);
        let z = normalize(&self.series, stats, block)?;
        energy_map(&z, &self.scene.sensors, stats, self.scene.bounds(), cell)
    }
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Surrogate seed for one sensor's INS run.
fn sensor_seed(scene_seed: u64, index: usize) -> u64 {
    scene_seed
        .wrapping_mul(0x2545_F491_4F6C_DD1D)
        .wrapping_add(index as u64 + 1)
        .rotate_left(17)
}
