//! Experiment sweeps: scenes × SNR × seeds × methods × selectors.

mod case;
mod config;
mod map;
mod output;

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::localizer::SearchSchedule;
use crate::selection::SelectionMethod;

pub use case::{Case, Localization, SelectOptions};
pub use config::{ExperimentConfig, Method, RandomScene, SceneSource};
pub use map::{energy_map, EnergyMap};
pub use output::{parse_csv, write_csv, write_pgm, CSV_HEADER, PROFILE_COLUMNS};

/// Root-mean-square distance between estimates and the truth.
pub fn rmse(estimates: &[Point], truth: Point) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no estimates to score".into()));
    }
    let sum: f64 = estimates.iter().map(|p| p.distance_sq(&truth)).sum();
    Ok((sum / estimates.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub select_ms: f64,
    pub ins_ms: f64,
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub selector: SelectionMethod,
    pub scene: String,
    pub target: String,
    /// Sensors in the scene.
    pub l: usize,
    pub snr_db: f64,
    pub rmse_m: Option<f64>,
    pub crlb_m: Option<f64>,
    pub n_selected: usize,
    /// Cost evaluations summed over blocks.
    pub evaluations: usize,
    pub wall_ms: f64,
    pub seed: u64,
    /// `ok`, `crlb_unavailable: ...` or `failed: ...`.
    pub status: String,
    pub profile: Option<Profile>,
}

impl ResultRow {
    pub fn is_failed(&self) -> bool {
        self.status.starts_with("failed")
    }
}

fn clean(msg: impl std::fmt::Display) -> String {
    msg.to_string().replace([',', '\n', '\r'], ";")
}

impl ExperimentConfig {
    fn select_options(&self) -> SelectOptions {
        SelectOptions {
            alpha: self.alpha,
            kappa: self.kappa,
            xi: self.xi,
            margin_fraction: self.margin_fraction,
            min_selected: self.min_selected,
            resolution: self.resolution(),
            ins_surrogates: self.ins_surrogates,
        }
    }

    pub fn schedule(&self) -> SearchSchedule {
        SearchSchedule {
            polish: self.polish,
            ..SearchSchedule::default()
        }
    }
}

/// All rows for one (snr, seed) cell.
fn run_case(cfg: &ExperimentConfig, snr_db: f64, seed: u64) -> Vec<ResultRow> {
    let scene = cfg.scene.instantiate(snr_db, seed);
    let (name, target, l) = match &scene {
        Ok(s) => (
            s.name.clone(),
            s.target().map(|t| t.id.clone()).unwrap_or_default(),
            s.sensors.len(),
        ),
        Err(_) => (String::new(), String::new(), 0),
    };
    let blank = |method, selector, status: String| ResultRow {
        method,
        selector,
        scene: name.clone(),
        target: target.clone(),
        l,
        snr_db,
        rmse_m: None,
        crlb_m: None,
        n_selected: 0,
        evaluations: 0,
        wall_ms: 0.0,
        seed,
        status,
        profile: None,
    };
    let every = |status: String| -> Vec<ResultRow> {
        cfg.methods
            .iter()
            .flat_map(|&m| cfg.selectors.iter().map(move |&s| (m, s)))
            .map(|(m, s)| blank(m, s, status.clone()))
            .collect()
    };

    let case = scene.and_then(|s| Case::prepare(s, cfg.block_size, cfg.noise_mode, cfg.skip_warmup));
    let mut case = match case {
        Ok(c) => c,
        Err(e) => return every(format!("failed: {}", clean(e))),
    };
    let opts = cfg.select_options();
    let schedule = cfg.schedule();
    let mut rows = Vec::new();
    for &selector in &cfg.selectors {
        let ins_before = case.ins_time;
        let start = Instant::now();
        let selection = case.select(selector, &opts);
        let select_ms = start.elapsed().as_secs_f64() * 1e3;
        let ins_ms = (case.ins_time - ins_before).as_secs_f64() * 1e3;
        for &method in &cfg.methods {
            let mut row = blank(method, selector, String::new());
            if cfg.profile {
                row.profile = Some(Profile { select_ms, ins_ms });
            }
            let selection = match &selection {
                Ok(s) => s,
                Err(e) => {
                    row.status = format!("failed: {}", clean(e));
                    rows.push(row);
                    continue;
                }
            };
            row.n_selected = selection.selected_ids.len();
            match case.localize(method, selection, &schedule) {
                Ok(loc) => {
                    row.rmse_m = Some(loc.rmse);
                    row.evaluations = loc.evaluations;
                    row.wall_ms = loc.search_time.as_secs_f64() * 1e3;
                    match loc.crlb {
                        Ok(c) => {
                            row.crlb_m = Some(c);
                            row.status = "ok".into();
                        }
                        Err(e) => row.status = format!("crlb_unavailable: {}", clean(e)),
                    }
                }
                Err(e) => row.status = format!("failed: {}", clean(e)),
            }
            rows.push(row);
        }
    }
    rows
}

/// Run the full sweep. Failures are reported per row and never abort the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, f64, u64)> = cfg
        .snr_list
        .iter()
        .enumerate()
        .flat_map(|(i, &snr)| (0..cfg.trials as u64).map(move |t| (i, snr, cfg.seed + t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let mut keyed: Vec<((usize, usize, usize, u64), ResultRow)> = pool.install(|| {
        cells
            .par_iter()
            .flat_map_iter(|&(snr_idx, snr, seed)| {
                run_case(cfg, snr, seed).into_iter().map(move |r| (snr_idx, r))
            })
            .map(|(snr_idx, r)| {
                let m = cfg.methods.iter().position(|&m| m == r.method).unwrap_or(0);
                let s = cfg.selectors.iter().position(|&s| s == r.selector).unwrap_or(0);
                ((m, s, snr_idx, r.seed), r)
            })
            .collect()
    });
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}
