//! Single-target maximum-likelihood localization from normalized energies.
//!
//! With z_i = (u_i − μ_i)/σ_i the model is z ≈ B·m(ρ), m_i = g_i/(σ_i d_i²).
//! For a fixed candidate ρ the best B has a closed form, so the search runs
//! over position only and minimizes ‖z − B̂ m(ρ)‖².

mod crlb;
mod search;

use serde::{Deserialize, Serialize};

use crate::energy::{NoiseStats, ZVector};
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, D_MIN};
use crate::scene::SensorDef;

pub use crlb::{crlb, fisher_matrix};
pub use search::{multires_search, multires_search_with, SearchSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchArea {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub target_resolution: f64,
}

impl SearchArea {
    pub fn new(rect: Rect, target_resolution: f64) -> Self {
        SearchArea {
            x_min: rect.x_min,
            x_max: rect.x_max,
            y_min: rect.y_min,
            y_max: rect.y_max,
            target_resolution,
        }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x_min, self.x_max, self.y_min, self.y_max)
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.rect().contains(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::Parameter(format!("empty search area {self:?}")));
        }
        if !(self.target_resolution > 0.0) {
            return Err(Error::Parameter("target resolution must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationResult {
    pub position: Point,
    /// Fitted source energy B̂.
    pub source_energy: f64,
    pub cost: f64,
    pub evaluations: usize,
    pub levels: usize,
}

/// Sensor geometry and data in a fixed (id-sorted) order so that sums do not
/// depend on the order the caller listed the sensors in.
pub(crate) struct Scorer {
    ids: Vec<String>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Vec<f64>,
    z: Vec<f64>,
    m: std::cell::RefCell<Vec<f64>>,
}

pub(crate) enum Eval {
    Scored { cost: f64, energy: f64 },
    NearField { sensor: usize, distance: f64 },
}

impl Scorer {
    pub fn new(z: Option<&ZVector>, sensors: &[SensorDef], stats: &[NoiseStats]) -> Result<Scorer> {
        if sensors.len() != stats.len() {
            return Err(Error::Parameter(format!(
                "{} sensors but {} noise statistics",
                sensors.len(),
                stats.len()
            )));
        }
        if let Some(z) = z {
            if z.sensor_ids.len() != sensors.len()
                || z.sensor_ids.iter().zip(sensors).any(|(a, s)| *a != s.id)
            {
                return Err(Error::Parameter(
                    "energy vector and sensor list are not aligned".into(),
                ));
            }
        }
        let mut order: Vec<usize> = (0..sensors.len()).collect();
        order.sort_by(|&a, &b| sensors[a].id.cmp(&sensors[b].id));
        let mut weights = Vec::with_capacity(sensors.len());
        for &i in &order {
            let st = &stats[i];
            if !(st.std > 0.0) {
                return Err(Error::InvalidStats(format!(
                    "{}: noise std must be positive",
                    sensors[i].id
                )));
            }
            weights.push(sensors[i].gain / st.std);
        }
        Ok(Scorer {
            ids: order.iter().map(|&i| sensors[i].id.clone()).collect(),
            xs: order.iter().map(|&i| sensors[i].position.x).collect(),
            ys: order.iter().map(|&i| sensors[i].position.y).collect(),
            weights,
            z: match z {
                Some(z) => order.iter().map(|&i| z.entries[i]).collect(),
                None => vec![0.0; sensors.len()],
            },
            m: std::cell::RefCell::new(vec![0.0; sensors.len()]),
        })
    }

    pub fn sensor_id(&self, sorted_index: usize) -> &str {
        &self.ids[sorted_index]
    }

    /// Fill the model vector (id order); Err(index, distance) on a near-field hit.
    fn fill_model(&self, p: Point, m: &mut [f64]) -> std::result::Result<(), (usize, f64)> {
        for i in 0..self.xs.len() {
            let dx = p.x - self.xs[i];
            let dy = p.y - self.ys[i];
            let d2 = dx * dx + dy * dy;
            if d2 < D_MIN * D_MIN {
                return Err((i, d2.sqrt()));
            }
            m[i] = self.weights[i] / d2;
        }
        Ok(())
    }

    pub fn eval(&self, p: Point) -> Eval {
        let mut m = self.m.borrow_mut();
        if let Err((sensor, distance)) = self.fill_model(p, &mut m) {
            return Eval::NearField { sensor, distance };
        }
        let mut zm = 0.0;
        let mut mm = 0.0;
        for i in 0..m.len() {
            zm += self.z[i] * m[i];
            mm += m[i] * m[i];
        }
        let energy = (zm / mm).max(0.0);
        let mut cost = 0.0;
        for i in 0..m.len() {
            let r = self.z[i] - energy * m[i];
            cost += r * r;
        }
        Eval::Scored { cost, energy }
    }
}

/// m_i = g_i / (σ_i d_i²), in the caller's sensor order.
pub fn model_vector(candidate: Point, sensors: &[SensorDef], stats: &[NoiseStats]) -> Result<Vec<f64>> {
    if sensors.len() != stats.len() {
        return Err(Error::Parameter("one noise statistic per sensor required".into()));
    }
    sensors
        .iter()
        .zip(stats)
        .map(|(s, st)| {
            let d = candidate.distance(&s.position);
            if d < D_MIN {
                return Err(Error::NearField {
                    what: format!("candidate ({:.3}, {:.3}) to sensor {}", candidate.x, candidate.y, s.id),
                    distance: d,
                    min: D_MIN,
                });
            }
            if !(st.std > 0.0) {
                return Err(Error::InvalidStats(format!("{}: noise std must be positive", s.id)));
            }
            Ok(s.gain / (st.std * d * d))
        })
        .collect()
}

/// Residual cost and fitted energy at one candidate:
/// B̂ = max(0, ⟨z,m⟩/⟨m,m⟩), cost = ‖z − B̂ m‖².
pub fn score(candidate: Point, z: &ZVector, sensors: &[SensorDef], stats: &[NoiseStats]) -> Result<(f64, f64)> {
    let scorer = Scorer::new(Some(z), sensors, stats)?;
    match scorer.eval(candidate) {
        Eval::Scored { cost, energy } => Ok((cost, energy)),
        Eval::NearField { sensor, distance } => Err(Error::NearField {
            what: format!(
                "candidate ({:.3}, {:.3}) to sensor {}",
                candidate.x,
                candidate.y,
                scorer.sensor_id(sensor)
            ),
            distance,
            min: D_MIN,
        }),
    }
}
