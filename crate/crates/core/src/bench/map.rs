use crate::energy::{NoiseStats, ZVector};
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::localizer::{Eval, Scorer};
use crate::scene::SensorDef;

/// Localization cost sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMap {
    pub bounds: Rect,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major from the lower-left cell; `None` where a sensor is too close.
    pub values: Vec<Option<f64>>,
}

impl EnergyMap {
    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        self.values[row * self.nx + col]
    }

    pub fn center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.bounds.x_min + (col as f64 + 0.5) * self.cell,
            self.bounds.y_min + (row as f64 + 0.5) * self.cell,
        )
    }

    /// Centre of the lowest-cost cell.
    pub fn argmin(&self) -> Option<Point> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in self.values.iter().enumerate() {
            if let Some(v) = v {
                if best.is_none_or(|(_, b)| *v < b) {
                    best = Some((i, *v));
                }
            }
        }
        best.map(|(i, _)| self.center(i % self.nx, i / self.nx))
    }
}

pub fn energy_map(
    z: &ZVector,
    sensors: &[SensorDef],
    stats: &[NoiseStats],
    bounds: Rect,
    cell: f64,
) -> Result<EnergyMap> {
    if !(cell > 0.0) || !(bounds.width() > 0.0 && bounds.height() > 0.0) {
        return Err(Error::Parameter("map needs a positive cell size and a non-empty area".into()));
    }
    let scorer = Scorer::new(Some(z), sensors, stats)?;
    let nx = ((bounds.width() / cell).ceil() as usize).max(1);
    let ny = ((bounds.height() / cell).ceil() as usize).max(1);
    let mut map = EnergyMap {
        bounds,
        cell,
        nx,
        ny,
        values: Vec::with_capacity(nx * ny),
    };
    for row in 0..ny {
        for col in 0..nx {
            let v = match scorer.eval(map.center(col, row)) {
                Eval::Scored { cost, .. } => Some(cost),
                Eval::NearField { .. } => None,
            };
            map.values.push(v);
        }
    }
    Ok(map)
}
