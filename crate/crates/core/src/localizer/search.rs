use std::cmp::Ordering;

use crate::energy::{NoiseStats, ZVector};
use crate::error::{Error, Result};
use nalgebra::{Matrix2, Vector2};

use crate::geometry::{Point, Rect};
use crate::localizer::{Eval, LocalizationResult, Scorer, SearchArea};
use crate::scene::SensorDef;

/// Coarse-to-fine grid schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSchedule {
    /// Cell centers per axis on the first level.
    pub coarse_cells: usize,
    /// Points per axis on each refinement level.
    pub refine_points: usize,
    /// Half-width of a refinement grid, in parent cells.
    pub margin_cells: f64,
    /// Finish with a Levenberg-Marquardt refinement of the grid result.
    pub polish: bool,
}

impl Default for SearchSchedule {
    fn default() -> Self {
        SearchSchedule {
            coarse_cells: 16,
            refine_points: 5,
            margin_cells: 1.0,
            polish: true,
        }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    p: Point,
    cost: f64,
    energy: f64,
}

/// Relative cost difference treated as a tie (mirror-image candidates differ
/// only by summation rounding).
const TIE_TOLERANCE: f64 = 1e-12;

/// Lower cost wins; ties go to the smaller x, then the smaller y.
fn better(a: &Candidate, b: &Candidate) -> bool {
    let scale = a.cost.abs().max(b.cost.abs());
    if (a.cost - b.cost).abs() > TIE_TOLERANCE * scale {
        return a.cost < b.cost;
    }
    a.p.x.total_cmp(&b.p.x).then(a.p.y.total_cmp(&b.p.y)) == Ordering::Less
}

pub fn multires_search(
    z: &ZVector,
    area: &SearchArea,
    sensors: &[SensorDef],
    stats: &[NoiseStats],
) -> Result<LocalizationResult> {
    multires_search_with(z, area, sensors, stats, &SearchSchedule::default())
}

/// Minimize the residual cost over `area`: score the cell centers of a
/// coarse grid, then repeatedly search a finer grid spanning ±`margin_cells`
/// parent cells around the incumbent until the spacing on both axes is at
/// most the target resolution. Candidates within the near-field clamp of a
/// sensor are skipped.
///
/// Near a sensor the cost has a long, curved, shallow valley and the best
/// grid point can sit several cells from the true minimum. With
/// `schedule.polish` the grid result seeds a local least-squares fit that
/// replaces it only if the cost drops.
pub fn multires_search_with(
    z: &ZVector,
    area: &SearchArea,
    sensors: &[SensorDef],
    stats: &[NoiseStats],
    schedule: &SearchSchedule,
) -> Result<LocalizationResult> {
    area.validate()?;
    if sensors.len() < 3 {
        return Err(Error::Parameter(format!(
            "2-D localization needs at least 3 sensors, got {}",
            sensors.len()
        )));
    }
    if schedule.coarse_cells < 1 || schedule.refine_points < 2 || !(schedule.margin_cells > 0.0) {
        return Err(Error::Parameter(format!("invalid search schedule {schedule:?}")));
    }
    let scorer = Scorer::new(Some(z), sensors, stats)?;
    let mut evaluations = 0;
    let consider = |p: Point, best: &mut Option<Candidate>, evaluations: &mut usize| {
        if let Eval::Scored { cost, energy } = scorer.eval(p) {
            *evaluations += 1;
            let c = Candidate { p, cost, energy };
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                *best = Some(c);
            }
        }
    };

    let n = schedule.coarse_cells;
    let mut dx = (area.x_max - area.x_min) / n as f64;
    let mut dy = (area.y_max - area.y_min) / n as f64;
    let mut best: Option<Candidate> = None;
    for i in 0..n {
        for j in 0..n {
            let p = Point::new(
                area.x_min + (i as f64 + 0.5) * dx,
                area.y_min + (j as f64 + 0.5) * dy,
            );
            consider(p, &mut best, &mut evaluations);
        }
    }
    let mut incumbent = best.ok_or_else(|| {
        Error::SearchFailure("every coarse candidate is inside a sensor's near field".into())
    })?;

    let k = schedule.refine_points;
    let half = (k - 1) as f64 / 2.0;
    let mut levels = 0;
    let rect = area.rect();
    while dx > area.target_resolution || dy > area.target_resolution {
        let step_x = 2.0 * schedule.margin_cells * dx / (k - 1) as f64;
        let step_y = 2.0 * schedule.margin_cells * dy / (k - 1) as f64;
        let center = incumbent.p;
        let mut best = Some(incumbent);
        for i in 0..k {
            for j in 0..k {
                let ox = i as f64 - half;
                let oy = j as f64 - half;
                if ox == 0.0 && oy == 0.0 {
                    continue; // the incumbent itself
                }
                let p = Point::new(center.x + ox * step_x, center.y + oy * step_y);
                if rect.contains(&p) {
                    consider(p, &mut best, &mut evaluations);
                }
            }
        }
        incumbent = best.expect("seeded with the incumbent");
        dx = step_x;
        dy = step_y;
        levels += 1;
    }

    if schedule.polish {
        if let Some(better) = polish(&scorer, &rect, &incumbent, &mut evaluations) {
            incumbent = better;
        }
    }

    Ok(LocalizationResult {
        position: incumbent.p,
        source_energy: incumbent.energy,
        cost: incumbent.cost,
        evaluations,
        levels,
    })
}

/// Levenberg-Marquardt on (x, y) with B profiled out (variable projection,
/// Kaufman's Jacobian): r(ρ) = z − B̂(ρ)m(ρ), J ≈ −B̂·(I − m mᵀ/‖m‖²)·∂m/∂ρ.
fn polish(scorer: &Scorer, rect: &Rect, start: &Candidate, evaluations: &mut usize) -> Option<Candidate> {
    if !(start.energy > 0.0) {
        return None; // cost is flat in position when B̂ = 0
    }
    let l = scorer.xs.len();
    let mut cur = *start;
    let mut lambda = 1e-3;
    let mut m = vec![0.0; l];
    let mut dm = vec![[0.0; 2]; l];
    for _ in 0..200 {
        let (x, y) = (cur.p.x, cur.p.y);
        for i in 0..l {
            let dx = x - scorer.xs[i];
            let dy = y - scorer.ys[i];
            let d2 = dx * dx + dy * dy;
            m[i] = scorer.weights[i] / d2;
            dm[i] = [-2.0 * m[i] * dx / d2, -2.0 * m[i] * dy / d2];
        }
        let mm: f64 = m.iter().map(|v| v * v).sum();
        // project each column of ∂m off m
        let mut cols = [vec![0.0; l], vec![0.0; l]];
        for c in 0..2 {
            let dot: f64 = (0..l).map(|i| m[i] * dm[i][c]).sum::<f64>() / mm;
            for i in 0..l {
                cols[c][i] = -cur.energy * (dm[i][c] - dot * m[i]);
            }
        }
        let r: Vec<f64> = (0..l).map(|i| scorer.z[i] - cur.energy * m[i]).collect();
        let mut jtj = Matrix2::<f64>::zeros();
        let mut jtr = Vector2::<f64>::zeros();
        for a in 0..2 {
            jtr[a] = (0..l).map(|i| cols[a][i] * r[i]).sum();
            for b in 0..2 {
                jtj[(a, b)] = (0..l).map(|i| cols[a][i] * cols[b][i]).sum();
            }
        }
        let mut accepted = false;
        while lambda <= 1e12 {
            let mut a = jtj;
            for k in 0..2 {
                a[(k, k)] += lambda * jtj[(k, k)];
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let p = Point::new(x + step[0], y + step[1]);
            if rect.contains(&p) {
                *evaluations += 1;
                if let Eval::Scored { cost, energy } = scorer.eval(p) {
                    if cost < cur.cost {
                        let small = step[0].abs() + step[1].abs() <= 1e-12 * (1.0 + x.abs() + y.abs());
                        cur = Candidate { p, cost, energy };
                        lambda = (lambda / 10.0).max(1e-12);
                        accepted = !small && energy > 0.0;
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (cur.cost < start.cost).then_some(cur)
}
