use nalgebra::{Matrix3, SymmetricEigen};

use crate::energy::NoiseStats;
use crate::error::{Error, Result};
use crate::geometry::{Point, D_MIN};
use crate::scene::SensorDef;

/// Eigenvalue ratio below which the Fisher matrix counts as singular.
const CONDITION_LIMIT: f64 = 1e-12;

/// Fisher information of θ = (x, y, B) for one block.
///
/// The normalized energies are z_i = B·g_i/(σ_i d_i²) + unit Gaussian noise,
/// so F = JᵀJ with J_i = (g_i/σ_i)·(−2B(x − x_i)/d⁴, −2B(y − y_i)/d⁴, 1/d²).
pub fn fisher_matrix(
    position: Point,
    energy: f64,
    sensors: &[SensorDef],
    stats: &[NoiseStats],
) -> Result<Matrix3<f64>> {
    if sensors.len() != stats.len() {
        return Err(Error::Parameter("one noise statistic per sensor required".into()));
    }
    let mut f = Matrix3::zeros();
    for (s, st) in sensors.iter().zip(stats) {
        let d = position.distance(&s.position);
        if d < D_MIN {
            return Err(Error::NearField {
                what: format!("source to sensor {}", s.id),
                distance: d,
                min: D_MIN,
            });
        }
        if !(st.std > 0.0) {
            return Err(Error::InvalidStats(format!("{}: noise std must be positive", s.id)));
        }
        let w = s.gain / st.std;
        let d2 = d * d;
        let d4 = d2 * d2;
        let row = nalgebra::Vector3::new(
            -2.0 * energy * w * (position.x - s.position.x) / d4,
            -2.0 * energy * w * (position.y - s.position.y) / d4,
            w / d2,
        );
        f += row * row.transpose();
    }
    Ok(f)
}

/// Position CRLB in metres: sqrt of the block average of [F⁻¹]₁₁ + [F⁻¹]₂₂.
///
/// Blocks where the source energy is zero carry no position information and
/// are left out of the average.
pub fn crlb(
    true_position: Point,
    energy_per_block: &[f64],
    sensors: &[SensorDef],
    stats: &[NoiseStats],
) -> Result<f64> {
    if sensors.len() < 3 {
        return Err(Error::SingularFisher(format!(
            "{} sensors cannot determine (x, y, B)",
            sensors.len()
        )));
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for &b in energy_per_block {
        if !(b > 0.0) {
            continue;
        }
        let f = fisher_matrix(true_position, b, sensors, stats)?;
        let eig = SymmetricEigen::new(f).eigenvalues;
        let max = eig.iter().cloned().fold(0.0, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(max > 0.0) || min <= CONDITION_LIMIT * max {
            return Err(Error::SingularFisher(format!(
                "Fisher matrix eigenvalues {min:.3e}..{max:.3e} at B = {b:.3e}"
            )));
        }
        let inv = f
            .try_inverse()
            .ok_or_else(|| Error::SingularFisher("Fisher matrix inversion failed".into()))?;
        total += inv[(0, 0)] + inv[(1, 1)];
        used += 1;
    }
    if used == 0 {
        return Err(Error::SingularFisher("source energy is zero in every block".into()));
    }
    Ok((total / used as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::NoiseMode;

    fn stats(n: usize, std: f64) -> Vec<NoiseStats> {
        vec![
            NoiseStats {
                mean: 0.0,
                std,
                hurst: 0.5,
                mode: NoiseMode::Oracle
            };
            n
        ]
    }

    fn square() -> Vec<SensorDef> {
        vec![
            SensorDef::new("a", 0.0, 0.0),
            SensorDef::new("b", 10.0, 0.0),
            SensorDef::new("c", 0.0, 10.0),
            SensorDef::new("d", 10.0, 10.0),
        ]
    }

    #[test]
    fn symmetric_positive() {
        let f = fisher_matrix(Point::new(3.0, 4.0), 50.0, &square(), &stats(4, 1.0)).unwrap();
        assert_eq!(f, f.transpose());
        assert!(SymmetricEigen::new(f).eigenvalues.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn center_of_square_is_isotropic() {
        let f = fisher_matrix(Point::new(5.0, 5.0), 50.0, &square(), &stats(4, 1.0)).unwrap();
        assert!((f[(0, 0)] - f[(1, 1)]).abs() < 1e-12 * f[(0, 0)]);
        assert!(f[(0, 1)].abs() < 1e-12 * f[(0, 0)]);
    }

    #[test]
    fn doubling_sigma_doubles_bound() {
        let p = Point::new(2.0, 7.0);
        let b = [30.0, 40.0, 55.0];
        let c1 = crlb(p, &b, &square(), &stats(4, 1.0)).unwrap();
        let c2 = crlb(p, &b, &square(), &stats(4, 2.0)).unwrap();
        assert!((c2 / c1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_energy_blocks_skipped() {
        let p = Point::new(2.0, 7.0);
        let a = crlb(p, &[30.0, 0.0, 30.0], &square(), &stats(4, 1.0)).unwrap();
        let b = crlb(p, &[30.0], &square(), &stats(4, 1.0)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            crlb(p, &[0.0, 0.0], &square(), &stats(4, 1.0)),
            Err(Error::SingularFisher(_))
        ));
    }

    #[test]
    fn too_few_sensors_singular() {
        let s = &square()[..2];
        assert!(matches!(
            crlb(Point::new(2.0, 7.0), &[10.0], s, &stats(2, 1.0)),
            Err(Error::SingularFisher(_))
        ));
    }

    #[test]
    fn stronger_source_tighter_bound() {
        let p = Point::new(2.0, 7.0);
        let lo = crlb(p, &[10.0], &square(), &stats(4, 1.0)).unwrap();
        let hi = crlb(p, &[100.0], &square(), &stats(4, 1.0)).unwrap();
        assert!(hi < lo);
    }
}
