#![allow(dead_code)]

use esfe_core::energy::{NoiseMode, NoiseStats};
use esfe_core::scene::SensorDef;
use esfe_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn stats_with_std(stds: &[f64]) -> Vec<NoiseStats> {
    stds.iter()
        .map(|&std| NoiseStats {
            mean: 0.0,
            std,
            hurst: 0.5,
            mode: NoiseMode::Oracle,
        })
        .collect()
}

pub struct Geometry {
    pub sensors: Vec<SensorDef>,
    pub stats: Vec<NoiseStats>,
    pub source: Point,
    pub energy: f64,
}

/// Random sensors in a 20 m square, source at least 1 m from every sensor.
pub fn random_geometry(seed: u64, n: usize) -> Geometry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sensors = Vec::new();
    for i in 0..n {
        let mut s = SensorDef::new(format!("S{i}"), rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
        s.gain = rng.random_range(0.5..2.0);
        sensors.push(s);
    }
    let source = loop {
        let p = Point::new(rng.random_range(1.0..19.0), rng.random_range(1.0..19.0));
        if sensors.iter().all(|s| s.position.distance(&p) >= 1.0) {
            break p;
        }
    };
    let stds: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    Geometry {
        sensors,
        stats: stats_with_std(&stds),
        source,
        energy: rng.random_range(10.0..100.0),
    }
}

/// Mean of z_i under θ = (x, y, B), written out from the signal model.
fn mean_z(theta: [f64; 3], sensors: &[SensorDef], stats: &[NoiseStats]) -> Vec<f64> {
    sensors
        .iter()
        .zip(stats)
        .map(|(s, st)| {
            let dx = theta[0] - s.position.x;
            let dy = theta[1] - s.position.y;
            theta[2] * s.gain / (st.std * (dx * dx + dy * dy))
        })
        .collect()
}

/// Fisher information by central differences of the negative Gaussian
/// log-density, evaluated at the noiseless observation z = μ(θ₀).
pub fn fd_fisher(position: Point, energy: f64, sensors: &[SensorDef], stats: &[NoiseStats]) -> [[f64; 3]; 3] {
    let theta0 = [position.x, position.y, energy];
    let z = mean_z(theta0, sensors, stats);
    let nll = |t: [f64; 3]| -> f64 {
        mean_z(t, sensors, stats)
            .iter()
            .zip(&z)
            .map(|(m, z)| 0.5 * (z - m) * (z - m))
            .sum()
    };
    let h = [1e-4, 1e-4, 1e-4 * energy];
    let mut f = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let at = |si: f64, sj: f64| {
                let mut t = theta0;
                t[i] += si * h[i];
                t[j] += sj * h[j];
                nll(t)
            };
            f[i][j] = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
        }
    }
    f
}

/// Per-sensor INS_max columns S0..S11 for the four reference scenes.
pub const PARK_SPEAKER: [f64; 12] = [
    8.048, 3.072, 9.446, 18.955, 8.157, 9.000, 32.921, 11.077, 5.962, 20.707, 16.104, 55.571,
];
pub const PARK_CHILDREN: [f64; 12] = [
    15.452, 7.694, 13.431, 16.241, 14.478, 30.379, 16.572, 44.143, 13.048, 14.485, 30.661, 17.910,
];
pub const KITCHEN_SPEAKER: [f64; 12] = [
    43.696, 21.442, 25.801, 26.846, 20.708, 36.499, 32.535, 27.331, 21.722, 24.387, 43.525, 28.922,
];
pub const KITCHEN_CUTTING: [f64; 12] = [
    35.062, 12.503, 14.975, 16.497, 12.058, 27.527, 17.636, 22.717, 12.370, 14.952, 12.060, 11.171,
];

pub fn ins_table(values: &[f64]) -> Vec<(String, f64)> {
    values.iter().enumerate().map(|(i, v)| (format!("S{i}"), *v)).collect()
}

/// Gaussian samples with the given mean and std.
pub fn gaussian(n: usize, mean: f64, std: f64, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(mean, std).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}
