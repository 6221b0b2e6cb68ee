use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const H_MIN: f64 = 0.01;
const H_MAX: f64 = 0.99;

/// Aggregated-variance Hurst estimate.
///
/// For m = 2, 4, 8, … ≤ len/8 the series is cut into k = len/m
/// non-overlapping blocks; the variance of the block means scales as
/// m^(2H−2), so the log-log slope s gives H = 1 + s/2, clamped to
/// [0.01, 0.99]. Each point is weighted by its k − 1 degrees of freedom.
///
/// Centring on the sample mean shrinks the variance of k correlated block
/// means by (k − k^(2H−1))/(k − 1), which drags strongly persistent series
/// toward 0.5. That factor is divided out and the fit repeated until H settles.
pub fn estimate_hurst(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 32 {
        return Err(Error::InsufficientData(format!("Hurst estimate needs 32 samples, got {n}")));
    }
    if series.iter().all(|v| *v == series[0]) {
        return Err(Error::DegenerateSignal("constant series has no Hurst exponent".into()));
    }
    // (ln m, ln var, block count)
    let mut points = Vec::new();
    let mut m = 2;
    while m <= n / 8 {
        let means: Vec<f64> = series
            .chunks_exact(m)
            .map(|c| c.iter().sum::<f64>() / m as f64)
            .collect();
        let k = means.len() as f64;
        let mu = means.iter().sum::<f64>() / k;
        let var = means.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (k - 1.0);
        if var > 0.0 {
            points.push(((m as f64).ln(), var.ln(), k));
        }
        m *= 2;
    }
    if points.len() < 2 {
        // block means all identical: behaves like a perfectly persistent series
        return Ok(H_MAX);
    }

    let fit = |h: Option<f64>| -> f64 {
        let ys: Vec<f64> = points
            .iter()
            .map(|&(_, y, k)| match h {
                Some(h) => y - ((k - k.powf(2.0 * h - 1.0)) / (k - 1.0)).ln(),
                None => y,
            })
            .collect();
        // ln S² from k block means has variance ≈ 2/(k − 1)
        let w: Vec<f64> = points.iter().map(|p| p.2 - 1.0).collect();
        let sw: f64 = w.iter().sum();
        let mx = points.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
        let my = ys.iter().zip(&w).map(|(y, w)| w * y).sum::<f64>() / sw;
        let sxy: f64 = points
            .iter()
            .zip(&ys)
            .zip(&w)
            .map(|((p, y), w)| w * (p.0 - mx) * (y - my))
            .sum();
        let sxx: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - mx) * (p.0 - mx)).sum();
        (1.0 + sxy / sxx / 2.0).clamp(H_MIN, H_MAX)
    };

    let mut h = fit(None);
    for _ in 0..100 {
        let next = fit(Some(h));
        if (next - h).abs() < 1e-9 {
            return Ok(next);
        }
        h = next;
    }
    Ok(h)
}

/// Autocovariance of unit-variance fGn at integer lag k.
pub(crate) fn fgn_autocov(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Zero-mean unit-variance fractional Gaussian noise by circulant embedding.
pub fn synth_fgn(hurst: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Parameter(format!("Hurst exponent {hurst} outside (0, 1)")));
    }
    if n < 2 {
        return Err(Error::Parameter("fGn needs at least 2 samples".into()));
    }
    // first row of the 2n circulant: γ(0..=n), then γ(n−1..1)
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..=n)
        .chain((1..n).rev())
        .map(|k| Complex::new(fgn_autocov(hurst, k), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let tol = 1e-9 * row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    if let Some((k, c)) = row.iter().enumerate().find(|(_, c)| c.re < -tol) {
        return Err(Error::Synthesis(format!(
            "circulant embedding not positive definite: eigenvalue {k} = {:.3e} (H = {hurst}, n = {n})",
            c.re
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<Complex<f64>> = row
        .iter()
        .map(|lambda| {
            let s = (lambda.re.max(0.0) / m as f64).sqrt();
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            Complex::new(s * a, s * b)
        })
        .collect();
    fft.process(&mut w);
    Ok(w[..n].iter().map(|c| c.re).collect())
}
