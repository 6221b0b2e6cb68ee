use crate::error::{Error, Result};

/// Per-bin probability floor.
pub const BHATTACHARYYA_FLOOR: f64 = 1e-12;

/// B_d = −ln Σ √(p₁p₂) between the amplitude histograms of two signals,
/// both binned over their shared range [min, max].
pub fn bhattacharyya(sig1: &[f64], sig2: &[f64], bins: usize) -> Result<f64> {
    if bins < 8 {
        return Err(Error::Parameter(format!("need at least 8 bins, got {bins}")));
    }
    for (name, s) in [("first", sig1), ("second", sig2)] {
        if s.is_empty() || s.iter().all(|v| *v == s[0]) {
            return Err(Error::DegenerateSignal(format!("{name} signal is constant")));
        }
    }
    let (lo, hi) = sig1
        .iter()
        .chain(sig2)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let width = (hi - lo) / bins as f64;
    let hist = |s: &[f64]| -> Vec<f64> {
        let mut h = vec![0.0; bins];
        for v in s {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            h[b] += 1.0;
        }
        let n = s.len() as f64;
        h.iter().map(|c| (c / n).max(BHATTACHARYYA_FLOOR)).collect()
    };
    let p = hist(sig1);
    let q = hist(sig2);
    let bc: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((-bc.ln()).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let x: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64).collect();
        assert!(bhattacharyya(&x, &x, 32).unwrap().abs() < 1e-9);
    }

    #[test]
    fn disjoint_is_large() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
        let d = bhattacharyya(&a, &b, 64).unwrap();
        // overlap is only floor-against-mass terms: Σ √(p·1e-12) ≤ √(64·1e-12) per side
        assert!(d > 10.0, "{d}");
    }

    #[test]
    fn preconditions() {
        let a = vec![0.0, 1.0, 2.0];
        assert!(bhattacharyya(&a, &a, 4).is_err());
        assert!(matches!(bhattacharyya(&a, &[1.0; 3], 16), Err(Error::DegenerateSignal(_))));
    }
}
