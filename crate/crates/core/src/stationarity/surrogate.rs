use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scene::SampledSignal;

/// Fourier transform of a signal kept around so many surrogates can be
/// drawn from one forward FFT.
pub(crate) struct SurrogateSource {
    spectrum: Vec<Complex<f64>>,
    ifft: Arc<dyn ComplexToReal<f64>>,
    len: usize,
}

impl SurrogateSource {
    pub fn new(samples: &[f64]) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(samples.len());
        let mut input = samples.to_vec();
        let mut spectrum = fft.make_output_vec();
        fft.process(&mut input, &mut spectrum)
            .expect("buffer sizes come from the plan");
        SurrogateSource {
            spectrum,
            ifft: planner.plan_fft_inverse(samples.len()),
            len: samples.len(),
        }
    }

    /// Same magnitudes, phases uniform on [0, 2π). DC (and Nyquist for even
    /// lengths) stay real so the inverse is real-valued.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.len;
        let last = self.spectrum.len() - 1;
        let fixed_last = n.is_multiple_of(2);
        let mut spec: Vec<Complex<f64>> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == 0 || (fixed_last && k == last) {
                    *c
                } else {
                    let phi = rng.random::<f64>() * 2.0 * PI;
                    Complex::from_polar(c.norm(), phi)
                }
            })
            .collect();
        let mut out = self.ifft.make_output_vec();
        self.ifft
            .process(&mut spec, &mut out)
            .expect("buffer sizes come from the plan");
        let scale = 1.0 / n as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }
}

pub(crate) fn surrogate_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Phase-randomized surrogates of `signal`, deterministic in `seed`.
pub fn make_surrogates(signal: &SampledSignal, count: usize, seed: u64) -> Result<Vec<SampledSignal>> {
    if count < 2 {
        return Err(Error::Parameter(format!("need at least 2 surrogates, got {count}")));
    }
    if signal.len() < 2 {
        return Err(Error::Parameter("signal too short for surrogates".into()));
    }
    let source = SurrogateSource::new(&signal.samples);
    Ok((0..count)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(surrogate_seed(seed, j));
            SampledSignal::new(source.draw(&mut rng), signal.sample_rate)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{synth_source, SynthSpec};

    fn power_spectrum(x: &[f64]) -> Vec<f64> {
        SurrogateSource::new(x).spectrum.iter().map(|c| c.norm_sqr()).collect()
    }

    #[test]
    fn magnitude_preserved() {
        for (len, spec) in [(4000usize, "am_noise"), (3001, "burst_train")] {
            let spec: SynthSpec = spec.parse().unwrap();
            let sig = synth_source(&spec, len as f64 / 8000.0, 8000.0, 2).unwrap();
            assert_eq!(sig.len(), len);
            let orig = power_spectrum(&sig.samples);
            let peak = orig.iter().cloned().fold(0.0, f64::max);
            for s in make_surrogates(&sig, 5, 9).unwrap() {
                assert_eq!(s.len(), sig.len());
                let ps = power_spectrum(&s.samples);
                for (a, b) in ps.iter().zip(&orig) {
                    assert!((a - b).abs() <= 1e-6 * b.max(1e-3 * peak));
                }
            }
        }
    }

    #[test]
    fn deterministic_and_distinct() {
        let sig = synth_source(&"white".parse().unwrap(), 0.25, 8000.0, 1).unwrap();
        let a = make_surrogates(&sig, 3, 4).unwrap();
        let b = make_surrogates(&sig, 3, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_ne!(a[0], sig);
    }

    #[test]
    fn count_precondition() {
        let sig = SampledSignal::new(vec![1.0, 2.0, 3.0], 8000.0);
        assert!(make_surrogates(&sig, 1, 0).is_err());
    }
}
