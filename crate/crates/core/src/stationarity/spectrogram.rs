use std::f64::consts::PI;
use std::sync::Arc;

use realfft::{RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};
use crate::scene::SampledSignal;

pub const MIN_WINDOW: usize = 16;

/// STFT magnitudes, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<f64>>,
    pub window_len: usize,
    pub hop: usize,
}

impl Spectrogram {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }
}

pub fn hop_for(window_len: usize) -> usize {
    (window_len / 8).max(1)
}

pub fn frame_count(len: usize, window_len: usize, hop: usize) -> usize {
    if len < window_len {
        0
    } else {
        (len - window_len) / hop + 1
    }
}

/// Symmetric Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (len - 1) as f64).cos())
        .collect()
}

pub(crate) fn check_window(len: usize, window_len: usize) -> Result<()> {
    if window_len < MIN_WINDOW {
        return Err(Error::Parameter(format!(
            "window of {window_len} samples is shorter than {MIN_WINDOW}"
        )));
    }
    if window_len > len / 2 {
        return Err(Error::Parameter(format!(
            "window of {window_len} samples exceeds half the signal length ({len})"
        )));
    }
    Ok(())
}

/// Reusable Hann-windowed power-spectrum engine for one window length.
pub(crate) struct StftEngine {
    fft: Arc<dyn RealToComplex<f64>>,
    window: Vec<f64>,
    pub window_len: usize,
    pub hop: usize,
}

impl StftEngine {
    pub fn new(window_len: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        StftEngine {
            fft: planner.plan_fft_forward(window_len),
            window: hann(window_len),
            window_len,
            hop: hop_for(window_len),
        }
    }

    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    /// Squared STFT magnitudes, frames laid out contiguously (frame-major).
    pub fn power_frames(&self, samples: &[f64]) -> (Vec<f64>, usize) {
        let frames = frame_count(samples.len(), self.window_len, self.hop);
        let bins = self.bins();
        let mut out = Vec::with_capacity(frames * bins);
        let mut input = self.fft.make_input_vec();
        let mut spectrum = self.fft.make_output_vec();
        let mut scratch = self.fft.make_scratch_vec();
        for f in 0..frames {
            let start = f * self.hop;
            input
                .iter_mut()
                .zip(&samples[start..start + self.window_len])
                .zip(&self.window)
                .for_each(|((i, s), w)| *i = s * w);
            self.fft
                .process_with_scratch(&mut input, &mut spectrum, &mut scratch)
                .expect("buffer sizes come from the plan");
            out.extend(spectrum.iter().map(|c| c.norm_sqr()));
        }
        (out, frames)
    }
}

/// Hann-windowed STFT magnitude with hop = window_len / 8.
pub fn spectrogram(signal: &SampledSignal, window_len: usize) -> Result<Spectrogram> {
    check_window(signal.len(), window_len)?;
    let engine = StftEngine::new(window_len);
    let (power, frames) = engine.power_frames(&signal.samples);
    let bins = engine.bins();
    if frames < 2 {
        return Err(Error::Parameter("spectrogram would have fewer than 2 frames".into()));
    }
    let frames = power
        .chunks_exact(bins)
        .map(|row| row.iter().map(|p| p.sqrt()).collect())
        .collect();
    Ok(Spectrogram {
        frames,
        window_len,
        hop: engine.hop,
    })
}
