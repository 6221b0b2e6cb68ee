//! 16-bit PCM mono WAV input and output.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scene::SampledSignal;

const FULL_SCALE: f64 = 32768.0;

fn map_hound(err: hound::Error) -> Error {
    match err {
        hound::Error::FormatError(m) => Error::WavFormat(m.to_string()),
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV encoding".into()),
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::WavFormat(format!("truncated file: {e}"))
        }
        hound::Error::IoError(e) => Error::Io(e),
        other => Error::WavFormat(other.to_string()),
    }
}

/// Read a RIFF/WAVE file holding 16-bit signed little-endian mono PCM.
///
/// Samples are scaled by 1/32768 so the result lies in [-1, 1).
pub fn load_wav(path: impl AsRef<Path>) -> Result<SampledSignal> {
    let reader = hound::WavReader::open(path.as_ref()).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels, only mono is supported",
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedFormat(format!(
            "{:?} with {} bits per sample, only 16-bit PCM is supported",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / FULL_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(map_hound)?;
    Ok(SampledSignal {
        samples,
        sample_rate: f64::from(spec.sample_rate),
    })
}

/// Write a signal as 16-bit mono PCM. Values outside [-1, 1) are clipped.
pub fn write_wav(path: impl AsRef<Path>, signal: &SampledSignal) -> Result<()> {
    if !(signal.sample_rate > 0.0 && signal.sample_rate.fract() == 0.0) {
        return Err(Error::Parameter(format!(
            "WAV sample rate must be a positive integer, got {}",
            signal.sample_rate
        )));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec).map_err(map_hound)?;
    for &s in &signal.samples {
        let v = (s * FULL_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}
