//! Synthetic stand-ins for recorded scene sources.
//!
//! Every generator returns a unit-RMS signal. `White` behaves like a
//! quasi-stationary background (waterfall, traffic), while `AmNoise` and
//! `BurstTrain` produce speech-like strongly modulated material.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    White,
    Tone,
    AmNoise,
    BurstTrain,
}

impl SynthKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SynthKind::White => "white",
            SynthKind::Tone => "tone",
            SynthKind::AmNoise => "am_noise",
            SynthKind::BurstTrain => "burst_train",
        }
    }

    fn allowed_params(&self) -> &'static [&'static str] {
        match self {
            SynthKind::White => &[],
            SynthKind::Tone => &["f"],
            SynthKind::AmNoise => &["bw", "depth"],
            SynthKind::BurstTrain => &["period", "duty", "floor"],
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(SynthKind::White),
            "tone" => Ok(SynthKind::Tone),
            "am_noise" => Ok(SynthKind::AmNoise),
            "burst_train" => Ok(SynthKind::BurstTrain),
            other => Err(Error::Parameter(format!("unknown synthetic source kind `{other}`"))),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Generator kind plus named numeric parameters.
///
/// Text form: `kind` or `kind:key=value,key=value`, e.g. `burst_train:period=0.25,duty=0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub params: BTreeMap<String, f64>,
}

impl SynthSpec {
    pub fn new(kind: SynthKind) -> Self {
        SynthSpec {
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

impl FromStr for SynthSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let kind: SynthKind = kind.trim().parse()?;
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for item in rest.split(',').filter(|t| !t.trim().is_empty()) {
                let (k, v) = item.split_once('=').ok_or_else(|| {
                    Error::Parameter(format!("expected key=value in `{item}`"))
                })?;
                let k = k.trim();
                if !kind.allowed_params().contains(&k) {
                    return Err(Error::Parameter(format!(
                        "parameter `{k}` is not valid for {kind}"
                    )));
                }
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad number `{v}` for `{k}`")))?;
                params.insert(k.to_string(), v);
            }
        }
        Ok(SynthSpec { kind, params })
    }
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{k}={v}")?;
        }
        Ok(())
    }
}

/// Synthesize `duration` seconds at `rate` Hz, deterministic in `seed`.
pub fn synth_source(spec: &SynthSpec, duration: f64, rate: f64, seed: u64) -> Result<SampledSignal> {
    if !(duration > 0.0 && rate > 0.0) {
        return Err(Error::Parameter(format!(
            "duration and rate must be positive (got {duration} s, {rate} Hz)"
        )));
    }
    let n = (duration * rate).round() as usize;
    if n == 0 {
        return Err(Error::Parameter("signal would have zero samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = match spec.kind {
        SynthKind::White => white(&mut rng, n),
        SynthKind::Tone => {
            let f = spec.param("f", 1000.0);
            if !(f > 0.0 && f < rate / 2.0) {
                return Err(Error::Parameter(format!("tone frequency {f} Hz outside (0, fs/2)")));
            }
            (0..n).map(|i| (2.0 * PI * f * i as f64 / rate).sin()).collect()
        }
        SynthKind::AmNoise => {
            let bw = spec.param("bw", 4.0);
            let depth = spec.param("depth", 1.5);
            if !(bw > 0.0 && depth >= 0.0) {
                return Err(Error::Parameter(format!("am_noise needs bw > 0, depth >= 0 (got {bw}, {depth})")));
            }
            let env = lognormal_envelope(&mut rng, n, rate, bw, depth);
            white(&mut rng, n).into_iter().zip(env).map(|(w, e)| w * e).collect()
        }
        SynthKind::BurstTrain => {
            let period = spec.param("period", 0.25);
            let duty = spec.param("duty", 0.5);
            let floor = spec.param("floor", 0.0);
            if !(period > 0.0 && duty > 0.0 && duty <= 1.0 && (0.0..=1.0).contains(&floor)) {
                return Err(Error::Parameter(format!(
                    "burst_train needs period > 0, duty in (0,1], floor in [0,1] (got {period}, {duty}, {floor})"
                )));
            }
            let gate = burst_gate(&mut rng, n, rate, period, duty, floor);
            white(&mut rng, n).into_iter().zip(gate).map(|(w, g)| w * g).collect()
        }
    };
    normalize_rms(&mut samples)?;
    Ok(SampledSignal {
        samples,
        sample_rate: rate,
    })
}

fn white(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// exp(depth * g(t)) where g is unit Gaussian at knots spaced 1/bw apart,
/// joined with raised-cosine interpolation.
fn lognormal_envelope(rng: &mut ChaCha8Rng, n: usize, rate: f64, bw: f64, depth: f64) -> Vec<f64> {
    let knot_spacing = rate / bw;
    let knots = (n as f64 / knot_spacing).ceil() as usize + 2;
    let values: Vec<f64> = (0..knots)
        .map(|_| (depth * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();
    (0..n)
        .map(|i| {
            let pos = i as f64 / knot_spacing;
            let k = pos.floor() as usize;
            let frac = pos - k as f64;
            let w = 0.5 - 0.5 * (PI * frac).cos();
            values[k] * (1.0 - w) + values[k + 1] * w
        })
        .collect()
}

/// One burst per period with a random start inside the period's slack.
fn burst_gate(rng: &mut ChaCha8Rng, n: usize, rate: f64, period: f64, duty: f64, floor: f64) -> Vec<f64> {
    let period_len = (period * rate).round().max(1.0) as usize;
    let on_len = ((duty * period * rate).round() as usize).clamp(1, period_len);
    let slack = period_len - on_len;
    let mut gate = vec![floor; n];
    let mut start = 0;
    while start < n {
        let offset = if slack > 0 { rng.random_range(0..=slack) } else { 0 };
        let a = (start + offset).min(n);
        let b = (a + on_len).min(n);
        gate[a..b].iter_mut().for_each(|g| *g = 1.0);
        start += period_len;
    }
    gate
}

pub(crate) fn normalize_rms(samples: &mut [f64]) -> Result<()> {
    let rms = (samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64).sqrt();
    if !(rms > 0.0 && rms.is_finite()) {
        return Err(Error::DegenerateSignal("cannot normalize a zero-power signal".into()));
    }
    samples.iter_mut().for_each(|v| *v /= rms);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rms(s: &[f64]) -> f64 {
        (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt()
    }

    #[test]
    fn tone_is_unit_rms() {
        let spec = SynthSpec::new(SynthKind::Tone).with("f", 1000.0);
        let s = synth_source(&spec, 1.0, 16000.0, 0).unwrap();
        assert_eq!(s.samples.len(), 16000);
        assert!((rms(&s.samples) - 1.0).abs() < 1e-6);
        // still a pure sinusoid: peak is sqrt(2)
        let peak = s.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn white_is_deterministic() {
        let spec = SynthSpec::new(SynthKind::White);
        let a = synth_source(&spec, 3.0, 16000.0, 7).unwrap();
        let b = synth_source(&spec, 3.0, 16000.0, 7).unwrap();
        let c = synth_source(&spec, 3.0, 16000.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn all_kinds_unit_rms() {
        for kind in ["white", "tone", "am_noise", "burst_train:duty=0.3"] {
            let spec: SynthSpec = kind.parse().unwrap();
            let s = synth_source(&spec, 0.5, 8000.0, 3).unwrap();
            assert!((rms(&s.samples) - 1.0).abs() < 1e-9, "{kind}");
            assert!(s.samples.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn burst_train_has_silent_gaps() {
        let spec: SynthSpec = "burst_train:period=0.25,duty=0.5".parse().unwrap();
        let s = synth_source(&spec, 3.0, 16000.0, 1).unwrap();
        let zeros = s.samples.iter().filter(|v| **v == 0.0).count();
        let frac = zeros as f64 / s.samples.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "off fraction {frac}");
    }

    #[test]
    fn unknown_kind_is_parameter_error() {
        assert!(matches!("pink".parse::<SynthSpec>(), Err(Error::Parameter(_))));
        assert!(matches!("tone:bw=3".parse::<SynthSpec>(), Err(Error::Parameter(_))));
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = SynthSpec::new(SynthKind::BurstTrain)
            .with("period", 0.25)
            .with("duty", 0.1 + 0.2);
        let text = spec.to_string();
        assert_eq!(text.parse::<SynthSpec>().unwrap(), spec);
        assert_eq!("white".parse::<SynthSpec>().unwrap().to_string(), "white");
    }

    #[test]
    fn rejects_bad_duration() {
        let spec = SynthSpec::new(SynthKind::White);
        assert!(synth_source(&spec, 0.0, 16000.0, 0).is_err());
        assert!(synth_source(&spec, 1.0, -1.0, 0).is_err());
    }
}
