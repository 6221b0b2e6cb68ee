use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, D_MIN};
use crate::scene::{
    load_wav, synth_source, Role, SampledSignal, Scene, SensorDef, SensorTrace, SignalSpec,
    SourceComponent,
};

/// Free-field propagation of one source to one sensor:
/// `out(n) = sqrt(g) * src(n - tau) / d` with an integer-sample delay.
///
/// The output has the same length as the input; the first `tau` samples are zero.
pub fn propagate(
    src: &SampledSignal,
    src_pos: Point,
    sensor: &SensorDef,
    speed_of_sound: f64,
) -> Result<SampledSignal> {
    let d = src_pos.distance(&sensor.position);
    if d < D_MIN {
        return Err(Error::NearField {
            what: format!("sensor {}", sensor.id),
            distance: d,
            min: D_MIN,
        });
    }
    let delay = (d / speed_of_sound * src.sample_rate).round() as usize;
    let scale = sensor.gain.sqrt() / d;
    let n = src.len();
    let mut out = vec![0.0; n];
    if delay < n {
        out[delay..]
            .iter_mut()
            .zip(&src.samples[..n - delay])
            .for_each(|(o, s)| *o = scale * s);
    }
    Ok(SampledSignal::new(out, src.sample_rate))
}

/// Point 1 m from the target toward the scene center (+x when the target
/// sits exactly on the center).
pub fn snr_probe_point(target: Point, bounds: &Rect) -> Point {
    let c = bounds.center();
    let (dx, dy) = (c.x - target.x, c.y - target.y);
    let norm = dx.hypot(dy);
    if norm == 0.0 {
        Point::new(target.x + 1.0, target.y)
    } else {
        Point::new(target.x + dx / norm, target.y + dy / norm)
    }
}

/// Amplitude factor beta for the noise sources such that, at the probe point
/// 1 m from the target, target power over the summed (incoherent) power of
/// the beta-scaled noise contributions equals `10^(snr_db/10)`.
///
/// Powers are waveform mean squares with 1/d² spreading. `snr_db = +inf`
/// yields beta = 0.
pub fn calibrate_snr(
    target: &SampledSignal,
    noises: &[SampledSignal],
    noise_positions: &[Point],
    target_position: Point,
    bounds: &Rect,
    snr_db: f64,
) -> Result<f64> {
    if noises.is_empty() {
        return Err(Error::Calibration("at least one noise source is required".into()));
    }
    if noises.len() != noise_positions.len() {
        return Err(Error::Parameter("one position per noise source required".into()));
    }
    let probe = snr_probe_point(target_position, bounds);
    let target_power = target.power() / probe.distance_sq(&target_position);
    if !(target_power > 0.0) {
        return Err(Error::Calibration("target has zero power".into()));
    }
    let mut noise_power = 0.0;
    for (i, (sig, pos)) in noises.iter().zip(noise_positions).enumerate() {
        let d = probe.distance(pos);
        if d < D_MIN {
            return Err(Error::NearField {
                what: format!("noise source {i} at the SNR probe"),
                distance: d,
                min: D_MIN,
            });
        }
        noise_power += sig.power() / (d * d);
    }
    if !(noise_power > 0.0) {
        return Err(Error::Calibration("noise sources have zero power".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    let ratio = 10f64.powf(snr_db / 10.0);
    Ok((target_power / (ratio * noise_power)).sqrt())
}

/// Everything produced while mixing a scene.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub traces: Vec<SensorTrace>,
    /// Emitted waveforms, already scaled by `level` (and beta for noise).
    pub sources: Vec<SampledSignal>,
    pub noise_scale: f64,
    pub target_index: usize,
}

impl RenderedScene {
    pub fn target_signal(&self) -> &SampledSignal {
        &self.sources[self.target_index]
    }
}

fn source_seed(scene_seed: u64, index: usize) -> u64 {
    // splitmix64 step, keeps neighbouring seeds decorrelated
    let mut z = scene_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn render_source(scene: &Scene, index: usize) -> Result<SampledSignal> {
    let src = &scene.sources[index];
    let n = scene.sample_count();
    let mut signal = match &src.signal {
        SignalSpec::Synth(spec) => synth_source(
            spec,
            scene.duration,
            scene.sample_rate,
            source_seed(scene.seed, index),
        )?,
        SignalSpec::File(path) => {
            let mut s = load_wav(path)?;
            if s.sample_rate != scene.sample_rate {
                return Err(Error::Scene(format!(
                    "{} is sampled at {} Hz, scene runs at {} Hz",
                    path.display(),
                    s.sample_rate,
                    scene.sample_rate
                )));
            }
            s.samples.resize(n, 0.0);
            s
        }
    };
    signal.samples.iter_mut().for_each(|v| *v *= src.level);
    Ok(signal)
}

/// Synthesize all sources, calibrate the noise level and mix every sensor.
pub fn render_scene(scene: &Scene) -> Result<RenderedScene> {
    scene.validate()?;
    let target_index = scene.target_index()?;
    let mut sources = (0..scene.sources.len())
        .map(|i| render_source(scene, i).map_err(|e| e.in_context(&scene.sources[i].id)))
        .collect::<Result<Vec<_>>>()?;

    let noise_idx: Vec<usize> = (0..scene.sources.len())
        .filter(|&i| scene.sources[i].role == Role::Noise)
        .collect();
    let noise_scale = if noise_idx.is_empty() {
        1.0
    } else {
        let noises: Vec<SampledSignal> = noise_idx.iter().map(|&i| sources[i].clone()).collect();
        let positions: Vec<Point> = noise_idx.iter().map(|&i| scene.sources[i].position).collect();
        calibrate_snr(
            &sources[target_index],
            &noises,
            &positions,
            scene.sources[target_index].position,
            &scene.bounds(),
            scene.snr_db,
        )?
    };
    for &i in &noise_idx {
        sources[i].samples.iter_mut().for_each(|v| *v *= noise_scale);
    }

    let traces = scene
        .sensors
        .par_iter()
        .map(|sensor| mix_sensor(scene, &sources, sensor))
        .collect::<Result<Vec<_>>>()?;

    Ok(RenderedScene {
        traces,
        sources,
        noise_scale,
        target_index,
    })
}

fn mix_sensor(scene: &Scene, sources: &[SampledSignal], sensor: &SensorDef) -> Result<SensorTrace> {
    let n = scene.sample_count();
    let mut samples = vec![0.0; n];
    let mut components = Vec::with_capacity(sources.len());
    // summation order follows source index
    for (def, sig) in scene.sources.iter().zip(sources) {
        let part = propagate(sig, def.position, sensor, scene.speed_of_sound)
            .map_err(|e| e.in_context(&format!("source {}", def.id)))?;
        samples.iter_mut().zip(&part.samples).for_each(|(s, p)| *s += p);
        components.push(SourceComponent {
            source_id: def.id.clone(),
            role: def.role,
            samples: part.samples,
        });
    }
    Ok(SensorTrace {
        sensor_id: sensor.id.clone(),
        samples,
        components: Some(components),
    })
}

/// One trace per sensor, with per-source components retained.
pub fn mix_scene(scene: &Scene) -> Result<Vec<SensorTrace>> {
    Ok(render_scene(scene)?.traces)
}
