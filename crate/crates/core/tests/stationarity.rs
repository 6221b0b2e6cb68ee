use esfe_core::scene::{synth_source, SampledSignal, SynthSpec};
use esfe_core::stationarity::{ins, make_surrogates, InsConfig, Stationarity};

const FS: f64 = 16000.0;

fn synth(spec: &str, seed: u64) -> SampledSignal {
    let spec: SynthSpec = spec.parse().unwrap();
    synth_source(&spec, 3.0, FS, seed).unwrap()
}

fn mix(a: &SampledSignal, b: &SampledSignal, snr_db: f64) -> SampledSignal {
    let g = 10f64.powf(-snr_db / 20.0);
    SampledSignal::new(a.samples.iter().zip(&b.samples).map(|(x, y)| x + g * y).collect(), FS)
}

fn ins_max(s: &SampledSignal, seed: u64) -> (f64, Stationarity) {
    let p = ins(s, &InsConfig::default().with_surrogates(20).with_seed(seed)).unwrap();
    (p.ins_max, p.classification)
}

/// Variance of the 10 ms mean-square envelope.
fn envelope_variance(x: &[f64]) -> f64 {
    let env: Vec<f64> = x
        .chunks_exact(160)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / 160.0)
        .collect();
    let m = env.iter().sum::<f64>() / env.len() as f64;
    env.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / env.len() as f64
}

#[test]
fn am_noise_is_nonstationary() {
    let hits = (0..50)
        .filter(|&seed| ins_max(&synth("am_noise", seed), seed).1 != Stationarity::Stationary)
        .count();
    assert!(hits >= 45, "{hits}/50");
}

#[test]
fn surrogates_flatten_the_envelope() {
    let mut smaller = 0;
    for seed in 0..50 {
        let x = synth("am_noise:bw=2,depth=2", seed);
        let s = make_surrogates(&x, 2, seed + 1000).unwrap();
        if envelope_variance(&s[0].samples) < envelope_variance(&x.samples) {
            smaller += 1;
        }
    }
    assert!(smaller >= 48, "{smaller}/50");
}

#[test]
fn noise_lowers_ins_max() {
    let mut clean_higher = 0;
    for seed in 0..20 {
        let target = synth("burst_train", seed);
        let noise = synth("white", seed + 500);
        let (clean, _) = ins_max(&target, seed);
        let (noisy, _) = ins_max(&mix(&target, &noise, 15.0), seed);
        if clean > noisy {
            clean_higher += 1;
        }
    }
    assert!(clean_higher >= 18, "{clean_higher}/20");
}

#[test]
fn ins_max_falls_with_snr() {
    let seeds = 0..10u64;
    let mean_at = |snr: f64| -> f64 {
        seeds
            .clone()
            .map(|seed| {
                let x = mix(&synth("burst_train", seed), &synth("white", seed + 500), snr);
                ins_max(&x, seed).0
            })
            .sum::<f64>()
            / 10.0
    };
    let means: Vec<f64> = [15.0, 10.0, 5.0, 0.0].iter().map(|&s| mean_at(s)).collect();
    assert!(means.windows(2).all(|w| w[0] > w[1]), "{means:?}");
}
